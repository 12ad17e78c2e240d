import unittest

import numpy as np

from mgec.losses.gradcheck_suite import COMPOSITIONS, ProbeSetup, draw_probe_point, routing_margin, run_gradcheck
from mgec.utils.errors import ConfigurationError



class GradcheckSuiteTest(unittest.TestCase):
    reports = run_gradcheck(seed=0, n_probes=100, tol=1e-4)

    def test_every_composition_checked(self):
        self.assertEqual(list(COMPOSITIONS), list(self.reports))

    def test_all_pass(self):
        for name, report in self.reports.items():
            self.assertTrue(report.passed, f"{name}: {report}")
            self.assertLessEqual(report.max_rel_err, 1e-4)
            self.assertEqual(100, report.n_probes)

    def test_corruption_detected(self):
        reports = run_gradcheck(seed=0, n_probes=30, corrupt=True, names=["erm", "routed_total", "s_from_r"])
        for name, report in reports.items():
            self.assertFalse(report.passed, name)

    def test_other_seed(self):
        reports = run_gradcheck(seed=11, n_probes=30, names=["r_from_s", "sl"])
        self.assertTrue(all(r.passed for r in reports.values()))

    def test_probe_point_margin(self):
        batch, shared, routed = draw_probe_point(ProbeSetup(), seed=2)
        _, routing, _, _ = routed.forward(batch.x)
        self.assertGreater(routing_margin(routing.similarity, routed.K), 1e-3)

    def test_routing_margin(self):
        sims = np.array([[0.9, 0.5, 0.1], [0.2, 0.8, 0.75]])
        self.assertAlmostEqual(0.05, routing_margin(sims, 1))
        self.assertEqual(np.inf, routing_margin(sims, 3))

    def test_unknown_name(self):
        with self.assertRaises(ConfigurationError):
            run_gradcheck(names=["nope"])


if __name__ == '__main__':
    unittest.main()
