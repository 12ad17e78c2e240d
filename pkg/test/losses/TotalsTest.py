import unittest

import numpy as np

from mgec.losses.gradcheck_suite import draw_probe_point
from mgec.losses.loss_functions import bl_loss, ce_loss, mutual_weighted_loss, sl_loss
from mgec.losses.totals import COMPONENTS, Batch, routed_total, shared_total
from mgec.utils.errors import ConfigurationError


class TotalsTest(unittest.TestCase):
    batch, shared, routed = draw_probe_point(seed=4)

    def test_shared_warmup_components(self):
        report, grads = shared_total(self.batch, self.shared)
        self.assertEqual(("erm", "jel"), report.active)
        self.assertEqual(set(COMPONENTS), set(report.components))
        self.assertAlmostEqual(report.components["erm"] + report.components["jel"], report.total)
        self.assertEqual(0.0, report.components["s_from_r"])
        self.assertTrue(0 < report.jel_pairs <= 16)
        self.assertEqual(set(self.shared.parameters()), set(grads))

    def test_shared_without_pairs(self):
        batch = Batch(self.batch.x, self.batch.labels, self.batch.domain_ids)
        report, _ = shared_total(batch, self.shared)
        self.assertEqual(("erm",), report.active)
        self.assertEqual(0.0, report.components["jel"])

    def test_shared_jel_switch(self):
        report, _ = shared_total(self.batch, self.shared, use_jel=False)
        self.assertEqual(("erm",), report.active)

    def test_routed_warmup_components(self):
        report, grads = routed_total(self.batch, self.routed)
        self.assertEqual(("ce", "sl", "bl"), report.active)
        w = report.routing.weights
        expected = ce_loss(self.routed.forward(self.batch.x)[0], self.batch.labels)[0] \
            + sl_loss(w, self.batch.domain_ids) + bl_loss(w)
        self.assertAlmostEqual(expected, report.total, places=12)
        self.assertIn("router.D", grads)

    def test_routed_switches(self):
        report, _ = routed_total(self.batch, self.routed, use_sl=False, use_bl=False)
        self.assertEqual(("ce",), report.active)
        self.assertEqual(0.0, report.components["sl"])
        self.assertEqual(report.plain_ce, report.total)

    def test_mutual_mode(self):
        guide = shared_total(self.batch, self.shared)[0].per_sample
        report, _ = routed_total(self.batch, self.routed, guide_losses=guide, mode="mutual")
        self.assertEqual(("r_from_s", "sl", "bl"), report.active)
        self.assertAlmostEqual(mutual_weighted_loss(report.per_sample, guide), report.components["r_from_s"])
        # mutual weights are >= 1
        self.assertGreaterEqual(report.components["r_from_s"], report.plain_ce)

    def test_equal_guide_doubles_ce(self):
        own = routed_total(self.batch, self.routed)[0].per_sample
        report, _ = routed_total(self.batch, self.routed, guide_losses=own, mode="mutual", use_sl=False,
                                 use_bl=False)
        self.assertAlmostEqual(2 * report.plain_ce, report.total, places=12)

    def test_mutual_needs_guide(self):
        with self.assertRaises(ConfigurationError):
            shared_total(self.batch, self.shared, mode="mutual")
        with self.assertRaises(ConfigurationError):
            routed_total(self.batch, self.routed, guide_losses=np.zeros(3), mode="mutual")

    def test_unknown_mode(self):
        with self.assertRaises(ConfigurationError):
            shared_total(self.batch, self.shared, mode="joint")

    def test_guide_is_constant(self):
        guide = shared_total(self.batch, self.shared)[0].per_sample
        _, before = routed_total(self.batch, self.routed, guide_losses=guide, mode="mutual")
        moved = self.shared.copy()
        rng = np.random.default_rng(9)
        for param in moved.parameters().values():
            param += 0.5 * rng.normal(size=param.shape)
        _, after = routed_total(self.batch, self.routed, guide_losses=guide, mode="mutual")
        for name in before:
            np.testing.assert_array_equal(before[name], after[name])
        self.assertEqual(set(self.routed.parameters()), set(before))
        # the routed gradient follows the guide values, not the guide model's parameters
        new_guide = shared_total(self.batch, moved)[0].per_sample
        _, reguided = routed_total(self.batch, self.routed, guide_losses=new_guide, mode="mutual")
        self.assertFalse(all(np.array_equal(before[name], reguided[name]) for name in before))


if __name__ == '__main__':
    unittest.main()
