import unittest

import numpy as np

from mgec.numerics.AdamOptimizer import AdamOptimizer, AdamState, adam_step
from mgec.utils.errors import ConfigurationError


class AdamOptimizerTest(unittest.TestCase):

    def test_first_step_moves_by_lr(self):
        params = {"w.W": np.array([1.0, -2.0, 3.0])}
        adam_step(params, {"w.W": np.array([0.5, -4.0, 2.0])}, AdamState(lr=0.01, weight_decay=0.0))
        np.testing.assert_allclose([0.99, -1.99, 2.99], params["w.W"], atol=1e-7)

    def test_decoupled_weight_decay(self):
        params = {"w.W": np.array([2.0]), "w.b": np.array([2.0])}
        opt = AdamOptimizer(params, lr=0.1, weight_decay=0.5)
        opt.step({})
        np.testing.assert_allclose([2.0 * (1 - 0.05)], params["w.W"])
        np.testing.assert_allclose([2.0], params["w.b"])

    def test_router_prototypes_not_decayed(self):
        params = {"router.D": np.ones((2, 3))}
        AdamOptimizer(params, lr=0.1, weight_decay=0.5).step({})
        np.testing.assert_array_equal(np.ones((2, 3)), params["router.D"])

    def test_update_in_place(self):
        w = np.zeros(2)
        AdamOptimizer({"w.W": w}, lr=0.1, weight_decay=0.0).step({"w.W": np.ones(2)})
        self.assertTrue(np.all(w < 0))

    def test_shape_mismatch(self):
        with self.assertRaises(ConfigurationError):
            adam_step({"w.W": np.zeros(2)}, {"w.W": np.zeros(3)}, AdamState())

    def test_unknown_gradient(self):
        with self.assertRaises(ConfigurationError):
            adam_step({"w.W": np.zeros(2)}, {"v.W": np.zeros(2)}, AdamState())

    def test_reset_moments_column(self):
        params = {"router.D": np.zeros((2, 3))}
        opt = AdamOptimizer(params)
        opt.step({"router.D": np.ones((2, 3))})
        opt.reset_moments("router.D", (slice(None), 1))
        self.assertTrue(np.all(opt.state.m["router.D"][:, 1] == 0))
        self.assertTrue(np.all(opt.state.m["router.D"][:, 0] != 0))

    def test_minimises_quadratic(self):
        w = np.array([3.0, -1.0])
        opt = AdamOptimizer({"w.W": w}, lr=0.05, weight_decay=0.0)
        for _ in range(500):
            opt.step({"w.W": 2 * w})
        self.assertLess(np.abs(w).max(), 0.05)


if __name__ == '__main__':
    unittest.main()
