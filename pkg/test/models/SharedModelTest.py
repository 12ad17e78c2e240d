import unittest

import numpy as np

from mgec.models.SharedModel import SharedModel, shared_forward
from mgec.numerics.gradcheck import finite_diff_check
from mgec.utils.errors import ConfigurationError


class SharedModelTest(unittest.TestCase):
    model = SharedModel.build(6, 3, np.random.default_rng(0), hidden=(8, 5))
    x = np.random.default_rng(1).normal(size=(7, 6))

    def test_shapes(self):
        logits, z = shared_forward(self.model, self.x)
        self.assertEqual((7, 3), logits.shape)
        self.assertEqual((7, 5), z.shape)
        self.assertEqual(5, self.model.feature_width)

    def test_single_sample(self):
        logits, z = shared_forward(self.model, self.x[0])
        self.assertEqual((3,), logits.shape)
        np.testing.assert_allclose(shared_forward(self.model, self.x)[0][0], logits)

    def test_features_non_negative(self):
        _, z = shared_forward(self.model, self.x)
        self.assertTrue(np.all(z >= 0))

    def test_parameter_names(self):
        names = list(self.model.parameters())
        self.assertEqual(["extractor.0.W", "extractor.0.b", "extractor.1.W", "extractor.1.b", "head.0.W",
                          "head.0.b"], names)

    def test_backward(self):
        model = self.model.copy()
        c = np.random.default_rng(2).normal(size=(7, 3))
        e = np.random.default_rng(3).normal(size=(7, 5))

        def loss_fn(_):
            logits, z, cache = model.forward(self.x)
            return float(np.sum(logits * c) + np.sum(z * e)), model.backward(cache, c, d_z=e)

        report = finite_diff_check(loss_fn, model.parameters(), n_probes=60, rng=np.random.default_rng(4))
        self.assertTrue(report.passed, report)

    def test_copy_is_independent(self):
        copy = self.model.copy()
        copy.head.weights[0][0, 0] += 1.0
        self.assertNotEqual(copy.head.weights[0][0, 0], self.model.head.weights[0][0, 0])

    def test_width_mismatch(self):
        other = SharedModel.build(6, 3, np.random.default_rng(0), hidden=(4,))
        with self.assertRaises(ConfigurationError):
            SharedModel(self.model.extractor, other.head)


if __name__ == '__main__':
    unittest.main()
