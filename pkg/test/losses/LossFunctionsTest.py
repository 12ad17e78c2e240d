import itertools
import unittest

import numpy as np

from mgec.losses.loss_functions import (bl_grad, bl_loss, ce_grad, ce_loss, expert_load, jel_grad, jel_loss,
                                         jel_terms, mutual_grad, mutual_weighted_loss, mutual_weights, sl_grad,
                                         sl_loss, subject_entropies)
from mgec.numerics.layers import softmax


class CrossEntropyTest(unittest.TestCase):

    def test_uniform_logits(self):
        mean, per_sample = ce_loss(np.zeros((4, 3)), [0, 1, 2, 0])
        self.assertAlmostEqual(np.log(3), mean, places=12)
        self.assertEqual((4,), per_sample.shape)

    def test_large_logits_stable(self):
        mean, _ = ce_loss(np.array([[1000.0, -1000.0]]), [0])
        self.assertEqual(0.0, mean)

    def test_grad_weighted(self):
        logits = np.random.default_rng(0).normal(size=(5, 3))
        labels = [0, 2, 1, 1, 0]
        w = np.arange(1, 6, dtype=float)
        expected = (softmax(logits) - np.eye(3)[labels]) * w[:, None] / 5
        np.testing.assert_allclose(expected, ce_grad(logits, labels, sample_weights=w))


class JointEmbeddingTest(unittest.TestCase):
    z = np.array([[1.0, 2.0, -3.0]])

    def test_identical(self):
        self.assertEqual(0.0, jel_loss(self.z, self.z))

    def test_orthogonal(self):
        self.assertAlmostEqual(1.0, jel_loss(np.array([[1.0, 0.0]]), np.array([[0.0, 5.0]])), delta=1e-12)

    def test_anti_parallel(self):
        self.assertAlmostEqual(2.0, jel_loss(self.z, -2.5 * self.z), delta=1e-12)

    def test_positive_rescaling(self):
        rng = np.random.default_rng(3)
        a, b = rng.normal(size=(6, 4)), rng.normal(size=(6, 4))
        loss = jel_loss(a, b)
        self.assertAlmostEqual(loss, jel_loss(7.3 * a, b), delta=1e-12)
        self.assertAlmostEqual(loss, jel_loss(a, 0.02 * b), delta=1e-12)

    def test_zero_norm_pairs_skipped(self):
        a = np.array([[1.0, 0.0], [0.0, 0.0]])
        b = np.array([[-1.0, 0.0], [1.0, 1.0]])
        loss, n_valid = jel_terms(a, b)
        self.assertEqual(1, n_valid)
        self.assertAlmostEqual(2.0, loss, delta=1e-12)
        d_a, d_b = jel_grad(a, b)
        np.testing.assert_array_equal([0.0, 0.0], d_a[1])
        np.testing.assert_array_equal([0.0, 0.0], d_b[1])

    def test_all_skipped_warns(self):
        with self.assertLogs("mgec.losses.loss_functions", level="WARNING"):
            self.assertEqual(0.0, jel_loss(np.zeros((2, 3)), np.ones((2, 3))))

    def test_gradient_orthogonal_to_embedding(self):
        rng = np.random.default_rng(1)
        a, b = rng.normal(size=(4, 3)), rng.normal(size=(4, 3))
        d_a, _ = jel_grad(a, b)
        np.testing.assert_allclose(np.zeros(4), np.sum(d_a * a, axis=1), atol=1e-12)


class SpecializationTest(unittest.TestCase):

    def test_one_hot_zero(self):
        weights = np.tile(np.eye(5)[2], (6, 1))
        self.assertAlmostEqual(0.0, sl_loss(weights, np.zeros(6, dtype=int)), delta=1e-12)

    def test_uniform_ln_m(self):
        self.assertAlmostEqual(np.log(5), sl_loss(np.full((4, 5), 0.2), [0, 0, 1, 1]), delta=1e-12)

    def test_mean_over_subjects(self):
        # subject 0 splits its samples between two experts, subject 1 is one-hot
        weights = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 0.0]])
        subjects, entropies = subject_entropies(weights, [0, 0, 1])
        np.testing.assert_array_equal([0, 1], subjects)
        np.testing.assert_allclose([np.log(2), 0.0], entropies, atol=1e-12)
        self.assertAlmostEqual(np.log(2) / 2, sl_loss(weights, [0, 0, 1]), delta=1e-12)

    def test_grad_zero_on_unused_expert(self):
        weights = np.array([[0.7, 0.3, 0.0], [0.6, 0.4, 0.0]])
        grad = sl_grad(weights, [0, 0])
        np.testing.assert_array_equal([0.0, 0.0], grad[:, 2])


class BalanceTest(unittest.TestCase):

    def test_collapse_equals_m(self):
        weights = np.tile(np.eye(5)[0], (20, 1))
        self.assertEqual(5.0, bl_loss(weights))

    def test_balanced_k1_equals_one(self):
        self.assertEqual(1.0, bl_loss(np.tile(np.eye(4), (2, 1))))
        self.assertAlmostEqual(1.0, bl_loss(np.tile(np.eye(5), (3, 1))), delta=1e-12)

    def test_every_k1_assignment_between_balanced_and_collapsed(self):
        for m in (2, 3):
            for n in range(1, 7):
                for assignment in itertools.product(range(m), repeat=n):
                    value = bl_loss(np.eye(m)[list(assignment)], m)
                    counts = np.bincount(assignment, minlength=m)
                    if np.count_nonzero(counts) == 1:
                        self.assertAlmostEqual(m, value, delta=1e-12)
                    elif np.all(counts == counts[0]):
                        self.assertAlmostEqual(1.0, value, delta=1e-12)
                    else:
                        self.assertTrue(1.0 < value < m, (m, assignment, value))

    def test_random_k2_monte_carlo(self):
        rng = np.random.default_rng(0)
        n, m = 10000, 5
        weights = np.zeros((n, m))
        chosen = np.argsort(rng.random((n, m)), axis=1)[:, :2]
        split = rng.random(n)
        weights[np.arange(n), chosen[:, 0]] = split
        weights[np.arange(n), chosen[:, 1]] = 1.0 - split
        self.assertAlmostEqual(2.0, bl_loss(weights), delta=0.05)

    def test_load_sums_to_k(self):
        weights = np.array([[0.5, 0.5, 0.0], [0.0, 0.3, 0.7]])
        self.assertAlmostEqual(2.0, expert_load(weights).sum())

    def test_grad_holds_load_constant(self):
        weights = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 0.0]])
        np.testing.assert_allclose([[0.375, 0.125]] * 4, bl_grad(weights))


class MutualTest(unittest.TestCase):

    def test_zero_gap_weight_two(self):
        self.assertAlmostEqual(2.0, mutual_weights(np.array([0.7]), np.array([0.7]))[0], delta=1e-12)

    def test_weight_at_least_one(self):
        w = mutual_weights(np.array([0.1, 5.0, 0.0]), np.array([5.0, 0.1, 100.0]))
        self.assertTrue(np.all(w >= 1.0))
        self.assertGreater(w[1], w[0])

    def test_clamped_gap(self):
        w = mutual_weights(np.array([200.0]), np.array([0.0]))
        self.assertEqual(1.0 + np.exp(30.0), w[0])
        self.assertTrue(np.isfinite(w[0]))

    def test_weighted_loss(self):
        own, guide = np.array([1.0, 2.0]), np.array([1.0, 2.0])
        self.assertAlmostEqual(3.0, mutual_weighted_loss(own, guide))

    def test_grad_matches_finite_difference(self):
        own, guide = np.array([0.4, 1.3, 2.2]), np.array([1.0, 0.5, 2.2])
        h = 1e-6
        numeric = [(mutual_weighted_loss(own + h * e, guide) - mutual_weighted_loss(own - h * e, guide)) / (2 * h)
                   for e in np.eye(3)]
        np.testing.assert_allclose(numeric, mutual_grad(own, guide), rtol=1e-6)

    def test_grad_outside_clamp(self):
        own, guide = np.array([40.0]), np.array([0.0])
        self.assertEqual(1.0 + np.exp(30.0), mutual_grad(own, guide)[0])


if __name__ == '__main__':
    unittest.main()
