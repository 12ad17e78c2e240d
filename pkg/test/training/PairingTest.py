import unittest

import numpy as np

from mgec.data.augment import AugmentSpec
from mgec.data.dataset import Dataset
from mgec.training.pairing import jel_batch_pairs


class PairingTest(unittest.TestCase):
    # domain 0 is ordered, with a label change between t=1 and t=2; domain 1 is unordered
    dataset = Dataset(np.arange(1, 13, dtype=float).reshape(6, 2), [0, 0, 1, 1, 0, 1], [0, 0, 0, 0, 1, 1],
                      [0, 1, 2, 3, -1, -1], class_count=2)

    def test_temporal_neighbors(self):
        x_pair, n_temporal = jel_batch_pairs([1, 3], self.dataset, AugmentSpec(rho=0.0),
                                             np.random.default_rng(0))
        self.assertEqual(2, n_temporal)
        np.testing.assert_array_equal(self.dataset.features[[0, 2]], x_pair)

    def test_fallback_to_self(self):
        x_pair, n_temporal = jel_batch_pairs([0, 2, 4], self.dataset, AugmentSpec(rho=0.0),
                                             np.random.default_rng(0))
        self.assertEqual(0, n_temporal)
        np.testing.assert_array_equal(self.dataset.features[[0, 2, 4]], x_pair)

    def test_self_mask_mode(self):
        x_pair, n_temporal = jel_batch_pairs([1, 3], self.dataset, AugmentSpec(mode="self-mask", rho=0.0),
                                             np.random.default_rng(0))
        self.assertEqual(0, n_temporal)
        np.testing.assert_array_equal(self.dataset.features[[1, 3]], x_pair)

    def test_masking_applied(self):
        x_pair, _ = jel_batch_pairs(np.arange(6), self.dataset, AugmentSpec(mode="self-mask", rho=0.5),
                                    np.random.default_rng(1))
        self.assertEqual((6, 2), x_pair.shape)
        kept = x_pair != 0
        np.testing.assert_array_equal(self.dataset.features[kept], x_pair[kept])
        self.assertTrue(np.any(~kept))

    def test_small_grid_partners_lose_one_segment(self):
        grid = Dataset(np.ones((4, 3, 30)), [0, 0, 1, 1], [0, 0, 1, 1], [0, 1, 0, 1], class_count=2)
        x_pair, n_temporal = jel_batch_pairs(np.arange(4), grid, AugmentSpec(rho=0.1), np.random.default_rng(2))
        self.assertEqual(2, n_temporal)
        self.assertEqual((4, 90), x_pair.shape)
        zeros_per_electrode = (x_pair.reshape(4, 3, 30) == 0).sum(axis=2)
        np.testing.assert_array_equal(np.full((4, 3), 3), zeros_per_electrode)


if __name__ == '__main__':
    unittest.main()
