import unittest

import numpy as np

from mgec.data.dataset import Dataset
from mgec.utils.errors import ConfigurationError


class DatasetTest(unittest.TestCase):
    features = np.arange(24, dtype=float).reshape(6, 4)
    labels = [0, 1, 0, 1, 1, 0]
    domains = [0, 0, 0, 1, 1, 2]
    t_indices = [0, 1, 2, -1, -1, -1]
    dataset = Dataset(features, labels, domains, t_indices, class_count=2)

    def test_len_and_sample(self):
        self.assertEqual(6, len(self.dataset))
        sample = self.dataset[1]
        self.assertEqual((1, 0, 1), (sample.label, sample.domain_id, sample.t_index))

    def test_domains_sorted(self):
        self.assertEqual([0, 1, 2], self.dataset.domains)

    def test_read_only(self):
        with self.assertRaises(ValueError):
            self.dataset.features[0, 0] = 1.0

    def test_position_at(self):
        self.assertEqual(2, self.dataset.position_at(0, 2))
        self.assertIsNone(self.dataset.position_at(1, 0))

    def test_select_domains(self):
        part = self.dataset.select_domains([1, 2])
        self.assertEqual(3, len(part))
        self.assertEqual([1, 2], part.domains)
        self.assertEqual(2, part.class_count)

    def test_label_out_of_range(self):
        with self.assertRaises(ConfigurationError):
            Dataset(self.features, [0, 1, 2, 0, 0, 0], self.domains, class_count=2)

    def test_non_finite(self):
        bad = self.features.copy()
        bad[0, 0] = np.nan
        with self.assertRaises(ConfigurationError):
            Dataset(bad, self.labels, self.domains, class_count=2)

    def test_duplicate_time_index(self):
        with self.assertRaises(ConfigurationError):
            Dataset(self.features, self.labels, self.domains, [0, 0, 1, -1, -1, -1], class_count=2)

    def test_grid_flattening(self):
        grid = Dataset(np.zeros((3, 2, 5)), [0, 1, 0], [0, 0, 1], class_count=2)
        self.assertTrue(grid.is_grid)
        self.assertEqual(10, grid.input_width)
        self.assertEqual((3, 10), grid.flat_features().shape)

    def test_class_balance(self):
        np.testing.assert_allclose([0.5, 0.5], self.dataset.class_balance())


if __name__ == '__main__':
    unittest.main()
