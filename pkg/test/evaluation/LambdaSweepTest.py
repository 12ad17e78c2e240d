import unittest

import pandas as pd

from mgec.data.synthetic import SyntheticSpec
from mgec.evaluation.LambdaSweep import ROW_COLUMNS, check_grid, lambda_sweep, summarise
from mgec.training.config import TrainConfig
from mgec.utils.errors import ConfigurationError


class LambdaSweepTest(unittest.TestCase):
    spec = SyntheticSpec(domains_per_group=(2, 1), samples_per_domain=30, dim=4)
    config = TrainConfig(batch_size=32, max_epochs=2, patience=2, lr=1e-2, warmup_epochs=1, n_experts=2,
                         top_k=1, gate_dim=3, hidden=(8,))
    report, fold_reports = lambda_sweep(spec, grid=(1.0, 0.0), seeds=(0, 1), config=config,
                                        ablations=("full", "shared_only"), jobs=1)

    def test_row_count(self):
        self.assertEqual(2 * 2 * 3 * 2, len(self.report.rows))
        self.assertEqual(ROW_COLUMNS, list(self.report.rows.columns))
        self.assertEqual(len(self.report.rows), len(self.fold_reports))

    def test_rows_sorted(self):
        rows = self.report.rows
        self.assertEqual([0.0] * 12 + [1.0] * 12, rows["lambda"].tolist())
        self.assertTrue(rows.equals(rows.sort_values(["lambda", "seed", "fold", "ablation"])))

    def test_summary(self):
        summary = self.report.summary
        self.assertEqual(4, len(summary))
        self.assertTrue((summary["n_seeds"] == 2).all())
        self.assertTrue((summary["n_runs"] == 6).all())
        cell = self.report.cell(0.0, "full")
        per_seed = self.report.rows.query("`lambda` == 0.0 and ablation == 'full'").groupby("seed")["accuracy"].mean()
        self.assertAlmostEqual(per_seed.mean(), cell["accuracy_mean"])

    def test_parallel_matches_serial(self):
        report, _ = lambda_sweep(self.spec, grid=(1.0, 0.0), seeds=(0, 1), config=self.config,
                                 ablations=("full", "shared_only"), jobs=2)
        pd.testing.assert_frame_equal(self.report.rows, report.rows)
        pd.testing.assert_frame_equal(self.report.summary, report.summary)

    def test_paired_cells_share_data(self):
        a = self.fold_reports[0]
        b = self.fold_reports[1]
        self.assertEqual((a.held_out, a.fold_id), (b.held_out, b.fold_id))
        self.assertNotEqual(a.ablation, b.ablation)

    def test_summarise_std_over_seeds(self):
        rows = pd.DataFrame({"lambda": [0.5] * 4, "seed": [0, 0, 1, 1], "fold": [0, 1, 0, 1],
                             "ablation": ["full"] * 4, "accuracy": [0.5, 0.7, 0.8, 1.0],
                             "balanced_accuracy": [0.5, 0.7, 0.8, 1.0]}, columns=ROW_COLUMNS)
        summary = summarise(rows)
        self.assertAlmostEqual(0.75, summary["accuracy_mean"][0])
        self.assertAlmostEqual(0.15, summary["accuracy_std"][0])

    def test_grid_checks(self):
        self.assertEqual([0.0, 0.5], check_grid([0.5, 0.0, 0.5]))
        with self.assertRaises(ConfigurationError):
            check_grid([0.5, 1.5])
        with self.assertRaises(ConfigurationError):
            check_grid([])

    def test_unknown_ablation(self):
        with self.assertRaises(ConfigurationError):
            lambda_sweep(self.spec, grid=(0.5,), seeds=(0,), config=self.config, ablations=("w/o R",))


if __name__ == '__main__':
    unittest.main()
