import logging
from dataclasses import dataclass, replace

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from mgec import conf
from mgec.data.synthetic import generate_synthetic
from mgec.evaluation.FoldRunner import run_fold
from mgec.evaluation.folds import lodo_folds
from mgec.training.config import TrainConfig
from mgec.utils.errors import ConfigurationError
from mgec.utils.rng import derive_seed, lambda_key

logger = logging.getLogger(__name__)

ROW_COLUMNS = ["lambda", "seed", "fold", "ablation", "accuracy", "balanced_accuracy"]


@dataclass
class SweepReport:
    """Fold-level results of a lambda sweep and their per-(lambda, ablation) aggregate.

    rows has one line per (lambda, seed, fold, ablation); summary averages folds within a seed, then
    gives mean and std across seeds.
    """

    grid: list
    seeds: list
    ablations: list
    rows: pd.DataFrame
    summary: pd.DataFrame

    def cell(self, lam, ablation):
        row = self.summary[(self.summary["lambda"] == lam) & (self.summary["ablation"] == ablation)]
        return row.iloc[0].to_dict()

    def to_dict(self):
        return {"grid": list(self.grid), "seeds": list(self.seeds), "ablations": list(self.ablations),
                "summary": self.summary.to_dict(orient="records")}


def check_grid(grid):
    grid = sorted({float(lam) for lam in grid})
    if not grid:
        raise ConfigurationError("lambda grid is empty")
    if grid[0] < 0.0 or grid[-1] > 1.0:
        raise ConfigurationError(f"lambda grid must lie in [0, 1], got {grid}")
    return grid


def summarise(rows):
    """Mean and std across seeds of the fold-averaged accuracies per (lambda, ablation)."""
    per_seed = rows.groupby(["lambda", "ablation", "seed"], as_index=False)[["accuracy", "balanced_accuracy"]] \
        .mean()
    summary = per_seed.groupby(["lambda", "ablation"], as_index=False).agg(
        accuracy_mean=("accuracy", "mean"),
        accuracy_std=("accuracy", lambda s: float(np.std(s))),
        balanced_accuracy_mean=("balanced_accuracy", "mean"),
        balanced_accuracy_std=("balanced_accuracy", lambda s: float(np.std(s))),
        n_seeds=("seed", "nunique"))
    fold_counts = rows.groupby(["lambda", "ablation"]).size().reset_index(name="n_runs")
    summary = summary.merge(fold_counts, on=["lambda", "ablation"])
    return summary.sort_values(["lambda", "ablation"]).reset_index(drop=True)


def run_cell(spec_template, lam, seed, fold_index, ablation, config):
    """One (lambda, seed, fold, ablation) run; regenerates its dataset so cells share nothing."""
    spec = replace(spec_template, lam=lam, seed=int(seed))
    dataset, teacher = generate_synthetic(spec)
    fold = lodo_folds(dataset)[fold_index]
    cell_config = replace(config, seed=derive_seed(seed, lambda_key(lam), fold_index))
    report = run_fold(dataset, fold, cell_config, ablation=ablation, teacher=teacher)
    report.pair = None
    return {"lambda": lam, "seed": int(seed), "fold": fold.fold_id, "ablation": ablation,
            "accuracy": report.headline_accuracy, "balanced_accuracy": report.headline_balanced_accuracy}, report


def lambda_sweep(spec_template, grid=conf.LAMBDA_GRID, seeds=conf.SEEDS, config=None,
                 ablations=conf.SWEEP_ABLATIONS, jobs=1):
    """Leave-one-domain-out accuracy of each ablation across the lambda grid.

    Parameters
    ----------
    spec_template : SyntheticSpec
        Generator settings; lam and seed are overridden per cell
    grid : iterable of float
    seeds : iterable of int
    config : TrainConfig
    ablations : iterable of str
    jobs : int
        joblib workers; cells are independent, and results are sorted before aggregation

    Returns
    -------
    report : SweepReport
    reports : list of FoldReport
        In row order
    """
    config = (config or TrainConfig()).validate()
    grid = check_grid(grid)
    seeds = [int(s) for s in seeds]
    unknown = set(ablations) - set(conf.ABLATIONS)
    if unknown:
        raise ConfigurationError(f"unknown ablation(s): {sorted(unknown)}")
    spec_template.validate()
    n_folds = spec_template.domain_count
    cells = [(lam, seed, f, ablation) for lam in grid for seed in seeds for f in range(n_folds)
             for ablation in ablations]
    logger.info("lambda sweep: %d cells (%d lambdas x %d seeds x %d folds x %d ablations), %d jobs",
                len(cells), len(grid), len(seeds), n_folds, len(ablations), jobs)

    results = Parallel(n_jobs=jobs)(delayed(run_cell)(spec_template, lam, seed, f, ablation, config)
                                    for lam, seed, f, ablation in cells)
    order = sorted(range(len(results)), key=lambda i: (results[i][0]["lambda"], results[i][0]["seed"],
                                                       results[i][0]["fold"], results[i][0]["ablation"]))
    rows = pd.DataFrame([results[i][0] for i in order], columns=ROW_COLUMNS)
    reports = [results[i][1] for i in order]
    report = SweepReport(grid, seeds, list(ablations), rows, summarise(rows))
    return report, reports
