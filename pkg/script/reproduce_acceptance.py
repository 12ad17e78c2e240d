# Reproduces the benchmark claims on the synthetic data: the lambda sweep crossover, the alignment
# diagnostic and the efficacy of the balance and specialization terms.
# Results land in RESULTS_DIR as csv; expect well under an hour on one core with the defaults below.
# MGEC_THREADS caps the workers used by the sweeps.
import os
import sys
from dataclasses import replace
from pathlib import Path

import pandas as pd

absolute_path = os.fspath(Path(__file__).resolve().parent.parent)
if absolute_path not in sys.path:
    sys.path.append(absolute_path)

from mgec import conf
from mgec.data.synthetic import SyntheticSpec, generate_synthetic
from mgec.evaluation.FoldRunner import fit_with_validation
from mgec.evaluation.LambdaSweep import lambda_sweep
from mgec.plot.figures import plot_lambda_sweep
from mgec.training.config import TrainConfig
from mgec.utils.processing import save_csv

RESULTS_DIR = "../results/acceptance"
JOBS = int(os.environ.get(conf.THREADS_ENV, "1"))
SEEDS = conf.SEEDS

spec = SyntheticSpec()
config = TrainConfig()

print("lambda sweep, default teacher spread")
sweep, _ = lambda_sweep(spec, conf.LAMBDA_GRID, SEEDS, config, conf.SWEEP_ABLATIONS, JOBS)
save_csv(sweep.rows, RESULTS_DIR, "sweep.csv")
save_csv(sweep.summary, RESULTS_DIR, "sweep_summary.csv")
plot_lambda_sweep(sweep.rows, os.path.join(RESULTS_DIR, "lambda_sweep.png"))
print(sweep.summary.to_string(index=False))

print("lambda sweep at lambda 0, large teacher spread")
wide, _ = lambda_sweep(spec.large_spread(), [0.0], SEEDS, config, ("shared_only", "routed_only"), JOBS)
save_csv(wide.summary, RESULTS_DIR, "sweep_large_spread.csv")

shared_gain = sweep.cell(1.0, "shared_only")["accuracy_mean"] - sweep.cell(0.0, "shared_only")["accuracy_mean"]
routed_gain = wide.cell(0.0, "routed_only")["accuracy_mean"] - wide.cell(0.0, "shared_only")["accuracy_mean"]
full_margin = min(sweep.cell(lam, "full")["accuracy_mean"]
                  - max(sweep.cell(lam, a)["accuracy_mean"] for a in ("shared_only", "routed_only"))
                  for lam in conf.LAMBDA_GRID)
print(f"shared-only gain from lambda 0 to 1: {100 * shared_gain:.2f} points (needs >= 3)")
print(f"routed-only over shared-only at lambda 0, large spread: {100 * routed_gain:.2f} points (needs >= 2)")
print(f"worst margin of full over the best ablation: {100 * full_margin:.2f} points (needs >= -2)")

print("alignment diagnostic and regularizer efficacy")
efficacy_config = replace(config, top_k=2)
rows = []
for seed in SEEDS:
    dataset, teacher = generate_synthetic(replace(spec, seed=seed))
    for variant, overrides in (("full", {}), ("no_bl", {"use_bl": False}), ("no_sl", {"use_sl": False})):
        run_config = replace(efficacy_config, seed=seed, **overrides)
        result, _ = fit_with_validation(dataset, run_config, teacher)
        last = result.history[-1]
        best_alignment = result.best_record.alignment
        rows.append({"seed": seed, "variant": variant, "load_cv": last.load_cv,
                     "subject_entropy": last.subject_entropy,
                     "initial_alignment": sum(result.initial_alignment.values()),
                     "best_alignment": sum(best_alignment.values())})
df = pd.DataFrame(rows)
save_csv(df, RESULTS_DIR, "efficacy.csv")
means = df.groupby("variant").mean(numeric_only=True)
print(means.to_string())

full = means.loc["full"]
print(f"alignment at best epoch {full.best_alignment:.4f} vs before training {full.initial_alignment:.4f}")
print(f"load CV with balance term {full.load_cv:.4f} vs without {means.loc['no_bl'].load_cv:.4f}")
print(f"subject entropy with specialization term {full.subject_entropy:.4f} "
      f"vs without {means.loc['no_sl'].subject_entropy:.4f}")

checks = {"shared gain": shared_gain >= 0.03, "routed gain": routed_gain >= 0.02, "full margin": full_margin >= -0.02,
          "alignment": full.best_alignment <= full.initial_alignment,
          "balance": full.load_cv < means.loc["no_bl"].load_cv,
          "specialization": full.subject_entropy < means.loc["no_sl"].subject_entropy}
for name, ok in checks.items():
    print(f"{name:<15} {'pass' if ok else 'FAIL'}")
sys.exit(0 if all(checks.values()) else 1)
