import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402
import seaborn as sns  # noqa: E402

from mgec.utils.processing import ensure_dir  # noqa: E402

sns.set_theme()

ABLATION_LABELS = {"full": "full", "shared_only": "w/o R", "routed_only": "w/o S", "no_mutual": "w/o M"}


def plot_lambda_sweep(rows, out_path, metric="accuracy"):
    """Test accuracy against lambda, one line per ablation with a band over seeds.

    Parameters
    ----------
    rows : pandas.DataFrame
        Columns lambda, seed, fold, ablation and metric, as written to sweep.csv
    out_path : str
        Image file to write
    """
    per_seed = rows.groupby(["lambda", "ablation", "seed"], as_index=False)[metric].mean()
    per_seed["setting"] = per_seed["ablation"].map(lambda a: ABLATION_LABELS.get(a, a))
    per_seed[metric] = per_seed[metric] * 100

    fig, ax = plt.subplots()
    fig.set_size_inches(7, 5)
    sns.lineplot(data=per_seed, x="lambda", y=metric, hue="setting", marker="o", errorbar="sd", ax=ax)
    ax.set_xlabel("lambda (weight of the domain-independent teacher)")
    ax.set_ylabel(f"target domain {metric.replace('_', ' ')} (%)")
    ax.set_title("Held-out domain accuracy across the lambda sweep")
    ensure_dir(os.path.dirname(out_path))
    fig.savefig(out_path, bbox_inches="tight")
    plt.close(fig)
    return out_path


def plot_case_study(rows, out_path, metric="accuracy"):
    """Per held-out domain bars of each ablation.

    Parameters
    ----------
    rows : pandas.DataFrame
        Columns held_out, ablation and metric, as written to folds.csv
    """
    df = pd.DataFrame(rows).copy()
    df["setting"] = df["ablation"].map(lambda a: ABLATION_LABELS.get(a, a))
    df["held_out"] = df["held_out"].astype(str)
    df[metric] = df[metric] * 100

    fig, ax = plt.subplots()
    fig.set_size_inches(max(6, 1.2 * df["held_out"].nunique()), 5)
    sns.barplot(data=df, x="held_out", y=metric, hue="setting", ax=ax)
    ax.set_xlabel("held-out domain")
    ax.set_ylabel(f"{metric.replace('_', ' ')} (%)")
    ensure_dir(os.path.dirname(out_path))
    fig.savefig(out_path, bbox_inches="tight")
    plt.close(fig)
    return out_path
