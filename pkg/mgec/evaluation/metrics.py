import numpy as np
import pandas as pd
from sklearn.metrics import confusion_matrix


def accuracy(predictions, labels):
    predictions = np.asarray(predictions)
    labels = np.asarray(labels)
    if labels.size == 0:
        return 0.0
    return float(np.mean(predictions == labels))


def balanced_accuracy(predictions, labels, class_count):
    """Mean recall over the classes present in labels.

    Parameters
    ----------
    predictions : array-like
        Predicted class indices
    labels : array-like
        True class indices
    class_count : int
        C, so predictions of absent classes still land in the confusion matrix

    Returns
    -------
    score : float
        In [0, 1]; classes absent from labels do not enter the mean
    """
    labels = np.asarray(labels)
    if labels.size == 0:
        return 0.0
    cm = confusion_matrix(labels, predictions, labels=np.arange(class_count))
    support = cm.sum(axis=1)
    present = support > 0
    recalls = np.diag(cm)[present] / support[present]
    return float(np.mean(recalls))


def case_study(reports):
    """Per held-out domain accuracy of the full framework against its two single-branch ablations.

    Parameters
    ----------
    reports : list of FoldReport

    Returns
    -------
    table : pandas.DataFrame
        One row per held-out domain set with columns full, shared_only, routed_only and full_wins
    wins : int
        Number of rows where the full framework beats both ablations
    """
    rows = [{"held_out": ",".join(str(d) for d in r.held_out), "ablation": r.ablation,
             "accuracy": r.headline_accuracy} for r in reports]
    df = pd.DataFrame(rows, columns=["held_out", "ablation", "accuracy"])
    table = df.pivot_table(index="held_out", columns="ablation", values="accuracy", aggfunc="mean")
    for col in ("full", "shared_only", "routed_only"):
        if col not in table.columns:
            table[col] = np.nan
    table = table[["full", "shared_only", "routed_only"]].reset_index()
    table["full_wins"] = (table["full"] > table["shared_only"]) & (table["full"] > table["routed_only"])
    return table, int(table["full_wins"].sum())
