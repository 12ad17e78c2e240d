import logging
import time
from dataclasses import dataclass, field, replace

import numpy as np
from sklearn.model_selection import train_test_split

from mgec import conf
from mgec.models.ModelPair import evaluate_pair
from mgec.training.alignment import alignment_errors
from mgec.training.Trainer import train
from mgec.utils.errors import TrainingAbort
from mgec.utils.rng import derive_seed

logger = logging.getLogger(__name__)


@dataclass
class FoldReport:
    """Test metrics of one cross-validation fold under one ablation.

    metrics maps each available head ("shared", "routed", "fused") to its accuracy and balanced
    accuracy on the held-out domains; in single-model ablations "fused" is that model's head.
    """

    fold_id: int
    held_out: list
    ablation: str
    metrics: dict
    history: list = field(default_factory=list)
    best_epoch: int = -1
    stop_epoch: int = -1
    initial_alignment: dict = None
    test_alignment: dict = None
    chance_level: bool = False
    fusion_below_both: bool = False
    runtime: float = 0.0
    pair: object = None

    @property
    def headline_accuracy(self):
        return self.metrics["fused"]["accuracy"]

    @property
    def headline_balanced_accuracy(self):
        return self.metrics["fused"]["balanced_accuracy"]

    def to_dict(self):
        return {"fold_id": self.fold_id, "held_out": list(self.held_out), "ablation": self.ablation,
                "metrics": self.metrics, "history": [r.to_dict() for r in self.history],
                "best_epoch": self.best_epoch, "stop_epoch": self.stop_epoch,
                "initial_alignment": self.initial_alignment, "test_alignment": self.test_alignment,
                "chance_level": self.chance_level, "fusion_below_both": self.fusion_below_both,
                "runtime": self.runtime}


def validation_split(dataset, fraction, seed):
    """Seeded split of a training set, stratified by (domain, class) when every stratum has 2 members.

    Returns
    -------
    train_positions, val_positions : numpy.ndarray
    """
    positions = np.arange(len(dataset))
    strata = dataset.domain_ids * dataset.class_count + dataset.labels
    _, counts = np.unique(strata, return_counts=True)
    n_val = int(np.ceil(fraction * len(dataset)))
    if counts.min() < 2 or n_val < len(counts):
        logger.debug("(domain, class) strata too small for stratification, stratifying by domain")
        strata = dataset.domain_ids
        if np.unique(strata, return_counts=True)[1].min() < 2 or n_val < len(np.unique(strata)):
            strata = None
    train_pos, val_pos = train_test_split(positions, test_size=fraction, random_state=seed % (2 ** 32),
                                          stratify=strata)
    return np.sort(train_pos), np.sort(val_pos)


def fit_with_validation(dataset, config, teacher=None, epoch_callback=None, fold_id=0):
    """Hold out a seeded validation split of dataset and train on the rest.

    Returns
    -------
    result : TrainResult
    val_set : Dataset
    """
    train_pos, val_pos = validation_split(dataset, config.validation_fraction, derive_seed(config.seed, fold_id))
    val_set = dataset.subset(val_pos)
    return train(dataset.subset(train_pos), val_set, config, teacher, epoch_callback), val_set


def run_fold(dataset, fold, config, ablation=None, teacher=None, epoch_callback=None):
    """Train on the fold's training domains and test on its held-out domains.

    Parameters
    ----------
    dataset : Dataset
    fold : Fold
    config : TrainConfig
    ablation : str or None
        Overrides config.ablation: "full", "shared_only", "routed_only" or "no_mutual"
    teacher : TeacherRecord or None
    epoch_callback : callable or None

    Returns
    -------
    report : FoldReport
    """
    config = replace(config, ablation=ablation or config.ablation).validate()
    started = time.perf_counter()
    train_part = dataset.select_domains(fold.train_domains)
    test_set = dataset.select_domains(fold.test_domains)
    try:
        result, _ = fit_with_validation(train_part, config, teacher, epoch_callback, fold.fold_id)
    except TrainingAbort as e:
        e.fold_id = fold.fold_id
        logger.error("fold %d (%s) aborted: %s", fold.fold_id, config.ablation, e)
        raise

    metrics = evaluate_pair(result.pair, test_set)
    report = FoldReport(fold.fold_id, list(fold.test_domains), config.ablation, metrics, result.history,
                        result.best_epoch, result.stop_epoch, result.initial_alignment,
                        runtime=time.perf_counter() - started, pair=result.pair)
    if teacher is not None:
        report.test_alignment = alignment_errors(result.pair, test_set, teacher)

    chance = 1.0 / dataset.class_count - conf.CHANCE_MARGIN
    if report.headline_accuracy < chance:
        report.chance_level = True
        logger.warning("fold %d (%s): fused accuracy %.4f below chance level %.4f", fold.fold_id,
                       config.ablation, report.headline_accuracy, chance)
    if "shared" in metrics and "routed" in metrics:
        worse = min(metrics["shared"]["accuracy"], metrics["routed"]["accuracy"])
        if report.headline_accuracy < worse:
            report.fusion_below_both = True
            logger.warning("fold %d: fused accuracy %.4f below both branches (worse branch %.4f)",
                           fold.fold_id, report.headline_accuracy, worse)
    logger.info("fold %d held out %s (%s): %s", fold.fold_id, list(fold.test_domains), config.ablation,
                {h: round(m["accuracy"], 4) for h, m in metrics.items()})
    return report


def fusion_check(reports):
    """Mean fused accuracy against the mean accuracy of the worse branch over two-model folds.

    Returns
    -------
    holds : bool or None
        None when no report has both branches
    violations : list of int
        Fold ids where fusion lost to both branches
    """
    both = [r for r in reports if "shared" in r.metrics and "routed" in r.metrics]
    if not both:
        return None, []
    fused = np.mean([r.headline_accuracy for r in both])
    worse = np.mean([min(r.metrics["shared"]["accuracy"], r.metrics["routed"]["accuracy"]) for r in both])
    return bool(fused >= worse), [r.fold_id for r in both if r.fusion_below_both]
