from dataclasses import asdict, dataclass, field

import numpy as np


@dataclass
class EpochRecord:
    """Diagnostics of one training epoch, written as one json line.

    Loss dicts hold batch-size weighted means of each component; expert_load holds the fraction of
    training samples routed to each expert (sums to K).
    """

    epoch: int
    phase: str
    shared_losses: dict = field(default_factory=dict)
    routed_losses: dict = field(default_factory=dict)
    val_accuracy: dict = field(default_factory=dict)
    alignment: dict = None
    expert_load: list = None
    load_cv: float = None
    subject_entropy: float = None
    reinitialised: int = 0
    temporal_pairs: float = None

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


def coefficient_of_variation(values):
    values = np.asarray(values, dtype=np.float64)
    mean = values.mean()
    if mean == 0:
        return 0.0
    return float(values.std() / mean)


@dataclass
class TrainResult:
    pair: object
    history: list
    best_epoch: int
    stop_epoch: int
    best_score: float
    initial_alignment: dict = None

    @property
    def best_record(self):
        return self.history[self.best_epoch]

    def summary(self):
        return {"best_epoch": self.best_epoch, "stop_epoch": self.stop_epoch, "best_score": self.best_score,
                "initial_alignment": self.initial_alignment,
                "best_alignment": self.best_record.alignment if self.history else None}


class EarlyStopping(object):
    """Tracks the best score; only a strict improvement resets the counter, so ties keep the earlier epoch."""

    def __init__(self, patience):
        self.patience = int(patience)
        self.best_score = -np.inf
        self.best_epoch = -1
        self.since_best = 0

    def update(self, score, epoch):
        """Returns True when epoch is the new best."""
        if score > self.best_score:
            self.best_score = float(score)
            self.best_epoch = int(epoch)
            self.since_best = 0
            return True
        self.since_best += 1
        return False

    @property
    def should_stop(self):
        return self.since_best >= self.patience
