from dataclasses import dataclass

import numpy as np

from mgec.evaluation.metrics import accuracy, balanced_accuracy
from mgec.models.RoutedModel import RoutedModel
from mgec.models.SharedModel import SharedModel
from mgec.models.fusion import fuse_predictions
from mgec.numerics.layers import softmax
from mgec.utils.errors import ConfigurationError

HEADS = ("shared", "routed", "fused")


@dataclass
class ModelPair:
    """The shared-expert model and the routed-expert model; either may be absent in an ablation."""

    shared: SharedModel = None
    routed: RoutedModel = None

    def __post_init__(self):
        if self.shared is None and self.routed is None:
            raise ConfigurationError("a model pair needs at least one model")
        if self.shared is not None and self.routed is not None \
                and self.shared.class_count != self.routed.class_count:
            raise ConfigurationError("shared and routed models disagree on the class count")

    @property
    def class_count(self):
        return (self.shared or self.routed).class_count

    def logits(self, x):
        out = {}
        if self.shared is not None:
            out["shared"] = self.shared.forward(x)[0]
        if self.routed is not None:
            out["routed"] = self.routed.forward(x)[0]
        return out

    def predict(self, x):
        """Class probabilities per available head; fused falls back to the single branch in ablations."""
        logits = self.logits(x)
        probs = {name: softmax(v, axis=1) for name, v in logits.items()}
        if len(logits) == 2:
            _, probs["fused"] = fuse_predictions(logits["shared"], logits["routed"])
        else:
            probs["fused"] = next(iter(probs.values()))
        return probs

    def copy(self):
        return ModelPair(self.shared.copy() if self.shared is not None else None,
                         self.routed.copy() if self.routed is not None else None)

    def to_dict(self):
        return {"shared": self.shared.to_dict() if self.shared is not None else None,
                "routed": self.routed.to_dict() if self.routed is not None else None}

    @classmethod
    def from_dict(cls, d):
        shared = SharedModel.from_dict(d["shared"]) if d.get("shared") is not None else None
        routed = RoutedModel.from_dict(d["routed"]) if d.get("routed") is not None else None
        return cls(shared, routed)


def evaluate_pair(pair, dataset):
    """Accuracy and balanced accuracy of every available head on a dataset.

    Returns
    -------
    metrics : dict
        head -> {"accuracy": float, "balanced_accuracy": float}
    """
    probs = pair.predict(dataset.flat_features())
    metrics = {}
    for head in HEADS:
        if head not in probs:
            continue
        predictions = np.argmax(probs[head], axis=1)
        metrics[head] = {"accuracy": accuracy(predictions, dataset.labels),
                         "balanced_accuracy": balanced_accuracy(predictions, dataset.labels,
                                                                dataset.class_count)}
    return metrics
