import numpy as np

from mgec.numerics.layers import softmax
from mgec.utils.errors import ConfigurationError


def fuse_predictions(shared_logits, routed_logits):
    """Average the two branches' class probabilities.

    Works on single logit vectors or on (N, C) batches.

    Returns
    -------
    classes : int or numpy.ndarray
        argmax of the fused probabilities, lowest index on ties
    fused : numpy.ndarray
        (softmax(shared) + softmax(routed)) / 2
    """
    shared_logits = np.asarray(shared_logits, dtype=np.float64)
    routed_logits = np.asarray(routed_logits, dtype=np.float64)
    if shared_logits.shape != routed_logits.shape:
        raise ConfigurationError(f"logit shapes differ: {shared_logits.shape} vs {routed_logits.shape}")
    fused = (softmax(shared_logits) + softmax(routed_logits)) / 2.0
    classes = np.argmax(fused, axis=-1)
    if fused.ndim == 1:
        classes = int(classes)
    return classes, fused
