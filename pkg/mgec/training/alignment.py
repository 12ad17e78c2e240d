import numpy as np

from mgec.numerics.layers import softmax
from mgec.utils.errors import ConfigurationError


def alignment_error(probs, target):
    """Mean over samples of the squared euclidean distance between two probability tables."""
    probs, target = np.atleast_2d(probs), np.atleast_2d(target)
    return float(np.mean(np.sum((probs - target) ** 2, axis=1)))


def alignment_errors(pair, dataset, teacher):
    """Distance of each model's predictive distribution from the softmax of the teacher logits.

    Parameters
    ----------
    pair : ModelPair
    dataset : Dataset
        Samples whose domains the teacher knows
    teacher : TeacherRecord

    Returns
    -------
    errors : dict
        {"shared": eps_S, "routed": eps_R}, None for a model absent from the pair
    """
    if teacher.class_count != pair.class_count:
        raise ConfigurationError(
            f"teacher has {teacher.class_count} classes but the models predict {pair.class_count}")
    x = dataset.flat_features()
    target = softmax(teacher.logits(x, dataset.domain_ids), axis=1)
    probs = pair.predict(x)
    return {name: alignment_error(probs[name], target) if name in probs else None
            for name in ("shared", "routed")}
