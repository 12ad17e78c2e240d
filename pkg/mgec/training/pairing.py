import logging

import numpy as np

from mgec.data.augment import apply_mask, retrieve_neighbor

logger = logging.getLogger(__name__)


def jel_batch_pairs(positions, dataset, augment, rng):
    """Augmented partners for the joint-embedding loss.

    In temporal-neighbor mode each sample is paired with its masked same-class predecessor; samples
    without one, and every sample in self-mask mode, are paired with a masked copy of themselves.

    Parameters
    ----------
    positions : array-like
        Batch positions in dataset
    dataset : Dataset
    augment : AugmentSpec
    rng : numpy.random.Generator

    Returns
    -------
    x_pair : numpy.ndarray
        (N, input_width) flat partners aligned with positions
    n_temporal : int
        Number of samples paired with a temporal neighbor
    """
    positions = np.asarray(positions, dtype=np.int64)
    partners, n_temporal = [], 0
    for pos in positions.tolist():
        partner = dataset[pos]
        if augment.mode == "temporal-neighbor":
            neighbor = retrieve_neighbor(dataset, partner, augment.offset)
            if neighbor is not None:
                partner = neighbor
                n_temporal += 1
        partners.append(apply_mask(partner, augment, rng).features.reshape(-1))
    logger.debug("joint-embedding pairs: %d temporal-neighbor, %d self-mask", n_temporal,
                 len(positions) - n_temporal)
    if not partners:
        return np.zeros((0, dataset.input_width)), 0
    return np.stack(partners).astype(np.float64), n_temporal
