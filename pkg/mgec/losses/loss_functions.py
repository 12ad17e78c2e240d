"""
Loss values and their analytic gradients.

Every *_grad function returns the gradient of the matching *_loss value with respect to its first
array argument(s); batch means are part of the loss, so gradients already carry the 1/N factor.
"""
import logging

import numpy as np

from mgec import conf
from mgec.numerics.layers import log_softmax, softmax

logger = logging.getLogger(__name__)


def _one_hot(labels, class_count):
    out = np.zeros((len(labels), class_count))
    out[np.arange(len(labels)), labels] = 1.0
    return out


def ce_loss(logits, labels):
    """Cross-entropy through log-sum-exp.

    Returns
    -------
    mean : float
    per_sample : numpy.ndarray
        (N,) losses, used as the mutual guidance signal
    """
    logits = np.atleast_2d(logits)
    labels = np.asarray(labels, dtype=np.int64)
    per_sample = -log_softmax(logits, axis=1)[np.arange(len(labels)), labels]
    return float(np.mean(per_sample)), per_sample


def ce_grad(logits, labels, sample_weights=None):
    """Gradient of sum_i w_i * ce_i / N; plain mean CE when sample_weights is None."""
    logits = np.atleast_2d(logits)
    d = softmax(logits, axis=1) - _one_hot(labels, logits.shape[1])
    if sample_weights is not None:
        d = d * np.asarray(sample_weights)[:, None]
    return d / logits.shape[0]


def _cosines(z_a, z_b):
    aa = np.sum(z_a * z_a, axis=1)
    bb = np.sum(z_b * z_b, axis=1)
    ab = np.sum(z_a * z_b, axis=1)
    valid = (np.sqrt(aa) > conf.NORM_EPS) & (np.sqrt(bb) > conf.NORM_EPS)
    # sqrt(aa * bb) makes cos(z, z) exactly 1
    cos = np.where(valid, ab / np.sqrt(np.where(valid, aa * bb, 1.0)), 0.0)
    return cos, valid, aa, bb


def jel_terms(z_neighbor, z_current):
    """Returns (loss, number of pairs that entered the mean)."""
    z_a, z_b = np.atleast_2d(z_neighbor), np.atleast_2d(z_current)
    cos, valid, _, _ = _cosines(z_a, z_b)
    n_valid = int(valid.sum())
    if n_valid == 0:
        return 0.0, 0
    return float(np.sum(1.0 - cos[valid]) / n_valid), n_valid


def jel_loss(z_neighbor, z_current):
    """Mean cosine distance between paired embeddings, in [0, 2].

    Pairs where either embedding has norm <= 1e-12 are skipped and the mean is over the rest;
    when every pair is skipped the loss is 0 and a warning is logged.
    """
    loss, n_valid = jel_terms(z_neighbor, z_current)
    if n_valid == 0:
        logger.warning("every joint-embedding pair has a zero-norm embedding, loss set to 0")
    return loss


def jel_grad(z_neighbor, z_current):
    """Returns (d_neighbor, d_current)."""
    z_a, z_b = np.atleast_2d(z_neighbor), np.atleast_2d(z_current)
    cos, valid, aa, bb = _cosines(z_a, z_b)
    d_a, d_b = np.zeros_like(z_a), np.zeros_like(z_b)
    n_valid = int(valid.sum())
    if n_valid == 0:
        return d_a, d_b
    norm = np.sqrt(aa[valid] * bb[valid])[:, None]
    c = cos[valid][:, None]
    d_a[valid] = -(z_b[valid] / norm - c * z_a[valid] / aa[valid][:, None]) / n_valid
    d_b[valid] = -(z_a[valid] / norm - c * z_b[valid] / bb[valid][:, None]) / n_valid
    return d_a, d_b


def subject_mean_routing(weights, domain_ids):
    """Returns (subjects, (N_S, M) mean routing per subject) for the subjects present."""
    weights = np.atleast_2d(weights)
    domain_ids = np.asarray(domain_ids)
    subjects = np.unique(domain_ids)
    means = np.stack([weights[domain_ids == k].mean(axis=0) for k in subjects])
    return subjects, means


def _entropy(p):
    safe = np.where(p > 0, p, 1.0)
    return -np.sum(np.where(p > 0, p * np.log(safe), 0.0), axis=-1)


def subject_entropies(weights, domain_ids):
    subjects, means = subject_mean_routing(weights, domain_ids)
    return subjects, _entropy(means)


def sl_loss(weights, domain_ids):
    """Mean over the subjects in the batch of the entropy of their average routing (0 ln 0 = 0)."""
    _, entropies = subject_entropies(weights, domain_ids)
    return float(np.mean(entropies))


def sl_grad(weights, domain_ids):
    weights = np.atleast_2d(weights)
    domain_ids = np.asarray(domain_ids)
    subjects, means = subject_mean_routing(weights, domain_ids)
    grad = np.zeros_like(weights)
    for k, mean in zip(subjects, means):
        rows = domain_ids == k
        d_mean = np.where(mean > 0, -(np.log(np.where(mean > 0, mean, 1.0)) + 1.0), 0.0)
        grad[rows] = d_mean / (len(subjects) * rows.sum())
    return grad


def expert_load(weights):
    """f_j, the fraction of samples with a nonzero weight on expert j; sums to K."""
    return np.mean(np.atleast_2d(weights) > 0, axis=0)


def bl_loss(weights, n_experts=None):
    """M * sum_j f_j * mean_j(r); M defaults to the number of weight columns."""
    weights = np.atleast_2d(weights)
    m = weights.shape[1] if n_experts is None else n_experts
    return float(m * np.sum(expert_load(weights) * weights.mean(axis=0)))


def bl_grad(weights, n_experts=None):
    """Gradient with the load fractions f_j held constant."""
    weights = np.atleast_2d(weights)
    m = weights.shape[1] if n_experts is None else n_experts
    return np.broadcast_to(m * expert_load(weights) / weights.shape[0], weights.shape).copy()


def loss_gap(own, guide):
    return np.clip(np.asarray(own) - np.asarray(guide), -conf.LOSS_GAP_CLAMP, conf.LOSS_GAP_CLAMP)


def mutual_weights(own, guide):
    """1 + exp(clamp(own - guide)); always >= 1, larger where the partner learns the sample better."""
    return 1.0 + np.exp(loss_gap(own, guide))


def mutual_weighted_loss(own, guide):
    """Mean of mutual_weights * own; guide losses are constants."""
    own = np.asarray(own, dtype=np.float64)
    return float(np.mean(mutual_weights(own, guide) * own))


def mutual_grad(own, guide):
    """Gradient with respect to the per-sample own losses; the clamp is flat outside [-30, 30]."""
    own = np.asarray(own, dtype=np.float64)
    raw = own - np.asarray(guide)
    e = np.exp(loss_gap(own, guide))
    inside = np.abs(raw) < conf.LOSS_GAP_CLAMP
    return ((1.0 + e) + np.where(inside, e * own, 0.0)) / own.shape[0]
