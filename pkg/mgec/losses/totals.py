import logging
from dataclasses import dataclass, field

import numpy as np

from mgec.losses.loss_functions import (bl_grad, bl_loss, ce_grad, ce_loss, jel_grad, jel_terms, mutual_grad,
                                         mutual_weighted_loss, sl_grad, sl_loss)
from mgec.numerics.layers import add_grads
from mgec.utils.errors import ConfigurationError

COMPONENTS = ("erm", "jel", "ce", "sl", "bl", "r_from_s", "s_from_r")
MODES = ("warmup", "mutual")

logger = logging.getLogger(__name__)


@dataclass
class Batch:
    """Flat features of one mini-batch plus the augmented partners used by the joint-embedding loss."""

    x: np.ndarray
    labels: np.ndarray
    domain_ids: np.ndarray
    x_pair: np.ndarray = None

    def __len__(self):
        return self.labels.shape[0]


@dataclass
class BatchLossReport:
    """Loss components of one model on one batch.

    total is the unweighted sum of components; inactive components are 0. per_sample holds the
    model's own cross-entropy per sample and plain_ce its mean.
    """

    total: float
    components: dict
    per_sample: np.ndarray
    plain_ce: float
    routing: object = None
    jel_pairs: int = 0
    active: tuple = field(default_factory=tuple)


def _check_mode(mode, guide_losses, n):
    if mode not in MODES:
        raise ConfigurationError(f"mode must be one of {MODES}, got {mode!r}")
    if mode == "mutual":
        if guide_losses is None:
            raise ConfigurationError("mutual mode needs the partner's per-sample losses")
        if np.shape(guide_losses) != (n,):
            raise ConfigurationError(f"guide losses must have shape ({n},), got {np.shape(guide_losses)}")


def _report(components, active, per_sample, **kwargs):
    full = {name: 0.0 for name in COMPONENTS}
    full.update({name: components[name] for name in active})
    total = float(sum(full[name] for name in active))
    return BatchLossReport(total, full, per_sample, float(np.mean(per_sample)), active=tuple(active), **kwargs)


def classification_terms(logits, labels, guide_losses, mode):
    """Returns (component value, d_logits, per-sample losses) for plain or mutual-weighted CE."""
    ce_mean, per_sample = ce_loss(logits, labels)
    if mode == "warmup":
        return ce_mean, ce_grad(logits, labels), per_sample
    guide = np.asarray(guide_losses, dtype=np.float64)
    value = mutual_weighted_loss(per_sample, guide)
    # mutual_grad carries the 1/N factor already
    d_own = mutual_grad(per_sample, guide) * len(per_sample)
    return value, ce_grad(logits, labels, sample_weights=d_own), per_sample


def shared_total(batch, model, guide_losses=None, mode="warmup", use_jel=True):
    """Shared-model objective: ERM + JEL during warm-up, mutual-weighted CE + JEL afterwards.

    Parameters
    ----------
    batch : Batch
    model : SharedModel
    guide_losses : numpy.ndarray or None
        Routed model's per-sample losses, constants; required in mutual mode
    mode : str
        "warmup" or "mutual"
    use_jel : bool
        Drop the joint-embedding term when False or when the batch has no augmented partners

    Returns
    -------
    report : BatchLossReport
    grads : dict
        Gradient of report.total for every parameter of the model
    """
    _check_mode(mode, guide_losses, len(batch))
    logits, z, cache = model.forward(batch.x)
    name = "erm" if mode == "warmup" else "s_from_r"
    value, d_logits, per_sample = classification_terms(logits, batch.labels, guide_losses, mode)
    components, active = {name: value}, [name]

    d_z, jel_pairs, pair_grads = None, 0, {}
    if use_jel and batch.x_pair is not None:
        z_pair, pair_cache = model.embed(batch.x_pair)
        components["jel"], jel_pairs = jel_terms(z_pair, z)
        if jel_pairs == 0:
            logger.warning("joint-embedding term skipped: every pair has a zero-norm embedding")
        active.append("jel")
        d_pair, d_z = jel_grad(z_pair, z)
        pair_grads = model.embed_backward(pair_cache, d_pair)

    grads = add_grads(model.backward(cache, d_logits, d_z=d_z), pair_grads)
    return _report(components, active, per_sample, jel_pairs=jel_pairs), grads


def routed_total(batch, model, guide_losses=None, mode="warmup", use_sl=True, use_bl=True):
    """Routed-model objective: CE + SL + BL during warm-up, mutual-weighted CE + SL + BL afterwards.

    Parameters
    ----------
    batch : Batch
    model : RoutedModel
    guide_losses : numpy.ndarray or None
        Shared model's per-sample losses, constants; required in mutual mode
    mode : str
        "warmup" or "mutual"
    use_sl, use_bl : bool
        Switches for the specialization and balance terms

    Returns
    -------
    report : BatchLossReport
        report.routing holds the batch RoutingResult
    grads : dict
    """
    _check_mode(mode, guide_losses, len(batch))
    logits, routing, _, cache = model.forward(batch.x)
    name = "ce" if mode == "warmup" else "r_from_s"
    value, d_logits, per_sample = classification_terms(logits, batch.labels, guide_losses, mode)
    components, active = {name: value}, [name]

    d_weights = np.zeros_like(routing.weights)
    if use_sl:
        components["sl"] = sl_loss(routing.weights, batch.domain_ids)
        active.append("sl")
        d_weights += sl_grad(routing.weights, batch.domain_ids)
    if use_bl:
        components["bl"] = bl_loss(routing.weights, model.M)
        active.append("bl")
        d_weights += bl_grad(routing.weights, model.M)

    grads = model.backward(cache, routing, d_logits, d_weights=d_weights)
    return _report(components, active, per_sample, routing=routing), grads
