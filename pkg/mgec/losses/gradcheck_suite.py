"""
Finite-difference verification of every loss composition on small random models.

Probe points are redrawn until every routing decision sits more than the margin away from a top-K
tie and every relu pre-activation more than the margin away from zero.
"""
import logging
from dataclasses import dataclass

import numpy as np

from mgec import conf
from mgec.losses.loss_functions import bl_grad, bl_loss, ce_grad, ce_loss, jel_grad, jel_loss, sl_grad, sl_loss
from mgec.losses.totals import Batch, routed_total, shared_total
from mgec.models.RoutedModel import RoutedModel
from mgec.models.SharedModel import SharedModel
from mgec.numerics.gradcheck import finite_diff_check
from mgec.numerics.layers import min_abs_preactivation
from mgec.utils.errors import ConfigurationError
from mgec.utils.rng import keyed_rng

logger = logging.getLogger(__name__)

COMPOSITIONS = ("erm", "jel", "shared_total", "routed_ce", "sl", "bl", "routed_total", "r_from_s", "s_from_r")
CORRUPTION = 1.01
MAX_DRAWS = 1000


@dataclass
class ProbeSetup:
    input_width: int = 12
    hidden: tuple = (10, 8)
    class_count: int = 3
    n_experts: int = 4
    top_k: int = 2
    gate_dim: int = 5
    batch_size: int = 16
    n_domains: int = 3


def routing_margin(similarity, k):
    """Smallest gap between the K-th and (K+1)-th largest similarity over a batch."""
    if similarity.shape[1] <= k:
        return np.inf
    ranked = -np.sort(-similarity, axis=1)
    return float(np.min(ranked[:, k - 1] - ranked[:, k]))


def _draw(setup, seed, attempt):
    rng = keyed_rng(seed, attempt)
    x = rng.normal(size=(setup.batch_size, setup.input_width))
    x_pair = x + 0.3 * rng.normal(size=x.shape)
    labels = rng.integers(0, setup.class_count, size=setup.batch_size)
    domains = np.arange(setup.batch_size) % setup.n_domains
    shared = SharedModel.build(setup.input_width, setup.class_count, rng, hidden=setup.hidden)
    routed = RoutedModel.build(setup.input_width, setup.class_count, rng, hidden=setup.hidden,
                               n_experts=setup.n_experts, top_k=setup.top_k, gate_dim=setup.gate_dim)
    # bias the biases off zero so that no pre-activation sits at a kink by construction
    for model in (shared, routed):
        for b in model.extractor.biases:
            b[...] = rng.normal(0.0, 0.1, size=b.shape)
    return Batch(x, labels, domains, x_pair), shared, routed


def _margins(batch, shared, routed):
    margins = []
    for model in (shared, routed):
        for x in (batch.x, batch.x_pair):
            _, cache = model.embed(x)
            margins.append(min_abs_preactivation(cache, model.extractor))
    _, routing, _, _ = routed.forward(batch.x)
    return min(margins), routing_margin(routing.similarity, routed.K)


def draw_probe_point(setup=None, seed=0, margin=conf.GRADCHECK_MARGIN):
    """Random batch and models at least `margin` away from relu kinks and routing ties."""
    setup = setup or ProbeSetup()
    for attempt in range(MAX_DRAWS):
        batch, shared, routed = _draw(setup, seed, attempt)
        kink, tie = _margins(batch, shared, routed)
        if kink > margin and tie > margin:
            logger.debug("probe point found after %d draws (kink margin %.2e, tie margin %.2e)",
                         attempt + 1, kink, tie)
            return batch, shared, routed
    raise ConfigurationError(f"no probe point {margin} away from kinks and ties in {MAX_DRAWS} draws")


def _corrupted(loss_fn):
    def wrapped(params):
        loss, grads = loss_fn(params)
        return loss, {name: g * CORRUPTION for name, g in grads.items()}
    return wrapped


def loss_closures(batch, shared, routed):
    """name -> (loss_fn, params) for every composition."""
    guide_r = routed_total(batch, routed)[0].per_sample.copy()
    guide_s = shared_total(batch, shared)[0].per_sample.copy()
    shared_params, routed_params = shared.parameters(), routed.parameters()

    def erm(params):
        logits, _, cache = shared.forward(batch.x)
        return ce_loss(logits, batch.labels)[0], shared.backward(cache, ce_grad(logits, batch.labels))

    def jel(params):
        z_pair, pair_cache = shared.embed(batch.x_pair)
        z, cache = shared.embed(batch.x)
        d_pair, d_z = jel_grad(z_pair, z)
        grads = shared.embed_backward(pair_cache, d_pair)
        for name, g in shared.embed_backward(cache, d_z).items():
            grads[name] = grads[name] + g
        return jel_loss(z_pair, z), grads

    def routed_ce(params):
        logits, routing, _, cache = routed.forward(batch.x)
        return ce_loss(logits, batch.labels)[0], routed.backward(cache, routing, ce_grad(logits, batch.labels))

    def routing_term(loss, grad):
        def fn(params):
            logits, routing, _, cache = routed.forward(batch.x)
            if loss is bl_loss:
                value, d_w = bl_loss(routing.weights), bl_grad(routing.weights)
            else:
                value = loss(routing.weights, batch.domain_ids)
                d_w = grad(routing.weights, batch.domain_ids)
            return value, routed.backward(cache, routing, np.zeros_like(logits), d_weights=d_w)
        return fn

    def total(fn, model, **kwargs):
        def wrapped(params):
            report, grads = fn(batch, model, **kwargs)
            return report.total, grads
        return wrapped

    return {
        "erm": (erm, shared_params),
        "jel": (jel, shared.extractor.named_parameters("extractor")),
        "shared_total": (total(shared_total, shared), shared_params),
        "routed_ce": (routed_ce, routed_params),
        "sl": (routing_term(sl_loss, sl_grad), routed_params),
        "bl": (routing_term(bl_loss, bl_grad), routed_params),
        "routed_total": (total(routed_total, routed), routed_params),
        "r_from_s": (total(routed_total, routed, guide_losses=guide_s, mode="mutual"), routed_params),
        "s_from_r": (total(shared_total, shared, guide_losses=guide_r, mode="mutual"), shared_params),
    }


def run_gradcheck(seed=0, n_probes=conf.GRADCHECK_PROBES, h=conf.GRADCHECK_STEP, tol=conf.GRADCHECK_TOL,
                  corrupt=False, names=None, setup=None):
    """Check every loss composition against central differences.

    Parameters
    ----------
    seed : int
        Selects the probe point and the probed coordinates
    corrupt : bool
        Scale every analytic gradient by 1.01 so the check must fail
    names : iterable of str or None
        Subset of COMPOSITIONS, all when None

    Returns
    -------
    reports : dict
        composition name -> GradCheckReport
    """
    names = list(COMPOSITIONS if names is None else names)
    unknown = set(names) - set(COMPOSITIONS)
    if unknown:
        raise ConfigurationError(f"unknown gradcheck composition(s): {sorted(unknown)}")
    batch, shared, routed = draw_probe_point(setup, seed)
    closures = loss_closures(batch, shared, routed)
    reports = {}
    for name in names:
        loss_fn, params = closures[name]
        if corrupt:
            loss_fn = _corrupted(loss_fn)
        reports[name] = finite_diff_check(loss_fn, params, n_probes=n_probes, h=h, tol=tol,
                                          rng=keyed_rng(seed, 1000 + COMPOSITIONS.index(name)))
        logger.info("gradcheck %-13s max rel err %.3e %s", name, reports[name].max_rel_err,
                    "pass" if reports[name].passed else "FAIL")
    return reports

