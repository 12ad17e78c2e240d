import logging
from dataclasses import dataclass

import numpy as np

from mgec import conf
from mgec.models.SharedModel import build_extractor
from mgec.numerics.layers import MlpParams, add_grads, mlp_backward, mlp_forward, named_grads, softmax
from mgec.utils.errors import ConfigurationError

logger = logging.getLogger(__name__)


def unit_columns(shape, rng):
    d = rng.normal(0.0, 1.0, size=shape)
    return d / np.linalg.norm(d, axis=0, keepdims=True)


@dataclass
class RouterState:
    """Projection W (d, d_r) into the gate space and M prototype columns D (d_r, M)."""

    W: np.ndarray
    D: np.ndarray
    K: int = conf.TOP_K

    def __post_init__(self):
        if self.W.ndim != 2 or self.D.ndim != 2 or self.W.shape[1] != self.D.shape[0]:
            raise ConfigurationError(f"router W {self.W.shape} and prototypes D {self.D.shape} do not chain")
        if not 1 <= int(self.K) <= self.M:
            raise ConfigurationError(f"K must lie in [1, M={self.M}], got {self.K}")
        self.K = int(self.K)

    @classmethod
    def init(cls, feature_width, n_experts, top_k, gate_dim, rng):
        W = rng.normal(0.0, np.sqrt(1.0 / feature_width), size=(feature_width, gate_dim))
        return cls(W, unit_columns((gate_dim, n_experts), rng), top_k)

    @property
    def M(self):
        return self.D.shape[1]

    @property
    def gate_dim(self):
        return self.D.shape[0]

    def degenerate_prototypes(self):
        return np.flatnonzero(np.linalg.norm(self.D, axis=0) <= conf.PROTOTYPE_NORM_EPS).tolist()

    def reinitialize(self, columns, rng):
        """Redraw the given prototype columns as unit Gaussian vectors, in place."""
        if len(columns):
            self.D[:, columns] = unit_columns((self.gate_dim, len(columns)), rng)
        return columns

    def copy(self):
        return RouterState(self.W.copy(), self.D.copy(), self.K)

    def to_dict(self):
        return {"W": self.W.tolist(), "D": self.D.tolist(), "K": self.K}

    @classmethod
    def from_dict(cls, d):
        return cls(np.asarray(d["W"], dtype=np.float64), np.asarray(d["D"], dtype=np.float64), int(d["K"]))


@dataclass
class RoutingResult:
    """Routing of one sample ((M,) arrays) or of a batch ((N, M) arrays).

    weights are exactly zero outside the selected set; selected is sorted ascending.
    """

    weights: np.ndarray
    selected: np.ndarray
    similarity: np.ndarray

    def __getitem__(self, i):
        return RoutingResult(self.weights[i], self.selected[i], self.similarity[i])


def route_batch(router, z):
    """Cosine routing of a batch of features.

    Returns
    -------
    result : RoutingResult
    cache : tuple
        Intermediate values consumed by route_backward
    """
    z = np.atleast_2d(np.asarray(z, dtype=np.float64))
    if z.shape[1] != router.W.shape[0]:
        raise ConfigurationError(f"feature width {z.shape[1]} does not match router input {router.W.shape[0]}")
    u = z @ router.W
    u_norm = np.linalg.norm(u, axis=1)
    degenerate = u_norm <= conf.NORM_EPS
    u_hat = u / np.where(degenerate, 1.0, u_norm)[:, None]
    u_hat[degenerate] = 0.0
    d_norm = np.maximum(np.linalg.norm(router.D, axis=0), conf.PROTOTYPE_NORM_EPS)
    d_hat = router.D / d_norm
    sims = u_hat @ d_hat

    # stable sort on -sim: equal similarities keep ascending expert index
    order = np.argsort(-sims, axis=1, kind="stable")[:, : router.K]
    rows = np.arange(z.shape[0])[:, None]
    weights = np.zeros_like(sims)
    weights[rows, order] = softmax(sims[rows, order], axis=1)
    result = RoutingResult(weights, np.sort(order, axis=1), sims)
    return result, (z, u_hat, u_norm, degenerate, d_hat, d_norm)


def route(router, z):
    """Route one feature vector; see route_batch."""
    result, _ = route_batch(router, np.asarray(z, dtype=np.float64)[None, :])
    return result[0]


def route_backward(router, result, cache, d_weights):
    """Backpropagate a gradient on the routing weights into W, D and the features.

    The selected set is held fixed, so only the softmax over selected experts and the cosine
    similarities carry gradient.
    """
    z, u_hat, u_norm, degenerate, d_hat, d_norm = cache
    r = result.weights
    d_sims = r * (d_weights - np.sum(r * d_weights, axis=1, keepdims=True))
    d_sims[degenerate] = 0.0
    weighted = d_sims * result.similarity
    safe_norm = np.where(degenerate, 1.0, u_norm)[:, None]
    d_u = (d_sims @ d_hat.T - weighted.sum(axis=1)[:, None] * u_hat) / safe_norm
    d_D = (u_hat.T @ d_sims - d_hat * weighted.sum(axis=0)) / d_norm
    d_W = z.T @ d_u
    d_z = d_u @ router.W.T
    return d_W, d_D, d_z


class RoutedModel(object):
    """Feature extractor, prototype router and M expert heads combined by sparse routing weights."""

    def __init__(self, extractor, router, experts):
        if len(experts) != router.M:
            raise ConfigurationError(f"{len(experts)} experts but {router.M} prototype columns")
        if extractor.out_width != router.W.shape[0]:
            raise ConfigurationError("extractor output width does not match router input width")
        widths = {(e.in_width, e.out_width) for e in experts}
        if len(widths) != 1 or next(iter(widths))[0] != extractor.out_width:
            raise ConfigurationError("experts must all map the extractor features to the same class count")
        self.extractor = extractor
        self.router = router
        self.experts = list(experts)

    @classmethod
    def build(cls, input_width, class_count, rng, hidden=conf.EXTRACTOR_HIDDEN, n_experts=conf.N_EXPERTS,
              top_k=conf.TOP_K, gate_dim=conf.GATE_DIM):
        extractor = build_extractor(input_width, hidden, rng)
        router = RouterState.init(extractor.out_width, n_experts, top_k, gate_dim, rng)
        experts = [MlpParams.init([extractor.out_width, int(class_count)], rng) for _ in range(n_experts)]
        return cls(extractor, router, experts)

    @property
    def class_count(self):
        return self.experts[0].out_width

    @property
    def M(self):
        return self.router.M

    @property
    def K(self):
        return self.router.K

    def parameters(self):
        params = self.extractor.named_parameters("extractor")
        params["router.W"] = self.router.W
        params["router.D"] = self.router.D
        for j, expert in enumerate(self.experts):
            params.update(expert.named_parameters(f"experts.{j}"))
        return params

    def embed(self, x):
        return mlp_forward(self.extractor, np.atleast_2d(x))

    def embed_backward(self, cache, d_z):
        grads, _ = mlp_backward(self.extractor, cache, d_z)
        return named_grads(grads, "extractor")

    def forward(self, x):
        """Returns (logits (N, C), RoutingResult, z, cache)."""
        z, ext_cache = self.embed(x)
        routing, route_cache = route_batch(self.router, z)
        outputs, expert_caches = [], []
        for expert in self.experts:
            out, cache = mlp_forward(expert, z)
            outputs.append(out)
            expert_caches.append(cache)
        outputs = np.stack(outputs, axis=1)
        logits = np.einsum("nm,nmc->nc", routing.weights, outputs)
        return logits, routing, z, (ext_cache, route_cache, outputs, expert_caches)

    def backward(self, cache, routing, d_logits, d_weights=None, d_z=None):
        """Gradients of all parameters given upstream gradients on logits, routing weights and features."""
        ext_cache, route_cache, outputs, expert_caches = cache
        d_logits = np.atleast_2d(d_logits)
        grads = {}
        dz = np.zeros_like(route_cache[0]) if d_z is None else np.array(d_z, dtype=np.float64)
        for j, expert in enumerate(self.experts):
            d_out = routing.weights[:, j:j + 1] * d_logits
            expert_grads, dz_j = mlp_backward(expert, expert_caches[j], d_out)
            add_grads(grads, named_grads(expert_grads, f"experts.{j}"))
            dz += dz_j
        d_r = np.einsum("nc,nmc->nm", d_logits, outputs)
        if d_weights is not None:
            d_r = d_r + d_weights
        d_W, d_D, dz_route = route_backward(self.router, routing, route_cache, d_r)
        grads["router.W"] = d_W
        grads["router.D"] = d_D
        dz += dz_route
        return add_grads(grads, self.embed_backward(ext_cache, dz))

    def copy(self):
        return RoutedModel(self.extractor.copy(), self.router.copy(), [e.copy() for e in self.experts])

    def to_dict(self):
        return {"extractor": self.extractor.to_dict(), "router": self.router.to_dict(),
                "experts": [e.to_dict() for e in self.experts]}

    @classmethod
    def from_dict(cls, d):
        return cls(MlpParams.from_dict(d["extractor"]), RouterState.from_dict(d["router"]),
                   [MlpParams.from_dict(e) for e in d["experts"]])


def routed_forward(model, x):
    """Mixture output o = sum_j r_j R_j(z) with z the extracted features.

    Parameters
    ----------
    model : RoutedModel
    x : numpy.ndarray
        One flat sample (d,) or a batch (N, d)

    Returns
    -------
    logits : numpy.ndarray
    routing : RoutingResult
    z : numpy.ndarray
    """
    single = np.ndim(x) == 1
    logits, routing, z, _ = model.forward(x)
    if single:
        return logits[0], routing[0], z[0]
    return logits, routing, z
