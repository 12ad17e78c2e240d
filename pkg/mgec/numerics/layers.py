from dataclasses import dataclass, field

import numpy as np

from mgec.utils.errors import ConfigurationError

ACTIVATIONS = ("relu", "identity")


def relu(x):
    return np.maximum(x, 0.0)


def drelu(x):
    return np.where(x > 0, 1.0, 0.0)


def softmax(logits, axis=-1):
    """Numerically stable softmax.

    Parameters
    ----------
    logits : numpy.ndarray
        Vector or batch of logits
    axis : int
        Axis to normalise over

    Returns
    -------
    probabilities : numpy.ndarray
        Same shape as logits, entries in (0, 1], summing to 1 along axis
    """
    logits = np.asarray(logits, dtype=np.float64)
    shifted = logits - np.max(logits, axis=axis, keepdims=True)
    exp = np.exp(shifted)
    return exp / np.sum(exp, axis=axis, keepdims=True)


def log_softmax(logits, axis=-1):
    logits = np.asarray(logits, dtype=np.float64)
    shifted = logits - np.max(logits, axis=axis, keepdims=True)
    return shifted - np.log(np.sum(np.exp(shifted), axis=axis, keepdims=True))


@dataclass
class MlpParams:
    """Fully connected network: layer i maps x to act_i(x @ weights[i] + biases[i]).

    weights[i] has shape (fan_in, fan_out). The last activation is usually "identity"
    for classifier heads and "relu" for feature extractors.
    """

    weights: list
    biases: list
    activations: list = field(default_factory=list)

    def __post_init__(self):
        if not self.activations:
            self.activations = ["relu"] * (len(self.weights) - 1) + ["identity"]
        if not (len(self.weights) == len(self.biases) == len(self.activations)) or not self.weights:
            raise ConfigurationError("MlpParams needs one bias and one activation per weight matrix")
        for i, (w, b, act) in enumerate(zip(self.weights, self.biases, self.activations)):
            if act not in ACTIVATIONS:
                raise ConfigurationError(f"activations[{i}] must be one of {ACTIVATIONS}, got {act!r}")
            if w.ndim != 2 or b.shape != (w.shape[1],):
                raise ConfigurationError(f"layer {i}: weight {w.shape} and bias {b.shape} do not match")
            if i > 0 and self.weights[i - 1].shape[1] != w.shape[0]:
                raise ConfigurationError(
                    f"layer {i}: input width {w.shape[0]} does not chain with previous output "
                    f"{self.weights[i - 1].shape[1]}")

    @property
    def in_width(self):
        return self.weights[0].shape[0]

    @property
    def out_width(self):
        return self.weights[-1].shape[1]

    @property
    def n_layers(self):
        return len(self.weights)

    def named_parameters(self, prefix):
        params = {}
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            params[f"{prefix}.{i}.W"] = w
            params[f"{prefix}.{i}.b"] = b
        return params

    def copy(self):
        return MlpParams([w.copy() for w in self.weights], [b.copy() for b in self.biases],
                         list(self.activations))

    def to_dict(self):
        return {"weights": [w.tolist() for w in self.weights],
                "biases": [b.tolist() for b in self.biases],
                "activations": list(self.activations)}

    @classmethod
    def from_dict(cls, d):
        return cls([np.asarray(w, dtype=np.float64) for w in d["weights"]],
                   [np.asarray(b, dtype=np.float64) for b in d["biases"]],
                   list(d["activations"]))

    @classmethod
    def init(cls, sizes, rng, activations=None):
        """He-normal weights for relu layers, LeCun-normal otherwise, zero biases."""
        if len(sizes) < 2:
            raise ConfigurationError("an MLP needs at least an input and an output width")
        if activations is None:
            activations = ["relu"] * (len(sizes) - 2) + ["identity"]
        weights, biases = [], []
        for fan_in, fan_out, act in zip(sizes[:-1], sizes[1:], activations):
            gain = 2.0 if act == "relu" else 1.0
            weights.append(rng.normal(0.0, np.sqrt(gain / fan_in), size=(fan_in, fan_out)))
            biases.append(np.zeros(fan_out))
        return cls(weights, biases, list(activations))


def mlp_forward(params, x):
    """Run the network on a vector or a batch of row vectors.

    Parameters
    ----------
    params : MlpParams
        The network
    x : numpy.ndarray
        Shape (in_width,) or (N, in_width)

    Returns
    -------
    output : numpy.ndarray
        Shape (out_width,) or (N, out_width)
    cache : list
        (layer input, pre-activation) per layer, consumed by mlp_backward
    """
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    h = x[None, :] if single else x
    if h.ndim != 2 or h.shape[1] != params.in_width:
        raise ConfigurationError(f"input width {x.shape[-1]} does not match first layer width {params.in_width}")
    cache = []
    for w, b, act in zip(params.weights, params.biases, params.activations):
        pre = h @ w + b
        cache.append((h, pre))
        h = relu(pre) if act == "relu" else pre
    return (h[0] if single else h), cache


def mlp_backward(params, cache, d_out):
    """Backpropagate d_out through the network.

    Returns
    -------
    grads : list of (dW, db)
        One pair per layer, same shapes as params
    d_input : numpy.ndarray
        Gradient with respect to the network input, batch shaped
    """
    d = np.atleast_2d(np.asarray(d_out, dtype=np.float64))
    grads = [None] * params.n_layers
    for i in reversed(range(params.n_layers)):
        h, pre = cache[i]
        if params.activations[i] == "relu":
            d = d * drelu(pre)
        grads[i] = (h.T @ d, d.sum(axis=0))
        d = d @ params.weights[i].T
    return grads, d


def named_grads(grads, prefix):
    out = {}
    for i, (dw, db) in enumerate(grads):
        out[f"{prefix}.{i}.W"] = dw
        out[f"{prefix}.{i}.b"] = db
    return out


def add_grads(total, extra):
    """Accumulate the gradient dict extra into total (in place) and return total."""
    for name, g in extra.items():
        if name in total:
            total[name] = total[name] + g
        else:
            total[name] = g
    return total


def min_abs_preactivation(cache, params):
    """Smallest |pre-activation| over relu layers; distance of the batch from a relu kink."""
    values = [np.min(np.abs(pre)) for (_, pre), act in zip(cache, params.activations) if act == "relu"]
    return float(min(values)) if values else np.inf
