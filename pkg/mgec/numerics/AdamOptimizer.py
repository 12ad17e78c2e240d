from dataclasses import dataclass, field

import numpy as np

from mgec import conf
from mgec.utils.errors import ConfigurationError

# biases and router prototypes are never decayed
NO_DECAY_SUFFIXES = (".b", ".D")


@dataclass
class AdamState:
    lr: float = conf.LEARNING_RATE
    beta1: float = conf.ADAM_BETA1
    beta2: float = conf.ADAM_BETA2
    eps: float = conf.ADAM_EPS
    weight_decay: float = conf.WEIGHT_DECAY
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def decays(name):
    return not name.endswith(NO_DECAY_SUFFIXES)


def adam_step(params, grads, state):
    """One Adam update with decoupled weight decay.

    Parameter arrays are updated in place, so models holding them see the new values.

    Parameters
    ----------
    params : dict
        name -> numpy.ndarray
    grads : dict
        name -> numpy.ndarray, same shapes; a missing name means a zero gradient
    state : AdamState
        Moments and step counter, updated in place

    Returns
    -------
    params : dict
    state : AdamState
    """
    for name, g in grads.items():
        if name not in params:
            raise ConfigurationError(f"gradient for unknown parameter {name!r}")
        if np.shape(g) != params[name].shape:
            raise ConfigurationError(
                f"gradient shape {np.shape(g)} does not match parameter {name!r} shape {params[name].shape}")

    state.step += 1
    t = state.step
    bias_correction1 = 1.0 - state.beta1 ** t
    bias_correction2 = 1.0 - state.beta2 ** t

    for name, p in params.items():
        g = grads.get(name)
        if g is None:
            g = np.zeros_like(p)
        if name not in state.m:
            state.m[name] = np.zeros_like(p)
            state.v[name] = np.zeros_like(p)
        m, v = state.m[name], state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g

        if state.weight_decay != 0.0 and decays(name):
            p *= 1.0 - state.lr * state.weight_decay

        denom = np.sqrt(v / bias_correction2) + state.eps
        p -= (state.lr / bias_correction1) * m / denom
    return params, state


class AdamOptimizer(object):
    """Adam bound to one model's parameter dict; each model owns one optimizer."""

    def __init__(self, params, lr=conf.LEARNING_RATE, betas=(conf.ADAM_BETA1, conf.ADAM_BETA2),
                 eps=conf.ADAM_EPS, weight_decay=conf.WEIGHT_DECAY):
        self.params = params
        self.state = AdamState(lr=lr, beta1=betas[0], beta2=betas[1], eps=eps, weight_decay=weight_decay)

    def step(self, grads):
        adam_step(self.params, grads, self.state)

    def reset_moments(self, name, index=Ellipsis):
        """Forget the moments of a parameter (or of the entries selected by index) after re-initialising it."""
        if name in self.state.m:
            self.state.m[name][index] = 0.0
            self.state.v[name][index] = 0.0
