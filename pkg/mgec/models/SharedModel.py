import numpy as np

from mgec import conf
from mgec.numerics.layers import MlpParams, add_grads, mlp_backward, mlp_forward, named_grads
from mgec.utils.errors import ConfigurationError


def build_extractor(input_width, hidden, rng):
    sizes = [int(input_width)] + [int(h) for h in hidden]
    return MlpParams.init(sizes, rng, activations=["relu"] * len(hidden))


class SharedModel(object):
    """Feature extractor followed by a single classifier head trained on pooled domains."""

    def __init__(self, extractor, head):
        if extractor.out_width != head.in_width:
            raise ConfigurationError(
                f"extractor output width {extractor.out_width} != head input width {head.in_width}")
        self.extractor = extractor
        self.head = head

    @classmethod
    def build(cls, input_width, class_count, rng, hidden=conf.EXTRACTOR_HIDDEN):
        extractor = build_extractor(input_width, hidden, rng)
        head = MlpParams.init([extractor.out_width, int(class_count)], rng)
        return cls(extractor, head)

    @property
    def class_count(self):
        return self.head.out_width

    @property
    def feature_width(self):
        return self.extractor.out_width

    def parameters(self):
        params = self.extractor.named_parameters("extractor")
        params.update(self.head.named_parameters("head"))
        return params

    def embed(self, x):
        return mlp_forward(self.extractor, np.atleast_2d(x))

    def embed_backward(self, cache, d_z):
        grads, _ = mlp_backward(self.extractor, cache, d_z)
        return named_grads(grads, "extractor")

    def forward(self, x):
        z, ext_cache = self.embed(x)
        logits, head_cache = mlp_forward(self.head, z)
        return logits, z, (ext_cache, head_cache)

    def backward(self, cache, d_logits, d_z=None):
        ext_cache, head_cache = cache
        head_grads, dz = mlp_backward(self.head, head_cache, d_logits)
        if d_z is not None:
            dz = dz + d_z
        grads = named_grads(head_grads, "head")
        return add_grads(grads, self.embed_backward(ext_cache, dz))

    def copy(self):
        return SharedModel(self.extractor.copy(), self.head.copy())

    def to_dict(self):
        return {"extractor": self.extractor.to_dict(), "head": self.head.to_dict()}

    @classmethod
    def from_dict(cls, d):
        return cls(MlpParams.from_dict(d["extractor"]), MlpParams.from_dict(d["head"]))


def shared_forward(model, x):
    """Logits and features of the shared model.

    Parameters
    ----------
    model : SharedModel
    x : numpy.ndarray
        One flat sample (d,) or a batch (N, d)

    Returns
    -------
    logits : numpy.ndarray
        (C,) or (N, C)
    z : numpy.ndarray
        Extracted features, same batch shape
    """
    single = np.ndim(x) == 1
    logits, z, _ = model.forward(x)
    if single:
        return logits[0], z[0]
    return logits, z
