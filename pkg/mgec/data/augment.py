import math
from dataclasses import asdict, dataclass, fields, replace

import numpy as np

from mgec import conf
from mgec.utils.errors import ConfigurationError


@dataclass
class AugmentSpec:
    mode: str = "temporal-neighbor"
    rho: float = conf.MASK_RHO
    offset: int = conf.NEIGHBOR_OFFSET
    min_electrodes_for_spatial: int = conf.MIN_ELECTRODES_FOR_SPATIAL

    def validate(self):
        if self.mode not in conf.AUGMENT_MODES:
            raise ConfigurationError(f"augment mode must be one of {conf.AUGMENT_MODES}, got {self.mode!r}")
        if not 0.0 <= self.rho < 1.0:
            raise ConfigurationError(f"rho must lie in [0, 1), got {self.rho}")
        if int(self.offset) < 1:
            raise ConfigurationError(f"offset must be >= 1, got {self.offset}")
        return self

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        unknown = set(d) - {f.name for f in fields(cls)}
        if unknown:
            raise ConfigurationError(f"unknown augment field(s): {sorted(unknown)}")
        return cls(**d)


def retrieve_neighbor(dataset, sample, offset=conf.NEIGHBOR_OFFSET):
    """Return the same-class sample recorded `offset` steps earlier in the same domain, or None."""
    if sample.t_index < 0:
        return None
    pos = dataset.position_at(sample.domain_id, sample.t_index - offset)
    if pos is None:
        return None
    neighbor = dataset[pos]
    if neighbor.label != sample.label:
        return None
    return neighbor


def segment_length(rho, timesteps):
    # round away float noise such as 0.1 * 30 = 3.0000000000000004 before the ceiling
    return int(math.ceil(round(rho * timesteps, 9)))


def mask_batch(features, spec, rng):
    """Masked copy of a batch of payloads, (N, d) flat vectors or (N, E, L) grids."""
    x = np.array(features, dtype=np.float64)
    if spec.rho == 0.0:
        return x
    if x.ndim == 2:
        x[rng.random(x.shape) < spec.rho] = 0.0
        return x
    n, electrodes, timesteps = x.shape
    if electrodes >= spec.min_electrodes_for_spatial:
        x[rng.random((n, electrodes)) < spec.rho] = 0.0
        return x
    length = min(segment_length(spec.rho, timesteps), timesteps)
    starts = rng.integers(0, timesteps - length + 1, size=(n, electrodes))
    steps = np.arange(timesteps)
    inside = (steps >= starts[..., None]) & (steps < starts[..., None] + length)
    x[inside] = 0.0
    return x


def apply_mask(sample, spec, rng):
    """Stochastic masking of a sample.

    Grids with at least `min_electrodes_for_spatial` electrodes lose whole electrode rows with
    probability rho; smaller grids lose one contiguous segment of ceil(rho * L) steps per electrode;
    flat vectors lose single coordinates with probability rho.
    """
    if spec.rho == 0.0:
        return sample
    return replace(sample, features=mask_batch(sample.features[None], spec, rng)[0])
