from dataclasses import dataclass

import numpy as np

from mgec.utils.errors import ConfigurationError


@dataclass(frozen=True)
class Sample:
    features: np.ndarray
    label: int
    domain_id: int
    t_index: int = -1

    @property
    def is_grid(self):
        return self.features.ndim == 2


class Dataset(object):
    """Immutable collection of samples stored column-wise.

    Parameters
    ----------
    features : numpy.ndarray
        (N, d) flat vectors or (N, E, L) grids
    labels : numpy.ndarray
        (N,) class indices in [0, class_count)
    domain_ids : numpy.ndarray
        (N,) subject / domain identifiers
    t_indices : numpy.ndarray or None
        (N,) temporal position inside the domain, -1 when unordered
    class_count : int
        Number of classes C
    """

    def __init__(self, features, labels, domain_ids, t_indices=None, class_count=None):
        features = np.array(features, dtype=np.float64)
        labels = np.asarray(labels, dtype=np.int64)
        domain_ids = np.asarray(domain_ids, dtype=np.int64)
        n = labels.shape[0]
        t_indices = np.full(n, -1, dtype=np.int64) if t_indices is None else np.asarray(t_indices, dtype=np.int64)
        if class_count is None:
            class_count = int(labels.max()) + 1 if n else 0

        if features.ndim not in (2, 3) or features.shape[0] != n:
            raise ConfigurationError(f"features must be (N, d) or (N, E, L) with N={n}, got {features.shape}")
        if domain_ids.shape != (n,) or t_indices.shape != (n,):
            raise ConfigurationError("labels, domain_ids and t_indices must have one entry per sample")
        if n and features[0].size == 0:
            raise ConfigurationError("feature payload is empty")
        if not np.all(np.isfinite(features)):
            raise ConfigurationError("features contain non-finite values")
        if n and (labels.min() < 0 or labels.max() >= class_count):
            raise ConfigurationError(f"labels must lie in [0, {class_count})")

        for arr in (features, labels, domain_ids, t_indices):
            arr.setflags(write=False)
        self.features = features
        self.labels = labels
        self.domain_ids = domain_ids
        self.t_indices = t_indices
        self.class_count = int(class_count)

        self.domain_index = {}
        for pos, dom in enumerate(domain_ids.tolist()):
            self.domain_index.setdefault(dom, []).append(pos)

        self._by_time = {}
        for pos, (dom, t) in enumerate(zip(domain_ids.tolist(), t_indices.tolist())):
            if t < 0:
                continue
            if (dom, t) in self._by_time:
                raise ConfigurationError(f"t_index {t} appears twice in domain {dom}")
            self._by_time[(dom, t)] = pos

    def __len__(self):
        return self.labels.shape[0]

    def __getitem__(self, pos):
        return Sample(self.features[pos], int(self.labels[pos]), int(self.domain_ids[pos]),
                      int(self.t_indices[pos]))

    @property
    def domains(self):
        return sorted(self.domain_index)

    @property
    def is_grid(self):
        return self.features.ndim == 3

    @property
    def feature_shape(self):
        return self.features.shape[1:]

    @property
    def input_width(self):
        return int(np.prod(self.feature_shape))

    def flat_features(self, positions=None):
        x = self.features if positions is None else self.features[positions]
        return x.reshape(x.shape[0], -1)

    def position_at(self, domain_id, t_index):
        return self._by_time.get((domain_id, t_index))

    def subset(self, positions):
        positions = np.asarray(positions, dtype=np.int64)
        return Dataset(self.features[positions], self.labels[positions], self.domain_ids[positions],
                       self.t_indices[positions], self.class_count)

    def select_domains(self, domain_ids):
        wanted = set(int(d) for d in domain_ids)
        positions = [i for i, d in enumerate(self.domain_ids.tolist()) if d in wanted]
        return self.subset(positions)

    def class_balance(self):
        counts = np.bincount(self.labels, minlength=self.class_count)
        return counts / max(len(self), 1)

    def summary(self):
        return {"samples": len(self), "domains": self.domains, "class_count": self.class_count,
                "feature_shape": list(self.feature_shape),
                "class_balance": [round(float(c), 4) for c in self.class_balance()]}
