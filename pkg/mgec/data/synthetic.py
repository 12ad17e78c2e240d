import logging
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from mgec import conf
from mgec.data.dataset import Dataset
from mgec.utils.errors import ConfigurationError
from mgec.utils.processing import load_json, save_json

logger = logging.getLogger(__name__)


@dataclass
class SyntheticSpec:
    """Parameters of the hierarchical Gaussian domain-generalisation benchmark.

    lam is the weight of the domain-independent teacher; 1 - lam weights the per-domain teacher.
    Weight scales are divided by sqrt(dim) when drawn.
    """

    domains_per_group: tuple = conf.DOMAINS_PER_GROUP
    samples_per_domain: int = conf.SAMPLES_PER_DOMAIN
    dim: int = conf.DIM
    class_count: int = conf.CLASS_COUNT
    lam: float = conf.LAMBDA
    sigma_group: float = conf.SIGMA_GROUP
    sigma_domain: float = conf.SIGMA_DOMAIN
    sigma_sample: float = conf.SIGMA_SAMPLE
    sigma_w_base: float = conf.SIGMA_W_BASE
    sigma_w_group: float = conf.SIGMA_W_GROUP
    sigma_w_domain: float = conf.SIGMA_W_DOMAIN
    ordered: bool = False
    seed: int = 0

    @property
    def group_count(self):
        return len(self.domains_per_group)

    @property
    def domain_count(self):
        return int(sum(self.domains_per_group))

    def validate(self):
        if not 0.0 <= self.lam <= 1.0:
            raise ConfigurationError(f"lam must lie in [0, 1], got {self.lam}")
        if self.group_count < 1 or any(int(n) < 1 for n in self.domains_per_group):
            raise ConfigurationError("domains_per_group needs at least one group with at least one domain")
        if self.domain_count < 2:
            raise ConfigurationError(f"domains_per_group must total at least 2 domains, got {self.domain_count}")
        for name in ("samples_per_domain", "dim"):
            if int(getattr(self, name)) < 1:
                raise ConfigurationError(f"{name} must be positive")
        if self.class_count < 2:
            raise ConfigurationError(f"class_count must be at least 2, got {self.class_count}")
        for name in ("sigma_group", "sigma_domain", "sigma_sample", "sigma_w_base", "sigma_w_group",
                     "sigma_w_domain"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"{name} must be > 0, got {getattr(self, name)}")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ConfigurationError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        return self

    def to_dict(self):
        d = asdict(self)
        d["domains_per_group"] = list(self.domains_per_group)
        return d

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigurationError(f"unknown synthetic field(s): {sorted(unknown)}")
        d = dict(d)
        if "domains_per_group" in d:
            d["domains_per_group"] = tuple(int(n) for n in d["domains_per_group"])
        return cls(**d)

    def large_spread(self):
        """Copy with the domain teachers spread far from the shared one."""
        d = self.to_dict()
        d["sigma_w_group"] = conf.LARGE_SPREAD_SIGMA_W_GROUP * self.sigma_w_base
        d["sigma_w_domain"] = conf.LARGE_SPREAD_SIGMA_W_DOMAIN * self.sigma_w_base
        return SyntheticSpec.from_dict(d)


@dataclass
class TeacherRecord:
    """Teacher matrices behind a generated dataset, kept for alignment-error diagnostics.

    Weights have shape (class_count, dim); logits are x @ W.T.
    """

    lam: float
    w_inv: np.ndarray
    domain_weights: dict
    group_of_domain: dict
    requested_seed: int = 0
    effective_seed: int = 0
    attempts: int = 1
    spec: dict = field(default_factory=dict)

    @property
    def class_count(self):
        return self.w_inv.shape[0]

    def domain_logits(self, x, domain_id):
        x = np.atleast_2d(x)
        return self.lam * (x @ self.w_inv.T) + (1.0 - self.lam) * (x @ self.domain_weights[domain_id].T)

    def logits(self, x, domain_ids):
        x = np.atleast_2d(x)
        out = np.empty((x.shape[0], self.class_count))
        domain_ids = np.asarray(domain_ids)
        for dom in np.unique(domain_ids):
            rows = domain_ids == dom
            if int(dom) not in self.domain_weights:
                raise ConfigurationError(f"teacher has no function for domain {int(dom)}")
            out[rows] = self.domain_logits(x[rows], int(dom))
        return out

    def to_dict(self):
        return {"lam": self.lam, "w_inv": self.w_inv,
                "domain_weights": {str(k): v for k, v in self.domain_weights.items()},
                "group_of_domain": {str(k): v for k, v in self.group_of_domain.items()},
                "requested_seed": self.requested_seed, "effective_seed": self.effective_seed,
                "attempts": self.attempts, "spec": self.spec}

    @classmethod
    def from_dict(cls, d):
        return cls(lam=float(d["lam"]), w_inv=np.asarray(d["w_inv"], dtype=np.float64),
                   domain_weights={int(k): np.asarray(v, dtype=np.float64) for k, v in d["domain_weights"].items()},
                   group_of_domain={int(k): int(v) for k, v in d["group_of_domain"].items()},
                   requested_seed=int(d.get("requested_seed", 0)), effective_seed=int(d.get("effective_seed", 0)),
                   attempts=int(d.get("attempts", 1)), spec=d.get("spec", {}))

    def save(self, path):
        return save_json(self.to_dict(), path)

    @classmethod
    def load(cls, path):
        return cls.from_dict(load_json(path))


def _draw(spec, seed):
    rng = np.random.default_rng(seed)
    d, c = spec.dim, spec.class_count
    w_scale = 1.0 / np.sqrt(d)

    group_centers = rng.normal(0.0, spec.sigma_group, size=(spec.group_count, d))
    w_inv = rng.normal(0.0, spec.sigma_w_base * w_scale, size=(c, d))
    group_shift = rng.normal(0.0, spec.sigma_w_group * w_scale, size=(spec.group_count, c, d))

    features, domain_ids, t_indices = [], [], []
    domain_weights, group_of_domain = {}, {}
    domain = 0
    for g, n_domains in enumerate(spec.domains_per_group):
        for _ in range(int(n_domains)):
            center = group_centers[g] + rng.normal(0.0, spec.sigma_domain, size=d)
            x = center + rng.normal(0.0, spec.sigma_sample, size=(spec.samples_per_domain, d))
            domain_shift = rng.normal(0.0, spec.sigma_w_domain * w_scale, size=(c, d))
            domain_weights[domain] = w_inv + group_shift[g] + domain_shift
            group_of_domain[domain] = g
            features.append(x)
            domain_ids.append(np.full(spec.samples_per_domain, domain))
            if spec.ordered:
                t_indices.append(np.arange(spec.samples_per_domain))
            else:
                t_indices.append(np.full(spec.samples_per_domain, -1))
            domain += 1

    teacher = TeacherRecord(lam=float(spec.lam), w_inv=w_inv, domain_weights=domain_weights,
                            group_of_domain=group_of_domain, spec=spec.to_dict())
    x = np.concatenate(features)
    doms = np.concatenate(domain_ids)
    # argmax keeps the lowest class index on ties
    labels = np.argmax(teacher.logits(x, doms), axis=1)
    return Dataset(x, labels, doms, np.concatenate(t_indices), c), teacher


def _balanced(labels, class_count):
    frac = np.bincount(labels, minlength=class_count) / len(labels)
    low, high = 0.5 / class_count, 1.0 - 0.5 / class_count
    return bool(np.all(frac >= low) and np.all(frac <= high))


def generate_synthetic(spec):
    """Draw a dataset from the hierarchical Gaussian benchmark.

    Draws that leave a class outside [0.5/C, 1 - 0.5/C] of the samples are redrawn with the next
    seed; the seed finally used is recorded in the teacher record.

    Parameters
    ----------
    spec : SyntheticSpec

    Returns
    -------
    dataset : Dataset
    teacher : TeacherRecord
    """
    spec.validate()
    seed = int(spec.seed)
    for attempt in range(1, conf.MAX_BALANCE_ATTEMPTS + 1):
        dataset, teacher = _draw(spec, seed)
        if _balanced(dataset.labels, spec.class_count):
            teacher.requested_seed = int(spec.seed)
            teacher.effective_seed = seed
            teacher.attempts = attempt
            return dataset, teacher
        logger.warning("seed %d gives class balance %s, redrawing with seed %d",
                       seed, np.round(dataset.class_balance(), 3).tolist(), seed + 1)
        seed += 1
    raise ConfigurationError(
        f"no class-balanced draw within {conf.MAX_BALANCE_ATTEMPTS} seeds starting at {spec.seed}")
