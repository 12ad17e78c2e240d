from dataclasses import dataclass

import numpy as np

from mgec.utils.errors import ConfigurationError
from mgec.utils.rng import keyed_rng


@dataclass(frozen=True)
class Fold:
    fold_id: int
    train_domains: tuple
    test_domains: tuple

    def to_dict(self):
        return {"fold_id": self.fold_id, "train_domains": list(self.train_domains),
                "test_domains": list(self.test_domains)}


def _require_domains(dataset, minimum):
    domains = dataset.domains
    if len(domains) < minimum:
        raise ConfigurationError(f"cross-validation needs at least {minimum} domains, got {len(domains)}")
    return domains


def lodo_folds(dataset):
    """One fold per domain in ascending domain order; that domain is the test set."""
    domains = _require_domains(dataset, 2)
    return [Fold(i, tuple(d for d in domains if d != held), (held,)) for i, held in enumerate(domains)]


def kfold_by_domain(dataset, k, seed=0):
    """Split the domains into k near-equal groups after a seeded shuffle.

    Folds are ordered by the smallest domain they hold out, so k equal to the domain count gives
    exactly the leave-one-domain-out folds.
    """
    domains = _require_domains(dataset, 2)
    k = int(k)
    if k < 2 or k > len(domains):
        raise ConfigurationError(f"k must lie in [2, {len(domains)}] (the domain count), got {k}")
    shuffled = keyed_rng(seed, len(domains), k).permutation(domains)
    groups = sorted((tuple(sorted(int(d) for d in g)) for g in np.array_split(shuffled, k)), key=min)
    return [Fold(i, tuple(d for d in domains if d not in g), g) for i, g in enumerate(groups)]
