import numpy as np


def derive_seed(*keys):
    """Return a 32-bit seed derived from a tuple of non-negative integer keys.

    Used to give every (seed, fold, lambda, epoch, ...) combination its own independent stream.
    """
    seq = np.random.SeedSequence([int(k) for k in keys])
    return int(seq.generate_state(1, dtype=np.uint32)[0])


def keyed_rng(*keys):
    return np.random.default_rng(derive_seed(*keys))


def lambda_key(lam):
    # lambda enters RNG keys as an integer in micro-units
    return int(round(float(lam) * 1_000_000))
