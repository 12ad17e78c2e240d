"""
Central finite-difference verification of analytic gradients.
"""
import logging
from dataclasses import dataclass

import numpy as np

from mgec import conf

logger = logging.getLogger(__name__)


@dataclass
class GradCheckReport:
    max_rel_err: float
    passed: bool
    n_probes: int
    worst: tuple = None
    reprobed: int = 0
    failure: str = None

    def to_dict(self):
        return {"max_rel_err": self.max_rel_err, "pass": self.passed, "n_probes": self.n_probes,
                "worst": list(self.worst) if self.worst else None, "reprobed": self.reprobed,
                "failure": self.failure}


def _coordinates(params, n_probes, rng):
    names = list(params.keys())
    sizes = np.array([params[n].size for n in names])
    flat = rng.choice(int(sizes.sum()), size=min(n_probes, int(sizes.sum())), replace=False)
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    coords = []
    for f in np.sort(flat):
        k = int(np.searchsorted(offsets, f, side="right") - 1)
        coords.append((names[k], int(f - offsets[k])))
    return coords


def finite_diff_check(loss_fn, params, n_probes=conf.GRADCHECK_PROBES, h=conf.GRADCHECK_STEP,
                      tol=conf.GRADCHECK_TOL, rng=None, abs_floor=1e-6, kink_tol=1e-2, max_reprobes=None):
    """Compare the analytic gradient of loss_fn to central differences.

    Parameters
    ----------
    loss_fn : callable
        loss_fn(params) -> (loss, grads) where grads maps parameter names to arrays. It must read
        the arrays in params, which are perturbed in place and restored.
    params : dict
        name -> numpy.ndarray
    n_probes : int
        Number of random coordinates to compare
    h : float
        Finite-difference step
    tol : float
        Maximum accepted relative error
    rng : numpy.random.Generator
        Chooses the probed coordinates
    abs_floor : float
        Floor of the relative-error denominator, so vanishing gradients compare absolutely
    kink_tol : float
        A mismatching coordinate whose one-sided slopes disagree by more than this fraction is
        treated as sitting on a kink and replaced by another coordinate

    Returns
    -------
    report : GradCheckReport
    """
    rng = np.random.default_rng(0) if rng is None else rng
    max_reprobes = n_probes if max_reprobes is None else max_reprobes
    f0, grads = loss_fn(params)
    if not np.isfinite(f0):
        return GradCheckReport(np.inf, False, 0, failure="non-finite loss at the base point")
    grads = {k: np.asarray(v, dtype=np.float64).copy() for k, v in grads.items()}

    candidates = _coordinates(params, n_probes + max_reprobes, rng)
    max_err, worst, reprobed, probed = 0.0, None, 0, 0
    for name, idx in candidates:
        if probed >= n_probes:
            break
        p = params[name]
        orig = p.flat[idx]
        p.flat[idx] = orig + h
        f_plus, _ = loss_fn(params)
        p.flat[idx] = orig - h
        f_minus, _ = loss_fn(params)
        p.flat[idx] = orig
        if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
            return GradCheckReport(np.inf, False, probed, worst=(name, idx), reprobed=reprobed,
                                   failure=f"non-finite loss when probing {name}[{idx}]")

        numeric = (f_plus - f_minus) / (2.0 * h)
        analytic = grads[name].flat[idx] if name in grads else 0.0
        err = abs(analytic - numeric) / max(abs(analytic), abs(numeric), abs_floor)
        forward = (f_plus - f0) / h
        backward = (f0 - f_minus) / h
        # only a mismatch whose one-sided slopes disagree is blamed on a kink
        on_kink = abs(forward - backward) > kink_tol * max(abs(forward), abs(backward), abs_floor)
        if err > tol and on_kink and reprobed < max_reprobes:
            reprobed += 1
            logger.debug("kink detected at %s[%d], re-probing", name, idx)
            continue
        if worst is None or err > max_err:
            max_err, worst = err, (name, idx)
        probed += 1

    return GradCheckReport(float(max_err), bool(max_err <= tol), probed, worst=worst, reprobed=reprobed)
