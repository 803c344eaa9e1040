"""Fixed Minkowski tensors: metric, Levi-Civita symbols, index helpers."""

import itertools

import numpy as np

METRIC = np.diag([1.0, -1.0, -1.0, -1.0])
_SIGNS = np.diag(METRIC)


def _levi_civita():
    eps = np.zeros((4, 4, 4, 4))
    for perm in itertools.permutations(range(4)):
        eps[perm] = np.linalg.det(np.eye(4)[list(perm)])
    return eps


# all indices up, eps^{0123} = +1
EPS_UPPER = _levi_civita()
# all indices down, eps_{0123} = -1
EPS_LOWER = np.einsum("abcd,ai,bj,ck,dl->ijkl", EPS_UPPER, METRIC, METRIC, METRIC, METRIC)
# eps^{tau upsilon}_{rho sigma}
EPS_MIXED = np.einsum("tuab,ar,bs->turs", EPS_UPPER, METRIC, METRIC)


def lower(v):
    """Lower (or raise) the last index of ``v``."""
    return np.asarray(v) * _SIGNS


def mdot(a, b):
    """Minkowski product over the last axis (broadcasting)."""
    return np.sum(np.asarray(a) * _SIGNS * np.asarray(b), axis=-1)


def is_antisymmetric(f, tol=1e-12):
    f = np.asarray(f)
    scale = max(1.0, float(np.max(np.abs(f), initial=0.0)))
    return bool(np.max(np.abs(f + np.swapaxes(f, -1, -2)), initial=0.0) <= tol * scale)
