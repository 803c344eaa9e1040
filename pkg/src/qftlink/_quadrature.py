"""Composite Gauss-Legendre rules on intervals."""

from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss


@lru_cache(maxsize=64)
def _reference_rule(order):
    x, w = leggauss(order)
    return 0.5 * (x + 1.0), 0.5 * w


def composite_gauss(breakpoints, order=8):
    """Nodes and weights of a composite rule over consecutive ``breakpoints``.

    Parameters
    ----------
    breakpoints : array_like
        Increasing panel boundaries.
    order : int
        Gauss-Legendre points per panel.

    Returns
    -------
    nodes, weights : numpy.ndarray
    """
    b = np.asarray(breakpoints, dtype=float)
    x, w = _reference_rule(order)
    h = np.diff(b)
    nodes = (b[:-1, None] + h[:, None] * x[None, :]).ravel()
    weights = (h[:, None] * w[None, :]).ravel()
    return nodes, weights


def panel_rule(panels, order=8, lo=0.0, hi=1.0, breakpoints=()):
    """Composite rule with ``panels`` equal panels on [lo, hi].

    Extra ``breakpoints`` (e.g. polyline vertices) are merged in so that no
    panel straddles a kink of the integrand.
    """
    edges = np.linspace(lo, hi, int(panels) + 1)
    if len(breakpoints):
        extra = np.asarray(breakpoints, dtype=float)
        extra = extra[(extra > lo) & (extra < hi)]
        edges = np.unique(np.concatenate([edges, extra]))
    return composite_gauss(edges, order)
