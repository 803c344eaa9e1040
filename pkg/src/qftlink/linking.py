"""Linking numbers: Gauss double integral, crossing count, causal linking number."""

from dataclasses import dataclass

import numpy as np

from ._quadrature import panel_rule
from .exceptions import (
    DegenerateProjectionError,
    DistanceTooSmallError,
    OracleDisagreementError,
    PreconditionError,
)
from .geometry import (
    PolylineLoop,
    causal_projection,
    is_spacelike_separated,
    is_spatial,
    polyline_from_loop,
)

INTEGER_TOL = 1e-3


@dataclass(frozen=True)
class LinkingEstimate:
    """Gauss-integral value with a two-level refinement error estimate."""

    value: float
    error: float
    panels: int

    @property
    def nearest(self):
        return int(np.rint(self.value))

    def __float__(self):
        return float(self.value)


def _spatial_nodes(loop, panels, order):
    u, w = panel_rule(panels, order, breakpoints=loop.breakpoints)
    return loop.position(u)[:, 1:], loop.tangent(u)[:, 1:], w


def _gauss_sum(a, b, panels, order, chunk=256):
    pa, ta, wa = _spatial_nodes(a, panels, order)
    pb, tb, wb = _spatial_nodes(b, panels, order)
    total = 0.0
    # fixed chunk order keeps the reduction deterministic
    for start in range(0, len(pa), chunk):
        sl = slice(start, start + chunk)
        d = pa[sl, None, :] - pb[None, :, :]
        cr = np.cross(ta[sl, None, :], tb[None, :, :])
        num = np.sum(cr * d, axis=-1)
        r3 = np.sum(d * d, axis=-1) ** 1.5
        total += float(wa[sl] @ (num / r3) @ wb)
    return total / (4 * np.pi)


def _scale(a, b, n=256):
    pts = np.vstack([a.samples(n)[:, 1:], b.samples(n)[:, 1:]])
    return float(np.max(np.ptp(pts, axis=0)))


def _min_distance(a, b, n=512):
    pa = a.samples(n)[:, 1:]
    pb = b.samples(n)[:, 1:]
    best = np.inf
    for start in range(0, n, 128):
        d = pa[start:start + 128, None, :] - pb[None, :, :]
        best = min(best, float(np.min(np.sum(d * d, axis=-1))))
    return float(np.sqrt(best))


def gauss_linking(a, b, panels=32, order=8, min_relative_distance=1e-3):
    """Gauss linking integral of the spatial parts of two loops.

    Composite Gauss-Legendre product quadrature with ``panels`` panels per
    loop (polyline vertices are added as panel breaks).  The returned value
    is the ``2 * panels`` result; the error estimate is its difference from
    the ``panels`` result.

    Raises
    ------
    DistanceTooSmallError
        If the sampled minimal distance is below ``min_relative_distance``
        times the overall extent of the pair.
    """
    if panels < 8:
        raise ValueError("panels must be >= 8")
    d_min = _min_distance(a, b)
    if d_min < min_relative_distance * _scale(a, b):
        raise DistanceTooSmallError(
            f"curves approach to {d_min:.3g}; Gauss integrand is near-singular")
    coarse = _gauss_sum(a, b, panels, order)
    fine = _gauss_sum(a, b, 2 * panels, order)
    return LinkingEstimate(fine, abs(fine - coarse), 2 * panels)


def _frame(direction):
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    helper = np.eye(3)[np.argmin(np.abs(d))]
    e1 = np.cross(helper, d)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(d, e1)
    return e1, e2, d


def _as_vertices(curve):
    if isinstance(curve, PolylineLoop):
        return curve.vertices[:, 1:]
    v = np.asarray(curve, dtype=float)
    if v.ndim != 2 or v.shape[1] != 3:
        raise ValueError("expected an (n, 3) vertex array or a PolylineLoop")
    return v


def _crossing_sum(va, vb, direction, eps):
    e1, e2, d = _frame(direction)
    a0 = va
    a1 = np.roll(va, -1, axis=0)
    b0 = vb
    b1 = np.roll(vb, -1, axis=0)
    P = lambda v: np.stack([v @ e1, v @ e2], axis=-1)  # noqa: E731
    pa0, pa1, pb0, pb1 = P(a0), P(a1), P(b0), P(b1)
    ra = pa1 - pa0
    rb = pb1 - pb0
    q = pb0[None, :, :] - pa0[:, None, :]
    denom = ra[:, None, 0] * rb[None, :, 1] - ra[:, None, 1] * rb[None, :, 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        s = (q[..., 0] * rb[None, :, 1] - q[..., 1] * rb[None, :, 0]) / denom
        t = (q[..., 0] * ra[:, None, 1] - q[..., 1] * ra[:, None, 0]) / denom
    la = np.linalg.norm(ra, axis=-1)[:, None]
    lb = np.linalg.norm(rb, axis=-1)[None, :]
    parallel = np.abs(denom) <= eps * la * lb
    near_parallel_touch = parallel & (
        np.abs(q[..., 0] * ra[:, None, 1] - q[..., 1] * ra[:, None, 0]) <= eps * la * (la + lb))
    if np.any(near_parallel_touch):
        return None
    inside = (~parallel) & (s > -eps) & (s < 1 + eps) & (t > -eps) & (t < 1 + eps)
    grazing = inside & ((np.abs(s) <= eps) | (np.abs(1 - s) <= eps)
                        | (np.abs(t) <= eps) | (np.abs(1 - t) <= eps))
    if np.any(grazing):
        return None
    i, j = np.nonzero(inside)
    ha = (a0[i] + s[i, j, None] * (a1[i] - a0[i])) @ d
    hb = (b0[j] + t[i, j, None] * (b1[j] - b0[j])) @ d
    if np.any(np.abs(ha - hb) <= eps * (la[i, 0] + lb[0, j])):
        return None
    # over strand is nearer the viewer at +d; a crossing counts +1 when the
    # (over, under) projected directions form a positive frame
    a_over = ha > hb
    over = np.where(a_over[:, None], ra[i], rb[j])
    under = np.where(a_over[:, None], rb[j], ra[i])
    signs = np.sign(over[:, 0] * under[:, 1] - over[:, 1] * under[:, 0])
    return int(np.sum(signs))


def crossing_sign_linking(a, b, direction=(0.0, 0.0, 1.0), max_retries=8, seed=0,
                          eps=1e-9):
    """Linking number as half the signed count of inter-curve crossings.

    ``a`` and ``b`` are closed polylines in R^3 (vertex arrays or
    :class:`PolylineLoop`).  Non-generic projections are perturbed with a
    seeded generator and retried.

    Raises
    ------
    DegenerateProjectionError
        When no generic direction is found within ``max_retries`` attempts.
    """
    va = _as_vertices(a)
    vb = _as_vertices(b)
    rng = np.random.default_rng(seed)
    direction = np.asarray(direction, dtype=float)
    for _ in range(max_retries + 1):
        total = _crossing_sum(va, vb, direction, eps)
        if total is not None:
            if total % 2:
                raise DegenerateProjectionError("odd crossing count between closed curves")
            return total // 2
        direction = direction / np.linalg.norm(direction) + 0.05 * rng.standard_normal(3)
    raise DegenerateProjectionError(
        f"no generic projection direction after {max_retries} retries")


def _flat_polyline(loop):
    v = loop.vertices.copy()
    v[:, 0] = 0.0
    return PolylineLoop(v)


def causal_linking_number(a, b, vertices=256, panels=32, samples=256, refinements=2):
    """Causal linking number of two spatial, spacelike separated loops.

    Both loops are projected to the time-zero plane; the crossing count of
    inscribed polygons gives the integer, which must agree with the Gauss
    integral to within ``INTEGER_TOL``.  Polygon and panel counts are doubled
    up to ``refinements`` times before disagreement is reported.
    """
    for name, loop in (("first", a), ("second", b)):
        if not is_spatial(loop, samples):
            raise PreconditionError(f"{name} loop is not spatial")
    if not is_spacelike_separated(a, b, samples):
        raise PreconditionError("loops are not spacelike separated")
    pa = causal_projection(a, 1.0)
    pb = causal_projection(b, 1.0)
    for _ in range(refinements + 1):
        qa = _flat_polyline(a) if isinstance(a, PolylineLoop) else polyline_from_loop(pa, vertices)
        qb = _flat_polyline(b) if isinstance(b, PolylineLoop) else polyline_from_loop(pb, vertices)
        k = crossing_sign_linking(qa, qb)
        g = gauss_linking(pa, pb, panels)
        if abs(g.value - k) < INTEGER_TOL and g.error < INTEGER_TOL:
            return k
        vertices *= 2
        panels *= 2
    raise OracleDisagreementError(
        f"crossing count {k} and Gauss integral {g.value:.6f} disagree")
