"""Spectral data of generalized free field pairs and mass-shell quadrature.

A :class:`FieldPairModel` is a list of mass components, each carrying a
:class:`TensorStructure` ``(c1, c2)``.  The commutator of the smeared fields
is

    sum_m weight(m) int d^4p eps(p0) delta(p^2 - m^2) Q_{mu nu rho sigma}(p) f^(-p) g^(p)

which :func:`mass_shell_reduce` evaluates as ``int d^3k / (2 w) [X(w, k) - X(-w, k)]``.
"""

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss

from ._quadrature import composite_gauss
from ._tensors import EPS_LOWER, EPS_MIXED, EPS_UPPER, METRIC, is_antisymmetric, lower
from .exceptions import NonDecayingIntegrandError, PreconditionError
from .smearing import DivergenceTwoForm

__all__ = [
    "EPS_LOWER", "EPS_MIXED", "EPS_UPPER", "METRIC", "Atom", "Continuum", "FieldPairModel",
    "ShellGrid", "ShellResult", "TensorStructure", "contract_q", "contract_q_potential",
    "contraction_bound", "potential_bound",
    "hodge_dual", "mass_shell_reduce", "q_tensor", "three_form_divergence",
]


@dataclass(frozen=True)
class TensorStructure:
    """Coefficients of the two admissible rank-four kernels."""

    c1: float = 0.0
    c2: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.c1) and np.isfinite(self.c2)):
            raise PreconditionError("tensor coefficients must be finite")

    def scaled(self, factor):
        return TensorStructure(factor * self.c1, factor * self.c2)


def q_tensor(p, ts):
    """Rank-four kernel ``Q_{mu nu rho sigma}(p)`` with all indices down.

    Parameters
    ----------
    p : array_like, shape (..., 4)
        Contravariant momentum.
    ts : TensorStructure

    Returns
    -------
    numpy.ndarray, shape (..., 4, 4, 4, 4)
    """
    pl = lower(np.asarray(p, dtype=float))
    s = np.einsum("...m,...r,ns->...mnrs", pl, pl, METRIC)
    s = s - np.swapaxes(s, -4, -3)
    s = s - np.swapaxes(s, -2, -1)
    return ts.c1 * s + ts.c2 * np.einsum("...mntu,turs->...mnrs", s, EPS_MIXED)


def _p_dot(p_low, x):
    # (pX)^nu = p_mu X^{mu nu}
    return np.einsum("...m,...mn->...n", p_low, x)


def contract_q(p, ts, a, b):
    """``Q_{mu nu rho sigma}(p) a^{mu nu} b^{rho sigma}`` for antisymmetric a, b.

    Uses ``Q a b = 4 (pa).[c1 (pb) + c2 (p(eps b))]`` with
    ``(pX)^nu = p_mu X^{mu nu}``; equivalent to contracting :func:`q_tensor`.
    """
    pl = lower(np.asarray(p, dtype=float))
    pa = _p_dot(pl, a)
    inner = 0.0
    if ts.c1:
        inner = inner + ts.c1 * _p_dot(pl, b)
    if ts.c2:
        eb = np.einsum("turs,...rs->...tu", EPS_MIXED, b)
        inner = inner + ts.c2 * _p_dot(pl, eb)
    if np.isscalar(inner):
        return np.zeros(np.shape(pa)[:-1], dtype=complex)
    return 4.0 * np.sum(lower(pa) * inner, axis=-1)


def contract_q_potential(p, ts, h_minus, b):
    """Kernel contraction when the first slot is given by a potential.

    ``h_minus`` is the transform ``h^(-p)`` of a co-closed one-form; the
    result equals :func:`contract_q` with any two-form ``f`` obeying
    ``delta f = h`` in the first slot.
    """
    pl = lower(np.asarray(p, dtype=float))
    inner = 0.0
    if ts.c1:
        inner = inner + ts.c1 * _p_dot(pl, b)
    if ts.c2:
        eb = np.einsum("turs,...rs->...tu", EPS_MIXED, b)
        inner = inner + ts.c2 * _p_dot(pl, eb)
    if np.isscalar(inner):
        return np.zeros(np.shape(h_minus)[:-1], dtype=complex)
    return 2j * np.sum(lower(h_minus) * inner, axis=-1)


def contraction_bound(p, ts, a, b):
    """Cancellation-free upper bound for :func:`contract_q` magnitudes."""
    p = np.asarray(p, dtype=float)
    pe = np.sum(p * p, axis=-1)
    na = np.sqrt(np.sum(np.abs(a) ** 2, axis=(-2, -1)))
    nb = np.sqrt(np.sum(np.abs(b) ** 2, axis=(-2, -1)))
    return 4.0 * (abs(ts.c1) + 2.0 * abs(ts.c2)) * pe * na * nb


def potential_bound(p, ts, h_minus, b):
    """Cancellation-free upper bound for :func:`contract_q_potential` magnitudes."""
    p = np.asarray(p, dtype=float)
    pn = np.sqrt(np.sum(p * p, axis=-1))
    nh = np.sqrt(np.sum(np.abs(h_minus) ** 2, axis=-1))
    nb = np.sqrt(np.sum(np.abs(b) ** 2, axis=(-2, -1)))
    return 2.0 * (abs(ts.c1) + 2.0 * abs(ts.c2)) * pn * nh * nb


def hodge_dual(f, index="upper", tol=1e-12):
    """Hodge dual of two-form components.

    ``index="upper"``: ``(*f)^{mu nu} = 1/2 eps^{mu nu}_{rho sigma} f^{rho sigma}``.
    ``index="lower"``: ``(*f)_{rho sigma} = 1/2 eps_{rho sigma}^{tau ups} f_{tau ups}``.
    Applying it twice gives ``-f``.

    Raises
    ------
    PreconditionError
        If ``f`` is not antisymmetric in its last two axes.
    """
    f = np.asarray(f)
    if f.shape[-2:] != (4, 4) or not is_antisymmetric(f, tol):
        raise PreconditionError("hodge_dual needs antisymmetric 4x4 components")
    if index == "upper":
        return 0.5 * np.einsum("mnrs,...rs->...mn", EPS_MIXED, f)
    if index == "lower":
        eps = np.einsum("rsab,at,bu->rstu", EPS_LOWER, METRIC, METRIC)
        return 0.5 * np.einsum("rstu,...tu->...rs", eps, f)
    raise ValueError("index must be 'upper' or 'lower'")


# --------------------------------------------------------------------------
# mass measures


@dataclass(frozen=True)
class Atom:
    """Point mass ``weight * delta(m - mass)``."""

    mass: float
    weight: float = 1.0

    def __post_init__(self):
        if not self.mass >= 0 or not np.isfinite(self.mass):
            raise PreconditionError("atom mass must be finite and >= 0")
        if not np.isfinite(self.weight):
            raise PreconditionError("atom weight must be finite")

    def atoms(self):
        return [(float(self.mass), float(self.weight))]

    def describe(self):
        return {"kind": "atom", "mass": self.mass, "weight": self.weight}


@dataclass(frozen=True)
class Continuum:
    """Density on ``[m_lo, m_hi]`` discretized by Gauss-Legendre in ``m``.

    ``density`` is a callable or an array of samples on an equispaced grid
    over the interval (linearly interpolated).
    """

    m_lo: float
    m_hi: float
    density: object = 1.0
    nodes: int = 16

    def __post_init__(self):
        if not 0 <= self.m_lo < self.m_hi or not np.isfinite(self.m_hi):
            raise PreconditionError("continuum needs 0 <= m_lo < m_hi < inf")
        if self.nodes < 4:
            raise PreconditionError("continuum needs >= 4 nodes")

    def _rho(self, m):
        d = self.density
        if callable(d):
            return np.asarray(d(m), dtype=float)
        d = np.atleast_1d(np.asarray(d, dtype=float))
        if d.size == 1:
            return np.full_like(m, d[0])
        grid = np.linspace(self.m_lo, self.m_hi, d.size)
        return np.interp(m, grid, d)

    def atoms(self):
        m, w = composite_gauss([self.m_lo, self.m_hi], self.nodes)
        rho = self._rho(m)
        if not np.all(np.isfinite(rho)):
            raise PreconditionError("continuum density is not finite")
        return [(float(mi), float(wi * ri)) for mi, wi, ri in zip(m, w, rho)]

    def describe(self):
        return {"kind": "continuum", "m_lo": self.m_lo, "m_hi": self.m_hi,
                "nodes": self.nodes}


@dataclass(frozen=True)
class FieldPairModel:
    """Spectral data ``[(MassComponent, TensorStructure), ...]`` of a field pair.

    The ``c2`` structure is only admitted on massless atoms.
    """

    components: Sequence = field(default_factory=tuple)

    def __post_init__(self):
        comps = tuple((m, ts) for m, ts in self.components)
        if not comps:
            raise PreconditionError("model needs at least one component")
        for mc, ts in comps:
            if ts.c2 and any(m > 0 for m, _ in mc.atoms()):
                raise PreconditionError("c2 structure is only defined on the massless shell")
        object.__setattr__(self, "components", comps)

    @classmethod
    def massless(cls, c1=0.0, c2=1.0, weight=1.0):
        return cls([(Atom(0.0, weight), TensorStructure(c1, c2))])

    @classmethod
    def single(cls, mass, c1=1.0, c2=0.0, weight=1.0):
        return cls([(Atom(mass, weight), TensorStructure(c1, c2))])

    def atoms(self):
        """Flattened list of ``(mass, weight, TensorStructure)``."""
        return [(m, w, ts) for mc, ts in self.components for m, w in mc.atoms()]

    def swapped(self):
        """Model of the exchanged pair ``(G, F)``: ``c2`` changes sign on shell."""
        return FieldPairModel([(mc, TensorStructure(ts.c1, -ts.c2))
                               for mc, ts in self.components])

    def scaled(self, factor):
        return FieldPairModel([(mc, ts.scaled(factor)) for mc, ts in self.components])

    def __add__(self, other):
        return FieldPairModel(list(self.components) + list(other.components))

    @property
    def has_massless(self):
        return any(m == 0 for m, _, _ in self.atoms())

    def describe(self):
        return [{"mass": mc.describe(), "c1": ts.c1, "c2": ts.c2}
                for mc, ts in self.components]


# --------------------------------------------------------------------------
# shell quadrature


@dataclass(frozen=True)
class ShellGrid:
    """Product rule on R^3 for ``int d^3k / (2 w_k)``.

    Radial: ``k = -L log(1 - xi)`` with composite Gauss-Legendre in ``xi``
    (order 8 panels).  Polar: Gauss-Legendre in ``cos theta``.  Azimuth:
    trapezoid.  ``level`` doubles every node count.
    """

    radial_nodes: int = 64
    radial_scale: float = 4.0
    polar_nodes: int = 16
    azimuthal_nodes: int = 16
    level: int = 0

    def __post_init__(self):
        if min(self.radial_nodes, self.polar_nodes, self.azimuthal_nodes) < 4:
            raise PreconditionError("ShellGrid node counts must be >= 4")
        if not self.radial_scale > 0:
            raise PreconditionError("radial_scale must be positive")

    @classmethod
    def for_smearing(cls, widths, extent, refine=0):
        """Grid sized for gaussian mollifier widths and a spatial extent.

        Parameters
        ----------
        widths : float or (float, float)
            Widths of the two gaussian mollifiers (a scalar is used for both).
            The product of their transforms decays like ``exp(-A k^2)`` on
            the shell with ``A = w1^2 + w2^2``.
        extent : float
            Bound on ``|x - y|`` over the supports; sets the angular
            resolution.
        """
        w1, w2 = np.broadcast_to(np.asarray(widths, dtype=float), (2,))
        kmax = 7.0 / np.sqrt(w1**2 + w2**2)
        phase = kmax * extent
        radial = int(8 * np.ceil((phase / 3 + 8) / 8))
        polar = int(np.ceil(phase / 3 + 6))
        return cls(radial, kmax / 4.0, polar, 2 * polar, refine)

    def refined(self, times=1):
        return ShellGrid(self.radial_nodes, self.radial_scale, self.polar_nodes,
                         self.azimuthal_nodes, self.level + times)

    def counts(self):
        f = 2**self.level
        return self.radial_nodes * f, self.polar_nodes * f, self.azimuthal_nodes * f

    def nodes(self, mass):
        """Momentum 3-vectors ``k``, energies ``w`` and weights of ``d^3k/(2w)``."""
        nr, npol, naz = self.counts()
        panels = max(1, nr // 8)
        xi, wxi = composite_gauss(np.linspace(0.0, 1.0, panels + 1), 8)
        L = self.radial_scale
        k = -L * np.log1p(-xi)
        wk = wxi * L / (1.0 - xi)
        c, wc = leggauss(npol)
        phi = 2 * np.pi * np.arange(naz) / naz
        wphi = np.full(naz, 2 * np.pi / naz)
        s = np.sqrt(1.0 - c**2)
        dirs = np.stack([s[:, None] * np.cos(phi), s[:, None] * np.sin(phi),
                         np.broadcast_to(c[:, None], (npol, naz))], axis=-1).reshape(-1, 3)
        wdir = (wc[:, None] * wphi[None, :]).ravel()
        kv = (k[:, None, None] * dirs[None]).reshape(-1, 3)
        omega = np.sqrt(k**2 + mass**2)
        w = (wk * k**2 / (2.0 * np.where(omega > 0, omega, 1.0)))[:, None] * wdir[None]
        w = np.where(omega[:, None] > 0, w, 0.0).ravel()
        om = np.repeat(omega, len(wdir))
        return kv, om, w, np.repeat(k, len(wdir))

    def describe(self):
        nr, npol, naz = self.counts()
        return {"radial_nodes": nr, "radial_scale": self.radial_scale,
                "polar_nodes": npol, "azimuthal_nodes": naz, "level": self.level}


@dataclass(frozen=True)
class ShellResult:
    value: complex
    error: float
    scale: float
    grid: dict


def _split(out):
    if isinstance(out, tuple):
        x, bound = out
        return np.asarray(x), np.asarray(bound, dtype=float)
    x = np.asarray(out)
    return x, np.abs(x)


def _shell_sum(integrand, mass, grid, branch, tail_tol):
    kv, om, w, kk = grid.nodes(mass)
    pp = np.concatenate([om[:, None], kv], axis=1)
    if branch == "positive":
        x, bound = _split(integrand(pp))
    elif branch == "commutator":
        pm = np.concatenate([-om[:, None], kv], axis=1)
        both, bound = _split(integrand(np.concatenate([pp, pm])))
        x = both[: len(pp)] - both[len(pp):]
        bound = bound[: len(pp)] + bound[len(pp):]
    else:
        raise ValueError("branch must be 'commutator' or 'positive'")
    contrib = w * x
    mag = w * bound
    total_mag = float(mag.sum())
    tail = float(mag[kk > 3.0 * grid.radial_scale].sum())
    if total_mag > 0 and tail > tail_tol * total_mag:
        raise NonDecayingIntegrandError(
            f"integrand tail beyond k = {3 * grid.radial_scale:.3g} carries "
            f"{tail / total_mag:.2e} of the total magnitude")
    return complex(np.sum(contrib)), total_mag


def mass_shell_reduce(integrand: Callable, m: float, grid: ShellGrid,
                      branch="commutator", tail_tol=1e-8):
    """Integrate ``X`` over the mass shell ``p^2 = m^2``.

    Parameters
    ----------
    integrand : callable
        Maps momenta of shape (N, 4) to complex values of shape (N,), or
        to a pair ``(values, bound)`` where ``bound >= |values|`` is a
        cancellation-free magnitude used for the scale and tail monitor.
    m : float
        Mass, ``>= 0``.
    grid : ShellGrid
    branch : {"commutator", "positive"}
        ``"commutator"`` returns ``int d^3k/(2w) [X(w,k) - X(-w,k)]``;
        ``"positive"`` keeps only ``X(w,k)``.

    Returns
    -------
    ShellResult
        Value on ``grid.refined()``; ``error`` is its distance to the value
        on ``grid``; ``scale`` is the integral of ``|X|`` (or of the bound).

    Raises
    ------
    NonDecayingIntegrandError
        If the part of the integral beyond three radial scales is not
        negligible.
    """
    if not m >= 0:
        raise PreconditionError("mass must be >= 0")
    coarse, _ = _shell_sum(integrand, m, grid, branch, tail_tol)
    fine_grid = grid.refined()
    fine, scale = _shell_sum(integrand, m, fine_grid, branch, tail_tol)
    return ShellResult(fine, abs(fine - coarse), scale, fine_grid.describe())


def three_form_divergence(t, step=1e-4):
    """Two-form smearing ``d_rho t^{rho mu nu}`` of a three-form sampler."""
    return DivergenceTwoForm(t, step)
