"""Test functions on Minkowski space and their Fourier transforms.

Conventions
-----------
Points and momenta are arrays whose last axis holds ``(t, x, y, z)``.
Fourier transforms are ``g^(p) = int d^4x g(x) exp(i p.x)`` with the
Minkowski product ``p.x = p0 x0 - p.x``, so a derivative ``d_nu`` becomes the
multiplier ``-i p_nu``.  Tensor-valued samplers return contravariant
components.
"""

import warnings
from functools import cached_property, lru_cache
from math import factorial

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import ndtr

from ._quadrature import composite_gauss, panel_rule
from ._tensors import EPS_MIXED, METRIC, lower, mdot
from .exceptions import MomentMismatchError, PreconditionError
from .geometry import ConeSurface, as_four

_CHUNK = 4096


def _points(x):
    return as_four(x)


def _chunked(func, x, out_shape, dtype=float):
    """Apply ``func`` to rows of the flattened ``x`` in fixed-size chunks."""
    lead = x.shape[:-1]
    flat = x.reshape(-1, 4)
    out = np.empty((flat.shape[0], *out_shape), dtype=dtype)
    for start in range(0, flat.shape[0], _CHUNK):
        out[start:start + _CHUNK] = func(flat[start:start + _CHUNK])
    return out.reshape(*lead, *out_shape)


# --------------------------------------------------------------------------
# one-dimensional profiles


class GaussianProfile:
    """Normalized centered gaussian of standard deviation ``width``."""

    def __init__(self, width):
        if not width > 0:
            raise PreconditionError("gaussian width must be positive")
        self.width = float(width)

    def pdf(self, x):
        w = self.width
        return np.exp(-0.5 * (x / w) ** 2) / (np.sqrt(2 * np.pi) * w)

    def cdf(self, x):
        return ndtr(np.asarray(x) / self.width)

    def second(self, x):
        w = self.width
        return self.pdf(x) * (x**2 / w**4 - 1.0 / w**2)

    def ft(self, q):
        return np.exp(-0.5 * (self.width * np.asarray(q)) ** 2)

    @property
    def reach(self):
        return 8.0 * self.width

    def describe(self):
        return {"kind": "gaussian", "width": self.width}


@lru_cache(maxsize=8)
def _bump_rule(n):
    # composite rule on [-1, 1]; the bump is flat at both ends
    return composite_gauss(np.linspace(-1.0, 1.0, n + 1), 16)


def _bump_shape(y):
    y = np.asarray(y, dtype=float)
    inside = np.abs(y) < 1.0
    q = np.where(inside, 1.0 - y * y, 1.0)
    return np.where(inside, np.exp(-1.0 / q), 0.0), inside, q


@lru_cache(maxsize=1)
def _bump_mass():
    y, w = _bump_rule(32)
    return float(w @ _bump_shape(y)[0])


class BumpProfile:
    """Normalized bump ``C exp(-1 / (1 - (x/r)^2))`` supported on [-r, r]."""

    def __init__(self, radius):
        if not radius > 0:
            raise PreconditionError("bump radius must be positive")
        self.radius = float(radius)
        self._norm = 1.0 / (self.radius * _bump_mass())

    def pdf(self, x):
        return self._norm * _bump_shape(np.asarray(x) / self.radius)[0]

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        r = self.radius
        hi = np.clip(x, -r, r)
        t, w = leggauss(64)
        # integrate from -r to hi with a per-point mapped rule
        half = 0.5 * (hi + r)
        nodes = -r + half[..., None] * (t + 1.0)
        return np.sum(w * self.pdf(nodes), axis=-1) * half

    def second(self, x):
        r = self.radius
        b, inside, q = _bump_shape(np.asarray(x) / r)
        y = np.asarray(x) / r
        ratio = 4 * y**2 / q**4 - 2 / q**2 - 8 * y**2 / q**3
        return self._norm * np.where(inside, b * ratio / r**2, 0.0)

    def ft(self, q):
        q = np.asarray(q, dtype=float)
        y, w = _bump_rule(32)
        vals = w * self.pdf(self.radius * y) * self.radius
        return np.cos(q[..., None] * (self.radius * y)) @ vals

    @property
    def reach(self):
        return self.radius

    def describe(self):
        return {"kind": "bump", "radius": self.radius}


# --------------------------------------------------------------------------
# mollifiers


class Mollifier:
    """Scalar smearing function ``s`` on R^4 together with its transform.

    Subclasses provide ``__call__``, ``fourier``, ``integral``,
    ``effective_radius`` and, where available, a decomposition into products
    of identical one-dimensional profiles (``product_terms``).
    """

    def __call__(self, x):
        raise NotImplementedError

    def fourier(self, p):
        raise NotImplementedError

    def dalembert(self, x):
        """Values of ``box s = d_t^2 s - laplacian s``."""
        raise NotImplementedError

    def product_terms(self):
        """List of ``(coefficient, profile)`` with ``s = sum c prod_i profile(x_i)``."""
        return None

    def gaussian_terms(self):
        """List of ``(coefficient, width)`` if ``s`` is a gaussian mixture."""
        terms = self.product_terms()
        if terms is None or not all(isinstance(p, GaussianProfile) for _, p in terms):
            return None
        return [(c, p.width) for c, p in terms]

    integral = 1.0
    effective_radius = 0.0

    def scaled(self, factor):
        return MollifierMix([(factor, self)])

    def __sub__(self, other):
        return MollifierMix([(1.0, self), (-1.0, other)])

    def __add__(self, other):
        return MollifierMix([(1.0, self), (1.0, other)])

    def __rmul__(self, factor):
        return self.scaled(factor)


class ProductMollifier(Mollifier):
    """``s(x) = weight * prod_i profile(x_i)``; integral equals ``weight``."""

    def __init__(self, profile, weight=1.0):
        self.profile = profile
        self.weight = float(weight)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if isinstance(self.profile, GaussianProfile):
            w2 = self.profile.width**2
            c = self.weight / (2 * np.pi * w2) ** 2
            return c * np.exp(np.einsum("...i,...i->...", x, x) * (-0.5 / w2))
        if isinstance(self.profile, BumpProfile):
            y = x / self.profile.radius
            inside = np.all(np.abs(y) < 1.0, axis=-1)
            out = np.zeros(x.shape[:-1])
            yi = y[inside]
            out[inside] = np.exp(-np.sum(1.0 / (1.0 - yi * yi), axis=-1))
            return (self.weight * self.profile._norm**4) * out
        return self.weight * np.prod(self.profile.pdf(x), axis=-1)

    def fourier(self, p):
        return self.weight * np.prod(self.profile.ft(np.asarray(p, dtype=float)), axis=-1)

    def dalembert(self, x):
        x = np.asarray(x, dtype=float)
        f = self.profile.pdf(x)
        d2 = self.profile.second(x)
        total = 0.0
        for k, sign in enumerate(METRIC.diagonal()):
            others = np.prod(np.delete(f, k, axis=-1), axis=-1)
            total = total + sign * d2[..., k] * others
        return self.weight * total

    def product_terms(self):
        return [(self.weight, self.profile)]

    @property
    def integral(self):
        return self.weight

    @property
    def effective_radius(self):
        # Euclidean radius of the support cube / gaussian cut-off
        if isinstance(self.profile, BumpProfile):
            return 2.0 * self.profile.radius
        return self.profile.reach

    def describe(self):
        return {**self.profile.describe(), "weight": self.weight}


def gaussian(width, weight=1.0):
    """Normalized gaussian mollifier of per-axis standard deviation ``width``."""
    return ProductMollifier(GaussianProfile(width), weight)


def bump(radius, weight=1.0):
    """Product of one-dimensional bumps, exactly supported in ``[-r, r]^4``."""
    return ProductMollifier(BumpProfile(radius), weight)


class MollifierMix(Mollifier):
    """Linear combination ``sum_i c_i s_i`` of mollifiers."""

    def __init__(self, terms):
        flat = []
        for c, m in terms:
            if isinstance(m, MollifierMix):
                flat.extend((c * ci, mi) for ci, mi in m.terms)
            else:
                flat.append((float(c), m))
        if not flat:
            raise PreconditionError("empty mollifier mixture")
        self.terms = flat

    def __call__(self, x):
        return sum(c * m(x) for c, m in self.terms)

    def fourier(self, p):
        return sum(c * m.fourier(p) for c, m in self.terms)

    def dalembert(self, x):
        return sum(c * m.dalembert(x) for c, m in self.terms)

    def product_terms(self):
        out = []
        for c, m in self.terms:
            sub = m.product_terms()
            if sub is None:
                return None
            out.extend((c * ci, pi) for ci, pi in sub)
        return out

    @property
    def integral(self):
        return sum(c * m.integral for c, m in self.terms)

    @property
    def effective_radius(self):
        return max(m.effective_radius for _, m in self.terms)

    def describe(self):
        return {"kind": "mix", "terms": [(c, m.describe()) for c, m in self.terms]}


class DAlembertMollifier(Mollifier):
    """``box s`` for a product-form mollifier; transform ``-p^2 s^(p)``."""

    def __init__(self, base):
        self.base = base

    def __call__(self, x):
        return self.base.dalembert(x)

    def fourier(self, p):
        p = np.asarray(p, dtype=float)
        return -mdot(p, p) * self.base.fourier(p)

    integral = 0.0

    @property
    def effective_radius(self):
        return self.base.effective_radius

    def describe(self):
        return {"kind": "dalembert", "of": self.base.describe()}


# --------------------------------------------------------------------------
# generic samplers


class Smearing:
    """Tensor-valued test function with position values and a Fourier transform.

    ``rank`` is the number of contravariant indices.  Instances support
    ``+``, ``-`` and multiplication by scalars.
    """

    rank = 1

    @property
    def shape(self):
        return (4,) * self.rank

    def __call__(self, x):
        raise NotImplementedError

    def fourier(self, p):
        raise NotImplementedError

    def conj(self):
        return Conjugate(self)

    def __add__(self, other):
        return LinearCombination([(1.0, self), (1.0, other)])

    def __sub__(self, other):
        return LinearCombination([(1.0, self), (-1.0, other)])

    def __neg__(self):
        return LinearCombination([(-1.0, self)])

    def __mul__(self, c):
        return LinearCombination([(c, self)])

    __rmul__ = __mul__

    def describe(self):
        return {"kind": type(self).__name__}


class LinearCombination(Smearing):
    def __init__(self, terms):
        ranks = {s.rank for _, s in terms}
        if len(ranks) != 1:
            raise PreconditionError("cannot combine smearings of different rank")
        self.rank = ranks.pop()
        self.terms = list(terms)

    def __call__(self, x):
        return sum(c * s(x) for c, s in self.terms)

    def fourier(self, p):
        return sum(c * s.fourier(p) for c, s in self.terms)

    def describe(self):
        return {"kind": "combination",
                "terms": [(complex(c).real if np.isreal(c) else str(c), s.describe())
                          for c, s in self.terms]}


class Conjugate(Smearing):
    """Complex conjugate ``conj(f(x))``, transform ``conj(f^(-p))``."""

    def __init__(self, inner):
        self.inner = inner
        self.rank = inner.rank

    def __call__(self, x):
        return np.conj(self.inner(x))

    def fourier(self, p):
        return np.conj(self.inner.fourier(-np.asarray(p, dtype=float)))

    def describe(self):
        return {"kind": "conjugate", "of": self.inner.describe()}


class Translated(Smearing):
    """``x -> f(x - y)``."""

    def __init__(self, inner, y):
        self.inner = inner
        self.rank = inner.rank
        self.y = np.asarray(as_four(y), dtype=float)

    def __call__(self, x):
        return self.inner(np.asarray(x, dtype=float) - self.y)

    def fourier(self, p):
        p = np.asarray(p, dtype=float)
        phase = np.exp(1j * mdot(p, self.y))
        return phase.reshape(phase.shape + (1,) * self.rank) * self.inner.fourier(p)

    def describe(self):
        return {"kind": "translated", "by": self.y.tolist(), "of": self.inner.describe()}


class FunctionSampler(Smearing):
    """Wrap a vectorized callable as a position-space sampler (no transform)."""

    def __init__(self, func, rank):
        self.func = func
        self.rank = rank

    def __call__(self, x):
        return self.func(np.asarray(x, dtype=float))


def _phase(p, x):
    """``exp(-i p.x)`` for p of shape (K, 4) and x of shape (M, 4)."""
    return np.exp(-1j * (p * np.diag(METRIC)) @ x.T)


class LoopSmearing(Smearing):
    """Loop function ``l^mu(x) = scale * int du s(x + gamma(u)) gamma'^mu(u)``.

    Parameters
    ----------
    mollifier : Mollifier
    loop : ParamLoop
    scale : float
        Overall factor ``kappa``.
    panels : int
        Gauss-Legendre panels (order ``order``) along the loop parameter.
    """

    rank = 1

    def __init__(self, mollifier, loop, scale=1.0, panels=64, order=8):
        if panels < 8:
            raise PreconditionError("panels must be >= 8")
        self.mollifier = mollifier
        self.loop = loop
        self.scale = float(scale)
        self.panels = int(panels)
        self.order = int(order)

    @cached_property
    def _nodes(self):
        u, w = panel_rule(self.panels, self.order, breakpoints=self.loop.breakpoints)
        return self.loop.position(u), (w[:, None] * self.loop.tangent(u)) * self.scale

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        pos, wt = self._nodes
        return _chunked(lambda xs: self.mollifier(xs[:, None, :] + pos[None]) @ wt,
                        x, (4,))

    def fourier(self, p):
        p = np.asarray(p, dtype=float)
        pos, wt = self._nodes

        def one(ps):
            return self.mollifier.fourier(ps)[:, None] * (_phase(ps, pos) @ wt)

        return _chunked(one, p, (4,), complex)

    def with_panels(self, panels):
        return LoopSmearing(self.mollifier, self.loop, self.scale, panels, self.order)

    def describe(self):
        return {"kind": "loop_smearing", "scale": self.scale,
                "mollifier": self.mollifier.describe(), "loop": self.loop.describe()}


_PSI_SERIES = np.array([(-1j) ** n / (factorial(n) * (n + 2)) for n in range(18)])


def _psi(theta):
    """``int_0^1 u exp(-i theta u) du`` with a series near zero."""
    theta = np.asarray(theta, dtype=float)
    small = np.abs(theta) < 0.5
    ts = np.where(small, 1.0, theta)
    out = ((1 + 1j * ts) * np.exp(-1j * ts) - 1.0) / ts**2
    if small.any():
        z = theta[small]
        acc = np.zeros(z.shape, dtype=complex)
        for c in _PSI_SERIES[::-1]:
            acc = acc * z + c
        out[small] = acc
    return out


class SurfaceSmearing(Smearing):
    """Surface function ``f = -(scale/2) int d^2u s(x + sigma(u)) sigma^{mu nu}(u)``.

    Cone surfaces use an exact radial integral in the transform, leaving a
    single quadrature along the loop.
    """

    rank = 2

    def __init__(self, mollifier, surface, scale=1.0, panels=(24, 64), order=8):
        if np.ndim(panels) == 0:
            panels = (panels, panels)
        if panels[0] < 1 or panels[1] < 8:
            raise PreconditionError("need >= 1 radial and >= 8 loop-direction panels")
        self.mollifier = mollifier
        self.surface = surface
        self.scale = float(scale)
        self.panels = tuple(int(n) for n in panels)
        self.order = int(order)

    def _v_breaks(self):
        if isinstance(self.surface, ConeSurface):
            return self.surface.loop.breakpoints
        return ()

    @cached_property
    def _nodes(self):
        u, wu = panel_rule(self.panels[0], self.order)
        v, wv = panel_rule(self.panels[1], self.order, breakpoints=self._v_breaks())
        uu, vv = np.meshgrid(u, v, indexing="ij")
        w = np.outer(wu, wv).ravel()
        pos = self.surface.position(uu.ravel(), vv.ravel())
        jac = self.surface.jacobian(uu.ravel(), vv.ravel())
        return pos, (-0.5 * self.scale) * w[:, None, None] * jac

    @cached_property
    def _cone_nodes(self):
        cone = self.surface
        v, wv = panel_rule(self.panels[1], self.order, breakpoints=self._v_breaks())
        d = cone.loop.position(v) - cone.apex
        t = cone.loop.tangent(v)
        wedge = d[:, :, None] * t[:, None, :] - d[:, None, :] * t[:, :, None]
        return d, (-0.5 * self.scale) * wv[:, None, None] * wedge

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        pos, wj = self._nodes
        flat = wj.reshape(len(wj), 16)
        return _chunked(
            lambda xs: (self.mollifier(xs[:, None, :] + pos[None]) @ flat).reshape(-1, 4, 4),
            x, (4, 4))

    def fourier(self, p):
        p = np.asarray(p, dtype=float)
        if isinstance(self.surface, ConeSurface):
            d, wedge = self._cone_nodes
            apex = self.surface.apex
            flat = wedge.reshape(len(wedge), 16)

            def one(ps):
                theta = (ps * np.diag(METRIC)) @ d.T
                core = (_psi(theta) @ flat).reshape(-1, 4, 4)
                pref = self.mollifier.fourier(ps) * np.exp(-1j * mdot(ps, apex))
                return pref[:, None, None] * core
        else:
            pos, wj = self._nodes
            flat = wj.reshape(len(wj), 16)

            def one(ps):
                core = (_phase(ps, pos) @ flat).reshape(-1, 4, 4)
                return self.mollifier.fourier(ps)[:, None, None] * core

        return _chunked(one, p, (4, 4), complex)

    def with_panels(self, panels):
        return SurfaceSmearing(self.mollifier, self.surface, self.scale, panels, self.order)

    def describe(self):
        return {"kind": "surface_smearing", "scale": self.scale,
                "mollifier": self.mollifier.describe(), "surface": self.surface.describe()}


class BlobSmearing(Smearing):
    """Constant tensor times a translated mollifier, ``C s(x - center)``."""

    def __init__(self, mollifier, coefficients, center=(0.0, 0.0, 0.0, 0.0)):
        c = np.asarray(coefficients)
        if c.shape not in {(4,), (4, 4), (4, 4, 4)}:
            raise PreconditionError("coefficients must be a rank 1-3 tensor over R^4")
        self.mollifier = mollifier
        self.coefficients = c
        self.center = np.asarray(as_four(center), dtype=float)
        self.rank = c.ndim

    def __call__(self, x):
        s = self.mollifier(np.asarray(x, dtype=float) - self.center)
        return s.reshape(s.shape + (1,) * self.rank) * self.coefficients

    def fourier(self, p):
        p = np.asarray(p, dtype=float)
        a = self.mollifier.fourier(p) * np.exp(1j * mdot(p, self.center))
        return a.reshape(a.shape + (1,) * self.rank) * self.coefficients

    def describe(self):
        return {"kind": "blob", "rank": self.rank, "center": self.center.tolist(),
                "mollifier": self.mollifier.describe()}


def _antisymmetrize3(c):
    c = np.asarray(c)
    perms = [((0, 1, 2), 1), ((1, 2, 0), 1), ((2, 0, 1), 1),
             ((1, 0, 2), -1), ((0, 2, 1), -1), ((2, 1, 0), -1)]
    return sum(s * np.transpose(c, axes) for axes, s in perms) / 6.0


def blob_two_form(mollifier, coefficients, center=(0.0, 0.0, 0.0, 0.0)):
    """Two-form ``C^{mu nu} s(x - center)``; ``C`` is antisymmetrized."""
    c = np.asarray(coefficients)
    return BlobSmearing(mollifier, 0.5 * (c - c.T), center)


def blob_three_form(mollifier, coefficients, center=(0.0, 0.0, 0.0, 0.0)):
    """Totally antisymmetric three-form ``T^{rho mu nu} s(x - center)``."""
    return BlobSmearing(mollifier, _antisymmetrize3(coefficients), center)


# --------------------------------------------------------------------------
# finite-difference calculus


def _shifts(step):
    return np.eye(4) * step


def partials_fd(field, x, step):
    """Central differences ``d_nu field`` stacked on a new leading axis."""
    x = np.asarray(x, dtype=float)
    e = _shifts(step)
    return np.stack([(field(x + e[n]) - field(x - e[n])) / (2 * step) for n in range(4)])


def co_derivative_fd(field, x, step):
    """``(delta f)^mu = -2 d_nu f^{nu mu}`` by central differences."""
    if not step > 0:
        raise ValueError("step must be positive")
    d = partials_fd(field, x, step)
    # d[nu, ..., nu, mu]
    return -2.0 * sum(d[n][..., n, :] for n in range(4))


def divergence_fd(field, x, step):
    """``d_mu h^mu`` for a one-form sampler."""
    if not step > 0:
        raise ValueError("step must be positive")
    d = partials_fd(field, x, step)
    return sum(d[n][..., n] for n in range(4))


def curl_fd(field, x, step):
    """``d^nu h^mu - d^mu h^nu`` for a one-form sampler (indices raised)."""
    if not step > 0:
        raise ValueError("step must be positive")
    d = partials_fd(field, x, step)  # d[nu, ..., mu] = d_nu h^mu
    up = np.moveaxis(d, 0, -2) * np.diag(METRIC)[:, None]  # [..., nu, mu] = d^nu h^mu
    return np.swapaxes(up, -1, -2) - up


class CurlTwoForm(Smearing):
    """The two-form ``(dh)^{mu nu} = d^nu h^mu - d^mu h^nu`` of a one-form."""

    rank = 2

    def __init__(self, h, step=1e-4):
        self.h = h
        self.step = step

    def __call__(self, x):
        return curl_fd(self.h, x, self.step)

    def fourier(self, p):
        p = np.asarray(p, dtype=float)
        hh = self.h.fourier(p)
        outer = hh[..., :, None] * p[..., None, :]
        return -1j * (outer - np.swapaxes(outer, -1, -2))

    def describe(self):
        return {"kind": "curl", "of": self.h.describe()}


class DivergenceTwoForm(Smearing):
    """The two-form ``d_rho t^{rho mu nu}`` of a three-form sampler."""

    rank = 2

    def __init__(self, t, step=1e-4):
        if t.rank != 3:
            raise PreconditionError("three_form_divergence needs a rank-3 sampler")
        self.t = t
        self.step = step

    def __call__(self, x):
        d = partials_fd(self.t, x, self.step)
        return sum(d[n][..., n, :, :] for n in range(4))

    def fourier(self, p):
        p = np.asarray(p, dtype=float)
        return -1j * np.einsum("...r,...rmn->...mn", lower(p), self.t.fourier(p))

    def describe(self):
        return {"kind": "divergence", "of": self.t.describe()}


def hodge_upper(f):
    """``(*f)^{mu nu} = 1/2 eps^{mu nu}_{rho sigma} f^{rho sigma}``."""
    return 0.5 * np.einsum("mnrs,...rs->...mn", EPS_MIXED, f)


class HodgeDual(Smearing):
    """Hodge dual of a two-form sampler."""

    rank = 2

    def __init__(self, f):
        if f.rank != 2:
            raise PreconditionError("Hodge dual needs a two-form")
        self.f = f

    def __call__(self, x):
        return hodge_upper(self.f(x))

    def fourier(self, p):
        return hodge_upper(self.f.fourier(p))

    def describe(self):
        return {"kind": "hodge", "of": self.f.describe()}


# --------------------------------------------------------------------------
# co-primitives


def _unit_phase_integral(theta):
    """``int_0^1 exp(i theta u) du``."""
    theta = np.asarray(theta, dtype=float)
    small = np.abs(theta) < 1e-3
    ts = np.where(small, 1.0, theta)
    return np.where(small, 1 + 0.5j * theta - theta**2 / 6,
                    (np.exp(1j * ts) - 1.0) / (1j * ts))


class TranslationCoprimitive(Smearing):
    """``f^{mu nu}(x) = 1/2 int_0^1 du (y^nu h^mu - y^mu h^nu)(x - u y)``.

    For co-closed ``h`` this satisfies ``delta f = h - h_y`` with
    ``h_y(x) = h(x - y)``.
    """

    rank = 2

    def __init__(self, h, y, panels=16, order=8):
        self.h = h
        self.y = np.asarray(as_four(y), dtype=float)
        self.u, self.w = panel_rule(panels, order)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        pts = x[..., None, :] - self.u[:, None] * self.y
        hv = np.tensordot(self.h(pts), self.w, axes=([-2], [0]))  # (..., 4)
        outer = hv[..., :, None] * self.y[None, :]
        return 0.5 * (outer - np.swapaxes(outer, -1, -2))

    def fourier(self, p):
        p = np.asarray(p, dtype=float)
        hh = self.h.fourier(p) * _unit_phase_integral(mdot(p, self.y))[..., None]
        outer = hh[..., :, None] * self.y
        return 0.5 * (outer - np.swapaxes(outer, -1, -2))

    def describe(self):
        return {"kind": "translation_coprimitive", "y": self.y.tolist(),
                "of": self.h.describe()}


def translation_coprimitive(h, y, panels=16):
    """Two-form ``f^y`` with ``delta f^y = h - h(. - y)`` for co-closed ``h``."""
    return TranslationCoprimitive(h, y, panels)


class LoopTransportCoprimitive(Smearing):
    """``f^{mu nu}(x) = 1/2 int du (h^mu(x+gamma) gamma'^nu - h^nu(x+gamma) gamma'^mu)``.

    If ``-d_nu h^nu = rho`` then ``delta f`` is the loop function of ``rho``
    along ``gamma``.
    """

    rank = 2

    def __init__(self, h, loop, panels=64, order=8):
        self.h = h
        self.loop = loop
        u, w = panel_rule(panels, order, breakpoints=loop.breakpoints)
        self.pos = loop.position(u)
        self.wt = w[:, None] * loop.tangent(u)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        hv = self.h(x[..., None, :] + self.pos)  # (..., M, 4)
        m = np.einsum("...ka,kb->...ab", hv, self.wt)
        return 0.5 * (m - np.swapaxes(m, -1, -2))

    def fourier(self, p):
        p = np.asarray(p, dtype=float)
        flat = p.reshape(-1, 4)
        ph = _phase(flat, self.pos)  # (K, M)
        hh = self.h.fourier(flat)
        t = ph @ self.wt  # (K, 4)
        m = hh[:, :, None] * t[:, None, :]
        return (0.5 * (m - np.swapaxes(m, -1, -2))).reshape(*p.shape[:-1], 4, 4)

    def describe(self):
        return {"kind": "loop_transport_coprimitive", "loop": self.loop.describe(),
                "of": self.h.describe()}


def loop_transport_coprimitive(h, loop, panels=64):
    """Two-form whose co-derivative is the loop function of ``-d.h`` along ``loop``."""
    return LoopTransportCoprimitive(h, loop, panels)


class ScalarCoprimitive(Smearing):
    """One-form ``h`` with ``-d_nu h^nu = s1 - kappa * s_hat``.

    Built by telescoping along the coordinate axes: with a reference profile
    ``psi``, the difference is written as ``sum_k d_k H_k`` where each
    ``H_k`` swaps one more factor to ``psi`` and integrates along axis ``k``.
    """

    rank = 1

    def __init__(self, s1, s_hat, kappa, tol=1e-10):
        terms_a = s1.product_terms()
        terms_b = s_hat.product_terms()
        if terms_a is None or terms_b is None:
            raise PreconditionError("scalar co-primitive needs product-form mollifiers")
        terms = list(terms_a) + [(-kappa * c, p) for c, p in terms_b]
        total = sum(c for c, _ in terms)
        scale = sum(abs(c) for c, _ in terms)
        if abs(total) > tol * max(scale, 1.0):
            raise MomentMismatchError(
                f"integral of s1 - kappa*s_hat is {total:.3e}, not zero")
        self.terms = terms
        self.reference = terms[0][1]
        self.kappa = kappa

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        psi = self.reference
        ref_pdf = psi.pdf(x)
        ref_cdf = psi.cdf(x)
        out = np.zeros(x.shape, dtype=float)
        for c, prof in self.terms:
            pdf = prof.pdf(x)
            cdf = prof.cdf(x)
            for k in range(4):
                fac = c * (cdf[..., k] - ref_cdf[..., k])
                if k:
                    fac = fac * np.prod(ref_pdf[..., :k], axis=-1)
                if k < 3:
                    fac = fac * np.prod(pdf[..., k + 1:], axis=-1)
                out[..., k] -= fac
        return out

    def describe(self):
        return {"kind": "scalar_coprimitive", "kappa": self.kappa}


def scalar_coprimitive(s1, s_hat, kappa):
    """One-form ``h`` with ``-d.h = s1 - kappa * s_hat`` (requires zero total integral)."""
    return ScalarCoprimitive(s1, s_hat, kappa)


# --------------------------------------------------------------------------
# convenience evaluators


def eval_loop_function(loop_fn, x, panels=None):
    """Values ``l^mu(x)`` of a loop smearing at points ``x`` (..., 4)."""
    if panels is not None:
        loop_fn = loop_fn.with_panels(panels)
    return loop_fn(_points(x))


def eval_surface_function(f, x, panels=None):
    """Values ``f^{mu nu}(x)`` of a surface smearing at points ``x`` (..., 4)."""
    if panels is not None:
        f = f.with_panels(panels)
    return f(_points(x))


def fourier_loop(loop_fn, p, panels=None):
    """Transform ``l^(p) = s^(p) int du exp(-i p.gamma) gamma'``."""
    if panels is not None:
        loop_fn = loop_fn.with_panels(panels)
    return loop_fn.fourier(_points(p))


def fourier_surface(f, p, panels=None):
    """Transform ``f^(p) = -1/2 s^(p) int d^2u exp(-i p.sigma) sigma^{mu nu}``."""
    if panels is not None:
        f = f.with_panels(panels)
    return f.fourier(_points(p))


def loop_smearing(mollifier, loop, scale=1.0, panels=64):
    return LoopSmearing(mollifier, loop, scale, panels)


def surface_smearing(mollifier, surface, scale=1.0, panels=(24, 64)):
    return SurfaceSmearing(mollifier, surface, scale, panels)


# --------------------------------------------------------------------------
# grid oracle


class BoxTooSmallWarning(UserWarning):
    """The sampled field is not negligible on the oracle box boundary."""


class OracleResult:
    """Grid transform values with error estimate and boundary tail bound."""

    def __init__(self, value, error, tail):
        self.value = value
        self.error = error
        self.tail = tail

    def __repr__(self):
        return f"OracleResult(error={np.max(self.error):.3g}, tail={self.tail:.3g})"


def fourier_grid_oracle(sampler, p, half_width, spacing, center=(0.0, 0.0, 0.0, 0.0),
                        tail_tol=1e-8):
    """Riemann-sum transform of ``sampler`` on a 4D box.

    Parameters
    ----------
    sampler : callable
        Maps points (..., 4) to values (..., *shape).
    p : array_like
        Momenta, shape (4,) or (K, 4).
    half_width : float or sequence of 4 floats
        Box half-widths around ``center``.
    spacing : float
        Grid spacing ``h``; the error estimate compares with spacing ``2h``.

    Returns
    -------
    OracleResult
        ``value`` has shape (K, *shape); ``error`` is the ``h`` vs ``2h``
        difference plus the boundary tail bound.
    """
    p = np.atleast_2d(np.asarray(p, dtype=float))
    center = np.asarray(as_four(center), dtype=float)
    hw = np.broadcast_to(np.asarray(half_width, dtype=float), (4,))
    n = np.ceil(hw / spacing).astype(int)
    axes = [center[k] + spacing * np.arange(-n[k], n[k] + 1) for k in range(4)]
    even = [np.arange(-n[k], n[k] + 1) % 2 == 0 for k in range(4)]
    g3 = np.stack(np.meshgrid(*axes[1:], indexing="ij"), axis=-1).reshape(-1, 3)
    even3 = (even[1][:, None, None] & even[2][None, :, None] & even[3][None, None, :]).ravel()
    edge3 = np.zeros((len(axes[1]), len(axes[2]), len(axes[3])), bool)
    edge3[[0, -1]] = True
    edge3[:, [0, -1]] = True
    edge3[:, :, [0, -1]] = True
    edge3 = edge3.ravel()
    pl = p * np.diag(METRIC)
    fine = coarse = 0.0
    boundary = 0.0
    peak = 0.0
    for i, t in enumerate(axes[0]):
        pts = np.concatenate([np.full((len(g3), 1), t), g3], axis=1)
        vals = np.asarray(sampler(pts))
        vals = vals.reshape(len(g3), -1)
        mag = np.max(np.abs(vals), axis=1)
        peak = max(peak, float(mag.max()))
        on_edge = edge3 if 0 < i < len(axes[0]) - 1 else np.ones_like(edge3)
        boundary = max(boundary, float(mag[on_edge].max()))
        ph = np.exp(1j * pl @ pts.T)  # (K, M)
        fine = fine + ph @ vals
        if even[0][i]:
            coarse = coarse + ph[:, even3] @ vals[even3]
    fine = fine * spacing**4
    coarse = coarse * (2 * spacing) ** 4
    volume = float(np.prod(2 * hw))
    tail = boundary * volume
    if boundary > tail_tol * max(peak, 1e-300):
        warnings.warn(f"field reaches {boundary:.3g} on the box boundary "
                      f"(peak {peak:.3g}); enlarge the box", BoxTooSmallWarning, stacklevel=2)
    shape = np.shape(sampler(center[None]))[1:]
    value = fine.reshape(len(p), *shape)
    error = np.abs(fine - coarse).reshape(len(p), *shape) + tail
    return OracleResult(value, error, tail)


__all__ = [
    "BoxTooSmallWarning", "BumpProfile", "Conjugate", "CurlTwoForm", "DAlembertMollifier",
    "DivergenceTwoForm", "FunctionSampler", "GaussianProfile", "HodgeDual",
    "LinearCombination", "LoopSmearing", "LoopTransportCoprimitive", "Mollifier",
    "MollifierMix", "OracleResult", "ProductMollifier", "ScalarCoprimitive", "Smearing",
    "SurfaceSmearing", "TranslationCoprimitive", "Translated", "blob_three_form",
    "blob_two_form", "bump", "co_derivative_fd", "curl_fd", "divergence_fd",
    "eval_loop_function", "eval_surface_function", "fourier_grid_oracle", "fourier_loop",
    "fourier_surface", "gaussian", "hodge_upper", "loop_smearing", "loop_transport_coprimitive",
    "scalar_coprimitive", "surface_smearing", "translation_coprimitive",
]
