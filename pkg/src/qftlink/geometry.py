"""Loops, surfaces and causal predicates in Minkowski space.

Signature is (+, -, -, -): ``minkowski_inner(p, p) == m**2`` on the forward
mass shell.  Points are stored as arrays ``(t, x, y, z)``; every evaluation
routine is vectorized over its parameter arrays and returns trailing axis 4.
"""

from dataclasses import dataclass

import numpy as np

METRIC = np.diag([1.0, -1.0, -1.0, -1.0])


@dataclass(frozen=True)
class FourVector:
    t: float = 0.0
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    def __post_init__(self):
        if not np.all(np.isfinite([self.t, self.x, self.y, self.z])):
            raise ValueError("FourVector components must be finite")

    @property
    def array(self):
        return np.array([self.t, self.x, self.y, self.z])

    @classmethod
    def from_array(cls, a):
        a = np.asarray(a, dtype=float)
        return cls(*a.tolist())


def as_four(v):
    """Coerce a FourVector or length-4 sequence to a float array."""
    if isinstance(v, FourVector):
        return v.array
    a = np.asarray(v, dtype=float)
    if a.shape[-1] != 4:
        raise ValueError(f"expected four components, got shape {a.shape}")
    return a


def minkowski_inner(a, b):
    """Minkowski product ``a0*b0 - a.b`` over the last axis."""
    a = as_four(a)
    b = as_four(b)
    return a[..., 0] * b[..., 0] - np.sum(a[..., 1:] * b[..., 1:], axis=-1)


def lower(v):
    """Lower the index of contravariant components (last axis)."""
    v = np.asarray(v)
    out = -v.copy()
    out[..., 0] = v[..., 0]
    return out


# --------------------------------------------------------------------------
# loops


class ParamLoop:
    """A closed curve ``u -> gamma(u)`` on [0, 1] with ``gamma(0) == gamma(1)``.

    Subclasses implement :meth:`position` and :meth:`tangent`; ``breakpoints``
    lists interior parameters where the tangent may jump.
    """

    breakpoints = ()

    def position(self, u):
        raise NotImplementedError

    def tangent(self, u):
        raise NotImplementedError

    def describe(self):
        return {"kind": type(self).__name__}

    def samples(self, n):
        """Positions at ``n`` equally spaced parameters in [0, 1)."""
        return self.position(np.arange(n) / n)

    def arc_length(self, n=2048):
        pts = self.samples(n)
        seg = np.diff(np.vstack([pts, pts[:1]]), axis=0)
        return float(np.sum(np.sqrt(np.sum(seg**2, axis=-1))))

    def centroid(self, n=512):
        return self.samples(n).mean(axis=0)

    def reversed(self):
        return FunctionLoop(
            lambda u: self.position(1.0 - u),
            lambda u: -self.tangent(1.0 - u),
            tuple(sorted(1.0 - b for b in self.breakpoints)),
            {"kind": "reversed", "of": self.describe()},
        )

    def reparametrized(self, power=2):
        """Orientation-preserving reparametrization ``u -> u**power``."""
        return FunctionLoop(
            lambda u: self.position(np.asarray(u) ** power),
            lambda u: power
            * np.asarray(u)[..., None] ** (power - 1)
            * self.tangent(np.asarray(u) ** power),
            tuple(b ** (1.0 / power) for b in self.breakpoints),
            {"kind": "reparametrized", "power": power, "of": self.describe()},
        )

    def repeated(self, times):
        """The ``times``-fold traversal of the loop."""
        times = int(times)
        if times < 1:
            raise ValueError("times must be >= 1")
        bps = [(k + b) / times for k in range(times) for b in (0.0, *self.breakpoints)]
        return FunctionLoop(
            lambda u: self.position(np.mod(times * np.asarray(u), 1.0)),
            lambda u: times * self.tangent(np.mod(times * np.asarray(u), 1.0)),
            tuple(b for b in bps if 0.0 < b < 1.0),
            {"kind": "repeated", "times": times, "of": self.describe()},
        )

    def translated(self, y):
        y = as_four(y)
        return FunctionLoop(
            lambda u: self.position(u) + y,
            self.tangent,
            self.breakpoints,
            {"kind": "translated", "by": y.tolist(), "of": self.describe()},
        )

    def transformed(self, matrix):
        """Apply a linear map of R^4 (4x4 matrix) to every point."""
        m = np.asarray(matrix, dtype=float)
        return FunctionLoop(
            lambda u: self.position(u) @ m.T,
            lambda u: self.tangent(u) @ m.T,
            self.breakpoints,
            {"kind": "transformed", "matrix": m.tolist(), "of": self.describe()},
        )


class FunctionLoop(ParamLoop):
    """Loop defined by position and tangent callables."""

    def __init__(self, position, tangent, breakpoints=(), description=None):
        self._position = position
        self._tangent = tangent
        self.breakpoints = tuple(breakpoints)
        self._description = description or {"kind": "function"}

    def position(self, u):
        return self._position(np.asarray(u, dtype=float))

    def tangent(self, u):
        return self._tangent(np.asarray(u, dtype=float))

    def describe(self):
        return self._description


class CircleLoop(ParamLoop):
    """Circle of ``radius`` about ``center`` spanned by orthonormal ``e1, e2``.

    The circle lies in a constant-time hyperplane.
    """

    def __init__(self, center=(0.0, 0.0, 0.0, 0.0), e1=(1.0, 0.0, 0.0),
                 e2=(0.0, 1.0, 0.0), radius=1.0):
        self.center = as_four(center)
        e1 = np.asarray(e1, dtype=float)
        e2 = np.asarray(e2, dtype=float)
        if not (radius > 0 and np.isfinite(radius)):
            raise ValueError(f"degenerate circle radius {radius!r}")
        gram = np.array([[e1 @ e1, e1 @ e2], [e2 @ e1, e2 @ e2]])
        if not np.allclose(gram, np.eye(2), atol=1e-10):
            raise ValueError("circle frame vectors must be orthonormal")
        self.e1 = np.concatenate([[0.0], e1])
        self.e2 = np.concatenate([[0.0], e2])
        self.radius = float(radius)

    def position(self, u):
        t = 2 * np.pi * np.asarray(u, dtype=float)[..., None]
        return self.center + self.radius * (np.cos(t) * self.e1 + np.sin(t) * self.e2)

    def tangent(self, u):
        t = 2 * np.pi * np.asarray(u, dtype=float)[..., None]
        return 2 * np.pi * self.radius * (-np.sin(t) * self.e1 + np.cos(t) * self.e2)

    def describe(self):
        return {
            "kind": "circle",
            "center": self.center.tolist(),
            "e1": self.e1[1:].tolist(),
            "e2": self.e2[1:].tolist(),
            "radius": self.radius,
        }


class FourierLoop(ParamLoop):
    """Trigonometric-polynomial loop.

    ``gamma(u) = constant + sum_k cos[k-1] cos(2 pi k u) + sin[k-1] sin(2 pi k u)``
    with coefficient arrays of shape (K, 4).
    """

    def __init__(self, constant, cos, sin):
        self.constant = as_four(constant)
        self.cos = np.atleast_2d(np.asarray(cos, dtype=float))
        self.sin = np.atleast_2d(np.asarray(sin, dtype=float))
        if self.cos.shape != self.sin.shape or self.cos.shape[-1] != 4:
            raise ValueError("cos and sin coefficients must both have shape (K, 4)")
        self._k = 2 * np.pi * np.arange(1, self.cos.shape[0] + 1)

    def position(self, u):
        ph = np.asarray(u, dtype=float)[..., None] * self._k
        return self.constant + np.cos(ph) @ self.cos + np.sin(ph) @ self.sin

    def tangent(self, u):
        ph = np.asarray(u, dtype=float)[..., None] * self._k
        return (-np.sin(ph) * self._k) @ self.cos + (np.cos(ph) * self._k) @ self.sin

    def describe(self):
        return {
            "kind": "fourier",
            "constant": self.constant.tolist(),
            "cos": self.cos.tolist(),
            "sin": self.sin.tolist(),
        }


class PolylineLoop(ParamLoop):
    """Closed polygon through ``vertices``; vertex i sits at parameter i/n."""

    def __init__(self, vertices):
        v = np.asarray(vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] not in (3, 4):
            raise ValueError("vertices must have shape (n, 3) or (n, 4)")
        if v.shape[1] == 3:
            v = np.hstack([np.zeros((len(v), 1)), v])
        if len(v) < 3:
            raise ValueError("a closed polyline needs at least 3 vertices")
        if np.allclose(v[0], v[-1]):
            v = v[:-1]
        edges = np.roll(v, -1, axis=0) - v
        if np.any(np.sum(edges**2, axis=1) == 0.0):
            raise ValueError("polyline has repeated consecutive vertices")
        self.vertices = v
        self._edges = edges
        n = len(v)
        self.breakpoints = tuple(np.arange(1, n) / n)

    def _locate(self, u):
        n = len(self.vertices)
        s = np.mod(np.asarray(u, dtype=float), 1.0) * n
        i = np.minimum(np.floor(s).astype(int), n - 1)
        return i, s - i

    def position(self, u):
        i, frac = self._locate(u)
        return self.vertices[i] + frac[..., None] * self._edges[i]

    def tangent(self, u):
        i, _ = self._locate(u)
        return len(self.vertices) * self._edges[i]

    def describe(self):
        return {"kind": "polyline", "vertices": self.vertices.tolist()}


def make_circle(radius=1.0, center=(0.0, 0.0, 0.0, 0.0), e1=(1.0, 0.0, 0.0),
                e2=(0.0, 1.0, 0.0)):
    return CircleLoop(center=center, e1=e1, e2=e2, radius=radius)


def make_polyline(vertices):
    return PolylineLoop(vertices)


def polyline_from_loop(loop, n):
    """Inscribed polygon with ``n`` vertices at equal parameter spacing."""
    return PolylineLoop(loop.samples(n))


def _rotation_4(rotation):
    m = np.eye(4)
    if rotation is not None:
        r = np.asarray(rotation, dtype=float)
        if r.shape != (3, 3) or not np.allclose(r @ r.T, np.eye(3), atol=1e-10):
            raise ValueError("rotation must be an orthogonal 3x3 matrix")
        if np.linalg.det(r) < 0:
            raise ValueError("rotation must preserve orientation")
        m[1:, 1:] = r
    return m


def make_torus_link_pair(lam, major=1.0, minor=0.5, center=(0.0, 0.0, 0.0, 0.0),
                         rotation=None):
    """Core circle of a torus and a curve on it with linking number ``lam``.

    The second curve winds ``lam`` times around the tube while going once
    around the core, so both curves are unknotted and their minimal distance
    is ``minor``.  For ``lam == 0`` the second curve is the core lifted by
    ``2 * minor`` along the torus axis, a split pair.
    """
    lam = int(lam)
    if not (0 < minor < major):
        raise ValueError("torus radii must satisfy 0 < minor < major")
    c = as_four(center)
    core = FourierLoop(c, [[0.0, major, 0.0, 0.0]], [[0.0, 0.0, major, 0.0]])
    if lam == 0:
        other = FourierLoop(c + [0.0, 0.0, 0.0, 2 * minor],
                            [[0.0, major, 0.0, 0.0]], [[0.0, 0.0, major, 0.0]])
    else:
        # (R + r cos(n t)) (cos t, sin t) expanded into harmonics; the z sign
        # is chosen so that the Gauss integral equals +lam.
        n = abs(lam)
        sgn = 1.0 if lam > 0 else -1.0
        kmax = n + 1
        cos = np.zeros((kmax, 4))
        sin = np.zeros((kmax, 4))
        cos[0, 1] += major
        sin[0, 2] += major
        cos[n, 1] += minor / 2
        sin[n, 2] += minor / 2
        const = c.copy()
        if n > 1:
            cos[n - 2, 1] += minor / 2
            sin[n - 2, 2] -= minor / 2
        else:
            const = const + [0.0, minor / 2, 0.0, 0.0]
        sin[n - 1, 3] = -sgn * minor
        other = FourierLoop(const, cos, sin)
    if rotation is not None:
        m = _rotation_4(rotation)
        core = _rotate_about(core, m, c)
        other = _rotate_about(other, m, c)
    return core, other


def _rotate_about(loop, m, c):
    return loop.translated(-c).transformed(m).translated(c)


def make_hopf_pair(radius=1.0):
    """Reference Hopf pair: circles in orthogonal planes, centers one radius apart.

    Each circle passes through the center of the other; the minimal distance
    between them equals ``radius`` and the linking number is +1.
    """
    a1 = CircleLoop(radius=radius)
    a2 = CircleLoop(center=(0.0, radius, 0.0, 0.0), e1=(1.0, 0.0, 0.0),
                    e2=(0.0, 0.0, -1.0), radius=radius)
    return a1, a2


def time_tilted(loop, slope, direction=(1.0, 0.0, 0.0)):
    """Add a time component ``slope * direction . (x - centroid)``.

    Chords satisfy ``|dt| <= slope |dx|``, so the result stays spatial for
    ``slope < 1``.
    """
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    c = loop.centroid()[1:]

    def pos(u):
        p = loop.position(u).copy()
        p[..., 0] += slope * ((p[..., 1:] - c) @ d)
        return p

    def tan(u):
        v = loop.tangent(u).copy()
        v[..., 0] += slope * (v[..., 1:] @ d)
        return v

    return FunctionLoop(pos, tan, loop.breakpoints,
                        {"kind": "time_tilted", "slope": slope,
                         "direction": d.tolist(), "of": loop.describe()})


# --------------------------------------------------------------------------
# causal structure


def causal_projection(loop, u):
    """The homotopy ``(x0, x) -> ((1 - u) x0, x)`` applied to a loop."""
    m = np.diag([1.0 - u, 1.0, 1.0, 1.0])
    out = loop.transformed(m)
    out._description = {"kind": "causal_projection", "u": u, "of": loop.describe()}
    return out


def is_spacelike_separated(l1, l2, samples=256, margin=0.0):
    """Sampled test that every pair of points is spacelike by ``margin``.

    Pairs must satisfy ``x.x < 0`` and ``x.x <= -margin**2``.

    Sound up to sampling resolution: the check is exact on the sampled
    parameters only.
    """
    if samples < 2:
        raise ValueError("samples must be >= 2")
    a = l1.samples(samples)
    b = l2.samples(samples)
    d = a[:, None, :] - b[None, :, :]
    q = minkowski_inner(d, d)
    return bool(np.all(q < 0) and np.all(q <= -(margin**2)))


def is_spatial(loop, samples=256, tol=0.0):
    """Sampled test that distinct points of the loop are mutually spacelike.

    A pair counts as spacelike when ``dt**2 < (1 - tol) |dx|**2``.
    """
    if samples < 3:
        raise ValueError("samples must be >= 3")
    p = loop.samples(samples)
    i, j = np.triu_indices(samples, k=1)
    d = p[i] - p[j]
    dx2 = np.sum(d[:, 1:] ** 2, axis=1)
    return bool(np.all(d[:, 0] ** 2 < (1.0 - tol) * dx2))


def min_spatial_distance(l1, l2, samples=512):
    a = l1.samples(samples)[:, 1:]
    b = l2.samples(samples)[:, 1:]
    best = np.inf
    for chunk in np.array_split(np.arange(samples), max(1, samples // 128)):
        d = a[chunk, None, :] - b[None, :, :]
        best = min(best, float(np.sqrt(np.min(np.sum(d**2, axis=-1)))))
    return best


def spacelike_margin(l1, l2, samples=512):
    """Largest ``m`` with every sampled pair satisfying ``-(x.x) >= m**2``."""
    a = l1.samples(samples)
    b = l2.samples(samples)
    worst = np.inf
    for chunk in np.array_split(np.arange(samples), max(1, samples // 128)):
        d = a[chunk, None, :] - b[None, :, :]
        worst = min(worst, float(np.min(-minkowski_inner(d, d))))
    return float(np.sqrt(worst)) if worst > 0 else 0.0


def light_cone_gap(l1, l2, samples=512):
    """Smallest ``|dx| - |dt|`` over sampled pairs: the distance to the light cone.

    Equals the spatial distance for loops in a common time slice; smeared
    commutator functions decay like a gaussian in this quantity.
    """
    a = l1.samples(samples)
    b = l2.samples(samples)
    worst = np.inf
    for chunk in np.array_split(np.arange(samples), max(1, samples // 128)):
        d = a[chunk, None, :] - b[None, :, :]
        gap = np.sqrt(np.sum(d[..., 1:] ** 2, axis=-1)) - np.abs(d[..., 0])
        worst = min(worst, float(gap.min()))
    return worst


# --------------------------------------------------------------------------
# surfaces


class ParamSurface:
    """Map ``(u, v) -> sigma(u, v)`` of the unit square into R^4."""

    def position(self, u, v):
        raise NotImplementedError

    def d_u(self, u, v):
        raise NotImplementedError

    def d_v(self, u, v):
        raise NotImplementedError

    def jacobian(self, u, v):
        """Bivector ``d_u sigma^mu d_v sigma^nu - d_u sigma^nu d_v sigma^mu``."""
        a = self.d_u(u, v)
        b = self.d_v(u, v)
        return a[..., :, None] * b[..., None, :] - a[..., None, :] * b[..., :, None]

    def boundary(self):
        """Counter-clockwise boundary in the (u, v) square as one loop.

        Edges are traversed in the order bottom, right, top, left, each on a
        quarter of the loop parameter.
        """
        surf = self

        def edge(u):
            u = np.mod(np.asarray(u, dtype=float), 1.0)
            k = np.minimum(np.floor(4 * u).astype(int), 3)
            s = 4 * u - k
            uu = np.select([k == 0, k == 1, k == 2], [s, 1.0, 1 - s], 0.0)
            vv = np.select([k == 0, k == 1, k == 2], [0.0, s, 1.0], 1 - s)
            return k, uu, vv

        def pos(u):
            _, uu, vv = edge(u)
            return surf.position(uu, vv)

        def tan(u):
            k, uu, vv = edge(u)
            sign = np.array([1.0, 1.0, -1.0, -1.0])[k][..., None]
            along_u = (k % 2 == 0)[..., None]
            return 4 * sign * np.where(along_u, surf.d_u(uu, vv), surf.d_v(uu, vv))

        return FunctionLoop(pos, tan, (0.25, 0.5, 0.75),
                            {"kind": "surface_boundary"})

    def describe(self):
        return {"kind": type(self).__name__}


class FunctionSurface(ParamSurface):
    """Surface from callables ``position(u, v)``, ``d_u``, ``d_v``."""

    def __init__(self, position, d_u, d_v, description=None):
        self._p, self._du, self._dv = position, d_u, d_v
        self._description = description or {"kind": "function_surface"}

    def position(self, u, v):
        return self._p(np.asarray(u, float), np.asarray(v, float))

    def d_u(self, u, v):
        return self._du(np.asarray(u, float), np.asarray(v, float))

    def d_v(self, u, v):
        return self._dv(np.asarray(u, float), np.asarray(v, float))

    def describe(self):
        return self._description


class ConeSurface(ParamSurface):
    """Cone ``sigma(u, v) = apex + u (gamma(v) - apex)`` over a loop.

    ``u`` is the radial parameter: the ``u = 0`` edge collapses to the apex and
    the ``u = 1`` edge is the loop traversed forward, so the counter-clockwise
    boundary is the loop itself.
    """

    def __init__(self, loop, apex):
        self.loop = loop
        self.apex = as_four(apex)

    def position(self, u, v):
        u = np.asarray(u, float)[..., None]
        return self.apex + u * (self.loop.position(v) - self.apex)

    def d_u(self, u, v):
        return self.loop.position(np.broadcast_to(v, np.broadcast(u, v).shape)) - self.apex

    def d_v(self, u, v):
        u = np.asarray(u, float)[..., None]
        return u * self.loop.tangent(v)

    def boundary(self):
        return self.loop

    def describe(self):
        return {"kind": "cone", "apex": self.apex.tolist(), "loop": self.loop.describe()}


def cone_surface(loop, apex=None):
    """Spanning cone over ``loop``; ``apex`` defaults to the loop centroid."""
    if apex is None:
        apex = loop.centroid()
    return ConeSurface(loop, apex)
