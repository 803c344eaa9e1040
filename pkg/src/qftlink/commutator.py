"""Smeared commutators, two-point functions and the loop-pair experiments.

Two evaluation routes are provided.

``shell``
    Generic: Fourier transforms of both smearings contracted with the
    kernel and integrated over the mass shell (:func:`smeared_field_commutator`).
``position``
    For loop pairs smeared with gaussian mixtures: the mass-shell integral is
    done in closed form, leaving a line-line integral (``c1``) and a
    line-surface integral against the gradient of the smeared commutator
    function (``c2``).  Both integrands are concentrated near the light cone
    so panel pairs far from it are skipped.
"""

from dataclasses import dataclass, field

import numpy as np

from ._kernels import MassiveKernel, massless_gradient, massless_value
from ._quadrature import panel_rule
from ._tensors import EPS_MIXED, lower
from .exceptions import (
    PreconditionError,
    SeparationMarginError,
    SurfaceDependenceError,
    UnresolvedGridError,
)
from .geometry import (
    cone_surface,
    is_spacelike_separated,
    is_spatial,
    light_cone_gap,
    make_hopf_pair,
    make_torus_link_pair,
    spacelike_margin,
    time_tilted,
)
from .smearing import (
    Conjugate,
    CurlTwoForm,
    DAlembertMollifier,
    LoopSmearing,
    Smearing,
    SurfaceSmearing,
    blob_two_form,
    gaussian,
)
from .spectral import (
    Atom,
    FieldPairModel,
    ShellGrid,
    TensorStructure,
    contract_q,
    contract_q_potential,
    contraction_bound,
    mass_shell_reduce,
    potential_bound,
)


@dataclass
class CommutatorReport:
    """Value of one commutator (or derived quantity) with its error estimate."""

    value: complex
    error_estimate: float
    grid: dict
    inputs: dict
    route: str = "shell"
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        self.value = complex(self.value)
        self.error_estimate = float(abs(self.error_estimate))
        if not np.isfinite(self.value):
            raise UnresolvedGridError("commutator value is not finite")

    @property
    def real(self):
        return self.value.real

    @property
    def imag(self):
        return self.value.imag

    def ratio_to(self, z):
        """``value / (i Z)`` for a reference :class:`CommutatorReport` ``z``."""
        return self.value / (1j * z.value)

    def __abs__(self):
        return abs(self.value)


class Potential(Smearing):
    """Marks a co-closed one-form used through its intrinsic potential.

    In the first slot of :func:`smeared_field_commutator` it stands for any
    two-form ``f`` with ``delta f = h``.
    """

    rank = 1

    def __init__(self, h):
        self.h = h

    def __call__(self, x):
        return self.h(x)

    def fourier(self, p):
        return self.h.fourier(p)

    def describe(self):
        return {"kind": "potential", "of": self.h.describe()}


def _describe(obj):
    d = getattr(obj, "describe", None)
    return d() if callable(d) else repr(obj)


# --------------------------------------------------------------------------
# shell route


def smeared_field_commutator(model, f, g, grid, rtol=1e-5, atol_rel=1e-8, check=True):
    """Vacuum commutator ``<[F(f), G(g)]>`` of two smeared field strengths.

    Parameters
    ----------
    model : FieldPairModel
    f, g : Smearing
        Two-form smearings; ``f`` may be a :class:`Potential`.
    grid : ShellGrid
    rtol, atol_rel : float
        Resolution threshold: the refinement difference must not exceed
        ``max(rtol * |value|, atol_rel * scale)`` where ``scale`` integrates
        a cancellation-free bound of the integrand.

    Raises
    ------
    UnresolvedGridError
        When the two refinement levels disagree beyond the threshold.
    """
    total = 0.0
    err = 0.0
    scale = 0.0
    potential = isinstance(f, Potential)
    if not potential and f.rank != 2 or g.rank != 2:
        raise PreconditionError("commutator slots need two-form smearings")
    for m, weight, ts in model.atoms():
        if potential:
            def integrand(p, ts=ts):
                a, b = f.fourier(-p), g.fourier(p)
                return contract_q_potential(p, ts, a, b), potential_bound(p, ts, a, b)
        else:
            def integrand(p, ts=ts):
                a, b = f.fourier(-p), g.fourier(p)
                return contract_q(p, ts, a, b), contraction_bound(p, ts, a, b)
        res = mass_shell_reduce(integrand, m, grid)
        total += weight * res.value
        err += abs(weight) * res.error
        scale += abs(weight) * res.scale
    if check and err > max(rtol * abs(total), atol_rel * scale):
        raise UnresolvedGridError(
            f"refinement changed the commutator by {err:.3e} (value {abs(total):.3e})")
    return CommutatorReport(total, err, grid.refined().describe(),
                            {"model": model.describe(), "f": _describe(f), "g": _describe(g)},
                            "shell", {"scale": scale})


def two_point_function(model, f, g, grid, rtol=1e-5, atol_rel=1e-8, check=True):
    """Positive-frequency pairing ``<F(f) G(g)>`` (first slot not conjugated).

    Call with ``Conjugate(f)`` in the first slot for ``<F(f-bar) F(f)>``.
    """
    total = 0.0
    err = 0.0
    scale = 0.0
    for m, weight, ts in model.atoms():
        def integrand(p, ts=ts):
            a, b = f.fourier(-p), g.fourier(p)
            return contract_q(p, ts, a, b), contraction_bound(p, ts, a, b)
        res = mass_shell_reduce(integrand, m, grid, branch="positive")
        total += weight * res.value
        err += abs(weight) * res.error
        scale += abs(weight) * res.scale
    if check and err > max(rtol * abs(total), atol_rel * scale):
        raise UnresolvedGridError(
            f"refinement changed the two-point value by {err:.3e}")
    return CommutatorReport(total, err, grid.refined().describe(),
                            {"model": model.describe(), "f": _describe(f), "g": _describe(g)},
                            "shell-positive", {"scale": scale})


# --------------------------------------------------------------------------
# position route


@dataclass
class _Elements:
    x: np.ndarray        # (P, n, 4) node positions
    weight: np.ndarray   # (P, n, 4) or (P, n, 4, 4) weighted tangents / bivectors
    center: np.ndarray   # (P, 4)
    rad_t: np.ndarray    # (P,)
    rad_s: np.ndarray    # (P,)


def _bounds(x):
    center = x.mean(axis=1)
    d = x - center[:, None, :]
    rad_t = np.abs(d[..., 0]).max(axis=1)
    rad_s = np.sqrt(np.sum(d[..., 1:] ** 2, axis=-1)).max(axis=1)
    return center, 1.1 * rad_t, 1.1 * rad_s


def _loop_elements(loop, h, order=8):
    length = loop.arc_length(4096)
    panels = max(8, int(np.ceil(length / h)))
    u, w = panel_rule(panels, order, breakpoints=loop.breakpoints)
    x = loop.position(u).reshape(-1, order, 4)
    wt = (w[:, None] * loop.tangent(u)).reshape(-1, order, 4)
    return _Elements(x, wt, *_bounds(x))


def _cone_elements(loop, apex, h, order=8):
    apex = np.asarray(apex, dtype=float)
    pts = loop.samples(1024)
    reach = float(np.max(np.sqrt(np.sum((pts - apex) ** 2, axis=-1))))
    nu = max(1, int(np.ceil(reach / h)))
    nv = max(8, int(np.ceil(loop.arc_length(4096) / h)))
    u, wu = panel_rule(nu, order)
    v, wv = panel_rule(nv, order, breakpoints=loop.breakpoints)
    nu, nv = len(u) // order, len(v) // order
    d = loop.position(v) - apex                      # (V, 4)
    tv = loop.tangent(v)
    wedge = d[:, :, None] * tv[:, None, :] - d[:, None, :] * tv[:, :, None]
    bv = np.einsum("turs,vrs->vtu", EPS_MIXED, wedge)  # eps^{tu}_{rs} sigma^{rs} / u
    x = apex + u[:, None, None] * d[None]            # (U, V, 4)
    wgt = (wu * u)[:, None, None, None] * (wv[:, None, None] * bv)[None]
    x = x.reshape(nu, order, nv, order, 4).transpose(0, 2, 1, 3, 4).reshape(-1, order * order, 4)
    wgt = wgt.reshape(nu, order, nv, order, 4, 4).transpose(0, 2, 1, 3, 4, 5)
    wgt = wgt.reshape(-1, order * order, 4, 4)
    return _Elements(x, wgt, *_bounds(x))


def _survivors(e1, e2, reach, causal_only):
    """Panel pairs whose separation can come within ``reach`` of the light cone."""
    dc = e2.center[None, :, :] - e1.center[:, None, :]
    tc = np.abs(dc[..., 0])
    rc = np.sqrt(np.sum(dc[..., 1:] ** 2, axis=-1))
    dt = e1.rad_t[:, None] + e2.rad_t[None, :]
    dr = e1.rad_s[:, None] + e2.rad_s[None, :]
    t_lo = np.maximum(tc - dt, 0.0)
    t_hi = tc + dt
    r_lo = np.maximum(rc - dr, 0.0)
    r_hi = rc + dr
    spacelike_gap = r_lo - t_hi
    if causal_only:
        keep = spacelike_gap <= reach
    else:
        gap = np.maximum(spacelike_gap, t_lo - r_hi)
        keep = gap <= reach
    return np.nonzero(keep)


def _pair_sum(e1, e2, kernel, combine, reach, causal_only=False, budget=2_000_000):
    i_idx, j_idx = _survivors(e1, e2, reach, causal_only)
    if len(i_idx) == 0:
        return 0.0, 0, 0.0
    n1 = e1.x.shape[1]
    n2 = e2.x.shape[1]
    chunk = max(1, budget // (n1 * n2))
    total = 0.0
    mag = 0.0
    for start in range(0, len(i_idx), chunk):
        ii = i_idx[start:start + chunk]
        jj = j_idx[start:start + chunk]
        d = e2.x[jj][:, None, :, :] - e1.x[ii][:, :, None, :]
        terms = combine(kernel(d), e1.weight[ii], e2.weight[jj])
        total += terms.sum()
        mag += np.abs(terms).sum()
    return total, len(i_idx), mag


def _c1_combine(kv, w1, w2):
    # sum_ij (w1_i . w2_j) D_ij with the Minkowski product
    dots = np.einsum("pia,pja->pij", lower(w1), w2)
    return kv * dots


def _c2_combine(grad, w1, wb):
    # sum_ij d_tau D_ij  B_j^{tau ups} (w1_i)_ups
    m = np.einsum("pjtu,piu->pijt", wb, lower(w1))
    return np.einsum("pijt,pijt->pij", grad, m)


def _gauss_pairs(s1, s2):
    t1 = s1.gaussian_terms()
    t2 = s2.gaussian_terms()
    if t1 is None or t2 is None:
        return None
    return [(a * b, wa**2 + wb**2) for a, wa in t1 for b, wb in t2]


def _position_route(model, s1, loop1, s2, loop2, apex, panel_scale, level, cut):
    pairs = _gauss_pairs(s1, s2)
    a_min = min(A for _, A in pairs)
    a_max = max(A for _, A in pairs)
    h = panel_scale * np.sqrt(2 * a_min) / 2**level
    reach = cut * np.sqrt(a_max)
    e1 = _loop_elements(loop1, h)
    need_c1 = any(ts.c1 for _, _, ts in model.atoms())
    need_c2 = any(ts.c2 for _, _, ts in model.atoms())
    if not (need_c1 or need_c2):
        return 0j, 0, 0.0
    e2 = _loop_elements(loop2, h) if need_c1 else None
    es = _cone_elements(loop2, apex, h) if need_c2 else None
    other = e2 if e2 is not None else es
    extent = float(np.ptp(np.concatenate([e1.center, other.center]), axis=0).max())
    total = 0.0
    counted = 0
    scale = 0.0
    for m, weight, ts in model.atoms():
        if ts.c1:
            if m == 0:
                def kern(d):
                    return sum(c * massless_value(d, A) for c, A in pairs)
                causal = False
            else:
                kernels = [(c, MassiveKernel(m, A, 2 * extent + 1.0, level=level))
                           for c, A in pairs]

                def kern(d, kernels=kernels):
                    return sum(c * k.value(d) for c, k in kernels)
                causal = True
            val, n, mag = _pair_sum(e1, e2, kern, _c1_combine, reach, causal)
            total += weight * ts.c1 * val
            scale += abs(weight * ts.c1) * mag
            counted += n
        if ts.c2:
            def grad(d):
                return sum(c * massless_gradient(d, A) for c, A in pairs)
            val, n, mag = _pair_sum(e1, es, grad, _c2_combine, reach)
            total += weight * ts.c2 * val
            scale += abs(weight * ts.c2) * mag
            counted += n
    return complex(total), counted, scale


def _natural_scale(model):
    # magnitude of a unit linking response; sets the roundoff floor
    return 16 * np.pi**3 * sum(abs(w) * (abs(ts.c1) + abs(ts.c2)) for _, w, ts in model.atoms())


def _offset_apex(loop):
    pts = loop.samples(512)
    c = pts.mean(axis=0)
    size = float(np.max(np.sqrt(np.sum((pts - c) ** 2, axis=-1))))
    direction = np.array([0.0, 0.37, 0.52, 0.77])
    return c + 0.35 * size * direction / np.linalg.norm(direction)


def _check_pair(s1, loop1, s2, loop2, samples):
    if not is_spatial(loop1, samples) or not is_spatial(loop2, samples):
        raise PreconditionError("intrinsic commutator needs spatial loops")
    if not is_spacelike_separated(loop1, loop2, samples):
        raise PreconditionError("loops are not spacelike separated")
    margin = spacelike_margin(loop1, loop2, samples)
    need = max(s1.effective_radius, s2.effective_radius)
    if margin <= need:
        raise SeparationMarginError(
            f"spacelike margin {margin:.3g} does not exceed smearing radius {need:.3g}")
    return margin


def intrinsic_commutator(model, s1, loop1, s2, loop2, grid=None, route="auto",
                         apexes=None, rtol=1e-5, atol_rel=1e-8, panel_scale=1.0,
                         cut=10.0, samples=256, check_margin=True, surface_tol=1e-4,
                         surface_panels=(1, 64)):
    """Commutator ``<[A(l_{s1,loop1}), B(l_{s2,loop2})]>`` of intrinsic potentials.

    The potentials are realized through cone co-primitives.  The value is
    computed for two apex positions of the second cone and compared.

    Parameters
    ----------
    model : FieldPairModel
    s1, s2 : Mollifier
    loop1, loop2 : ParamLoop
    grid : ShellGrid, optional
        Needed by the shell route.
    route : {"auto", "position", "shell"}
        ``"auto"`` uses the position route whenever both mollifiers are
        gaussian mixtures.
    apexes : pair of array_like, optional
        Apexes of the second cone; default centroid and an offset point.
    surface_tol : float
        Allowed relative apex dependence beyond the error estimates.
    surface_panels : (int, int)
        Cone panels for the shell route (the radial count is unused there,
        cone transforms are exact in the radial direction).

    Raises
    ------
    SeparationMarginError, SurfaceDependenceError, UnresolvedGridError
    """
    margin = _check_pair(s1, loop1, s2, loop2, samples) if check_margin else None
    if apexes is None:
        apexes = (loop2.centroid(), _offset_apex(loop2))
    gaussian_ok = _gauss_pairs(s1, s2) is not None
    if route == "auto":
        route = "position" if gaussian_ok else "shell"
    if route == "position" and not gaussian_ok:
        raise PreconditionError("position route needs gaussian-mixture mollifiers")
    if route == "shell" and grid is None:
        raise PreconditionError("shell route needs a ShellGrid")

    values = []
    errors = []
    scales = []
    details = {}
    if route == "position":
        for apex in apexes:
            coarse, _, _ = _position_route(model, s1, loop1, s2, loop2, apex,
                                           panel_scale, 0, cut)
            fine, n, scale = _position_route(model, s1, loop1, s2, loop2, apex,
                                             panel_scale, 1, cut)
            values.append(fine)
            errors.append(abs(fine - coarse))
            scales.append(scale)
        details["panel_pairs"] = n
        grid_desc = {"panel_scale": panel_scale, "cut": cut, "levels": 2}
    else:
        f = SurfaceSmearing(s1, cone_surface(loop1), panels=surface_panels)
        for apex in apexes:
            g = SurfaceSmearing(s2, cone_surface(loop2, apex), panels=surface_panels)
            rep = smeared_field_commutator(model, f, g, grid, rtol, atol_rel, check=False)
            values.append(rep.value)
            errors.append(rep.error_estimate)
            scales.append(rep.details["scale"])
        grid_desc = grid.refined().describe()
    value = values[0]
    err = errors[0]
    floor = atol_rel * max(max(scales), _natural_scale(model))
    spread = max(abs(v - value) for v in values)
    allowed = max(errors) + sum(errors) + surface_tol * abs(value) + floor
    if spread > allowed:
        raise SurfaceDependenceError(
            f"apex choice changed the commutator by {spread:.3e} (allowed {allowed:.3e})")
    if max(errors) > max(rtol * abs(value), floor):
        raise UnresolvedGridError(
            f"refinement changed the commutator by {max(errors):.3e} (value {abs(value):.3e})")
    details["scale"] = max(scales)
    details.update({"apex_values": values, "apex_spread": spread, "margin": margin})
    inputs = {"model": model.describe(), "s1": _describe(s1), "s2": _describe(s2),
              "loop1": loop1.describe(), "loop2": loop2.describe(),
              "apexes": [np.asarray(a).tolist() for a in apexes]}
    return CommutatorReport(value, err, grid_desc, inputs, route, details)


# --------------------------------------------------------------------------
# experiments


def reference_width(loop1, loop2):
    """Default gaussian width: one twelfth of the light-cone gap of the loops."""
    return light_cone_gap(loop1, loop2) / 12.0


def extract_Z(model, width=None, route="auto", grid=None, **kwargs):
    """``Z = -i <[A(l_{s,a1}), B(l_{s,a2})]>`` on the reference Hopf pair.

    The reference circles have unit radius, lie in orthogonal time-zero
    planes and have linking number +1.
    """
    a1, a2 = make_hopf_pair()
    if width is None:
        width = reference_width(a1, a2)
    s = gaussian(width)
    rep = intrinsic_commutator(model, s, a1, s, a2, grid=grid, route=route, **kwargs)
    return CommutatorReport(-1j * rep.value, rep.error_estimate, rep.grid,
                            {**rep.inputs, "reference": "hopf", "width": width},
                            rep.route, {**rep.details, "commutator": rep.value})


@dataclass
class RatioRow:
    parameter: float
    value: complex
    ratio: complex
    error: float
    expected: float

    @property
    def deviation(self):
        return abs(self.ratio - self.expected)


def _ratio(rep, z):
    ratio = rep.value / (1j * z.value)
    err = rep.error_estimate / abs(z.value) + abs(ratio) * z.error_estimate / abs(z.value)
    return ratio, err


def verify_linking_proportionality(model, lambdas, z=None, width=None, pair_factory=None,
                                   **kwargs):
    """Ratios ``<[A(l1), B(l2)]> / (i Z)`` over torus pairs of linking number ``lambda``.

    Returns
    -------
    list of RatioRow
        One row per ``lambda``; the expected ratio is ``lambda``.
    """
    if z is None:
        z = extract_Z(model, **kwargs)
    factory = pair_factory or make_torus_link_pair
    rows = []
    for lam in lambdas:
        a, b = factory(lam)
        w = width or reference_width(a, b)
        s = gaussian(w)
        rep = intrinsic_commutator(model, s, a, s, b, **kwargs)
        ratio, err = _ratio(rep, z)
        rows.append(RatioRow(lam, rep.value, ratio, err, float(lam)))
    return rows


def normalization_scaling_check(model, kappas=(0.0, 1.0, 3.0), width=None, pair=None,
                                width_factors=(0.5,), **kwargs):
    """Compare unnormalized first mollifiers against ``kappa`` times the reference.

    ``kappa = 0`` uses the mean-zero difference of two gaussians; the rows
    ``width_factors`` rescale the first width at ``kappa = 1``.

    Returns
    -------
    list of dict
        Keys ``label``, ``kappa``, ``value``, ``expected``, ``error``.
    """
    a, b = pair or make_hopf_pair()
    w = width or reference_width(a, b)
    s_hat = gaussian(w)
    ref = intrinsic_commutator(model, s_hat, a, s_hat, b, **kwargs)
    rows = []
    cases = []
    for k in kappas:
        if k == 0:
            cases.append(("kappa=0", 0.0, gaussian(w) - gaussian(w / 2)))
        else:
            cases.append((f"kappa={k:g}", float(k), gaussian(w, weight=k)))
    for fac in width_factors:
        cases.append((f"width*{fac:g}", 1.0, gaussian(w * fac)))
    for label, k, s1 in cases:
        rep = intrinsic_commutator(model, s1, a, s_hat, b, **kwargs)
        rows.append({"label": label, "kappa": k, "value": rep.value,
                     "expected": k * ref.value,
                     "error": rep.error_estimate + abs(k) * ref.error_estimate})
    return ref, rows


def tilted_hopf_pair(slope=0.15):
    """Reference Hopf pair with both circles tilted in time.

    The tilt directions are generic so that no spatial reflection maps the
    configuration to itself with one loop reversed.
    """
    a1, a2 = make_hopf_pair()
    return (time_tilted(a1, slope, (0.6, 0.8, 0.0)),
            time_tilted(a2, 0.7 * slope, (0.6, 0.0, 0.8)))


def mass_gap_sweep(masses, pair=None, width=None, c2=1.0, c1=1.0, mixture=None, **kwargs):
    """Commutators for single-atom models over ``masses``.

    ``m = 0`` uses the massless ``(c1=0, c2)`` model; ``m > 0`` a ``c1``-type
    atom.  With ``mixture=(m_lo, m_hi)`` the massless model plus a ``c1``
    continuum on that interval is also evaluated.

    Returns
    -------
    rows : list of (mass, CommutatorReport)
    mixed : tuple or None
        ``(mixed_report, massless_report)``.
    """
    a, b = pair or tilted_hopf_pair()
    w = width or reference_width(a, b)
    s = gaussian(w)
    rows = []
    massless_rep = None
    for m in masses:
        if m == 0:
            model = FieldPairModel.massless(0.0, c2)
        else:
            model = FieldPairModel.single(m, c1, 0.0)
        rep = intrinsic_commutator(model, s, a, s, b, **kwargs)
        if m == 0:
            massless_rep = rep
        rows.append((m, rep))
    mixed = None
    if mixture is not None:
        from .spectral import Continuum
        base = FieldPairModel.massless(0.0, c2)
        mix = base + FieldPairModel([(Continuum(*mixture, nodes=4), TensorStructure(c1, 0.0))])
        mixed_rep = intrinsic_commutator(mix, s, a, s, b, **kwargs)
        if massless_rep is None:
            massless_rep = intrinsic_commutator(base, s, a, s, b, **kwargs)
        mixed = (mixed_rep, massless_rep)
    return rows, mixed


def free_maxwell(weight=1.0):
    """Two-point data ``weight * <F0 F0>`` of the free Maxwell field (positive)."""
    return FieldPairModel([(Atom(0.0, weight), TensorStructure(-1.0, 0.0))])


def maxwell_dual_cross(c=1.0):
    """Two-point data ``c * <F0 *F0>``."""
    return FieldPairModel([(Atom(0.0, 1.0), TensorStructure(0.0, -0.5 * c))])


def random_blob_two_form(rng, width=0.5, spread=0.5, complex_coeffs=True):
    c = rng.normal(size=(4, 4))
    if complex_coeffs:
        c = c + 1j * rng.normal(size=(4, 4))
    center = rng.uniform(-spread, spread, size=4)
    return blob_two_form(gaussian(width), c, center)


def positivity_trial(model_f, model_g, cross_c, grid, seed, index, width=0.5, spread=0.5):
    """One Cauchy-Schwarz trial on random complex blob smearings.

    The smearings depend only on ``(seed, index)``.

    Returns
    -------
    (ff, gg, fg) : complex
        ``<F(f-bar)F(f)>``, ``<G(g-bar)G(g)>`` and the cross pairing.
    """
    rng = np.random.default_rng([seed, index])
    f = random_blob_two_form(rng, width, spread)
    g = random_blob_two_form(rng, width, spread)
    ff = two_point_function(model_f, Conjugate(f), f, grid).value
    gg = two_point_function(model_g, Conjugate(g), g, grid).value
    fg = two_point_function(maxwell_dual_cross(cross_c), Conjugate(f), g, grid).value
    return ff, gg, fg


def positivity_margin(ff, gg, fg, tol=1e-9):
    """Relative Cauchy-Schwarz margin ``1 - |fg|^2 / (ff gg)``; ``-inf`` if a norm is negative."""
    if ff.real < -tol * abs(ff) or gg.real < -tol * abs(gg):
        return -np.inf
    denom = ff.real * gg.real
    if denom <= 0:
        return 0.0 if abs(fg) == 0 else -np.inf
    return 1.0 - abs(fg) ** 2 / denom


def positivity_grid(width=0.5, spread=0.5):
    return ShellGrid.for_smearing(width, 4 * spread + 2)


def check_wightman_positivity(model_f, model_g, cross_c, trials=100, grid=None, seed=0,
                              width=0.5, spread=0.5, tol=1e-9):
    """Cauchy-Schwarz check ``|<F(f-bar)G(g)>|^2 <= <F(f-bar)F(f)> <G(g-bar)G(g)>``.

    The cross pairing is ``cross_c * <F0 *F0>``; the smearings are random
    gaussian blobs with complex coefficients.

    Returns
    -------
    ok : bool
    worst : float
        Smallest relative margin ``1 - |FG|^2 / (FF GG)`` over the trials.
    """
    grid = grid or positivity_grid(width, spread)
    worst = np.inf
    for i in range(trials):
        margin = positivity_margin(
            *positivity_trial(model_f, model_g, cross_c, grid, seed, i, width, spread), tol)
        worst = min(worst, margin)
    return bool(worst >= -tol), float(worst)


def dalembert_curl_identity_check(model, h, k, grid, rtol=1e-5, atol_rel=1e-8):
    """Compare field-slot curls with potential-slot d'Alembertians.

    For co-closed loop smearings ``h`` and ``k`` with cone co-primitives
    ``f_h`` and ``f_k``:

    * slot 1: ``<[F(dh), G(f_k)]>`` against ``<[A(2 box h), G(f_k)]>``;
    * slot 2: ``<[F(f_h), G(dk)]>`` against ``<[F(f_h), B(2 box k)]>``.

    Returns
    -------
    dict
        ``slot1`` and ``slot2`` entries with both reports, their difference,
        the tolerance and a pass flag.
    """
    def boxed(ls):
        return LoopSmearing(DAlembertMollifier(ls.mollifier), ls.loop, 2.0 * ls.scale,
                            ls.panels)

    def surface(ls, mollifier=None, scale=None):
        return SurfaceSmearing(mollifier or ls.mollifier, cone_surface(ls.loop),
                               ls.scale if scale is None else scale,
                               panels=(1, max(8, ls.panels)))

    f_h = surface(h)
    f_k = surface(k)

    def run(f, g):
        return smeared_field_commutator(model, f, g, grid, check=False)

    out = {}
    pairs = {
        "slot1": (run(CurlTwoForm(h), f_k), run(Potential(boxed(h)), f_k)),
        "slot2": (run(f_h, CurlTwoForm(k)),
                  run(f_h, surface(k, DAlembertMollifier(k.mollifier), 2.0 * k.scale))),
    }
    for name, (field_rep, pot_rep) in pairs.items():
        diff = abs(field_rep.value - pot_rep.value)
        scale = max(field_rep.details["scale"], pot_rep.details["scale"])
        size = max(abs(field_rep.value), abs(pot_rep.value))
        tol = (field_rep.error_estimate + pot_rep.error_estimate
               + max(rtol * size, atol_rel * scale))
        out[name] = {"field": field_rep, "potential": pot_rep, "difference": diff,
                     "tolerance": tol, "passed": bool(diff <= tol)}
    return out
