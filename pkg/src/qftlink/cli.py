"""Command-line front end: YAML scene files in, reports and CSV tables out.

Usage::

    qftlink run scene.yaml [--experiment NAME] [--refine N] [--out DIR]
                           [--workers N] [--seed S]
    qftlink validate scene.yaml

Exit codes: 0 all checks passed, 1 a tolerance check failed, 2 the scene
could not be parsed or validated, 3 a numerical failure (unresolved grid,
surface dependence, non-decaying integrand).

The scene schema is documented in ``docs/scene-format.md``.
"""

import argparse
import hashlib
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from . import commutator as cm
from .exceptions import (
    NonDecayingIntegrandError,
    PreconditionError,
    SceneError,
    SurfaceDependenceError,
    UnresolvedGridError,
)
from .geometry import (
    FourierLoop,
    make_circle,
    make_hopf_pair,
    make_polyline,
    make_torus_link_pair,
    polyline_from_loop,
    time_tilted,
)
from .linking import causal_linking_number, crossing_sign_linking, gauss_linking
from .smearing import LoopSmearing, bump, gaussian
from .spectral import Atom, Continuum, FieldPairModel, ShellGrid, TensorStructure

EXPERIMENTS = ("link", "commute", "sweep-linking", "sweep-mass", "invariance",
               "positivity", "identities")
LOOP_KINDS = ("circle", "fourier", "polyline", "torus_pair", "hopf", "tilted", "translated",
              "scaled")
NUMERIC_ERRORS = (UnresolvedGridError, SurfaceDependenceError, NonDecayingIntegrandError)

DEFAULT_TOLERANCES = {"ratio": 0.01, "vanish": 1e-3, "invariance": 0.005, "positivity": 1e-9,
                      "integer": 1e-3, "mixture": 0.01}


# --------------------------------------------------------------------------
# validation


def _is_number(x):
    return isinstance(x, (int, float)) and not isinstance(x, bool) and np.isfinite(x)


def _vector(x, n):
    return isinstance(x, (list, tuple)) and len(x) == n and all(_is_number(v) for v in x)


def _check_loop(name, spec, names, diag):
    where = f"loops.{name}"
    if not isinstance(spec, dict) or "kind" not in spec:
        diag.append(f"{where}: needs a mapping with a 'kind'")
        return
    kind = spec["kind"]
    if kind not in LOOP_KINDS:
        diag.append(f"{where}.kind: unknown loop kind {kind!r}")
        return
    if kind == "circle":
        r = spec.get("radius", 1.0)
        if not _is_number(r) or r <= 0:
            diag.append(f"{where}.radius: must be a positive number")
        for key, n in (("center", 4), ("e1", 3), ("e2", 3)):
            if key in spec and not _vector(spec[key], n):
                diag.append(f"{where}.{key}: must be a list of {n} numbers")
    elif kind == "fourier":
        for key in ("constant", "cos", "sin"):
            if key not in spec:
                diag.append(f"{where}.{key}: missing")
        if "constant" in spec and not _vector(spec["constant"], 4):
            diag.append(f"{where}.constant: must be a list of 4 numbers")
        for key in ("cos", "sin"):
            rows = spec.get(key, [])
            if not isinstance(rows, list) or not all(_vector(r, 4) for r in rows):
                diag.append(f"{where}.{key}: must be a list of 4-vectors")
        if all(k in spec for k in ("cos", "sin")) and not (spec["cos"] or spec["sin"]):
            diag.append(f"{where}: needs at least one harmonic")
    elif kind == "polyline":
        v = spec.get("vertices")
        if not isinstance(v, list) or len(v) < 3 or not all(_vector(p, 4) for p in v):
            diag.append(f"{where}.vertices: need >= 3 four-vectors")
    elif kind in ("torus_pair", "hopf"):
        if spec.get("member") not in (0, 1):
            diag.append(f"{where}.member: must be 0 or 1")
        if kind == "torus_pair" and not isinstance(spec.get("lam"), int):
            diag.append(f"{where}.lam: must be an integer")
        if kind == "hopf" and "radius" in spec and not (
                _is_number(spec["radius"]) and spec["radius"] > 0):
            diag.append(f"{where}.radius: must be a positive number")
    else:
        of = spec.get("of")
        if of not in names:
            diag.append(f"{where}.of: unknown loop {of!r}")
        if kind == "tilted":
            s = spec.get("slope")
            if not _is_number(s) or abs(s) >= 1:
                diag.append(f"{where}.slope: must be a number with |slope| < 1")
            if "direction" in spec and not _vector(spec["direction"], 3):
                diag.append(f"{where}.direction: must be a list of 3 numbers")
        elif kind == "translated":
            if not _vector(spec.get("by"), 4):
                diag.append(f"{where}.by: must be a list of 4 numbers")
        elif kind == "scaled":
            f = spec.get("factor")
            if not _is_number(f) or f <= 0:
                diag.append(f"{where}.factor: must be a positive number")


def _check_mollifier(name, spec, diag):
    where = f"mollifiers.{name}"
    if not isinstance(spec, dict):
        diag.append(f"{where}: needs a mapping")
        return
    kind = spec.get("kind", "gaussian")
    if kind not in ("gaussian", "bump", "mix"):
        diag.append(f"{where}.kind: unknown mollifier kind {kind!r}")
        return
    if kind == "mix":
        terms = spec.get("terms")
        if not isinstance(terms, list) or not terms:
            diag.append(f"{where}.terms: need a nonempty list")
            return
        for i, t in enumerate(terms):
            _check_mollifier(f"{name}.terms[{i}]", t, diag)
            if isinstance(t, dict) and t.get("kind") == "mix":
                diag.append(f"{where}.terms[{i}]: nested mixtures are not supported")
        return
    key = "width" if kind == "gaussian" else "radius"
    val = spec.get(key)
    if not (val == "auto" or (_is_number(val) and val > 0)):
        diag.append(f"{where}.{key}: must be a positive number or 'auto'")
    if "weight" in spec and not _is_number(spec["weight"]):
        diag.append(f"{where}.weight: must be a number")


def _check_model(spec, diag):
    if not isinstance(spec, dict) or not isinstance(spec.get("components"), list) \
            or not spec["components"]:
        diag.append("model.components: need a nonempty list")
        return
    for i, comp in enumerate(spec["components"]):
        where = f"model.components[{i}]"
        if not isinstance(comp, dict):
            diag.append(f"{where}: needs a mapping")
            continue
        for key in ("c1", "c2"):
            if key in comp and not _is_number(comp[key]):
                diag.append(f"{where}.{key}: must be a number")
        if "mass" in comp:
            m = comp["mass"]
            if not _is_number(m) or m < 0:
                diag.append(f"{where}.mass: must be a number >= 0")
            elif m > 0 and comp.get("c2", 0):
                diag.append(f"{where}: c2 is only allowed on massless components")
        elif "continuum" in comp:
            c = comp["continuum"]
            if not _vector(c, 2) or not 0 <= c[0] < c[1]:
                diag.append(f"{where}.continuum: must be [m_lo, m_hi] with 0 <= m_lo < m_hi")
            elif comp.get("c2", 0):
                diag.append(f"{where}: c2 is only allowed on massless components")
        else:
            diag.append(f"{where}: needs 'mass' or 'continuum'")
        if "weight" in comp and not _is_number(comp["weight"]):
            diag.append(f"{where}.weight: must be a number")


_REQUIRED = {
    "link": ("pair",),
    "commute": ("pair", "mollifiers", "model"),
    "sweep-linking": ("lambdas", "model"),
    "sweep-mass": ("masses",),
    "invariance": ("deformations", "model"),
    "positivity": ("trials",),
    "identities": ("pair", "mollifiers", "model"),
}


def validate_scene(data, experiment=None):
    """Schema diagnostics for a parsed scene; an empty list means valid."""
    diag = []
    if not isinstance(data, dict):
        return ["scene: top level must be a mapping"]
    exp = experiment or data.get("experiment")
    if exp not in EXPERIMENTS:
        diag.append(f"experiment: must be one of {', '.join(EXPERIMENTS)}")
        return diag
    loops = data.get("loops", {}) or {}
    molls = data.get("mollifiers", {}) or {}
    if not isinstance(loops, dict):
        diag.append("loops: must be a mapping of named loops")
        loops = {}
    if not isinstance(molls, dict):
        diag.append("mollifiers: must be a mapping of named mollifiers")
        molls = {}
    for name, spec in loops.items():
        _check_loop(name, spec, loops, diag)
    for name, spec in molls.items():
        _check_mollifier(name, spec, diag)
    if "model" in data:
        _check_model(data["model"], diag)
    params = data.get("parameters", {}) or {}
    for key in _REQUIRED[exp]:
        if key in ("model",):
            if "model" not in data:
                diag.append("model: required for this experiment")
        elif key == "mollifiers":
            ref = params.get("mollifiers")
            if not isinstance(ref, list) or len(ref) != 2:
                diag.append("parameters.mollifiers: need two mollifier names")
            else:
                seen = set()
                for i, m in enumerate(ref):
                    if not isinstance(m, str):
                        diag.append(f"parameters.mollifiers[{i}]: must be a mollifier name")
                    elif m not in molls and m not in seen:
                        seen.add(m)
                        diag.append(f"parameters.mollifiers[{i}]: unknown mollifier {m!r}")
        elif key == "pair":
            ref = params.get("pair")
            if not isinstance(ref, list) or len(ref) != 2:
                diag.append("parameters.pair: need two loop names")
            else:
                for i, name in enumerate(ref):
                    if name not in loops:
                        diag.append(f"parameters.pair[{i}]: unknown loop {name!r}")
        elif key not in params:
            diag.append(f"parameters.{key}: required for experiment {exp}")
    if exp == "sweep-linking" and "lambdas" in params:
        if not isinstance(params["lambdas"], list) or not all(
                isinstance(v, int) for v in params["lambdas"]):
            diag.append("parameters.lambdas: must be a list of integers")
    if exp == "sweep-mass" and "masses" in params:
        if not isinstance(params["masses"], list) or not all(
                _is_number(v) and v >= 0 for v in params["masses"]):
            diag.append("parameters.masses: must be a list of numbers >= 0")
    if exp == "positivity" and "trials" in params:
        if not isinstance(params["trials"], int) or params["trials"] < 1:
            diag.append("parameters.trials: must be a positive integer")
    if exp == "invariance" and "deformations" in params:
        defs = params["deformations"]
        if not isinstance(defs, list) or not defs:
            diag.append("parameters.deformations: need a nonempty list")
        else:
            for i, d in enumerate(defs):
                if not isinstance(d, dict) or not ({"radius", "shift", "tilt"} & set(d)):
                    diag.append(f"parameters.deformations[{i}]: need radius, shift or tilt")
    tol = data.get("tolerances", {}) or {}
    if not isinstance(tol, dict):
        diag.append("tolerances: must be a mapping")
    else:
        for k, v in tol.items():
            if k not in DEFAULT_TOLERANCES:
                diag.append(f"tolerances.{k}: unknown tolerance")
            elif not _is_number(v) or v < 0:
                diag.append(f"tolerances.{k}: must be a number >= 0")
    if "grid" in data:
        g = data["grid"]
        if not isinstance(g, dict):
            diag.append("grid: must be a mapping")
        else:
            for k in ("radial_nodes", "polar_nodes", "azimuthal_nodes"):
                if k in g and (not isinstance(g[k], int) or g[k] < 4):
                    diag.append(f"grid.{k}: must be an integer >= 4")
    return diag


# --------------------------------------------------------------------------
# construction


def build_loops(specs):
    """Resolve named loop specs (references allowed) into loop objects."""
    built = {}

    def get(name):
        if name in built:
            return built[name]
        spec = specs[name]
        kind = spec["kind"]
        if kind == "circle":
            loop = make_circle(spec.get("radius", 1.0), spec.get("center", (0, 0, 0, 0)),
                               spec.get("e1", (1, 0, 0)), spec.get("e2", (0, 1, 0)))
        elif kind == "fourier":
            loop = FourierLoop(spec["constant"], spec["cos"], spec["sin"])
        elif kind == "polyline":
            loop = make_polyline(spec["vertices"])
        elif kind == "torus_pair":
            loop = make_torus_link_pair(spec["lam"], spec.get("major", 1.0),
                                        spec.get("minor", 0.5))[spec["member"]]
        elif kind == "hopf":
            loop = make_hopf_pair(spec.get("radius", 1.0))[spec["member"]]
        elif kind == "tilted":
            loop = time_tilted(get(spec["of"]), spec["slope"], spec.get("direction", (1, 0, 0)))
        elif kind == "translated":
            loop = get(spec["of"]).translated(spec["by"])
        else:
            base = get(spec["of"])
            c = base.centroid()
            m = np.eye(4)
            m[1:, 1:] *= spec["factor"]
            loop = base.translated(-c).transformed(m).translated(c)
        built[name] = loop
        return loop

    for name in specs:
        get(name)
    return built


def build_mollifier(spec, auto_width):
    kind = spec.get("kind", "gaussian")
    if kind == "mix":
        out = None
        for t in spec["terms"]:
            m = build_mollifier(t, auto_width)
            out = m if out is None else out + m
        return out
    weight = spec.get("weight", 1.0)
    if kind == "gaussian":
        w = spec["width"]
        return gaussian(auto_width if w == "auto" else w, weight)
    r = spec["radius"]
    return bump(auto_width if r == "auto" else r, weight)


def build_model(spec):
    comps = []
    for comp in spec["components"]:
        ts = TensorStructure(float(comp.get("c1", 0.0)), float(comp.get("c2", 0.0)))
        if "mass" in comp:
            mc = Atom(float(comp["mass"]), float(comp.get("weight", 1.0)))
        else:
            lo, hi = comp["continuum"]
            mc = Continuum(lo, hi, float(comp.get("weight", 1.0)), int(comp.get("nodes", 8)))
        comps.append((mc, ts))
    return FieldPairModel(comps)


def build_grid(spec, widths, extent, refine):
    spec = spec or {}
    if "radial_nodes" in spec:
        grid = ShellGrid(spec["radial_nodes"], spec.get("radial_scale", 4.0),
                         spec.get("polar_nodes", 16), spec.get("azimuthal_nodes", 32))
    else:
        grid = ShellGrid.for_smearing(spec.get("widths", widths), spec.get("extent", extent))
    return grid.refined(refine) if refine else grid


# --------------------------------------------------------------------------
# tasks (module level so that worker processes can run them)


@dataclass
class Row:
    parameter: str
    value: complex
    error: float


@dataclass
class Check:
    name: str
    expected: str
    measured: str
    error: float
    passed: bool


class _Context:
    def __init__(self, scene, refine, seed):
        self.scene = scene
        self.refine = refine
        self.seed = seed
        self.params = scene.get("parameters", {}) or {}
        self.loops = build_loops(scene.get("loops", {}) or {})
        self.model = build_model(scene["model"]) if "model" in scene else None
        self.route = self.params.get("route", "auto")
        self.kwargs = {"panel_scale": 2.0 ** -refine, "route": self.route}

    def pair(self):
        a, b = self.params["pair"]
        return self.loops[a], self.loops[b]

    def mollifiers(self, pair):
        specs = self.scene.get("mollifiers", {})
        auto = cm.reference_width(*pair)
        return [build_mollifier(specs[n], auto) for n in self.params["mollifiers"]]

    def grid_for(self, s1, s2, pair):
        widths = []
        for s in (s1, s2):
            terms = s.gaussian_terms()
            widths.append(min(w for _, w in terms) if terms else s.effective_radius / 4)
        pts = np.concatenate([p.samples(256) for p in pair])
        extent = float(np.ptp(pts[:, 1:], axis=0).max()) + 2 * max(s.effective_radius
                                                                 for s in (s1, s2))
        return build_grid(self.scene.get("grid"), widths, extent, self.refine)

    def intrinsic(self, model, s1, a, s2, b):
        grid = None
        if self.route == "shell" or s1.gaussian_terms() is None or s2.gaussian_terms() is None:
            grid = self.grid_for(s1, s2, (a, b))
        return cm.intrinsic_commutator(model, s1, a, s2, b, grid=grid, **self.kwargs)

    def width(self, pair):
        w = self.params.get("width", "auto")
        return cm.reference_width(*pair) if w == "auto" else float(w)


def _task(args):
    scene, refine, seed, kind, payload = args
    ctx = _Context(scene, refine, seed)
    return _TASKS[kind](ctx, payload)


def _t_z(ctx, payload):
    model = ctx.model if payload is None else build_model(payload)
    a, b = make_hopf_pair()
    s = gaussian(ctx.width((a, b)))
    rep = ctx.intrinsic(model, s, a, s, b)
    return -1j * rep.value, rep.error_estimate


def _t_torus(ctx, lam):
    a, b = make_torus_link_pair(lam)
    s = gaussian(ctx.width((a, b)))
    rep = ctx.intrinsic(ctx.model, s, a, s, b)
    return rep.value, rep.error_estimate


def _mass_pair(ctx):
    if "pair" in ctx.params:
        return ctx.pair()
    return cm.tilted_hopf_pair()


def _t_mass(ctx, m):
    a, b = _mass_pair(ctx)
    s = gaussian(ctx.width((a, b)))
    c2 = ctx.params.get("c2", 1.0)
    c1 = ctx.params.get("c1", 1.0)
    model = FieldPairModel.massless(0.0, c2) if m == 0 else FieldPairModel.single(m, c1, 0.0)
    rep = ctx.intrinsic(model, s, a, s, b)
    return rep.value, rep.error_estimate


def _t_mixture(ctx, interval):
    a, b = _mass_pair(ctx)
    s = gaussian(ctx.width((a, b)))
    c2 = ctx.params.get("c2", 1.0)
    c1 = ctx.params.get("c1", 1.0)
    model = FieldPairModel.massless(0.0, c2) + FieldPairModel(
        [(Continuum(*interval, nodes=4), TensorStructure(c1, 0.0))])
    rep = ctx.intrinsic(model, s, a, s, b)
    return rep.value, rep.error_estimate


def _deformed(loop, d):
    c = loop.centroid()
    if "radius" in d:
        m = np.eye(4)
        m[1:, 1:] *= d["radius"]
        loop = loop.translated(-c).transformed(m).translated(c)
    if "shift" in d:
        loop = loop.translated(d["shift"])
    if "tilt" in d:
        t = d["tilt"]
        loop = time_tilted(loop, t["slope"], t.get("direction", (1, 0, 0)))
    return loop


def _invariance_pair(ctx):
    if "pair" in ctx.params:
        return ctx.pair()
    return make_hopf_pair()


def _t_invariance(ctx, index):
    a, b = _invariance_pair(ctx)
    if index is not None:
        a = _deformed(a, ctx.params["deformations"][index])
    s = gaussian(ctx.width((a, b)))
    rep = ctx.intrinsic(ctx.model, s, a, s, b)
    return rep.value, rep.error_estimate


def _pos_models(ctx):
    c = float(ctx.params.get("cross_c", 1.0))
    wf = float(ctx.params.get("weight_f", abs(c)))
    wg = float(ctx.params.get("weight_g", abs(c)))
    return cm.free_maxwell(wf), cm.free_maxwell(wg), c


def _t_positivity(ctx, index):
    mf, mg, c = _pos_models(ctx)
    width = float(ctx.params.get("blob_width", 0.5))
    spread = float(ctx.params.get("blob_spread", 0.5))
    grid = build_grid(ctx.scene.get("grid"), width, 4 * spread + 2, ctx.refine)
    ff, gg, fg = cm.positivity_trial(mf, mg, c, grid, ctx.seed, index, width, spread)
    return cm.positivity_margin(ff, gg, fg), 0.0


def _t_commute(ctx, _):
    a, b = ctx.pair()
    s1, s2 = ctx.mollifiers((a, b))
    rep = ctx.intrinsic(ctx.model, s1, a, s2, b)
    return rep.value, rep.error_estimate


def _t_identities(ctx, _):
    a, b = ctx.pair()
    s1, s2 = ctx.mollifiers((a, b))
    panels = int(ctx.params.get("panels", 16))
    h = LoopSmearing(s1, a, panels=panels)
    k = LoopSmearing(s2, b, panels=panels)
    grid = ctx.grid_for(s1, s2, (a, b))
    out = cm.dalembert_curl_identity_check(ctx.model, h, k, grid)
    return [(name, r["field"].value - r["potential"].value, r["tolerance"], r["passed"])
            for name, r in out.items()]


_TASKS = {"z": _t_z, "torus": _t_torus, "mass": _t_mass, "mixture": _t_mixture,
          "invariance": _t_invariance, "positivity": _t_positivity,
          "commute": _t_commute, "identities": _t_identities}


# --------------------------------------------------------------------------
# experiments


def _run_tasks(tasks, scene, refine, seed, workers):
    jobs = [(scene, refine, seed, kind, payload) for kind, payload in tasks]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_task, jobs))
    return [_task(j) for j in jobs]


def _fmt(x):
    if isinstance(x, complex):
        return f"{x.real:.6e}{x.imag:+.6e}j"
    return f"{x:.6e}"


def _exp_link(scene, tol, refine, seed, workers):
    ctx = _Context(scene, refine, seed)
    a, b = ctx.pair()
    g = gauss_linking(a, b)
    vertices = int(ctx.params.get("vertices", 256))
    c = crossing_sign_linking(polyline_from_loop(a, vertices), polyline_from_loop(b, vertices))
    lc = causal_linking_number(a, b)
    rows = [Row("gauss", complex(g.value), g.error), Row("crossing", complex(c), 0.0),
            Row("causal", complex(lc), 0.0)]
    checks = [
        Check("gauss_integer", "|L - round(L)| < tol", _fmt(abs(g.value - round(g.value))),
              g.error, abs(g.value - round(g.value)) < tol["integer"]),
        Check("engines_agree", str(round(g.value)), f"{c}, {lc}", 0.0,
              round(g.value) == c == lc),
    ]
    if "expected" in ctx.params:
        e = int(ctx.params["expected"])
        checks.append(Check("linking_number", str(e), str(lc), 0.0, lc == e))
    return rows, checks


def _zero_check(name, value, err, z, tol):
    limit = max(tol * abs(z), 3 * err)
    return Check(name, f"|v| <= {_fmt(limit)}", _fmt(abs(value)), err, abs(value) <= limit)


def _exp_commute(scene, tol, refine, seed, workers):
    ctx = _Context(scene, refine, seed)
    expect = ctx.params.get("expect", {}) or {}
    tasks = [("commute", None)]
    if expect:
        tasks.append(("z", ctx.params.get("reference_model", scene["model"])))
    res = _run_tasks(tasks, scene, refine, seed, workers)
    value, err = res[0]
    rows = [Row("value", value, err)]
    checks = []
    if expect:
        z, zerr = res[1]
        rows.append(Row("Z", z, zerr))
        if "ratio" in expect:
            ratio = value / (1j * z)
            checks.append(Check("ratio", _fmt(float(expect["ratio"])), _fmt(ratio),
                                err / abs(z), abs(ratio - expect["ratio"])
                                <= tol["ratio"] * max(1.0, abs(expect["ratio"]))))
        if expect.get("zero"):
            checks.append(_zero_check("vanishes", value, err, z, tol["vanish"]))
    return rows, checks


def _exp_sweep_linking(scene, tol, refine, seed, workers):
    params = scene["parameters"]
    lambdas = params["lambdas"]
    expected = {int(k): float(v) for k, v in (params.get("expected") or {}).items()}
    res = _run_tasks([("z", None)] + [("torus", lam) for lam in lambdas],
                     scene, refine, seed, workers)
    z, zerr = res[0]
    rows = [Row("Z", z, zerr)]
    checks = [Check("Z_real", "|Im Z|/|Z| < 1e-3", _fmt(abs(z.imag) / max(abs(z), 1e-300)),
                    zerr, abs(z) > 0 and abs(z.imag) < 1e-3 * abs(z))]
    for lam, (v, e) in zip(lambdas, res[1:]):
        ratio = v / (1j * z)
        err = e / abs(z) + abs(ratio) * zerr / abs(z)
        rows.append(Row(str(lam), ratio, err))
        exp = expected.get(lam, float(lam))
        ok = abs(ratio - exp) <= tol["ratio"] * max(1.0, abs(exp))
        checks.append(Check(f"ratio[lambda={lam}]", _fmt(exp), _fmt(ratio), err, ok))
    return rows, checks


def _exp_sweep_mass(scene, tol, refine, seed, workers):
    params = scene["parameters"]
    masses = [float(m) for m in params["masses"]]
    tasks = [("z", {"components": [{"mass": 0.0, "c1": 0.0,
                                    "c2": params.get("c2", 1.0)}]})]
    tasks += [("mass", m) for m in masses]
    if "mixture" in params:
        tasks.append(("mixture", tuple(params["mixture"])))
        if 0.0 not in masses:
            tasks.append(("mass", 0.0))
    res = _run_tasks(tasks, scene, refine, seed, workers)
    z, zerr = res[0]
    rows = [Row("Z", z, zerr)]
    checks = []
    by_mass = {}
    for m, (v, e) in zip(masses, res[1:1 + len(masses)]):
        rows.append(Row(f"{m:g}", v, e))
        by_mass[m] = (v, e)
        if m == 0:
            checks.append(Check("massless_nonzero", "|v| > 0.5 |Z|", _fmt(abs(v)), e,
                                abs(v) > 0.5 * abs(z)))
        else:
            checks.append(_zero_check(f"vanishes[m={m:g}]", v, e, z, tol["vanish"]))
    if "mixture" in params:
        mv, me = res[1 + len(masses)]
        base, be = by_mass[0.0] if 0.0 in by_mass else res[-1]
        rows.append(Row("mixture", mv, me))
        rel = abs(mv - base) / abs(base)
        checks.append(Check("mixture_matches_massless", f"rel < {tol['mixture']:g}", _fmt(rel),
                            (me + be) / abs(base), rel < tol["mixture"]))
    return rows, checks


def _exp_invariance(scene, tol, refine, seed, workers):
    defs = scene["parameters"]["deformations"]
    res = _run_tasks([("invariance", None)] + [("invariance", i) for i in range(len(defs))],
                     scene, refine, seed, workers)
    base, be = res[0]
    rows = [Row("reference", base, be)]
    checks = []
    for i, (v, e) in enumerate(res[1:]):
        label = defs[i].get("label", f"deformation{i}")
        rows.append(Row(label, v, e))
        rel = abs(v - base) / abs(base)
        checks.append(Check(f"invariant[{label}]", f"rel < {tol['invariance']:g}", _fmt(rel),
                            (e + be) / abs(base), rel < tol["invariance"]))
    return rows, checks


def _exp_positivity(scene, tol, refine, seed, workers):
    trials = scene["parameters"]["trials"]
    res = _run_tasks([("positivity", i) for i in range(trials)], scene, refine, seed, workers)
    rows = [Row(str(i), complex(m), 0.0) for i, (m, _) in enumerate(res)]
    worst = min(m for m, _ in res)
    return rows, [Check("cauchy_schwarz", f"margin >= -{tol['positivity']:g}", _fmt(worst), 0.0,
                        worst >= -tol["positivity"])]


def _exp_identities(scene, tol, refine, seed, workers):
    (res,) = _run_tasks([("identities", None)], scene, refine, seed, workers)
    rows = [Row(name, diff, t) for name, diff, t, _ in res]
    checks = [Check(f"box_vs_curl[{name}]", f"|diff| <= {_fmt(t)}", _fmt(abs(diff)), t, ok)
              for name, diff, t, ok in res]
    return rows, checks


_EXPERIMENTS = {"link": _exp_link, "commute": _exp_commute,
                "sweep-linking": _exp_sweep_linking, "sweep-mass": _exp_sweep_mass,
                "invariance": _exp_invariance, "positivity": _exp_positivity,
                "identities": _exp_identities}


# --------------------------------------------------------------------------
# output


def format_table(rows):
    lines = ["parameter,value_re,value_im,error"]
    for r in rows:
        v = complex(r.value)
        lines.append(f"{r.parameter},{v.real:.16e},{v.imag:.16e},{float(r.error):.16e}")
    return "\n".join(lines) + "\n"


def format_report(path, digest, experiment, settings, checks):
    lines = ["# qftlink report", f"scene: {path}", f"scene_sha256: {digest}",
             f"experiment: {experiment}",
             "settings: " + " ".join(f"{k}={v}" for k, v in settings.items()),
             "checks: name | expected | measured | error | result"]
    for c in checks:
        lines.append(f"check {c.name} | {c.expected} | {c.measured} | {c.error:.3e} | "
                     f"{'PASS' if c.passed else 'FAIL'}")
    npass = sum(c.passed for c in checks)
    lines.append(f"summary: {npass}/{len(checks)} checks passed")
    return "\n".join(lines) + "\n"


def load_scene(path):
    raw = Path(path).read_bytes()
    try:
        data = yaml.safe_load(raw)
    except yaml.YAMLError as exc:
        raise SceneError([f"scene: YAML parse error: {exc}"]) from exc
    return data, hashlib.sha256(raw).hexdigest()


def run_scene(path, experiment=None, refine=0, out=None, workers=1, seed=0, stream=None):
    """Run a scene file; returns the exit code."""
    stream = stream or sys.stdout
    try:
        data, digest = load_scene(path)
        diag = validate_scene(data, experiment)
        if diag:
            raise SceneError(diag)
    except SceneError as exc:
        for d in exc.diagnostics:
            print(f"error: {d}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    exp = experiment or data["experiment"]
    tol = {**DEFAULT_TOLERANCES, **(data.get("tolerances") or {})}
    try:
        rows, checks = _EXPERIMENTS[exp](data, tol, refine, seed, workers)
    except NUMERIC_ERRORS as exc:
        print(f"numeric failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    except PreconditionError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    settings = {"refine": refine, "seed": seed, "workers": workers}
    report = format_report(path, digest, exp, settings, checks)
    table = format_table(rows)
    stream.write(report)
    outputs = data.get("output", {}) or {}
    outdir = Path(out) if out else (Path(outputs["dir"]) if "dir" in outputs else None)
    if outdir is not None:
        outdir.mkdir(parents=True, exist_ok=True)
        stem = Path(path).stem
        (outdir / outputs.get("report", f"{stem}.report.txt")).write_text(report)
        (outdir / outputs.get("table", f"{stem}.csv")).write_text(table)
    return 0 if all(c.passed for c in checks) else 1


def validate_path(path, stream=None):
    stream = stream or sys.stdout
    try:
        data, _ = load_scene(path)
        diag = validate_scene(data)
    except SceneError as exc:
        diag = exc.diagnostics
    except OSError as exc:
        diag = [f"scene: {exc}"]
    for d in diag:
        stream.write(f"{d}\n")
    if not diag:
        stream.write("ok\n")
    return 2 if diag else 0


def main(argv=None):
    parser = argparse.ArgumentParser(prog="qftlink", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a scene file")
    run.add_argument("scene")
    run.add_argument("--experiment", choices=EXPERIMENTS)
    run.add_argument("--refine", type=int, default=0)
    run.add_argument("--out")
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("--seed", type=int, default=0)
    val = sub.add_parser("validate", help="check a scene file without running numerics")
    val.add_argument("scene")
    args = parser.parse_args(argv)
    if args.command == "validate":
        return validate_path(args.scene)
    if args.refine < 0 or args.workers < 1:
        print("error: --refine must be >= 0 and --workers >= 1", file=sys.stderr)
        return 2
    return run_scene(args.scene, args.experiment, args.refine, args.out, args.workers,
                     args.seed)


if __name__ == "__main__":
    sys.exit(main())
