import numpy as np
import pytest

from qftlink.commutator import (
    Potential,
    check_wightman_positivity,
    extract_Z,
    free_maxwell,
    intrinsic_commutator,
    maxwell_dual_cross,
    positivity_grid,
    positivity_margin,
    random_blob_two_form,
    reference_width,
    smeared_field_commutator,
    tilted_hopf_pair,
    two_point_function,
    verify_linking_proportionality,
)
from qftlink.exceptions import (
    PreconditionError,
    SeparationMarginError,
    UnresolvedGridError,
)
from qftlink.geometry import cone_surface, make_circle, make_hopf_pair
from qftlink.smearing import (
    Conjugate,
    HodgeDual,
    LoopSmearing,
    SurfaceSmearing,
    blob_two_form,
    bump,
    gaussian,
)
from qftlink.spectral import FieldPairModel, ShellGrid

WIDE = 0.3  # wide mollifiers make the position route fast; margin checks are skipped
MODELS = {
    "massless_c1": FieldPairModel.massless(1.0, 0.0),
    "massless_c2": FieldPairModel.massless(0.0, 1.0),
    "massless_mixed": FieldPairModel.massless(0.7, -0.4),
    "massive_c1": FieldPairModel.single(1.0, 1.0),
}


@pytest.fixture(scope="module")
def blobs():
    rng = np.random.default_rng(3)
    f = random_blob_two_form(rng, 0.5, 0.3, complex_coeffs=False)
    g = random_blob_two_form(rng, 0.5, 0.3, complex_coeffs=False)
    return f, g, positivity_grid(0.5, 0.3)


def _wide(model, a, b, **kw):
    s = gaussian(WIDE)
    return intrinsic_commutator(model, s, a, s, b, check_margin=False, **kw)


# --------------------------------------------------------------------------
# shell route


@pytest.mark.parametrize("name", sorted(MODELS))
def test_commutator_of_real_smearings_is_imaginary(name, blobs):
    f, g, grid = blobs
    rep = smeared_field_commutator(MODELS[name], f, g, grid)
    assert abs(rep.real) <= rep.error_estimate + 1e-14 * abs(rep.value)
    assert abs(rep.value) > 0


def test_commutator_bilinear(blobs):
    f, g, grid = blobs
    model = MODELS["massless_mixed"]
    base = smeared_field_commutator(model, f, g, grid).value
    assert smeared_field_commutator(model, f * 2.0, g, grid).value == 2 * base
    h = random_blob_two_form(np.random.default_rng(9), 0.5, 0.3, complex_coeffs=False)
    total = smeared_field_commutator(model, f, g + h, grid).value
    assert total == pytest.approx(base + smeared_field_commutator(model, f, h, grid).value,
                                  rel=1e-12)


@pytest.mark.parametrize("name", ["massless_c1", "massless_c2", "massive_c1"])
def test_exchange_negates(name, blobs):
    f, g, grid = blobs
    model = MODELS[name]
    fg = smeared_field_commutator(model, f, g, grid).value
    gf = smeared_field_commutator(model.swapped(), g, f, grid).value
    assert gf == pytest.approx(-fg, rel=1e-10)


def test_dual_structure_equals_c1_on_dual_smearing(blobs):
    f, g, grid = blobs
    c2 = smeared_field_commutator(MODELS["massless_c2"], f, g, grid).value
    c1 = smeared_field_commutator(MODELS["massless_c1"], f, HodgeDual(g) * 2.0, grid).value
    assert c2 == pytest.approx(c1, rel=1e-12)


def test_potential_slot_matches_cone_field_slot():
    loop1 = make_circle(0.4)
    loop2 = make_circle(0.4, center=(0.2, 0.5, 0.3, 0.1), e1=(0, 0, 1), e2=(1, 0, 0))
    s = gaussian(0.3)
    h = LoopSmearing(s, loop1, panels=16)
    f = SurfaceSmearing(s, cone_surface(loop1), panels=(1, 16))
    g = SurfaceSmearing(s, cone_surface(loop2), panels=(1, 16))
    grid = ShellGrid.for_smearing(0.3, 3.0)
    for model in (MODELS["massless_c2"], MODELS["massive_c1"]):
        a = smeared_field_commutator(model, f, g, grid, check=False)
        b = smeared_field_commutator(model, Potential(h), g, grid, check=False)
        assert b.value == pytest.approx(a.value, rel=1e-10)


def test_commutator_rank_precondition(blobs):
    f, g, grid = blobs
    with pytest.raises(PreconditionError):
        smeared_field_commutator(MODELS["massless_c1"], LoopSmearing(gaussian(0.3),
                                 make_circle()), g, grid)


def test_unresolved_grid_detected(blobs):
    f, g, _ = blobs
    with pytest.raises(UnresolvedGridError):
        smeared_field_commutator(MODELS["massless_c2"], f, g, ShellGrid(8, 4.0, 4, 4))


# --------------------------------------------------------------------------
# two-point function


def test_two_point_of_zero_smearing(blobs):
    _, g, grid = blobs
    zero = blob_two_form(gaussian(0.5), np.zeros((4, 4)))
    assert two_point_function(free_maxwell(), zero, g, grid, check=False).value == 0


def test_two_point_antisymmetric_part_is_half_commutator(blobs):
    f, g, grid = blobs
    m = free_maxwell()
    w_fg = two_point_function(m, f, g, grid).value
    w_gf = two_point_function(m, g, f, grid).value
    comm = smeared_field_commutator(m, f, g, grid).value
    assert (w_fg - w_gf) / 2 == pytest.approx(comm / 2, rel=1e-10)


def test_two_point_positive_on_conjugate_pair():
    rng = np.random.default_rng(11)
    grid = positivity_grid()
    for _ in range(3):
        f = random_blob_two_form(rng)
        v = two_point_function(free_maxwell(), Conjugate(f), f, grid).value
        assert v.real > 0 and abs(v.imag) < 1e-10 * v.real


def test_dual_isometry_of_free_two_point():
    rng = np.random.default_rng(5)
    grid = positivity_grid()
    g = random_blob_two_form(rng)
    dg = HodgeDual(g)
    a = two_point_function(free_maxwell(), Conjugate(dg), dg, grid).value
    b = two_point_function(free_maxwell(), Conjugate(g), g, grid).value
    assert a == pytest.approx(b, rel=1e-12)


def test_positivity_trivial_without_cross_term():
    ok, worst = check_wightman_positivity(free_maxwell(), free_maxwell(), 0.0, trials=3)
    assert ok and worst == pytest.approx(1.0)


def test_positivity_margin_edge_cases():
    assert positivity_margin(1.0, 1.0, 0.5) == pytest.approx(0.75)
    assert positivity_margin(-1.0, 1.0, 0.0) == -np.inf
    assert positivity_margin(0.0, 1.0, 0.0) == 0.0
    assert positivity_margin(0.0, 1.0, 0.1) == -np.inf


def test_cross_model_structure():
    (m, w, ts), = maxwell_dual_cross(2.0).atoms()
    assert (m, w, ts.c1, ts.c2) == (0.0, 1.0, 0.0, -1.0)


# --------------------------------------------------------------------------
# intrinsic commutator, position route


def test_reference_z_real_and_matches_point_limit(z_report):
    # Zero-width limit: the dual-structure commutator of two unit-linked loops
    # reduces to a Gauss-type integral equal to 16 pi^3.
    assert abs(z_report.imag) < 1e-3 * abs(z_report.value)
    assert z_report.real == pytest.approx(16 * np.pi**3, rel=1e-6)
    assert z_report.error_estimate < 1e-6 * abs(z_report.value)
    assert z_report.route == "position"


def test_zero_model_gives_zero():
    assert extract_Z(FieldPairModel.massless(0.0, 0.0)).value == 0


def test_exchange_antisymmetry_of_linked_commutator():
    a, b = tilted_hopf_pair()
    model = FieldPairModel.massless(0.3, 1.0)
    ab = _wide(model, a, b).value
    ba = _wide(model.swapped(), b, a).value
    assert ba == pytest.approx(-ab, rel=1e-6)


def test_linear_in_dual_coefficient():
    a, b = tilted_hopf_pair()
    one = _wide(FieldPairModel.massless(0.0, 1.0), a, b).value
    two = _wide(FieldPairModel.massless(0.0, 2.0), a, b).value
    assert two == pytest.approx(2 * one, rel=1e-12)


def test_invariant_under_common_translation():
    a, b = tilted_hopf_pair()
    shift = (0.7, -1.3, 0.4, 2.1)
    model = FieldPairModel.massless(0.4, 1.0)
    moved = _wide(model, a.translated(shift), b.translated(shift)).value
    assert moved == pytest.approx(_wide(model, a, b).value, rel=1e-8)


def test_apex_cross_check_reported():
    a, b = tilted_hopf_pair()
    rep = _wide(FieldPairModel.massless(0.0, 1.0), a, b)
    v1, v2 = rep.details["apex_values"]
    assert abs(v1 - v2) <= rep.details["apex_spread"] + 1e-15
    assert rep.details["apex_spread"] < 1e-8 * abs(rep.value)
    other = _wide(FieldPairModel.massless(0.0, 1.0), a, b,
                  apexes=[(0.4, 0.9, -0.3, 0.6), (-0.2, 1.1, 0.2, -0.1)])
    assert other.value == pytest.approx(rep.value, rel=1e-8)


def test_separation_margin_enforced():
    a, b = make_hopf_pair()
    with pytest.raises(SeparationMarginError):
        intrinsic_commutator(FieldPairModel.massless(), gaussian(0.2), a, gaussian(0.2), b)


def test_position_route_requires_gaussians():
    a, b = make_hopf_pair()
    with pytest.raises(PreconditionError):
        intrinsic_commutator(FieldPairModel.massless(), bump(0.1), a, bump(0.1), b,
                             route="position")
    with pytest.raises(PreconditionError):
        intrinsic_commutator(FieldPairModel.massless(), bump(0.1), a, bump(0.1), b)


def test_linking_ratio_on_deformed_hopf_pair(z_report):
    (row,) = verify_linking_proportionality(
        FieldPairModel.massless(), [1], z=z_report,
        pair_factory=lambda lam: tilted_hopf_pair(0.15))
    assert row.ratio == pytest.approx(1.0, abs=1e-3)


def test_reference_width_follows_light_cone_gap():
    a, b = make_hopf_pair()
    assert reference_width(a, b) == pytest.approx(1 / 12, rel=1e-4)


# --------------------------------------------------------------------------
# cross-route oracles


@pytest.mark.slow
@pytest.mark.parametrize("name", ["massless_c2", "massive_c1"])
def test_position_route_matches_shell_route(name):
    a, b = tilted_hopf_pair()
    model = MODELS[name]
    pos = _wide(model, a, b, route="position")
    shell = _wide(model, a, b, route="shell", grid=ShellGrid.for_smearing(WIDE, 4.5),
                  surface_panels=(1, 16))
    tol = 3 * (pos.error_estimate + shell.error_estimate) + 1e-7 * abs(pos.value)
    assert abs(pos.value - shell.value) <= tol
