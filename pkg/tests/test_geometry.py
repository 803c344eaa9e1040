import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qftlink.geometry import (
    FourierLoop,
    FourVector,
    causal_projection,
    cone_surface,
    is_spacelike_separated,
    is_spatial,
    light_cone_gap,
    make_circle,
    make_hopf_pair,
    make_polyline,
    make_torus_link_pair,
    minkowski_inner,
    spacelike_margin,
    time_tilted,
)
from qftlink.geometry import ParamSurface

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)
four = st.lists(finite, min_size=4, max_size=4).map(np.array)


# --------------------------------------------------------------------------
# minkowski_inner


@pytest.mark.parametrize("a, expected", [
    ((1, 0, 0, 0), 1.0), ((0, 1, 0, 0), -1.0), ((1, 1, 0, 0), 0.0)])
def test_minkowski_inner_units(a, expected):
    assert minkowski_inner(a, a) == expected


def test_minkowski_inner_accepts_fourvector():
    assert minkowski_inner(FourVector(2, 1, 0, 0), FourVector(1, 0, 3, 0)) == 2.0


def test_fourvector_rejects_nonfinite():
    with pytest.raises(ValueError):
        FourVector(np.nan, 0, 0, 0)


@given(four, four, four, finite)
def test_minkowski_inner_symmetric_bilinear(a, b, c, s):
    assert minkowski_inner(a, b) == minkowski_inner(b, a)
    lhs = minkowski_inner(s * a + c, b)
    rhs = s * minkowski_inner(a, b) + minkowski_inner(c, b)
    scale = (abs(s) * np.abs(a).max() + np.abs(c).max() + 1) * (np.abs(b).max() + 1)
    assert abs(lhs - rhs) <= 1e-12 * scale


# --------------------------------------------------------------------------
# loops


def test_loops_close_and_tangents_match_positions():
    loops = [make_circle(0.7, (0.1, 0.2, 0.3, 0.4)), *make_torus_link_pair(2),
             make_polyline([[0, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0]]),
             time_tilted(make_circle(), 0.3)]
    u = np.linspace(0.013, 0.987, 41)
    h = 1e-6
    for loop in loops:
        assert np.allclose(loop.position(0.0), loop.position(1.0), atol=1e-12)
        fd = (loop.position(u + h) - loop.position(u - h)) / (2 * h)
        assert np.allclose(fd, loop.tangent(u), atol=1e-6)


def test_degenerate_radii_rejected():
    with pytest.raises(ValueError):
        make_circle(0.0)
    with pytest.raises(ValueError):
        make_torus_link_pair(1, major=1.0, minor=1.5)


def test_reversed_and_repeated_loops():
    c = make_circle(1.0)
    u = np.linspace(0, 1, 17)
    assert np.allclose(c.reversed().position(u), c.position(1 - u))
    assert np.allclose(c.repeated(3).position(u / 3), c.position(u))
    assert np.allclose(c.repeated(3).tangent(0.1), 3 * c.tangent(0.3))


# --------------------------------------------------------------------------
# causal predicates


def test_disjoint_time_zero_circles_are_spacelike_separated():
    a = make_circle(1.0)
    b = make_circle(1.0, center=(0, 3, 0, 0))
    assert is_spacelike_separated(a, b, samples=64, margin=0.5)


def test_identical_loops_not_separated():
    a = make_circle(1.0)
    assert not is_spacelike_separated(a, a, samples=64)


def test_hopf_pair_separated_fine_sampling_oracle():
    a, b = make_torus_link_pair(1)
    assert is_spacelike_separated(a, b, samples=128)
    # exhaustive oracle: brute force over a much finer parameter grid
    pa = a.samples(2048)
    pb = b.samples(2048)
    worst = min(float(np.max(minkowski_inner(pa[i:i + 256, None] - pb[None],
                                             pa[i:i + 256, None] - pb[None])))
                for i in range(0, 2048, 256))
    assert worst < 0


def test_samples_precondition():
    a = make_circle()
    with pytest.raises(ValueError):
        is_spacelike_separated(a, a, samples=1)
    with pytest.raises(ValueError):
        is_spatial(a, samples=2)


def test_time_zero_loop_is_spatial():
    assert is_spatial(make_circle(0.8), samples=128)
    assert is_spatial(make_torus_link_pair(2)[1], samples=128)


def test_lightlike_pair_is_not_spatial():
    loop = make_polyline([[0, 0, 0, 0], [1, 1, 0, 0], [0, 2, 1, 0]])
    assert not is_spatial(loop, samples=3)


def _tilted_circle(eps, radius=1.0):
    # x = R cos, y = R sin, t = eps cos
    return FourierLoop([0, 0, 0, 0], [[eps, radius, 0, 0]], [[0, 0, radius, 0]])


def test_tilted_circle_spatial_threshold():
    radius = 1.0
    # oracle: largest |dt| / |dx| over a fine set of chords
    n = 1024
    p = _tilted_circle(0.5, radius).samples(n)
    i, j = np.triu_indices(n, k=1)
    d = p[i] - p[j]
    ratio = np.max(np.abs(d[:, 0]) / np.linalg.norm(d[:, 1:], axis=1))
    threshold = radius * 0.5 / ratio
    assert threshold == pytest.approx(radius, rel=1e-6)
    assert is_spatial(_tilted_circle(0.9 * threshold, radius), samples=256)
    assert not is_spatial(_tilted_circle(1.1 * threshold, radius), samples=256)


def test_causal_projection_endpoints():
    loop = time_tilted(make_circle(1.0), 0.4, (0.3, 0.4, 0.5))
    u = np.linspace(0, 1, 33)
    assert np.array_equal(causal_projection(loop, 0.0).position(u), loop.position(u))
    flat = causal_projection(loop, 1.0)
    assert np.all(flat.position(u)[:, 0] == 0)
    assert np.array_equal(flat.position(u)[:, 1:], loop.position(u)[:, 1:])


@given(st.floats(-0.9, 0.9), st.floats(0.0, 1.0))
def test_causal_projection_idempotent(slope, v):
    loop = time_tilted(make_circle(1.0, center=(0.3, 0, 0, 0)), slope)
    once = causal_projection(loop, 1.0)
    twice = causal_projection(once, 1.0)
    assert np.array_equal(once.position(v), twice.position(v))


def test_projection_homotopy_preserves_separation():
    a, b = make_hopf_pair()
    a = time_tilted(a, 0.3, (0.6, 0.8, 0.0))
    b = time_tilted(b, 0.2, (0.0, 0.6, 0.8))
    assert is_spatial(a) and is_spatial(b)
    for u in np.linspace(0, 1, 21):
        assert is_spacelike_separated(causal_projection(a, u), causal_projection(b, u),
                                      samples=128)


def test_gap_and_margin_on_time_zero_pair():
    a, b = make_hopf_pair()
    assert light_cone_gap(a, b) == pytest.approx(1.0, abs=1e-4)
    assert spacelike_margin(a, b) == pytest.approx(1.0, abs=1e-4)


def test_unlink_pair_separated_by_plane():
    a, b = make_torus_link_pair(0)
    za = a.samples(256)[:, 3]
    zb = b.samples(256)[:, 3]
    assert za.max() < zb.min()


# --------------------------------------------------------------------------
# surfaces


def test_cone_over_time_zero_circle_is_flat_disk():
    c = make_circle(1.0, center=(0, 0.5, -0.2, 0.3))
    cone = cone_surface(c)
    assert np.allclose(cone.apex, [0, 0.5, -0.2, 0.3], atol=1e-12)
    u, v = np.meshgrid(np.linspace(0, 1, 9), np.linspace(0, 1, 13))
    pts = cone.position(u, v)
    assert np.allclose(pts[..., 0], 0) and np.allclose(pts[..., 3], 0.3)
    assert np.all(np.linalg.norm(pts[..., 1:3] - [0.5, -0.2], axis=-1) <= 1 + 1e-12)


def test_cone_jacobian_antisymmetric_and_zero_at_apex():
    loop = make_torus_link_pair(2)[1]
    cone = cone_surface(loop, (0.1, 0.2, 0.3, 0.4))
    u, v = np.meshgrid(np.linspace(0, 1, 7), np.linspace(0, 1, 11))
    jac = cone.jacobian(u, v)
    assert np.array_equal(jac, -np.swapaxes(jac, -1, -2))
    assert np.all(cone.jacobian(np.zeros(11), np.linspace(0, 1, 11)) == 0)


def test_cone_boundary_reproduces_loop():
    loop = make_torus_link_pair(-1)[1]
    cone = cone_surface(loop, (0.1, 0.2, 0.3, 0.4))
    u = np.linspace(0, 1, 101)
    assert np.array_equal(cone.boundary().position(u), loop.position(u))
    # the generic square-boundary traversal: the loop edge is the second quarter
    generic = ParamSurface.boundary(cone)
    assert np.allclose(generic.position(0.25 + u / 4), loop.position(u), atol=1e-14)
    # the apex edge is degenerate
    assert np.allclose(generic.position(0.75 + u / 4), cone.apex, atol=1e-14)
