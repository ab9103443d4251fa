import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from ellipsect.errors import DegenerateRestrictionError, ParallelPlanesError
from ellipsect.kernel import (
    Conic,
    ConicClass,
    Line,
    Plane,
    Quadric,
    QuadricClass,
    classify_conic,
    classify_quadric,
    dihedral_angle,
    ellipsoid_geometry,
    intersect_planes,
    line_distance,
    plane_frame,
    quadric_from_ellipsoid,
    restrict_quadric,
)

vectors = st.lists(st.floats(-10, 10), min_size=3, max_size=3).filter(lambda v: np.linalg.norm(v) > 1e-3)


@given(vectors)
def test_plane_frame_is_orthonormal_and_right_handed(n):
    n = np.asarray(n) / np.linalg.norm(n)
    e1, e2 = plane_frame(n)
    F = np.stack([e1, e2, n])
    assert np.allclose(F @ F.T, np.eye(3), atol=1e-12)
    assert np.allclose(np.cross(e1, e2), n, atol=1e-12)


def test_plane_canonical_sign_and_equality():
    H = Plane([0, 0, -2], -1.0)
    assert np.allclose(H.n, [0, 0, 1]) and H.d == pytest.approx(0.5)
    assert H == Plane([0, 0, 1], 0.5)
    assert Plane.through([1, 2, 3], [0, 0, 1]) == Plane([0, 0, 1], 3)


def test_line_canonical_point_nearest_origin():
    L = Line([5, 1, 1], [-3, 0, 0])
    assert np.allclose(L.u, [1, 0, 0])
    assert np.allclose(L.a, [0, 1, 1])
    assert L == Line([0, 1, 1], [1, 0, 0])


def test_plane_coordinates_roundtrip(rng):
    H = Plane(rng.normal(size=3), 0.7)
    pts = H.lift(rng.normal(size=(10, 2)))
    assert np.allclose(H.signed_distance(pts), 0, atol=1e-12)
    assert np.allclose(H.lift(H.to_plane_coords(pts)), pts, atol=1e-12)


@pytest.mark.parametrize("c, cls", [
    ([1, 0, 1, 0, 0, -1], ConicClass.ELLIPSE),
    ([1, 0, -1, 0, 0, -1], ConicClass.HYPERBOLA),
    ([1, 5 / 8, 1, 0, 0, -3 / 4], ConicClass.ELLIPSE),
    ([1, 0, 0, 0, -1, 0], ConicClass.PARABOLA),
    ([1, 0, -1, 0, 0, 0], ConicClass.DEGENERATE),
    ([1, 0, 1, 0, 0, 1], ConicClass.DEGENERATE),  # no real points
])
def test_classify_conic(c, cls):
    assert classify_conic(Conic(c)) is cls


def test_conic_canonical_form():
    c = Conic([-2, 0, -2, 0, 0, 2])
    assert np.linalg.norm(c.c) == pytest.approx(1.0)
    assert c.c[0] + c.c[2] >= 0
    assert c == Conic([1, 0, 1, 0, 0, -1])


@pytest.mark.parametrize("q, cls", [
    ([1, 1, 1, 0, 0, 0, 0, 0, 0, -1], QuadricClass.ELLIPSOID),
    ([1, 1, -1, 0, 0, 0, 0, 0, 0, -1], QuadricClass.NON_ELLIPSOID_QUADRIC),
    ([1, 4, 9, 0, 0, 0, 0, 0, 0, -1], QuadricClass.ELLIPSOID),
    ([1, 1, 1, 0, 0, 0, 0, 0, 0, 1], QuadricClass.NON_ELLIPSOID_QUADRIC),
    ([1, 1, 0, 0, 0, 0, 0, 0, 0, -1], QuadricClass.DEGENERATE),
])
def test_classify_quadric(q, cls):
    assert classify_quadric(Quadric(q)) is cls


def test_ellipsoid_semi_axes_reported():
    geo = ellipsoid_geometry(Quadric([1, 4, 9, 0, 0, 0, 0, 0, 0, -1]))
    assert np.allclose(geo.axes, [1, 1 / 2, 1 / 3])
    assert np.allclose(geo.center, 0)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.5, 2), st.floats(0.5, 2), st.floats(0.5, 2), st.integers(0, 2**31), st.floats(1e-3, 1e3))
def test_classification_invariant_under_scale_and_rigid_motion(a, b, c, seed, scale):
    rng = np.random.default_rng(seed)
    R = Rotation.random(random_state=rng).as_matrix()
    q = quadric_from_ellipsoid([a, b, c], R, rng.normal(size=3))
    assert classify_quadric(Quadric(scale * q.q)) is QuadricClass.ELLIPSOID
    moved = q.transformed(Rotation.random(random_state=rng).as_matrix(), rng.normal(size=3))
    assert classify_quadric(moved) is QuadricClass.ELLIPSOID
    assert np.allclose(sorted(ellipsoid_geometry(moved).axes), sorted([a, b, c]), rtol=1e-9)


def test_dihedral_angle_examples():
    z0, z1, x0 = Plane([0, 0, 1], 0), Plane([0, 0, 1], 1), Plane([1, 0, 0], 0)
    assert dihedral_angle(z0, z1) == pytest.approx(0.0)
    assert dihedral_angle(z0, x0) == pytest.approx(np.pi / 2)
    b = 0.3
    assert dihedral_angle(z0, Plane([0, np.sin(b), np.cos(b)], 0)) == pytest.approx(b)


def test_intersect_planes_examples():
    assert intersect_planes(Plane([0, 0, 1], 0), Plane([0, 1, 0], 0)) == Line([0, 0, 0], [1, 0, 0])
    L = intersect_planes(Plane([0, 0, 1], 1), Plane([0, 1, 0], 1))
    assert L.isclose(Line([7, 1, 1], [1, 0, 0]))
    with pytest.raises(ParallelPlanesError):
        intersect_planes(Plane([0, 0, 1], 0), Plane([0, 0, 1], 1))


def test_line_distance_skew_and_crossing():
    d, x = line_distance(Line([0, 0, 0], [1, 0, 0]), Line([0, 0, 1], [0, 1, 0]))
    assert d == pytest.approx(1.0) and np.allclose(x, [0, 0, 0.5])
    d, x = line_distance(Line([0, 0, 0], [1, 0, 0]), Line([2, 3, 0], [0, 1, 0]))
    assert d == pytest.approx(0.0, abs=1e-15) and np.allclose(x, [2, 0, 0])


def test_restrict_quadric_examples():
    S = Quadric([1, 1, 1, 0, 0, 0, 0, 0, 0, -1])
    assert restrict_quadric(S, Plane([0, 0, 1], 0)) == Conic([1, 0, 1, 0, 0, -1])
    assert restrict_quadric(S, Plane([0, 0, 1], 0.5)) == Conic([1, 0, 1, 0, 0, -0.75])
    E = Quadric([1, 4, 9, 0, 0, 0, 0, 0, 0, -1])
    conic = restrict_quadric(E, Plane([0, 0, 1], 0))
    # the frame of z=0 may permute or flip axes; compare invariants
    lam = np.sort(np.linalg.eigvalsh(conic.matrix[:2, :2]) / -conic.c[5])
    assert np.allclose(lam, [1, 4])


def test_restrict_quadric_plane_in_quadric():
    pair = Quadric([0, 0, 1, 0, 0, 0, 0, 0, 0, 0])  # z^2 = 0
    with pytest.raises(DegenerateRestrictionError):
        restrict_quadric(pair, Plane([0, 0, 1], 0))


def test_restricted_conic_is_quadric_on_plane(rng):
    q = quadric_from_ellipsoid([2, 1, 0.7], Rotation.random(random_state=rng).as_matrix(), [0.1, 0, 0.2])
    H = Plane(rng.normal(size=3), 0.2)
    conic = restrict_quadric(q, H)
    uv = rng.normal(size=(50, 2))
    ratio = conic(uv) / q(H.lift(uv))
    assert np.allclose(ratio, ratio[0], rtol=1e-9)
