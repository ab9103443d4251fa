import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ellipsect import ellipsoid, sphere
from ellipsect.bodies import boundary_hits
from ellipsect.curvature import (
    CurvaturePair,
    Match,
    euler_curvature,
    match_in_three_directions,
    principal_curvatures,
    section_curvature_fd,
)
from ellipsect.errors import DirectionsNotDistinctError, EdgePointError

from conftest import random_ellipsoid, unit


@pytest.mark.parametrize("cp, theta, want", [
    ((2, 1, 0), 0.0, 2.0),
    ((2, 1, 0), np.pi / 2, 1.0),
    ((3, 1, 0), np.pi / 4, 2.0),
])
def test_euler_examples(cp, theta, want):
    assert euler_curvature(CurvaturePair(*cp), theta) == pytest.approx(want)


def test_pair_canonicalization():
    cp = CurvaturePair(1, 3, 0.2)
    assert (cp.k1, cp.k2) == (3, 1)
    assert cp.t0 == pytest.approx(0.2 + np.pi / 2)
    assert 0 <= CurvaturePair(2, 1, -4.0).t0 < np.pi


@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(-10, 10))
def test_harmonics_roundtrip(k1, k2, t0):
    cp = CurvaturePair(k1, k2, t0)
    back = CurvaturePair.from_harmonics(*cp.harmonics())
    th = np.linspace(0, np.pi, 37)
    assert np.allclose(euler_curvature(cp, th), euler_curvature(back, th), atol=1e-12)


@pytest.mark.parametrize("body, p, want", [
    (sphere(), [0.6, 0, 0.8], (1, 1)),
    (sphere(2.0), [0, 2, 0], (0.5, 0.5)),
    (ellipsoid(2, 1, 1), [2, 0, 0], (2, 2)),
])
def test_principal_curvature_examples(body, p, want):
    cp = principal_curvatures(body, p)
    assert (cp.k1, cp.k2) == pytest.approx(want, rel=1e-10)


def test_principal_curvatures_of_ellipsoid_at_minor_vertex():
    # at (0,0,c) on (a,b,c): curvatures c/a^2 and c/b^2
    cp = principal_curvatures(ellipsoid(2, 1.5, 1), [0, 0, 1])
    assert (cp.k1, cp.k2) == pytest.approx((1 / 1.5**2, 1 / 4), rel=1e-10)


def test_edge_point_rejected(body_c):
    with pytest.raises(EdgePointError):
        principal_curvatures(body_c, [1.0, 0.0, 0.0])


def test_three_direction_examples():
    r = match_in_three_directions(CurvaturePair(3, 1, 0), CurvaturePair(1, 3, np.pi / 2), [0.1, 0.7, 2.0])
    assert r.status is Match.AGREE_EVERYWHERE
    r = match_in_three_directions(CurvaturePair(2, 1, 0), CurvaturePair(1, 2, 0), [np.pi / 4, 3 * np.pi / 4, 0.1])
    assert r.status is Match.DISAGREE
    assert abs(euler_curvature(CurvaturePair(2, 1, 0), r.witness) - euler_curvature(CurvaturePair(1, 2, 0), r.witness)) == pytest.approx(r.max_difference)
    r = match_in_three_directions(CurvaturePair(1.5, 1.5, 0.3), CurvaturePair(1.5, 1.5, 2.0), [0, 1, 2])
    assert r.agree


def test_three_direction_directions_distinct_mod_pi():
    with pytest.raises(DirectionsNotDistinctError):
        match_in_three_directions(CurvaturePair(2, 1), CurvaturePair(2, 1), [0.1, 0.1 + np.pi, 1.0])


def agreeing_partner(rng, cpA):
    """A pair equal to cpA at three random directions: with three distinct samples the harmonics are forced."""
    dirs = np.sort(rng.uniform(0, np.pi, 3))
    V = np.stack([np.ones(3), np.cos(2 * dirs), np.sin(2 * dirs)], axis=1)
    return CurvaturePair.from_harmonics(*np.linalg.solve(V, euler_curvature(cpA, dirs))), dirs


def test_three_direction_constructed_pairs_agree(rng):
    grid = np.linspace(0, np.pi, 360, endpoint=False)
    for _ in range(100):
        cpA = CurvaturePair(*rng.uniform(0.1, 3, 2), rng.uniform(0, np.pi))
        cpB, dirs = agreeing_partner(rng, cpA)
        if np.min(np.abs(np.diff(dirs))) < 1e-3:
            continue
        assert match_in_three_directions(cpA, cpB, dirs).agree
        assert np.max(np.abs(euler_curvature(cpA, grid) - euler_curvature(cpB, grid))) <= 1e-9


def test_fd_matches_euler_on_random_ellipsoids(rng):
    for _ in range(5):
        B = random_ellipsoid(rng)
        pts, _ = boundary_hits(B, B.interior, unit(rng.normal(size=(4, 3))))
        for p in pts:
            cp = principal_curvatures(B, p)
            for th in rng.uniform(0, np.pi, 2):
                assert section_curvature_fd(B, p, th) == pytest.approx(euler_curvature(cp, th), rel=1e-5, abs=1e-5)
