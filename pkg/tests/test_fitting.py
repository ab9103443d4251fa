import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ellipsect.errors import DuplicateConditionError, NotAnEllipseError, RankDeficientError
from ellipsect.fitting import (
    Condition,
    condition_matrix,
    ellipse_area,
    fit_conic,
    fit_conic_lsq,
    fit_quadric,
    fit_quadric_lsq,
    is_ellipse,
)
from ellipsect.kernel import Conic, Plane, Quadric, QuadricClass, classify_quadric
from ellipsect.sections import extract_section

from conftest import random_ellipsoid, unit
from oracles import BODY_C_Z_HALF_AREA, BODY_C_Z_HALF_CONIC, ellipse_polygon_area

CIRCLE = Conic([1, 0, 1, 0, 0, -1])
SPHERE = Quadric([1, 1, 1, 0, 0, 0, 0, 0, 0, -1])


def rows_residual(coeffs, conditions):
    M = condition_matrix(conditions)
    vec = coeffs.c if isinstance(coeffs, Conic) else coeffs.q
    return np.max(np.abs(M @ vec))


def test_five_points_give_circle():
    s = np.sqrt(2) / 2
    conds = [Condition.point_on(p) for p in [(1, 0), (0, 1), (-1, 0), (0, -1), (s, s)]]
    c = fit_conic(conds)
    assert c.distance(CIRCLE) < 1e-12
    assert rows_residual(c, conds) < 1e-9


def test_tangent_line_and_three_points_give_circle():
    conds = [Condition.tangent_line_at((0, 1), (1, 0))] + [Condition.point_on(p) for p in [(1, 0), (-1, 0), (0, -1)]]
    c = fit_conic(conds)
    assert c.distance(CIRCLE) < 1e-12


def test_collinear_points_rank_deficient():
    conds = [Condition.point_on(p) for p in [(0, 0), (1, 1), (2, 2), (3, 3), (-1, -1)]]
    with pytest.raises(RankDeficientError) as exc:
        fit_conic(conds)
    assert exc.value.code == "RANK_DEFICIENT"
    assert "condition_gap" in exc.value.info


def test_duplicate_points_rejected():
    with pytest.raises(DuplicateConditionError):
        fit_conic([Condition.point_on(p) for p in [(1, 0), (1, 0), (0, 1), (-1, 0), (0, -1)]])


def test_nine_sphere_points(rng):
    pts = unit(rng.normal(size=(9, 3)))
    q = fit_quadric([Condition.point_on(p) for p in pts])
    fresh = unit(rng.normal(size=(100, 3)))
    assert np.max(np.abs(q(fresh))) < 1e-9
    assert q.distance(SPHERE) < 1e-9


def test_tangent_plane_plus_six_points(rng):
    pts = unit(rng.normal(size=(6, 3)))
    conds = [Condition.tangent_plane_at((0, 0, 1), (0, 0, 1))] + [Condition.point_on(p) for p in pts]
    q = fit_quadric(conds)
    assert q.distance(SPHERE) < 1e-9
    assert classify_quadric(q) is QuadricClass.ELLIPSOID
    assert rows_residual(q, conds) < 1e-9


def test_points_on_one_circle_rank_deficient():
    phi = np.linspace(0, 2 * np.pi, 9, endpoint=False)
    pts = np.stack([np.cos(phi), np.sin(phi), np.zeros(9)], axis=1)
    with pytest.raises(RankDeficientError):
        fit_quadric([Condition.point_on(p) for p in pts])


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31))
def test_exact_fits_satisfy_rows(seed):
    rng = np.random.default_rng(seed)
    B = random_ellipsoid(rng)
    pts = B.interior + unit(rng.normal(size=(9, 3))) * 2
    conds = [Condition.point_on(p) for p in pts[:6]] + [Condition.tangent_plane_at(pts[7], rng.normal(size=3))]
    try:
        q = fit_quadric(conds)
    except RankDeficientError:
        return
    assert rows_residual(q, conds) < 1e-9
    uv = rng.normal(size=(5, 2))
    conds2 = [Condition.point_on(p) for p in uv[:3]] + [Condition.tangent_line_at(uv[3], rng.normal(size=2))]
    try:
        c = fit_conic(conds2)
    except RankDeficientError:
        return
    assert rows_residual(c, conds2) < 1e-9


def test_lsq_circle_samples():
    phi = 2 * np.pi * np.arange(256) / 256
    rep = fit_conic_lsq(np.stack([np.cos(phi), np.sin(phi)], axis=1))
    assert rep.coeffs.distance(CIRCLE) < 1e-12
    assert rep.residual <= 1e-10


def test_lsq_body_c_section(body_c):
    c = extract_section(body_c, Plane([0, 0, 1], 0.5), 256)
    rep = fit_conic_lsq(c.points3d[:, :2])
    assert rep.coeffs.distance(Conic(BODY_C_Z_HALF_CONIC)) < 1e-8
    assert rep.residual <= 1e-8


def test_superellipse_section_not_a_conic(superball):
    c = extract_section(superball, Plane([0, 0, 1], 0), 256)
    rep = fit_conic_lsq(c)
    assert rep.residual > 1e-3
    assert not is_ellipse(c).is_ellipse


def test_is_ellipse_circle_and_body_c(unit_sphere, body_c):
    t = is_ellipse(extract_section(unit_sphere, Plane([0, 0, 1], 0), 256))
    assert t.is_ellipse and t.residual < 1e-12 and t.area == pytest.approx(np.pi, rel=1e-12)
    for n in ([1, 0, 0], [0, 1, 0], [0, 0, 1]):
        assert is_ellipse(extract_section(body_c, Plane(n, 0.3), 256)).is_ellipse


def test_ellipse_area_examples():
    assert ellipse_area(CIRCLE) == pytest.approx(np.pi)
    assert ellipse_area(Conic([0.25, 0, 1, 0, 0, -1])) == pytest.approx(2 * np.pi)
    assert ellipse_area(Conic(BODY_C_Z_HALF_CONIC)) == pytest.approx(BODY_C_Z_HALF_AREA, rel=1e-14)
    with pytest.raises(NotAnEllipseError):
        ellipse_area(Conic([1, 0, -1, 0, 0, -1]))


def test_ellipse_area_matches_polygon_oracle(rng):
    for _ in range(20):
        a, b = rng.uniform(0.2, 3, 2)
        th, t = rng.uniform(0, np.pi), rng.normal(size=2)
        R = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
        A = R @ np.diag([1 / a**2, 1 / b**2]) @ R.T
        M = np.zeros((3, 3))
        M[:2, :2], M[:2, 2], M[2, :2] = A, -A @ t, -A @ t
        M[2, 2] = t @ A @ t - 1
        assert ellipse_area(Conic.from_matrix(M)) == pytest.approx(ellipse_polygon_area(a, b), rel=1e-6)


def test_quadric_lsq_recovers_ellipsoid(rng):
    B = random_ellipsoid(rng)
    from ellipsect.bodies import boundary_hits

    pts, _ = boundary_hits(B, B.interior, unit(rng.normal(size=(300, 3))))
    rep = fit_quadric_lsq(pts)
    assert rep.coeffs.distance(B.quadric) < 1e-10
    assert rep.residual < 1e-12
