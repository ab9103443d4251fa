import json

import numpy as np
import pytest

from ellipsect.bodies import (
    CONFIG_SCHEMA,
    ConvexBody,
    Polynomial,
    boundary_hit,
    boundary_hits,
    catalog,
    chord_endpoints,
    ellipsoid,
    load_body,
    lookup,
    sphere,
)
from ellipsect.errors import NotFoundError, NotInteriorError, ParseError

from conftest import random_ellipsoid, unit
from oracles import body_c_ray_t


def test_catalog_names():
    assert catalog() == ["alonso-c", "ellipsoid", "sphere", "superellipsoid"]


def test_lookup_body_c_polynomial_and_box(body_c):
    x = np.random.default_rng(1).normal(size=(20, 3)) * 0.5
    expected = (x**2).sum(axis=1) + 1.25 * x.prod(axis=1) - 1
    assert np.allclose(body_c.g_smooth(x), expected, atol=1e-14)
    assert body_c.box == 1.0
    assert np.allclose(body_c.interior, 0)


def test_lookup_sphere_and_unknown():
    S = lookup("sphere")
    x = np.array([[0.3, -0.2, 0.9]])
    assert np.allclose(S.g(x), (x**2).sum() - 1)
    with pytest.raises(NotFoundError):
        lookup("unknown")


@pytest.mark.parametrize("u, expected", [
    ([1, 0, 0], [1, 0, 0]),
    ([0, 0, -1], [0, 0, -1]),
])
def test_sphere_boundary_hit(u, expected):
    bp = boundary_hit(sphere(), [0, 0, 0], u)
    assert np.allclose(bp.p, expected, atol=1e-15)
    assert np.allclose(bp.normal, expected)
    assert not bp.on_edge


def test_ellipsoid_boundary_hit():
    bp = boundary_hit(ellipsoid(2, 1, 1), [0, 0, 0], [1, 0, 0])
    assert np.allclose(bp.p, [2, 0, 0], atol=1e-14)


def test_body_c_hit_matches_scalar_oracle(body_c):
    u = unit([1, 1, 1])
    bp = boundary_hit(body_c, [0, 0, 0], u)
    assert np.linalg.norm(bp.p) == pytest.approx(body_c_ray_t(u), abs=1e-14)


def test_body_c_hits_many_directions(body_c, rng):
    U = unit(rng.normal(size=(200, 3)))
    pts, t = boundary_hits(body_c, np.zeros(3), U)
    ref = np.array([body_c_ray_t(u) for u in U])
    assert np.max(np.abs(t - ref)) < 1e-13


def test_hits_reach_full_precision(rng):
    B = random_ellipsoid(rng)
    U = unit(rng.normal(size=(500, 3)))
    pts, _ = boundary_hits(B, B.interior, U)
    assert np.max(np.abs(B.quadric(pts))) < 1e-13


def test_normal_points_away_from_interior(rng, body_c, superball):
    for B in (random_ellipsoid(rng), body_c, superball):
        U = unit(rng.normal(size=(100, 3)))
        pts, _ = boundary_hits(B, B.interior, U)
        ok = ~B.on_edge(pts)
        eta = B.normal(pts[ok])
        assert np.all(np.einsum("ij,ij->i", eta, pts[ok] - B.interior) > 0)


def test_body_c_edge_points(body_c):
    bp = boundary_hit(body_c, [0, 0, 0], [1, 0, 0])
    assert np.allclose(bp.p, [1, 0, 0], atol=1e-12)
    assert bp.on_edge


def test_chord_endpoints_sphere():
    a, b = chord_endpoints(sphere(), [0, 0.6, 0], [1, 0, 0])
    assert np.allclose(a, [0.8, 0.6, 0]) and np.allclose(b, [-0.8, 0.6, 0])


def test_polynomial_derivatives_match_finite_differences(rng):
    P = Polynomial([(2, 0, 0, 1), (0, 2, 0, 1), (0, 0, 2, 1), (1, 1, 1, 1.25), (4, 0, 0, 0.3), (0, 0, 0, -1)])
    x = rng.normal(size=(5, 3))
    h = 1e-6
    num = np.stack([(P(x + h * e) - P(x - h * e)) / (2 * h) for e in np.eye(3)], axis=-1)
    assert np.allclose(P.gradient(x), num, atol=1e-7)
    numH = np.stack([(P.gradient(x + h * e) - P.gradient(x - h * e)) / (2 * h) for e in np.eye(3)], axis=-1)
    assert np.allclose(P.hessian(x), numH, atol=1e-6)


def test_load_body_examples(body_c):
    S = load_body({"catalog": "sphere", "r": 1})
    assert np.allclose(boundary_hit(S, [0, 0, 0], [0, 1, 0]).p, [0, 1, 0])
    C = load_body('{"catalog": "alonso-c"}')
    assert C.box == 1.0 and np.allclose(C.interior, 0)
    sup = load_body({"polynomial": [[4, 0, 0, 1], [0, 4, 0, 1], [0, 0, 4, 1], [0, 0, 0, -1]],
                     "interior": [0, 0, 0]})
    assert boundary_hit(sup, [0, 0, 0], unit([1, 1, 0])).p[0] == pytest.approx(2 ** -0.25)


@pytest.mark.parametrize("cfg, err", [
    ({"catalog": "sphere", "radius": 1}, ParseError),
    ({"catalog": "nope"}, NotFoundError),
    ({"polynomial": [[2, 0, 0, 1]], "interior": [0, 0, 0], "colour": 1}, ParseError),
    ({"polynomial": [[2, 0, 0, 1], [0, 0, 0, -1]], "interior": [5, 0, 0]}, NotInteriorError),
    ({"polynomial": [[2, 0]]}, ParseError),
    ("{not json", ParseError),
    ([1, 2], ParseError),
])
def test_load_body_errors(cfg, err):
    with pytest.raises(err):
        load_body(cfg)


def test_config_roundtrip_is_exact(rng, body_c):
    for B in (random_ellipsoid(rng), body_c):
        B2 = load_body(json.loads(json.dumps(B.config())))
        U = unit(rng.normal(size=(100, 3)))
        p1, _ = boundary_hits(B, B.interior, U)
        p2, _ = boundary_hits(B2, B2.interior, U)
        assert np.max(np.abs(p1 - p2)) <= 1e-12


def test_schema_mentions_both_forms():
    assert "catalog" in CONFIG_SCHEMA and "polynomial" in CONFIG_SCHEMA


def test_non_interior_point_rejected():
    with pytest.raises(NotInteriorError):
        ConvexBody(Polynomial([(2, 0, 0, 1), (0, 2, 0, 1), (0, 0, 2, 1), (0, 0, 0, -1)]), interior=[2, 0, 0])


def test_radius_and_diameter(body_c):
    S = sphere(2.0)
    assert S.radius >= 2.0
    assert S.diameter == pytest.approx(4.0, rel=1e-2)
    assert body_c.diameter > 2.0
