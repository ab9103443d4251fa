import csv
import json

import numpy as np
import pytest

from ellipsect.bodies import boundary_hits, load_body, lookup
from ellipsect.cli import UsageError, parse_line, parse_plane, run
from ellipsect.kernel import Conic, Plane

from conftest import unit
from oracles import BODY_C_Z_HALF_CONIC


def report(tmp_path, argv, code=0):
    out = tmp_path / "report.json"
    assert run(argv + ["--out", str(out)]) == code
    return json.loads(out.read_text())


@pytest.mark.parametrize("text, n, d", [
    ("z=0.5", [0, 0, 1], 0.5),
    ("x-2y=1", [1, -2, 0], 1),
    ("-x + 0.5*y + 2z = -3", [-1, 0.5, 2], -3),
    ("1e-1x+y=0", [0.1, 1, 0], 0),
])
def test_parse_plane(text, n, d):
    assert parse_plane(text) == Plane(n, d)


@pytest.mark.parametrize("text", ["z", "z=0=1", "w=1", "0x=1", "x y=1", "z=abc", "2=z"])
def test_parse_plane_rejects(text):
    with pytest.raises(UsageError):
        parse_plane(text)


def test_parse_line():
    L = parse_line("0,0,0:0,0,2")
    assert np.allclose(L.u, [0, 0, 1])
    with pytest.raises(UsageError):
        parse_line("0,0,0:0,0,0")


def test_catalog_lists_bodies(tmp_path):
    rep = report(tmp_path, ["catalog"])
    assert {"sphere", "ellipsoid", "superellipsoid", "alonso-c"} <= set(rep["bodies"])
    assert rep["tool"] == "ellipsect" and rep["command"] == "catalog"


def test_section_csv_and_conic(tmp_path):
    csv_path = tmp_path / "s.csv"
    fig = tmp_path / "s.png"
    rep = report(tmp_path, ["section", "--body", "catalog:alonso-c", "--plane", "z=0.5",
                            "--csv", str(csv_path), "--figure", str(fig)])
    assert rep["is_ellipse"] and rep["conic_class"] == "ELLIPSE"
    assert rep["area"] == pytest.approx(12 * np.pi / np.sqrt(231), rel=1e-9)
    assert fig.stat().st_size > 0
    with open(csv_path) as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 256 and list(rows[0]) == ["idx", "u", "v", "x", "y", "z"]
    xy = np.array([[float(r["x"]), float(r["y"])] for r in rows])
    assert np.allclose([float(r["z"]) for r in rows], 0.5, atol=1e-15)
    assert np.max(np.abs(Conic(BODY_C_Z_HALF_CONIC)(xy))) < 1e-9


def test_section_sweep(tmp_path):
    rep = report(tmp_path, ["section", "--body", "catalog:ellipsoid", "--a", "2",
                            "--line", "0,0,0:0,0,1", "--sweep", "6"])
    assert len(rep["elliptic_planes"]) == 6


def test_fit_conic_exact_and_collinear(tmp_path):
    good = tmp_path / "c.csv"
    good.write_text("u,v\n1,0\n0,1\n-1,0\n0,-1\n0.6,0.8\n")
    rep = report(tmp_path, ["fit-conic", "--points", str(good)])
    assert rep["method"] == "exact" and rep["class"] == "ELLIPSE"
    assert rep["area"] == pytest.approx(np.pi)
    bad = tmp_path / "l.csv"
    bad.write_text("0,0\n1,1\n2,2\n3,3\n4,4\n")
    assert run(["fit-conic", "--points", str(bad)]) == 2


def test_fit_quadric_lsq(tmp_path, rng):
    pts = unit(rng.normal(size=(40, 3))) * [2, 1, 1]
    path = tmp_path / "q.csv"
    np.savetxt(path, pts, delimiter=",")
    rep = report(tmp_path, ["fit-quadric", "--points", str(path)])
    assert rep["class"] == "ELLIPSOID"
    assert sorted(rep["axes"]) == pytest.approx([1, 1, 2])


def test_dump_round_trip(tmp_path, rng):
    rep = report(tmp_path, ["catalog", "--dump", "--body", "catalog:ellipsoid", "--a", "2", "--b", "1.5",
                            "--c", "0.7", "--rotvec", "0.1,0.2,0.3", "--center", "0.5,0,-0.2"])
    path = tmp_path / "body.json"
    path.write_text(json.dumps(rep["config"]))
    orig = lookup("ellipsoid", a=2, b=1.5, c=0.7, rotvec=(0.1, 0.2, 0.3), center=(0.5, 0, -0.2))
    again = load_body(str(path))
    dirs = unit(rng.normal(size=(100, 3)))
    a, _ = boundary_hits(orig, orig.interior, dirs)
    b, _ = boundary_hits(again, orig.interior, dirs)
    assert np.max(np.abs(a - b)) <= 1e-12
    c, _ = boundary_hits(load_body(rep), orig.interior, dirs)
    assert np.max(np.abs(a - c)) <= 1e-12


def test_curvature_partner_and_match_commands(tmp_path):
    rep = report(tmp_path, ["curvature", "--body", "catalog:ellipsoid", "--a", "2", "--point", "2,0,0"])
    assert rep["k1"] == pytest.approx(2) and rep["k2"] == pytest.approx(2)
    rep = report(tmp_path, ["lemma1", "--body", "catalog:sphere", "--u", "0,0,1"])
    assert rep["distance"] <= 1e-6
    fig = tmp_path / "l2.png"
    rep = report(tmp_path, ["lemma2", "--pair-a", "2,1,0", "--pair-b", "1,2,0",
                            "--dirs", "0.7853981633974483,2.356194490192345,0.1", "--figure", str(fig)])
    assert rep["status"] == "DISAGREE" and fig.exists()


def test_outward(tmp_path):
    assert report(tmp_path, ["outward", "--body", "catalog:alonso-c", "--n", "20"])["passed"]
    assert not report(tmp_path, ["outward", "--body", "catalog:sphere", "--field", "inward", "--n", "20"])["passed"]


def test_certify2_ellipsoid(tmp_path):
    fig = tmp_path / "v.png"
    rep = report(tmp_path, ["certify2", "--body", "catalog:ellipsoid", "--a", "2", "--n-points", "8",
                            "--expect", "ellipsoid", "--figure", str(fig)])
    assert rep["status"] == "ELLIPSOID"
    assert sorted(rep["axes"]) == pytest.approx([1, 1, 2], rel=1e-9)
    assert fig.exists()


def test_certify4_expect_fails_on_superellipsoid(tmp_path):
    rep = report(tmp_path, ["certify4", "--body", "catalog:superellipsoid", "--n-points", "4",
                            "--expect", "ellipsoid"], code=1)
    assert rep["status"] == "NOT_ELLIPSOID" and "witness" in rep


def test_usage_errors(tmp_path, capsys):
    assert run(["section", "--body", "catalog:sphere"]) == 2
    assert run(["section", "--body", "catalog:sphere", "--plane", "q=1"]) == 2
    assert run(["certify2", "--body", "catalog:sphere", "--alpha", "-1"]) == 2
    assert run(["nonsense"]) == 2
    assert run(["section", "--body", "catalog:nope", "--plane", "z=0"]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text('{"polynomial": [[1, 2]]}')
    assert run(["section", "--body", str(bad), "--plane", "z=0"]) == 2
    assert "catalog" in capsys.readouterr().err
