"""Plane and line sections of a body."""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from .bodies import boundary_hits
from .errors import NoIntersectionError
from .kernel import Line, Plane, plane_frame

G_STRICT = 1e-8
M_FIT = 256
M_AREA = 4096


@dataclass(frozen=True, eq=False)
class PlanarCurve:
    """Ordered boundary samples of ``bd K ∩ host``.

    ``pts`` are 2-D coordinates in the host plane's deterministic frame,
    ordered by polar angle about ``center`` (also frame coordinates).
    """

    host: Plane
    pts: np.ndarray
    center: np.ndarray

    @property
    def frame(self):
        return self.host.frame()

    @property
    def points3d(self):
        return self.host.lift(self.pts)

    def __len__(self):
        return len(self.pts)


def polygon_area(pts):
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def plane_meets_interior(body, H, g_strict=G_STRICT, grid=21):
    """Whether ``H`` cuts the interior; returns ``(flag, witness or None)``.

    Coarse grid over a disc of the bounding radius, then Nelder-Mead descent
    on ``g`` restricted to the plane when the grid alone is not conclusive.
    """
    o, e1, e2 = H.frame()
    c0 = body.interior - H.signed_distance(body.interior) * H.n
    R = body.radius
    if abs(H.signed_distance(body.interior)) > R:
        return False, None
    s = np.linspace(-R, R, grid)
    uu, vv = np.meshgrid(s, s, indexing="ij")
    pts = c0 + uu[..., None] * e1 + vv[..., None] * e2
    vals = body.g(pts)
    k = np.unravel_index(np.argmin(vals), vals.shape)
    best = pts[k]
    if vals[k] < -g_strict:
        return True, best

    def f(st):
        return float(body.g(best + st[0] * e1 + st[1] * e2))

    step = 2 * R / (grid - 1)
    res = minimize(f, np.zeros(2), method="Nelder-Mead",
                   options={"xatol": 1e-13 * R, "fatol": 1e-15, "maxiter": 2000,
                            "initial_simplex": [[0, 0], [step, 0], [0, step]]})
    w = best + res.x[0] * e1 + res.x[1] * e2
    if res.fun < -g_strict:
        return True, w
    return False, None


def line_meets_interior(body, L, g_strict=G_STRICT, n_samples=129):
    """Whether the line ``L`` meets the interior; returns ``(flag, witness or None)``."""
    t0 = float(np.dot(body.interior - L.a, L.u))
    R = body.radius
    if L.distance_to_point(body.interior) > R:
        return False, None
    ts = t0 + np.linspace(-R, R, n_samples)
    vals = body.g(L.point(ts))
    k = int(np.argmin(vals))
    if vals[k] < -g_strict:
        return True, L.point(ts[k])
    h = ts[1] - ts[0]
    res = minimize_scalar(lambda t: float(body.g(L.point(t))), bounds=(ts[k] - h, ts[k] + h),
                          method="bounded", options={"xatol": 1e-14 * R})
    if res.fun < -g_strict:
        return True, L.point(res.x)
    return False, None


def _section_dirs(H, m):
    _, e1, e2 = H.frame()
    phi = 2 * np.pi * np.arange(m) / m
    return np.cos(phi)[:, None] * e1 + np.sin(phi)[:, None] * e2


def extract_sections(body, planes, witnesses, m=M_FIT):
    """Batched :func:`extract_section` for planes with known interior witnesses."""
    planes = list(planes)
    if not planes:
        return []
    dirs = np.concatenate([_section_dirs(H, m) for H in planes])
    origins = np.repeat(np.asarray(witnesses, dtype=float), m, axis=0)
    pts, _ = boundary_hits(body, origins, dirs)
    # recenter at the sample centroid and cast again
    centers = pts.reshape(len(planes), m, 3).mean(axis=1)
    for i, H in enumerate(planes):
        centers[i] -= H.signed_distance(centers[i]) * H.n
    inside = body.g(centers) < 0
    centers = np.where(inside[:, None], centers, np.asarray(witnesses, dtype=float))
    pts, _ = boundary_hits(body, np.repeat(centers, m, axis=0), dirs)
    pts = pts.reshape(len(planes), m, 3)
    return [
        PlanarCurve(H, H.to_plane_coords(pts[i]), H.to_plane_coords(centers[i]))
        for i, H in enumerate(planes)
    ]


def extract_section(body, H, m=M_FIT, witness=None):
    """Sample ``bd K ∩ H`` along ``m`` equally spaced in-plane directions."""
    if witness is None:
        ok, witness = plane_meets_interior(body, H)
        if not ok:
            raise NoIntersectionError("plane does not cut the interior")
    elif not body.g(witness) < 0:
        raise NoIntersectionError("witness is not interior")
    return extract_sections(body, [H], [witness], m)[0]


def plane_crossings(curve, H):
    """Points where the closed polygon ``curve`` crosses plane ``H`` (linear interpolation)."""
    P = curve.points3d
    s = H.signed_distance(P)
    s_next = np.roll(s, -1)
    P_next = np.roll(P, -1, axis=0)
    idx = np.nonzero((s == 0) | (np.sign(s) * np.sign(s_next) < 0))[0]
    out = []
    for i in idx:
        if s[i] == 0:
            out.append(P[i])
        else:
            lam = s[i] / (s[i] - s_next[i])
            out.append(P[i] + lam * (P_next[i] - P[i]))
    return np.array(out).reshape(-1, 3)


def pencil_plane(axis, theta):
    """Plane containing ``axis`` at angle ``theta`` in the pencil about it."""
    e1, e2 = plane_frame(axis.u)
    n = np.cos(theta) * e1 + np.sin(theta) * e2
    return Plane(n, float(np.dot(n, axis.a)))


def line_through(p, q):
    return Line(p, np.asarray(q, dtype=float) - np.asarray(p, dtype=float))
