"""Conic and quadric construction from incidence and tangency conditions.

Every condition expands into linear rows acting on the coefficient vector, so
an exactly determined fit is the null direction of a 5x6 (conic) or 9x10
(quadric) matrix. Rows are scaled to unit norm, which leaves the null space
unchanged and makes the singular values comparable across conditions.
"""

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .errors import DuplicateConditionError, NotAnEllipseError, RankDeficientError
from .kernel import RANK_TOL, Conic, ConicClass, Quadric, classify_conic, plane_frame

ELLIPSE_TOL = 1e-6
MIN_GAP = 1e3
DUPLICATE_TOL = 1e-9


def conic_monomials(uv):
    uv = np.asarray(uv, dtype=float)
    x, y = uv[..., 0], uv[..., 1]
    one = np.ones_like(x)
    return np.stack([x * x, x * y, y * y, x, y, one], axis=-1)


def conic_monomial_gradients(uv):
    """Derivatives of the conic monomials, shape ``(..., 2, 6)``."""
    uv = np.asarray(uv, dtype=float)
    x, y = uv[..., 0], uv[..., 1]
    z, one = np.zeros_like(x), np.ones_like(x)
    dx = np.stack([2 * x, y, z, one, z, z], axis=-1)
    dy = np.stack([z, x, 2 * y, z, one, z], axis=-1)
    return np.stack([dx, dy], axis=-2)


def quadric_monomials(p):
    p = np.asarray(p, dtype=float)
    x, y, z = p[..., 0], p[..., 1], p[..., 2]
    one = np.ones_like(x)
    return np.stack([x * x, y * y, z * z, x * y, x * z, y * z, x, y, z, one], axis=-1)


def quadric_monomial_gradients(p):
    """Derivatives of the quadric monomials, shape ``(..., 3, 10)``."""
    p = np.asarray(p, dtype=float)
    x, y, z = p[..., 0], p[..., 1], p[..., 2]
    o, one = np.zeros_like(x), np.ones_like(x)
    dx = np.stack([2 * x, o, o, y, z, o, one, o, o, o], axis=-1)
    dy = np.stack([o, 2 * y, o, x, o, z, o, one, o, o], axis=-1)
    dz = np.stack([o, o, 2 * z, o, x, y, o, o, one, o], axis=-1)
    return np.stack([dx, dy, dz], axis=-2)


@dataclass(frozen=True, eq=False)
class Condition:
    """A point the curve/surface must contain, optionally with a prescribed tangent.

    ``kind`` is one of ``"POINT_ON"``, ``"TANGENT_PLANE_AT"`` (3-D, ``normal``
    given) or ``"TANGENT_LINE_AT"`` (2-D, ``direction`` given).
    """

    kind: str
    point: np.ndarray
    normal: Optional[np.ndarray] = None
    direction: Optional[np.ndarray] = None

    @classmethod
    def point_on(cls, p):
        return cls("POINT_ON", np.asarray(p, dtype=float))

    @classmethod
    def tangent_plane_at(cls, p, normal):
        return cls("TANGENT_PLANE_AT", np.asarray(p, dtype=float), normal=np.asarray(normal, dtype=float))

    @classmethod
    def tangent_line_at(cls, p, direction):
        return cls("TANGENT_LINE_AT", np.asarray(p, dtype=float),
                   direction=np.asarray(direction, dtype=float))

    def rows(self):
        p = self.point
        if len(p) == 2:
            rows = [conic_monomials(p)]
            if self.kind == "TANGENT_LINE_AT":
                t = self.direction / np.linalg.norm(self.direction)
                rows.append(t @ conic_monomial_gradients(p))
            elif self.kind != "POINT_ON":
                raise ValueError(f"{self.kind} is not a 2-D condition")
        elif len(p) == 3:
            rows = [quadric_monomials(p)]
            if self.kind == "TANGENT_PLANE_AT":
                t1, t2 = plane_frame(self.normal)
                G = quadric_monomial_gradients(p)
                rows += [t1 @ G, t2 @ G]
            elif self.kind != "POINT_ON":
                raise ValueError(f"{self.kind} is not a 3-D condition")
        else:
            raise ValueError("conditions live in 2-D or 3-D")
        rows = np.array(rows)
        if not np.all(np.isfinite(rows)):
            raise ValueError("non-finite condition row")
        return rows


@dataclass(frozen=True)
class FitReport:
    coeffs: object  # Conic or Quadric
    residual: float  # RMS Sampson distance
    condition_gap: float
    max_residual: float = 0.0
    worst_index: int = -1


def condition_matrix(conditions):
    pts = [c.point for c in conditions]
    scale = max(1.0, max(np.linalg.norm(p) for p in pts))
    for i in range(len(pts)):
        for j in range(i):
            if np.linalg.norm(pts[i] - pts[j]) <= DUPLICATE_TOL * scale:
                raise DuplicateConditionError(f"conditions {j} and {i} share a point")
    M = np.vstack([c.rows() for c in conditions])
    return M / np.linalg.norm(M, axis=1, keepdims=True)


def null_direction(M, rank_tol=RANK_TOL, min_gap=MIN_GAP):
    """Unit null vector of an ``(n-1) x n`` matrix plus its condition gap.

    The gap compares the smallest singular value that must be nonzero with the
    one that must vanish.
    """
    n = M.shape[1]
    if M.shape[0] != n - 1:
        raise ValueError(f"expected {n - 1} condition rows, got {M.shape[0]}")
    _, s, Vt = np.linalg.svd(np.vstack([M, np.zeros((1, n))]))
    floor = np.finfo(float).eps * s[0]
    gap = float(s[-2] / max(s[-1], floor))
    if s[-2] <= rank_tol * s[0] or gap <= min_gap:
        raise RankDeficientError("conditions do not determine a unique solution", condition_gap=gap,
                                 singular_values=s.tolist())
    return Vt[-1], gap


def fit_conic(conditions, rank_tol=RANK_TOL):
    M = condition_matrix(conditions)
    if any(len(c.point) != 2 for c in conditions):
        raise ValueError("conic conditions must be 2-D")
    vec, _ = null_direction(M, rank_tol)
    return Conic(vec)


def fit_quadric(conditions, rank_tol=RANK_TOL):
    M = condition_matrix(conditions)
    if any(len(c.point) != 3 for c in conditions):
        raise ValueError("quadric conditions must be 3-D")
    vec, _ = null_direction(M, rank_tol)
    return Quadric(vec)


# --------------------------------------------------------------------------
# least squares


def sampson_conic(conic, uv):
    g = np.linalg.norm(conic.gradient(uv), axis=-1)
    return np.abs(conic(uv)) / np.maximum(g, 1e-300)


def sampson_quadric(quadric, pts):
    g = np.linalg.norm(quadric.gradient(pts), axis=-1)
    return np.abs(quadric(pts)) / np.maximum(g, 1e-300)


def _normalizer(pts):
    """Similarity moving the centroid to 0 and the mean distance to sqrt(dim)."""
    dim = pts.shape[1]
    m = pts.mean(axis=0)
    s = np.sqrt(dim) / max(np.mean(np.linalg.norm(pts - m, axis=1)), 1e-300)
    T = np.eye(dim + 1)
    T[:dim, :dim] *= s
    T[:dim, dim] = -s * m
    return T


def _smallest_direction(D):
    _, s, Vt = np.linalg.svd(D, full_matrices=False)
    gap = float(s[-2] / max(s[-1], np.finfo(float).eps * s[0]))
    return Vt[-1], gap


def fit_conic_lsq(curve):
    """Algebraic conic fit minimizing ``|D c|`` over ``|c| = 1`` (normalized coordinates)."""
    uv = curve.pts if hasattr(curve, "pts") else np.asarray(curve, dtype=float)
    if len(uv) < 6:
        raise ValueError("need at least 6 samples")
    T = _normalizer(uv)
    uvn = uv @ T[:2, :2].T + T[:2, 2]
    vec, gap = _smallest_direction(conic_monomials(uvn))
    conic = Conic.from_matrix(T.T @ Conic(vec).matrix @ T)
    d = sampson_conic(conic, uv)
    return FitReport(conic, float(np.sqrt(np.mean(d**2))), gap, float(d.max()), int(d.argmax()))


def fit_quadric_lsq(pts):
    """Algebraic quadric fit to 3-D points, reported with RMS Sampson distance."""
    pts = np.asarray(pts, dtype=float)
    if len(pts) < 10:
        raise ValueError("need at least 10 points")
    T = _normalizer(pts)
    pn = pts @ T[:3, :3].T + T[:3, 3]
    vec, gap = _smallest_direction(quadric_monomials(pn))
    quadric = Quadric.from_matrix(T.T @ Quadric(vec).matrix @ T)
    d = sampson_quadric(quadric, pts)
    return FitReport(quadric, float(np.sqrt(np.mean(d**2))), gap, float(d.max()), int(d.argmax()))


def ellipse_area(conic):
    if not isinstance(conic, Conic):
        conic = Conic(conic)
    if classify_conic(conic) is not ConicClass.ELLIPSE:
        raise NotAnEllipseError("conic is not a real ellipse")
    M = conic.matrix
    return float(np.pi * abs(np.linalg.det(M)) / np.linalg.det(M[:2, :2]) ** 1.5)


def curve_diameter(uv):
    from scipy.spatial import ConvexHull
    from scipy.spatial.distance import pdist

    uv = np.asarray(uv, dtype=float)
    if len(uv) > 64:
        try:
            uv = uv[ConvexHull(uv).vertices]
        except Exception:  # degenerate hull: fall back to all points
            pass
    return float(pdist(uv).max())


class EllipseTest(NamedTuple):
    is_ellipse: bool
    conic: Conic
    residual: float  # RMS Sampson distance over curve diameter
    area: float


def is_ellipse(curve, ellipse_tol=ELLIPSE_TOL):
    rep = fit_conic_lsq(curve)
    uv = curve.pts if hasattr(curve, "pts") else np.asarray(curve, dtype=float)
    rel = rep.residual / curve_diameter(uv)
    ok = rel <= ellipse_tol and classify_conic(rep.coeffs) is ConicClass.ELLIPSE
    area = ellipse_area(rep.coeffs) if ok else float("nan")
    return EllipseTest(bool(ok), rep.coeffs, float(rel), area)
