"""Core geometric types: planes, lines, conics and quadrics.

Conics are stored as ``(A, B, C, D, E, F)`` for
``A x^2 + B xy + C y^2 + D x + E y + F = 0`` in plane coordinates.
Quadrics are stored as

    (xx, yy, zz, xy, xz, yz, x, y, z, 1)

i.e. ``q0 x^2 + q1 y^2 + q2 z^2 + q3 xy + q4 xz + q5 yz + q6 x + q7 y + q8 z + q9``.
Both are kept at unit Euclidean norm with a fixed sign, so "same curve up to
scale" is a plain vector comparison.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DegenerateRestrictionError, ParallelPlanesError

RANK_TOL = 1e-9
PARALLEL_TOL = 1e-9
_SIGN_EPS = 1e-14


def _unit(v):
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if n == 0.0:
        raise ValueError("zero vector has no direction")
    return v / n


def _first_nonzero_positive(v, eps=_SIGN_EPS):
    for x in v:
        if abs(x) > eps:
            return v if x > 0 else -v
    return v


def plane_frame(n):
    """Deterministic orthonormal basis ``(e1, e2)`` of the plane orthogonal to ``n``.

    ``e1`` is the coordinate axis least aligned with ``n``, orthogonalized
    against it; ``e2 = n x e1``.
    """
    n = _unit(n)
    k = int(np.argmin(np.abs(n)))
    e = np.zeros(3)
    e[k] = 1.0
    e1 = _unit(e - np.dot(e, n) * n)
    e2 = np.cross(n, e1)
    return e1, e2


@dataclass(frozen=True, eq=False)
class Plane:
    """The plane ``{x : <n, x> = d}``, canonicalized so the first nonzero entry of ``n`` is positive."""

    n: np.ndarray
    d: float

    def __post_init__(self):
        n = np.asarray(self.n, dtype=float)
        norm = np.linalg.norm(n)
        if norm == 0.0:
            raise ValueError("plane normal must be nonzero")
        n = n / norm
        d = float(self.d) / norm
        flipped = _first_nonzero_positive(n)
        if flipped is not n:
            n, d = -n, -d
        n.setflags(write=False)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "d", d)

    @classmethod
    def through(cls, point, normal):
        normal = np.asarray(normal, dtype=float)
        return cls(normal, float(np.dot(normal, point)))

    def __eq__(self, other):
        if not isinstance(other, Plane):
            return NotImplemented
        return np.array_equal(self.n, other.n) and self.d == other.d

    def __hash__(self):
        return hash((tuple(self.n), self.d))

    def isclose(self, other, tol=1e-12):
        return np.allclose(self.n, other.n, atol=tol) and abs(self.d - other.d) <= tol

    @property
    def origin(self):
        return self.d * self.n

    def frame(self):
        """``(origin, e1, e2)`` with the origin being the point of the plane nearest 0."""
        e1, e2 = plane_frame(self.n)
        return self.origin, e1, e2

    def signed_distance(self, x):
        return np.asarray(x, dtype=float) @ self.n - self.d

    def to_plane_coords(self, x):
        o, e1, e2 = self.frame()
        x = np.asarray(x, dtype=float) - o
        return np.stack([x @ e1, x @ e2], axis=-1)

    def lift(self, uv):
        o, e1, e2 = self.frame()
        uv = np.asarray(uv, dtype=float)
        return o + uv[..., :1] * e1 + uv[..., 1:2] * e2


@dataclass(frozen=True, eq=False)
class Line:
    """Line through ``a`` with unit direction ``u``.

    After construction ``u`` has its first nonzero entry positive and ``a`` is
    the point of the line nearest the origin.
    """

    a: np.ndarray
    u: np.ndarray

    def __post_init__(self):
        u = _first_nonzero_positive(_unit(self.u))
        a = np.asarray(self.a, dtype=float)
        a = a - np.dot(a, u) * u
        u = np.array(u)
        u.setflags(write=False)
        a.setflags(write=False)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "a", a)

    def __eq__(self, other):
        if not isinstance(other, Line):
            return NotImplemented
        return np.array_equal(self.a, other.a) and np.array_equal(self.u, other.u)

    def __hash__(self):
        return hash((tuple(self.a), tuple(self.u)))

    def isclose(self, other, tol=1e-12):
        return np.allclose(self.a, other.a, atol=tol) and np.allclose(self.u, other.u, atol=tol)

    def point(self, t):
        return self.a + np.multiply.outer(t, self.u)

    def distance_to_point(self, x):
        r = np.asarray(x, dtype=float) - self.a
        return np.linalg.norm(r - np.multiply.outer(r @ self.u, self.u), axis=-1)


def line_distance(L1, L2):
    """Distance between two lines and the midpoint of their closest approach."""
    w = L1.a - L2.a
    b = float(np.dot(L1.u, L2.u))
    denom = 1.0 - b * b
    if denom < 1e-24:
        # parallel
        r = w - np.dot(w, L2.u) * L2.u
        return float(np.linalg.norm(r)), 0.5 * (L1.a + L2.a)
    d1 = float(np.dot(L1.u, w))
    d2 = float(np.dot(L2.u, w))
    s = (b * d2 - d1) / denom
    t = (d2 - b * d1) / denom
    x1 = L1.a + s * L1.u
    x2 = L2.a + t * L2.u
    return float(np.linalg.norm(x1 - x2)), 0.5 * (x1 + x2)


def dihedral_angle(H1, H2):
    """Angle in ``[0, pi/2]`` between two planes; 0 iff parallel."""
    c = abs(float(np.dot(H1.n, H2.n)))
    return float(np.arccos(min(1.0, c)))


def intersect_planes(H1, H2, parallel_tol=PARALLEL_TOL):
    if dihedral_angle(H1, H2) <= parallel_tol:
        raise ParallelPlanesError("planes are parallel")
    u = np.cross(H1.n, H2.n)
    # point on both planes: least-norm solution of the 2x3 system
    A = np.vstack([H1.n, H2.n])
    a = np.linalg.lstsq(A, np.array([H1.d, H2.d]), rcond=None)[0]
    return Line(a, u)


# --------------------------------------------------------------------------
# conics


class ConicClass(Enum):
    ELLIPSE = "ELLIPSE"
    PARABOLA = "PARABOLA"
    HYPERBOLA = "HYPERBOLA"
    DEGENERATE = "DEGENERATE"


class QuadricClass(Enum):
    ELLIPSOID = "ELLIPSOID"
    NON_ELLIPSOID_QUADRIC = "NON_ELLIPSOID_QUADRIC"
    DEGENERATE = "DEGENERATE"


def _canonical(vec, trace):
    vec = np.asarray(vec, dtype=float)
    norm = np.linalg.norm(vec)
    if norm == 0.0:
        raise ValueError("coefficient vector is zero")
    vec = vec / norm
    tr = trace(vec)
    if tr < -_SIGN_EPS:
        vec = -vec
    elif abs(tr) <= _SIGN_EPS:
        vec = _first_nonzero_positive(vec)
    return vec


@dataclass(frozen=True, eq=False)
class Conic:
    c: np.ndarray

    def __post_init__(self):
        c = np.array(_canonical(self.c, lambda v: v[0] + v[2]))
        if c.shape != (6,):
            raise ValueError("a conic has 6 coefficients")
        c.setflags(write=False)
        object.__setattr__(self, "c", c)

    def __eq__(self, other):
        if not isinstance(other, Conic):
            return NotImplemented
        return np.array_equal(self.c, other.c)

    def __hash__(self):
        return hash(tuple(self.c))

    def distance(self, other):
        return float(np.linalg.norm(self.c - other.c))

    @property
    def matrix(self):
        A, B, C, D, E, F = self.c
        return np.array([[A, B / 2, D / 2], [B / 2, C, E / 2], [D / 2, E / 2, F]])

    @classmethod
    def from_matrix(cls, M):
        return cls([M[0, 0], 2 * M[0, 1], M[1, 1], 2 * M[0, 2], 2 * M[1, 2], M[2, 2]])

    def __call__(self, uv):
        uv = np.asarray(uv, dtype=float)
        x, y = uv[..., 0], uv[..., 1]
        A, B, C, D, E, F = self.c
        return A * x * x + B * x * y + C * y * y + D * x + E * y + F

    def gradient(self, uv):
        uv = np.asarray(uv, dtype=float)
        x, y = uv[..., 0], uv[..., 1]
        A, B, C, D, E, _ = self.c
        return np.stack([2 * A * x + B * y + D, B * x + 2 * C * y + E], axis=-1)

    def center(self):
        M = self.matrix
        return np.linalg.solve(M[:2, :2], -M[:2, 2])


def classify_conic(c, rank_tol=RANK_TOL):
    if not isinstance(c, Conic):
        c = Conic(c)
    M = c.matrix
    if np.linalg.svd(M, compute_uv=False)[-1] <= rank_tol:
        return ConicClass.DEGENERATE
    A, B, C = c.c[:3]
    disc = B * B - 4 * A * C
    if disc < -rank_tol:
        # canonical sign makes the quadratic part positive definite here
        value_at_center = np.linalg.det(M) / np.linalg.det(M[:2, :2])
        if value_at_center < 0:
            return ConicClass.ELLIPSE
        return ConicClass.DEGENERATE  # imaginary ellipse, empty real locus
    if disc > rank_tol:
        return ConicClass.HYPERBOLA
    return ConicClass.PARABOLA


# --------------------------------------------------------------------------
# quadrics


@dataclass(frozen=True, eq=False)
class Quadric:
    q: np.ndarray

    def __post_init__(self):
        q = np.array(_canonical(self.q, lambda v: v[0] + v[1] + v[2]))
        if q.shape != (10,):
            raise ValueError("a quadric has 10 coefficients")
        q.setflags(write=False)
        object.__setattr__(self, "q", q)

    def __eq__(self, other):
        if not isinstance(other, Quadric):
            return NotImplemented
        return np.array_equal(self.q, other.q)

    def __hash__(self):
        return hash(tuple(self.q))

    def distance(self, other):
        return float(np.linalg.norm(self.q - other.q))

    @property
    def matrix(self):
        a, b, c, xy, xz, yz, x, y, z, k = self.q
        return np.array(
            [
                [a, xy / 2, xz / 2, x / 2],
                [xy / 2, b, yz / 2, y / 2],
                [xz / 2, yz / 2, c, z / 2],
                [x / 2, y / 2, z / 2, k],
            ]
        )

    @classmethod
    def from_matrix(cls, M):
        return cls(
            [
                M[0, 0], M[1, 1], M[2, 2],
                2 * M[0, 1], 2 * M[0, 2], 2 * M[1, 2],
                2 * M[0, 3], 2 * M[1, 3], 2 * M[2, 3],
                M[3, 3],
            ]
        )

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        M = self.matrix
        return np.einsum("...i,ij,...j->...", x, M[:3, :3], x) + 2 * x @ M[:3, 3] + M[3, 3]

    def gradient(self, x):
        M = self.matrix
        return 2 * (np.asarray(x, dtype=float) @ M[:3, :3] + M[:3, 3])

    def hessian(self, x=None):
        return 2 * self.matrix[:3, :3]

    def transformed(self, R, t):
        """Image of the quadric under ``x -> R x + t``."""
        T = np.eye(4)
        T[:3, :3] = R
        T[:3, 3] = t
        Tinv = np.linalg.inv(T)
        return Quadric.from_matrix(Tinv.T @ self.matrix @ Tinv)


def classify_quadric(q, rank_tol=RANK_TOL):
    if not isinstance(q, Quadric):
        q = Quadric(q)
    M = q.matrix
    if np.linalg.svd(M, compute_uv=False)[-1] <= rank_tol:
        return QuadricClass.DEGENERATE
    lam = np.linalg.eigvalsh(M[:3, :3])
    if lam[0] > rank_tol:
        value_at_center = np.linalg.det(M) / np.linalg.det(M[:3, :3])
        if value_at_center < 0:
            return QuadricClass.ELLIPSOID
    return QuadricClass.NON_ELLIPSOID_QUADRIC


@dataclass(frozen=True)
class EllipsoidGeometry:
    center: np.ndarray
    axes: np.ndarray  # semi-axes, descending
    rotation: np.ndarray  # columns are the matching axis directions


def ellipsoid_geometry(q):
    """Center, semi-axes and axis directions of an ellipsoidal quadric."""
    if not isinstance(q, Quadric):
        q = Quadric(q)
    if classify_quadric(q) is not QuadricClass.ELLIPSOID:
        raise ValueError("quadric is not an ellipsoid")
    M = q.matrix
    A = M[:3, :3]
    center = np.linalg.solve(A, -M[:3, 3])
    value = float(center @ M[:3, 3] + M[3, 3])
    lam, vecs = np.linalg.eigh(A)
    axes = np.sqrt(-value / lam)
    order = np.argsort(-axes)
    return EllipsoidGeometry(center, axes[order], vecs[:, order])


def quadric_from_ellipsoid(axes, rotation=None, center=None):
    """Quadric of ``(R^T (x - c))_i^2 / a_i^2 = 1``."""
    axes = np.asarray(axes, dtype=float)
    R = np.eye(3) if rotation is None else np.asarray(rotation, dtype=float)
    c = np.zeros(3) if center is None else np.asarray(center, dtype=float)
    A = R @ np.diag(1.0 / axes**2) @ R.T
    M = np.zeros((4, 4))
    M[:3, :3] = A
    M[:3, 3] = M[3, :3] = -A @ c
    M[3, 3] = c @ A @ c - 1.0
    return Quadric.from_matrix(M)


def restrict_quadric(q, H, rank_tol=RANK_TOL):
    """The conic ``q ∩ H`` in the deterministic frame of ``H``."""
    if not isinstance(q, Quadric):
        q = Quadric(q)
    o, e1, e2 = H.frame()
    T = np.zeros((4, 3))
    T[:3, 0] = e1
    T[:3, 1] = e2
    T[:3, 2] = o
    T[3, 2] = 1.0
    C = T.T @ q.matrix @ T
    vec = np.array([C[0, 0], 2 * C[0, 1], C[1, 1], 2 * C[0, 2], 2 * C[1, 2], C[2, 2]])
    if np.linalg.norm(vec) <= rank_tol * max(1.0, abs(H.d)) ** 2:
        raise DegenerateRestrictionError("plane lies in the quadric")
    return Conic(vec)
