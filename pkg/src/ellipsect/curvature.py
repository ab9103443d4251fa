"""Normal curvature of implicit surfaces and the three-direction agreement test."""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .bodies import BoundaryPoint, boundary_point, require_smooth
from .errors import DirectionsNotDistinctError
from .kernel import plane_frame

CURVATURE_TOL = 1e-9


@dataclass(frozen=True)
class CurvaturePair:
    """Principal curvatures with ``k1 >= k2``; ``t0`` is the angle of the ``k1`` direction, in ``[0, pi)``."""

    k1: float
    k2: float
    t0: float = 0.0

    def __post_init__(self):
        k1, k2, t0 = float(self.k1), float(self.k2), float(self.t0)
        if k1 < k2:
            k1, k2, t0 = k2, k1, t0 + np.pi / 2
        object.__setattr__(self, "k1", k1)
        object.__setattr__(self, "k2", k2)
        object.__setattr__(self, "t0", float(np.mod(t0, np.pi)))

    def harmonics(self):
        """``(H, P, Q)`` with ``euler(theta) = H + P cos 2theta + Q sin 2theta``."""
        H = 0.5 * (self.k1 + self.k2)
        D = 0.5 * (self.k1 - self.k2)
        return np.array([H, D * np.cos(2 * self.t0), D * np.sin(2 * self.t0)])

    @classmethod
    def from_harmonics(cls, H, P, Q):
        D = np.hypot(P, Q)
        return cls(H + D, H - D, 0.5 * np.arctan2(Q, P))


def euler_curvature(cp, theta):
    theta = np.asarray(theta, dtype=float)
    c, s = np.cos(theta - cp.t0), np.sin(theta - cp.t0)
    return cp.k1 * c * c + cp.k2 * s * s


def shape_operator(grad, hess, normal=None):
    """Shape operator in the deterministic tangent frame of ``normal`` (defaults to the gradient direction).

    Returns the 2x2 matrix; positive eigenvalues mean the surface bends
    toward the side the gradient points away from (a sphere is positive).
    """
    grad = np.asarray(grad, dtype=float)
    gnorm = np.linalg.norm(grad)
    n = grad / gnorm if normal is None else np.asarray(normal, dtype=float)
    e1, e2 = plane_frame(n)
    E = np.stack([e1, e2], axis=1)
    return E.T @ np.asarray(hess, dtype=float) @ E / gnorm


def curvature_pair(grad, hess, normal=None):
    S = shape_operator(grad, hess, normal)
    lam, vec = np.linalg.eigh(0.5 * (S + S.T))
    v = vec[:, 1]
    return CurvaturePair(lam[1], lam[0], np.arctan2(v[1], v[0]))


def principal_curvatures(body, p):
    """Principal curvatures at a smooth boundary point, in the tangent frame of its outward normal."""
    if not isinstance(p, BoundaryPoint):
        p = boundary_point(body, p)
    require_smooth(body, p)
    x = p.p
    return curvature_pair(body.gradient_smooth(x), body.hessian(x), p.normal)


def quadric_curvatures(quadric, p, outward):
    """Curvature pair of a quadric surface at ``p``, oriented so its normal agrees with ``outward``."""
    grad = quadric.gradient(p)
    hess = quadric.hessian()
    if np.dot(grad, outward) < 0:
        grad, hess = -grad, -hess
    return curvature_pair(grad, hess, outward)


class Match(Enum):
    AGREE_EVERYWHERE = "AGREE_EVERYWHERE"
    DISAGREE = "DISAGREE"


@dataclass(frozen=True)
class MatchResult:
    status: Match
    difference: np.ndarray  # (A, B, C) of A + B cos 2theta + C sin 2theta
    witness: float = float("nan")
    max_difference: float = 0.0

    @property
    def agree(self):
        return self.status is Match.AGREE_EVERYWHERE


def match_in_three_directions(cpA, cpB, dirs, tol=CURVATURE_TOL):
    """Decide whether two normal-curvature functions agreeing at three directions agree everywhere.

    The difference of the two Euler formulas is ``A + B cos 2theta + C sin 2theta``;
    agreement is decided on ``(A, B, C)`` directly, ``tol`` being relative to
    the largest principal curvature involved.
    """
    dirs = np.asarray(dirs, dtype=float)
    if dirs.shape != (3,):
        raise ValueError("exactly three directions are required")
    for i in range(3):
        for j in range(i):
            d = np.mod(dirs[i] - dirs[j], np.pi)
            if min(d, np.pi - d) < 1e-6:
                raise DirectionsNotDistinctError("directions coincide modulo pi")
    scale = max(abs(cpA.k1), abs(cpA.k2), abs(cpB.k1), abs(cpB.k2), 1e-300)
    abc = cpA.harmonics() - cpB.harmonics()
    at_dirs = euler_curvature(cpA, dirs) - euler_curvature(cpB, dirs)
    A, B, C = abc
    amp = np.hypot(B, C)
    # extremum of |A + amp cos(2theta - phi)|
    witness = 0.5 * np.arctan2(C, B) if A >= 0 else 0.5 * np.arctan2(C, B) + np.pi / 2
    witness = float(np.mod(witness, np.pi))
    max_diff = abs(A) + amp
    if np.all(np.abs(at_dirs) <= tol * scale) and np.linalg.norm(abc) <= 3 * tol * scale:
        return MatchResult(Match.AGREE_EVERYWHERE, abc, float("nan"), float(max_diff))
    return MatchResult(Match.DISAGREE, abc, witness, float(max_diff))


def section_curvature_fd(body, p, theta, s=None):
    """Normal-section curvature at ``p`` in tangent direction ``theta`` from a three-point circle.

    Two nearby boundary points are found in the normal plane at distance
    ``+-s`` along the tangent; the circle through the three points is
    computed at ``s`` and ``s/2`` and Richardson-extrapolated.
    """
    from scipy.optimize import brentq

    if not isinstance(p, BoundaryPoint):
        p = boundary_point(body, p)
    n = p.normal
    e1, e2 = plane_frame(n)
    t = np.cos(theta) * e1 + np.sin(theta) * e2
    s = 2e-3 * body.radius if s is None else s

    def kappa(h):
        pts = [p.p]
        for sign in (1.0, -1.0):
            base = p.p + sign * h * t
            f = lambda lam: float(body.g(base - lam * n))
            hi = h
            while f(hi) > 0:
                hi *= 2
            pts.append(base - brentq(f, -h, hi, xtol=1e-16, rtol=4 * np.finfo(float).eps, maxiter=500) * n)
        a, b, c = pts
        ab, ac, bc = np.linalg.norm(a - b), np.linalg.norm(a - c), np.linalg.norm(b - c)
        cross = np.linalg.norm(np.cross(b - a, c - a))
        return 2.0 * cross / (ab * ac * bc)

    k1, k2 = kappa(s), kappa(s / 2)
    return (4.0 * k2 - k1) / 3.0
