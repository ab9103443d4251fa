"""Systems of lines, diametral chords, intersecting partners and outward fields."""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import root

from .bodies import boundary_hits, chord_endpoints, fibonacci_sphere
from .errors import CenterOutsideError, NotFoundError
from .kernel import Line, line_distance, plane_frame

N_SWEEP = 8
LINE_TOL = 1e-6


# --------------------------------------------------------------------------
# chords


@dataclass(frozen=True)
class Chord:
    line: Line
    length: float
    ends: tuple  # (exit along +u, exit along -u)
    offset: np.ndarray  # translate coordinates in the frame orthogonal to u


def _chords(body, bases, u, n_samples=65):
    """Chord data for lines ``bases + t u``: lengths, both endpoints and their normals.

    Lines missing the interior get length 0 and NaN endpoints.
    """
    bases = np.atleast_2d(bases)
    R = body.radius
    t0 = (body.interior - bases) @ u
    ts = t0[:, None] + np.linspace(-R, R, n_samples)[None, :]
    vals = body.g(bases[:, None, :] + ts[..., None] * u)
    k = vals.argmin(axis=1)
    hit = vals[np.arange(len(bases)), k] < 0
    lengths = np.zeros(len(bases))
    plus = np.full(bases.shape, np.nan)
    minus = np.full(bases.shape, np.nan)
    if hit.any():
        start = bases[hit] + ts[hit, k[hit]][:, None] * u
        nh = len(start)
        dirs = np.concatenate([np.tile(u, (nh, 1)), np.tile(-u, (nh, 1))])
        pts, _ = boundary_hits(body, np.concatenate([start, start]), dirs)
        plus[hit], minus[hit] = pts[:nh], pts[nh:]
        lengths[hit] = (plus[hit] - minus[hit]) @ u
    return lengths, plus, minus


def _chord_gradient(body, plus, minus, u, E):
    """Derivative of chord length with respect to translating the line along the columns of ``E``."""
    n_plus = body.gradient(plus)
    n_minus = body.gradient(minus)
    gp = -(n_plus @ E) / (n_plus @ u)[:, None]
    gm = -(n_minus @ E) / (n_minus @ u)[:, None]
    return gp - gm


def longest_chord(body, u, guess=None, grid=17, max_iter=40):
    """Longest chord of ``body`` parallel to ``u``.

    A ``grid x grid`` scan over translates in the disc of the bounding radius
    picks a start (skipped when ``guess``, a point near the expected line, is
    given); Newton iterations on the stationarity of the chord length (its
    gradient is exact from the endpoint normals, its Jacobian by central
    differences) then converge to the maximum. Chord length is concave over
    translates, so the stationary point is the maximum.
    """
    u = np.asarray(u, dtype=float)
    u = u / np.linalg.norm(u)
    e1, e2 = plane_frame(u)
    E = np.stack([e1, e2], axis=1)
    R = body.radius
    origin = body.interior - np.dot(body.interior, u) * u

    def bases(S):
        return origin + np.atleast_2d(S) @ E.T

    if guess is None:
        s = np.linspace(-R, R, grid)
        S = np.stack(np.meshgrid(s, s, indexing="ij"), axis=-1).reshape(-1, 2)
        lengths, _, _ = _chords(body, bases(S), u)
        x = S[int(np.argmax(lengths))]
        if lengths.max() <= 0:
            raise NotFoundError("no chord parallel to direction meets the interior")
    else:
        x = (np.asarray(guess, dtype=float) - origin) @ E

    h = 1e-6 * R
    steps = np.array([[0, 0], [h, 0], [-h, 0], [0, h], [0, -h]])
    for _ in range(max_iter):
        L, P, M = _chords(body, bases(x + steps), u)
        if np.any(L <= 0):
            break
        G = _chord_gradient(body, P, M, u, E)
        J = np.column_stack([(G[1] - G[2]) / (2 * h), (G[3] - G[4]) / (2 * h)])
        J = 0.5 * (J + J.T)
        try:
            step = -np.linalg.solve(J, G[0])
        except np.linalg.LinAlgError:
            step = G[0] * R
        if np.any(np.linalg.eigvalsh(J) >= 0):
            step = G[0] * (0.1 * R / max(np.linalg.norm(G[0]), 1e-300))
        # backtrack on the (concave) chord length
        accepted = False
        for _ in range(30):
            L_new, _, _ = _chords(body, bases(x + step), u)
            if L_new[0] >= L[0] - 1e-15 * R:
                accepted = True
                break
            step = 0.5 * step
        if not accepted:
            break
        x = x + step
        if np.linalg.norm(step) <= 1e-14 * R:
            break
    L, P, M = _chords(body, bases(x), u)
    return Chord(Line(P[0], u), float(L[0]), (P[0], M[0]), x)


# --------------------------------------------------------------------------
# systems of lines


class LineSystem:
    """A line for every direction, with ``at(u) == at(-u)``.

    ``line_fn(u, hint)`` returns the line parallel to ``u``; ``hint`` is an
    optional point near the expected answer that implementations may use as a
    warm start.
    """

    def __init__(self, line_fn, name="custom"):
        self._fn = line_fn
        self.name = name

    def at(self, u, hint=None):
        u = np.asarray(u, dtype=float)
        u = u / np.linalg.norm(u)
        return self._fn(u, hint)

    def delta(self, u):
        """Point of ``at(u)`` nearest the origin."""
        return self.at(u).a

    @classmethod
    def through_point(cls, c):
        c = np.asarray(c, dtype=float)
        return cls(lambda u, hint: Line(c, u), name="pencil")

    @classmethod
    def diametral(cls, body):
        return cls(lambda u, hint: longest_chord(body, u, guess=hint).line, name="diametral")


def lipschitz_estimate(system, n_pairs=100, step=1e-3, seed=0):
    """Largest ``|delta(u) - delta(u')| / |u - u'|`` over random nearby pairs."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_pairs):
        u = rng.normal(size=3)
        u /= np.linalg.norm(u)
        v = u + step * rng.normal(size=3)
        v /= np.linalg.norm(v)
        du, dv = system.delta(u), system.delta(v)
        worst = max(worst, np.linalg.norm(du - dv) / np.linalg.norm(u - v))
    return float(worst)


@dataclass(frozen=True)
class Partner:
    v: np.ndarray
    distance: float
    point: np.ndarray  # common point of the two lines (closest-approach midpoint)
    line: Line


def find_intersecting_partner(system, u, tol=LINE_TOL, n_sweep=N_SWEEP, offset_tol=1e-12):
    """A direction ``v`` orthogonal to ``u`` whose system line meets ``at(u)``.

    Lines parallel to the plane ``H`` orthogonal to ``u`` through ``at(u)``
    project to a system of lines in ``H``; the signed offset ``f(phi)`` of the
    projected line of direction ``w(phi)`` from the point ``at(u) ∩ H`` is odd
    under ``phi -> phi + pi``, so it changes sign on ``[0, pi]``. A sweep
    locates a sign change and Illinois false position drives the offset to
    ``offset_tol``.
    """
    u = np.asarray(u, dtype=float)
    u = u / np.linalg.norm(u)
    Lu = system.at(u)
    c = Lu.a
    e1, e2 = plane_frame(u)

    def w(phi):
        return np.cos(phi) * e1 + np.sin(phi) * e2

    def offset(phi, hint=None):
        wv = w(phi)
        Lw = system.at(wv, hint=hint)
        return float(np.dot(Lw.a - c, np.cross(u, wv))), Lw

    def finish(phi, Lw):
        d, x = line_distance(Lu, Lw)
        if d > tol:
            raise NotFoundError("sign change without an intersection: system looks discontinuous",
                                distance=d)
        return Partner(w(phi), d, x, Lw)

    phis = np.linspace(0.0, np.pi, n_sweep + 1)
    f0, L0 = offset(phis[0])
    if abs(f0) <= offset_tol:
        return finish(phis[0], L0)
    lo, f_lo, L_lo = phis[0], f0, L0
    for k in range(1, n_sweep + 1):
        if k == n_sweep:
            # w(pi) = -w(0): same line, opposite signed offset
            f_k, L_k = -f0, L0
        else:
            f_k, L_k = offset(phis[k], hint=L_lo.a)
        if abs(f_k) <= offset_tol:
            return finish(phis[k], L_k)
        if np.sign(f_k) != np.sign(f_lo):
            hi, f_hi, L_hi = phis[k], f_k, L_k
            break
        lo, f_lo, L_lo = phis[k], f_k, L_k
    # Illinois false position on the bracketing sweep interval
    side = 0
    for _ in range(200):
        mid = lo - f_lo * (hi - lo) / (f_hi - f_lo)
        if not lo < mid < hi:
            mid = 0.5 * (lo + hi)
            if mid <= lo or mid >= hi:
                break
        f_m, L_m = offset(mid, hint=L_lo.a)
        if abs(f_m) <= offset_tol:
            return finish(mid, L_m)
        if np.sign(f_m) == np.sign(f_lo):
            lo, f_lo, L_lo = mid, f_m, L_m
            if side == -1:
                f_hi *= 0.5
            side = -1
        else:
            hi, f_hi, L_hi = mid, f_m, L_m
            if side == 1:
                f_lo *= 0.5
            side = 1
    if abs(f_lo) <= abs(f_hi):
        return finish(lo, L_lo)
    return finish(hi, L_hi)


# --------------------------------------------------------------------------
# outward fields


@dataclass(frozen=True, eq=False)
class OutwardField:
    """Unit vectors ``directions[i]`` attached to boundary samples ``points[i]``.

    ``kind`` selects how partners are searched when no sampled pair of lines
    meets: ``"normal"`` uses the nearest/farthest point construction about the
    chord midpoint, ``"system"`` uses :func:`find_intersecting_partner` on
    ``system`` (``system_dirs[i]`` is the direction whose line produced sample ``i``).
    """

    points: np.ndarray
    directions: np.ndarray
    kind: str = "sampled"
    system: Optional[LineSystem] = None
    system_dirs: Optional[np.ndarray] = None

    def __len__(self):
        return len(self.points)

    def line(self, i):
        return Line(self.points[i], self.directions[i])


def normal_field(body, dirs):
    """Outward normals at the boundary points hit along ``dirs`` from the interior point."""
    pts, _ = boundary_hits(body, body.interior, dirs)
    return OutwardField(pts, body.normal(pts), kind="normal")


def constant_field(body, dirs, v):
    pts, _ = boundary_hits(body, body.interior, dirs)
    v = np.asarray(v, dtype=float)
    return OutwardField(pts, np.tile(v / np.linalg.norm(v), (len(pts), 1)))


def inward_field(body, dirs):
    f = normal_field(body, dirs)
    return OutwardField(f.points, -f.directions)


def check_center(body, system, n_pairs=1000, seed=0, tol=LINE_TOL):
    """Sample pairwise near-intersections of system lines; all must lie inside the body.

    Returns the number of near-intersecting pairs found; raises
    :class:`CenterOutsideError` on the first one outside.
    """
    rng = np.random.default_rng(seed)
    U = rng.normal(size=(2 * n_pairs, 3))
    U /= np.linalg.norm(U, axis=1, keepdims=True)
    found = 0
    for k in range(n_pairs):
        L1, L2 = system.at(U[2 * k]), system.at(U[2 * k + 1])
        d, x = line_distance(L1, L2)
        if d <= tol:
            found += 1
            if not body.g(x) < 0:
                raise CenterOutsideError("system lines meet outside the body", point=x.tolist())
    return found


def outward_from_system(body, system, dirs, check_pairs=0, seed=0):
    """Outward field induced by a line system on the exit points of its sampled lines.

    Each sampled direction ``u`` contributes the point where ``at(u)`` leaves
    the body along ``+u``, with ``Psi = u`` there. Lines missing the interior
    mean the system's center is not inside the body.
    """
    from .sections import line_meets_interior

    dirs = np.atleast_2d(np.asarray(dirs, dtype=float))
    dirs = dirs / np.linalg.norm(dirs, axis=1, keepdims=True)
    if check_pairs:
        check_center(body, system, check_pairs, seed)
    pts = []
    for u in dirs:
        L = system.at(u)
        ok, w = line_meets_interior(body, L)
        if not ok:
            raise CenterOutsideError("a system line misses the interior", direction=u.tolist())
        p, _ = boundary_hits(body, w, u[None, :])
        pts.append(p[0])
    return OutwardField(np.array(pts), dirs.copy(), kind="system", system=system, system_dirs=dirs.copy())


@dataclass(frozen=True)
class PartnerMatch:
    q: np.ndarray
    direction: np.ndarray
    point: np.ndarray  # common interior point of L_p and L_q
    distance: float
    index: int = -1  # sample index of q, -1 when found off-sample


def _sampled_partner(body, field, i, tol):
    P, U = field.points, field.directions
    p, u = P[i], U[i]
    w = p - P
    b = U @ u
    denom = 1.0 - b * b
    ok = denom > 1e-12
    d1 = w @ u
    d2 = np.einsum("ij,ij->i", U, w)
    s = np.where(ok, (b * d2 - d1) / np.where(ok, denom, 1.0), 0.0)
    t = np.where(ok, (d2 - b * d1) / np.where(ok, denom, 1.0), 0.0)
    x1 = p + s[:, None] * u
    x2 = P + t[:, None] * U
    dist = np.linalg.norm(x1 - x2, axis=1)
    mid = 0.5 * (x1 + x2)
    # q must not lie on L_p
    off_line = np.linalg.norm((P - p) - np.outer((P - p) @ u, u), axis=1) > tol
    cand = ok & off_line & (dist <= tol)
    cand[i] = False
    if not cand.any():
        return None
    inside = np.zeros(len(P), dtype=bool)
    inside[cand] = body.g(mid[cand]) < 0
    good = np.nonzero(inside)[0]
    if len(good) == 0:
        return None
    # prefer the most transversal partner
    j = int(good[np.argmin(np.abs(b[good]))])
    return PartnerMatch(P[j], U[j], mid[j], float(dist[j]), j)


def _radial_stationary(body, O, w0):
    """Boundary point ``q`` seen from ``O`` whose normal is parallel to ``q - O``, started near ``w0``."""
    f1, f2 = plane_frame(w0)

    def point(xy):
        w = w0 + xy[0] * f1 + xy[1] * f2
        w = w / np.linalg.norm(w)
        q, _ = boundary_hits(body, O, w[None, :])
        return q[0], w

    def resid(xy):
        q, w = point(xy)
        n = body.normal(q)
        n_perp = n - (n @ w) * w
        return [float(n_perp @ f1), float(n_perp @ f2)]

    sol = root(resid, np.zeros(2), method="hybr", options={"xtol": 1e-14})
    return point(sol.x)[0]


def _normal_partner(body, field, i, tol, n_dirs=256):
    """Nearest or farthest boundary point from the midpoint of the normal chord at ``p``.

    Its normal line passes through that midpoint, which is interior.
    """
    from .sections import line_meets_interior

    p, u = field.points[i], field.directions[i]
    Lp = Line(p, u)
    ok, w = line_meets_interior(body, Lp)
    if not ok:
        return None
    a, b = chord_endpoints(body, w, u)
    O = 0.5 * (a + b)
    dirs = fibonacci_sphere(n_dirs)
    _, r = boundary_hits(body, O, dirs)
    for k in (int(np.argmin(r)), int(np.argmax(r))):
        q = _radial_stationary(body, O, dirs[k])
        if Lp.distance_to_point(q) <= tol:
            continue
        nq = body.normal(q)
        d, x = line_distance(Lp, Line(q, nq))
        if d <= tol and body.g(x) < 0:
            return PartnerMatch(q, nq, x, d)
    return None


def _system_partner(body, field, i, tol):
    u = field.system_dirs[i]
    p = field.points[i]
    try:
        part = find_intersecting_partner(field.system, u, tol)
    except NotFoundError:
        return None
    if not body.g(part.point) < 0:
        return None
    v = part.v
    q, _ = boundary_hits(body, part.point, v[None, :])
    if Line(p, u).distance_to_point(q[0]) <= tol:
        q, _ = boundary_hits(body, part.point, -v[None, :])
        v = -v
    return PartnerMatch(q[0], v, part.point, part.distance)


def find_partner(body, field, i, tol=LINE_TOL):
    """A boundary point ``q`` off ``L_p`` whose field line meets ``L_p`` inside the body, or ``None``."""
    match = _sampled_partner(body, field, i, tol)
    if match is not None:
        return match
    if field.kind == "system" and field.system is not None:
        return _system_partner(body, field, i, tol)
    if field.kind == "normal":
        return _normal_partner(body, field, i, tol)
    return None


@dataclass
class OutwardReport:
    n: int
    n_pass: int
    tangent_failures: int
    inward_failures: int
    partner_failures: int
    worst_alignment: float  # min <Psi, eta> over samples
    worst_point: list
    partner_failure_points: list
    tangent_failure_points: list = field(default_factory=list)
    inward_failure_points: list = field(default_factory=list)

    @property
    def passed(self):
        return self.n_pass == self.n

    def to_dict(self):
        d = dict(self.__dict__)
        d["passed"] = self.passed
        return d


def verify_outward(body, field, tol=LINE_TOL, check_partners=True):
    """Check both defining properties of an outward function on the field's samples.

    (i) ``|<Psi, eta>| > tol`` (line not tangent) and ``<Psi, eta> > 0`` (the
    ray ``p + t Psi`` leaves the body); (ii) some other line of the field
    meets ``L_p`` at an interior point.
    """
    eta = body.normal(field.points)
    align = np.einsum("ij,ij->i", field.directions, eta)
    tangent = np.abs(align) <= tol
    inward = (~tangent) & (align < 0)
    ok = ~(tangent | inward)
    partner_fail = []
    if check_partners:
        for i in range(len(field)):
            if find_partner(body, field, i, tol) is None:
                ok[i] = False
                partner_fail.append(i)
    k = int(np.argmin(align))
    return OutwardReport(
        n=len(field),
        n_pass=int(ok.sum()),
        tangent_failures=int(tangent.sum()),
        inward_failures=int(inward.sum()),
        partner_failures=len(partner_fail),
        worst_alignment=float(align[k]),
        worst_point=field.points[k].tolist(),
        partner_failure_points=[field.points[i].tolist() for i in partner_fail[:10]],
        tangent_failure_points=field.points[tangent][:10].tolist(),
        inward_failure_points=field.points[inward][:10].tolist(),
    )
