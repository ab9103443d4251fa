"""Convex bodies given by an implicit function ``g`` (negative inside).

Catalog bodies and config-file bodies are all polynomials, which gives exact
gradients and Hessians. Arbitrary callables are accepted through the Python
API; their derivatives fall back to central finite differences.
"""

import json
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.spatial.transform import Rotation

from .errors import EdgePointError, NoBracketError, NotFoundError, NotInteriorError, ParseError
from .kernel import quadric_from_ellipsoid

G_TOL = 1e-10
EDGE_TOL = 1e-6
MAX_BISECT = 200


def fibonacci_sphere(n):
    """``n`` nearly uniform unit vectors."""
    i = np.arange(n) + 0.5
    z = 1.0 - 2.0 * i / n
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    phi = np.pi * (3.0 - np.sqrt(5.0)) * i
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=-1)


class Polynomial:
    """Sum of ``coeff * x**ex * y**ey * z**ez`` terms, vectorized over ``(..., 3)`` inputs."""

    def __init__(self, terms):
        merged = {}
        for ex, ey, ez, coeff in terms:
            exps = (int(ex), int(ey), int(ez))
            if min(exps) < 0:
                raise ParseError("negative exponent in polynomial term")
            merged[exps] = merged.get(exps, 0.0) + float(coeff)
        self.terms = tuple((*k, v) for k, v in sorted(merged.items()) if v != 0.0)
        self._exps = np.array([t[:3] for t in self.terms], dtype=int).reshape(-1, 3)
        self._coef = np.array([t[3] for t in self.terms], dtype=float)
        self.degree = int(self._exps.sum(axis=1).max()) if self.terms else 0
        self._quad = self._quadratic_form() if self.degree <= 2 else None

    def _quadratic_form(self):
        A, b, c = np.zeros((3, 3)), np.zeros(3), 0.0
        for e, coef in zip(self._exps, self._coef):
            nz = np.nonzero(e)[0]
            if len(nz) == 0:
                c += coef
            elif e.sum() == 1:
                b[nz[0]] += coef
            elif len(nz) == 1:
                A[nz[0], nz[0]] += coef
            else:
                A[nz[0], nz[1]] += coef / 2
                A[nz[1], nz[0]] += coef / 2
        return A, b, c

    def _powers(self, x):
        x = np.asarray(x, dtype=float)
        deg = max(self.degree, 2)
        pw = np.empty((3, deg + 1) + x.shape[:-1])
        pw[:, 0] = 1.0
        for k in range(3):
            for j in range(1, deg + 1):
                pw[k, j] = pw[k, j - 1] * x[..., k]
        return pw

    @staticmethod
    def _term(pw, e):
        # pw[k, -1] is never used as a real power: callers guard e>=0
        return pw[0, e[0]] * pw[1, e[1]] * pw[2, e[2]]

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self._quad is not None:
            A, b, c = self._quad
            return np.einsum("...i,...i->...", x @ A, x) + x @ b + c
        pw = self._powers(x)
        mono = pw[0, self._exps[:, 0]] * pw[1, self._exps[:, 1]] * pw[2, self._exps[:, 2]]
        return np.tensordot(self._coef, mono, axes=1)

    def gradient(self, x):
        pw = self._powers(x)
        out = np.zeros(pw.shape[2:] + (3,))
        for e, c in zip(self._exps, self._coef):
            for k in range(3):
                if e[k] == 0:
                    continue
                d = e.copy()
                d[k] -= 1
                out[..., k] += c * e[k] * self._term(pw, d)
        return out

    def hessian(self, x):
        pw = self._powers(x)
        out = np.zeros(pw.shape[2:] + (3, 3))
        for e, c in zip(self._exps, self._coef):
            for i in range(3):
                for j in range(i, 3):
                    d = e.copy()
                    if i == j:
                        if e[i] < 2:
                            continue
                        f = e[i] * (e[i] - 1)
                        d[i] -= 2
                    else:
                        if e[i] == 0 or e[j] == 0:
                            continue
                        f = e[i] * e[j]
                        d[i] -= 1
                        d[j] -= 1
                    v = c * f * self._term(pw, d)
                    out[..., i, j] += v
                    if i != j:
                        out[..., j, i] += v
        return out


def _quadric_terms(quadric):
    names = [(2, 0, 0), (0, 2, 0), (0, 0, 2), (1, 1, 0), (1, 0, 1), (0, 1, 1),
             (1, 0, 0), (0, 1, 0), (0, 0, 1), (0, 0, 0)]
    return [(*e, float(c)) for e, c in zip(names, quadric)]


@dataclass(frozen=True)
class BoundaryPoint:
    p: np.ndarray
    normal: np.ndarray
    on_edge: bool


class ConvexBody:
    """Convex body ``{g <= 0}``, optionally clamped to the cube ``max|x_i| <= box``.

    Parameters
    ----------
    g : Polynomial or callable
        Field that is negative inside, zero on the smooth boundary piece and
        positive outside. Callables must accept ``(..., 3)`` arrays.
    interior : array_like
        A point with ``g < 0``.
    box : float, optional
        Cube half-width imposing ``max(|x|, |y|, |z|) <= box``.
    """

    def __init__(self, g, interior=(0.0, 0.0, 0.0), box=None, name="custom", params=None,
                 strictly_convex=True, quadric=None, h_fd=1e-5):
        self.g_smooth = g
        self.interior = np.asarray(interior, dtype=float)
        self.box = None if box is None else float(box)
        self.name = name
        self.params = dict(params or {})
        self.strictly_convex = strictly_convex
        # ground-truth quadric for catalog quadric bodies, None otherwise
        self.quadric = quadric
        self._h_fd = h_fd
        if self.box is not None and self.box <= 0:
            raise ParseError("box bound must be positive")
        if not float(self.g(self.interior)) < 0:
            raise NotInteriorError("g(interior) >= 0", interior=self.interior.tolist())

    @property
    def is_polynomial(self):
        return isinstance(self.g_smooth, Polynomial)

    def g(self, x):
        x = np.asarray(x, dtype=float)
        val = self.g_smooth(x)
        if self.box is not None:
            val = np.maximum(val, np.abs(x).max(axis=-1) - self.box)
        return val

    def _box_active(self, x):
        if self.box is None:
            return np.zeros(np.shape(x)[:-1], dtype=bool)
        return np.abs(x).max(axis=-1) - self.box >= self.g_smooth(x)

    def numeric_gradient(self, x, h=None):
        x = np.asarray(x, dtype=float)
        h = self._h_fd * self.radius if h is None else h
        out = np.empty(x.shape)
        for k in range(3):
            e = np.zeros(3)
            e[k] = h
            out[..., k] = (self.g_smooth(x + e) - self.g_smooth(x - e)) / (2 * h)
        return out

    def numeric_hessian(self, x, h=None):
        x = np.asarray(x, dtype=float)
        h = 1e-4 * self.radius if h is None else h
        out = np.empty(x.shape + (3,))
        for k in range(3):
            e = np.zeros(3)
            e[k] = h
            out[..., k, :] = (self.gradient_smooth(x + e) - self.gradient_smooth(x - e)) / (2 * h)
        return 0.5 * (out + np.swapaxes(out, -1, -2))

    def gradient_smooth(self, x):
        if hasattr(self.g_smooth, "gradient"):
            return self.g_smooth.gradient(x)
        return self.numeric_gradient(x)

    def hessian(self, x):
        if hasattr(self.g_smooth, "hessian"):
            return self.g_smooth.hessian(x)
        return self.numeric_hessian(x)

    def gradient(self, x):
        """Gradient of the clamped field (the active piece's gradient)."""
        x = np.asarray(x, dtype=float)
        grad = np.array(self.gradient_smooth(x), dtype=float)
        if self.box is not None:
            active = self._box_active(x)
            if np.any(active):
                k = np.abs(x).argmax(axis=-1)
                sgn = np.sign(np.take_along_axis(x, k[..., None], axis=-1))[..., 0]
                box_grad = np.zeros(x.shape)
                np.put_along_axis(box_grad, k[..., None], sgn[..., None], axis=-1)
                grad = np.where(active[..., None], box_grad, grad)
        return grad

    def normal(self, x):
        gr = self.gradient(x)
        return gr / np.linalg.norm(gr, axis=-1, keepdims=True)

    def on_edge(self, x, edge_tol=EDGE_TOL):
        if self.box is None:
            return np.zeros(np.shape(x)[:-1], dtype=bool)
        return np.abs(np.asarray(x)).max(axis=-1) >= self.box - edge_tol

    @cached_property
    def radius(self):
        """Radius about the interior point of a ball containing the body."""
        if self.box is not None:
            return float(np.linalg.norm(self.interior) + self.box * np.sqrt(3.0))
        dirs = fibonacci_sphere(256)
        t = np.full(len(dirs), 1.0)
        for _ in range(80):
            out = self.g(self.interior + t[:, None] * dirs) > 0
            if out.all():
                break
            t = np.where(out, t, 2.0 * t)
        else:
            raise NoBracketError("body appears unbounded")
        # exit distances are below t; 1.5x covers directions between samples
        lo = np.zeros_like(t)
        hi = t.copy()
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            inside = self.g(self.interior + mid[:, None] * dirs) <= 0
            lo = np.where(inside, mid, lo)
            hi = np.where(inside, hi, mid)
        return float(1.5 * hi.max())

    @cached_property
    def diameter(self):
        from scipy.spatial.distance import pdist

        pts, _ = boundary_hits(self, self.interior, fibonacci_sphere(600))
        return float(pdist(pts).max())

    def config(self):
        """JSON-compatible config that reloads to an identical body (polynomial bodies only)."""
        if not self.is_polynomial:
            raise ParseError("only polynomial bodies can be exported")
        cfg = {
            "polynomial": [list(t) for t in self.g_smooth.terms],
            "interior": self.interior.tolist(),
            "name": self.name,
        }
        if self.box is not None:
            cfg["box"] = self.box
        return cfg

    def __repr__(self):
        return f"ConvexBody({self.name!r}, params={self.params})"


# --------------------------------------------------------------------------
# boundary hits


def boundary_hits(body, origins, dirs, max_iter=MAX_BISECT):
    """Vectorized ray casting: first boundary crossing of ``origins + t * dirs``, ``t > 0``.

    Brackets the crossing between the interior origin and a point beyond the
    bounding ball (doubling if needed), then shrinks the bracket with
    damped false-position steps (Anderson-Bjorck), falling back to bisection
    after three steps that fail to halve it, until no float lies strictly
    inside. Returns
    ``(points, t)``.
    """
    dirs = np.atleast_2d(np.asarray(dirs, dtype=float))
    origins = np.broadcast_to(np.asarray(origins, dtype=float), dirs.shape)
    g0 = body.g(origins)
    if np.any(g0 >= 0):
        raise NotInteriorError("ray origin is not interior")
    n = len(dirs)
    lo = np.zeros(n)
    hi = np.linalg.norm(origins - body.interior, axis=-1) + body.radius
    for _ in range(64):
        fhi = body.g(origins + hi[:, None] * dirs)
        outside = fhi > 0
        if outside.all():
            break
        hi = np.where(outside, hi, 2.0 * hi)
    else:
        raise NoBracketError("no sign change along ray")
    flo = np.array(g0, dtype=float)
    slow = np.zeros(n, dtype=int)
    last = np.zeros(n, dtype=int)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        idx = np.nonzero((mid > lo) & (mid < hi))[0]
        if len(idx) == 0:
            break
        l, h, fl, fh = lo[idx], hi[idx], flo[idx], fhi[idx]
        with np.errstate(divide="ignore", invalid="ignore"):
            xs = l - fl * (h - l) / (fh - fl)
        # keep a few ulps clear of the endpoints so a converged end gets bracketed at once
        tau = 4 * np.finfo(float).eps * np.maximum(np.abs(l), np.abs(h))
        room = l + tau < h - tau
        xs = np.clip(xs, l + tau, h - tau)
        use = (slow[idx] < 3) & np.isfinite(xs) & room
        x = np.where(use, xs, mid[idx])
        fx = body.g(origins[idx] + x[:, None] * dirs[idx])
        inside = fx <= 0
        side = np.where(use, np.where(inside, 1, -1), 0)
        repeat = (side != 0) & (side == last[idx])
        nl, nh = np.where(inside, x, l), np.where(inside, h, x)
        nfl, nfh = np.where(inside, fx, fl), np.where(inside, fh, fx)
        # Anderson-Bjorck damping of the endpoint that keeps being retained
        with np.errstate(divide="ignore", invalid="ignore"):
            m_hi = 1.0 - fx / fl  # lo replaced again: damp the retained hi value
            m_lo = 1.0 - fx / fh
        nfh = np.where(repeat & inside, nfh * np.where((m_hi > 0) & (m_hi < 0.5), m_hi, 0.5), nfh)
        nfl = np.where(repeat & ~inside, nfl * np.where((m_lo > 0) & (m_lo < 0.5), m_lo, 0.5), nfl)
        zero = fx == 0
        nl, nh = np.where(zero, x, nl), np.where(zero, x, nh)
        halved = (nh - nl) <= 0.5 * (h - l)
        slow[idx] = np.where(halved | ~use, 0, slow[idx] + 1)
        lo[idx], hi[idx], flo[idx], fhi[idx], last[idx] = nl, nh, nfl, nfh, side
    p_lo = origins + lo[:, None] * dirs
    p_hi = origins + hi[:, None] * dirs
    use_hi = np.abs(body.g(p_hi)) < np.abs(body.g(p_lo))
    t = np.where(use_hi, hi, lo)
    return np.where(use_hi[:, None], p_hi, p_lo), t


def boundary_hit(body, origin, u, g_tol=G_TOL):
    """Single boundary point along the ray ``origin + t u``."""
    u = np.asarray(u, dtype=float)
    u = u / np.linalg.norm(u)
    pts, _ = boundary_hits(body, origin, u[None, :])
    p = pts[0]
    if abs(float(body.g(p))) > g_tol:
        raise NoBracketError("bisection did not reach the boundary tolerance")
    return BoundaryPoint(p, body.normal(p), bool(body.on_edge(p)))


def chord_endpoints(body, point, u):
    """Both boundary points of the line ``point + t u`` through an interior point."""
    u = np.asarray(u, dtype=float)
    pts, _ = boundary_hits(body, point, np.stack([u, -u]))
    return pts[0], pts[1]


# --------------------------------------------------------------------------
# catalog and config


def sphere(r=1.0, center=(0.0, 0.0, 0.0)):
    return ellipsoid(r, r, r, center=center, name="sphere", params={"r": r, "center": list(center)})


def ellipsoid(a=1.0, b=1.0, c=1.0, rotvec=(0.0, 0.0, 0.0), center=(0.0, 0.0, 0.0), name="ellipsoid",
              params=None):
    R = Rotation.from_rotvec(np.asarray(rotvec, dtype=float)).as_matrix()
    q = quadric_from_ellipsoid([a, b, c], R, center)
    # scale so that g = 0 matches the unnormalized form (value -1 at the center)
    coeffs = q.q / -(q(np.asarray(center, dtype=float)))
    if params is None:
        params = {"a": a, "b": b, "c": c, "rotvec": list(rotvec), "center": list(center)}
    return ConvexBody(Polynomial(_quadric_terms(coeffs)), interior=center, name=name, params=params,
                      quadric=q)


def alonso_c():
    """Non-ellipsoidal body whose axis-parallel sections are all ellipses."""
    terms = [(2, 0, 0, 1.0), (0, 2, 0, 1.0), (0, 0, 2, 1.0), (1, 1, 1, 1.25), (0, 0, 0, -1.0)]
    return ConvexBody(Polynomial(terms), box=1.0, name="alonso-c", params={})


def superellipsoid(p=4):
    p = int(p)
    if p < 2 or p % 2:
        raise ParseError("superellipsoid exponent must be an even integer >= 2")
    terms = [(p, 0, 0, 1.0), (0, p, 0, 1.0), (0, 0, p, 1.0), (0, 0, 0, -1.0)]
    return ConvexBody(Polynomial(terms), name="superellipsoid", params={"p": p})


_CATALOG = {
    "sphere": sphere,
    "ellipsoid": ellipsoid,
    "alonso-c": alonso_c,
    "superellipsoid": superellipsoid,
}


def catalog():
    """Names of the built-in bodies."""
    return sorted(_CATALOG)


def lookup(name, **params):
    try:
        factory = _CATALOG[name]
    except KeyError:
        raise NotFoundError(f"unknown catalog body {name!r}") from None
    try:
        return factory(**params)
    except TypeError as exc:
        raise ParseError(f"bad parameters for {name!r}: {exc}") from None


CONFIG_KEYS = {"catalog", "params", "polynomial", "box", "interior", "name"}

CONFIG_SCHEMA = """\
Body config (JSON object), exactly one of:
  {"catalog": "<name>", "params": {...}}         or parameters inline, e.g. {"catalog": "sphere", "r": 1}
                                                 names: sphere(r, center), ellipsoid(a, b, c, rotvec, center),
                                                 alonso-c(), superellipsoid(p)
  {"polynomial": [[ex, ey, ez, coeff], ...],     g = sum coeff * x^ex y^ey z^ez, negative inside
   "interior": [x, y, z], "box": b}              box optional: clamps max(|x|,|y|,|z|) <= b
Optional key "name". Unknown keys are rejected. A saved `catalog --dump` report also loads."""


def load_body(config):
    """Build a body from a config dict, JSON text, or path to a JSON file."""
    if isinstance(config, str):
        text = config
        if not config.lstrip().startswith("{"):
            try:
                with open(config) as fh:
                    text = fh.read()
            except OSError as exc:
                raise ParseError(f"cannot read body config: {exc}") from None
        try:
            config = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc}") from None
    if not isinstance(config, dict):
        raise ParseError("body config must be an object")
    if config.get("command") == "catalog" and isinstance(config.get("config"), dict):
        config = config["config"]  # a saved `catalog --dump` report
    if "catalog" in config:
        if "polynomial" in config:
            raise ParseError("config needs exactly one of 'catalog' or 'polynomial'")
        params = config.get("params", {})
        if not isinstance(params, dict):
            raise ParseError("'params' must be an object")
        # parameters may also sit next to "catalog"; the factory rejects unknown ones
        flat = {k: v for k, v in config.items() if k not in ("catalog", "params", "name")}
        clash = set(flat) & set(params)
        if clash:
            raise ParseError(f"parameters given twice: {sorted(clash)}")
        return lookup(config["catalog"], **params, **flat)
    unknown = set(config) - CONFIG_KEYS
    if unknown:
        raise ParseError(f"unknown config keys: {sorted(unknown)}")
    if "polynomial" not in config:
        raise ParseError("config needs exactly one of 'catalog' or 'polynomial'")
    if "params" in config:
        raise ParseError("'params' is only valid with 'catalog'")
    try:
        terms = [tuple(t) for t in config["polynomial"]]
        if any(len(t) != 4 for t in terms):
            raise ValueError("terms must be [ex, ey, ez, coeff]")
        poly = Polynomial(terms)
        interior = np.asarray(config.get("interior", [0.0, 0.0, 0.0]), dtype=float)
        if interior.shape != (3,):
            raise ValueError("interior must have 3 coordinates")
        box = config.get("box")
        box = None if box is None else float(box)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"bad polynomial config: {exc}") from None
    return ConvexBody(poly, interior=interior, box=box, name=config.get("name", "polynomial"),
                      strictly_convex=False)


def boundary_point(body, p, edge_tol=EDGE_TOL):
    p = np.asarray(p, dtype=float)
    return BoundaryPoint(p, body.normal(p), bool(body.on_edge(p, edge_tol)))


def require_smooth(body, bp):
    if bp.on_edge:
        raise EdgePointError("point lies on the box clamp", point=bp.p.tolist())
