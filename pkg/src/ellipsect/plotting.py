"""Figures for CLI reports, drawn with the object-oriented matplotlib API (no pyplot state)."""

import numpy as np
from matplotlib.figure import Figure

from .curvature import euler_curvature


def _save(fig, path):
    fig.savefig(path, dpi=120, bbox_inches="tight")
    return path


def plot_section(curve, conic=None, path="section.png", title=None):
    """Section samples in plane coordinates, with the fitted conic's zero set overlaid."""
    fig = Figure(figsize=(5, 5))
    ax = fig.add_subplot()
    uv = curve.pts
    ax.plot(uv[:, 0], uv[:, 1], ".", ms=3, label="samples")
    if conic is not None:
        pad = 0.1 * np.ptp(uv, axis=0).max()
        lo, hi = uv.min(axis=0) - pad, uv.max(axis=0) + pad
        u, v = np.meshgrid(np.linspace(lo[0], hi[0], 300), np.linspace(lo[1], hi[1], 300))
        ax.contour(u, v, conic(np.stack([u, v], axis=-1)), levels=[0.0], colors="C1", linewidths=1)
        ax.plot([], [], "-", color="C1", label="fitted conic")
    ax.set_aspect("equal")
    ax.set_xlabel("u")
    ax.set_ylabel("v")
    ax.legend(loc="upper right")
    if title:
        ax.set_title(title)
    return _save(fig, path)


def plot_verdict(verdict, path="verdict.png"):
    """Boundary sample colored by log10 relative residual, plus the residual histogram."""
    G = verdict.diagnostics.get("global_points")
    res = verdict.diagnostics.get("residuals")
    fig = Figure(figsize=(10, 4.5))
    ax3 = fig.add_subplot(1, 2, 1, projection="3d")
    ax = fig.add_subplot(1, 2, 2)
    if G is not None and res is not None:
        rel = np.log10(np.maximum(res / verdict.diagnostics["diameter"], 1e-18))
        sc = ax3.scatter(G[:, 0], G[:, 1], G[:, 2], c=rel, s=4, cmap="viridis")
        fig.colorbar(sc, ax=ax3, shrink=0.7, label="log10 residual / diameter")
        ax.hist(rel, bins=40, color="C0")
        ax.set_xlabel("log10 residual / diameter")
        ax.set_ylabel("count")
        if verdict.witness is not None:
            w = verdict.witness["point"]
            ax3.scatter([w[0]], [w[1]], [w[2]], color="red", s=40, label="witness")
            ax3.legend(loc="upper left")
    fig.suptitle(verdict.status.value)
    return _save(fig, path)


def plot_curvature_difference(cpA, cpB, dirs=(), path="curvature_difference.png"):
    """Difference of two Euler curvature functions over [0, pi) with the test directions marked."""
    th = np.linspace(0.0, np.pi, 721)
    diff = euler_curvature(cpA, th) - euler_curvature(cpB, th)
    fig = Figure(figsize=(6, 3.5))
    ax = fig.add_subplot()
    ax.plot(th, diff, color="C0")
    ax.axhline(0.0, color="0.6", lw=0.8)
    for d in dirs:
        ax.axvline(float(np.mod(d, np.pi)), color="C3", lw=0.8, ls="--")
    ax.set_xlabel("tangent direction (rad)")
    ax.set_ylabel("curvature difference")
    return _save(fig, path)
