"""Quadrature rules shared by the basis, prm and Green-function modules."""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

__all__ = [
    "gauss_legendre",
    "composite_gl",
    "geometric_gl",
    "tensor_rule",
    "sphere_rule",
    "sphere_area",
]


@lru_cache(maxsize=256)
def _leggauss(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre(a: float, b: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """n-point Gauss-Legendre nodes and weights on [a, b]."""
    x, w = _leggauss(n)
    half = 0.5 * (b - a)
    return 0.5 * (a + b) + half * x, half * w


def composite_gl(a: float, b: float, panels: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre on ``panels`` equal sub-intervals of [a, b]."""
    if b <= a:
        return np.empty(0), np.empty(0)
    edges = np.linspace(a, b, panels + 1)
    xs, ws = zip(*(gauss_legendre(lo, hi, n) for lo, hi in zip(edges[:-1], edges[1:])))
    return np.concatenate(xs), np.concatenate(ws)


def geometric_gl(
    a: float, b: float, n: int, levels: int = 40, ratio: float = 0.5
) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre on panels geometrically refined toward ``a``.

    The panels are [a + L r^{j+1}, a + L r^j] for j < levels, plus a final
    panel [a, a + L r^levels]; suited to integrands singular at ``a``.
    """
    length = b - a
    if length <= 0:
        return np.empty(0), np.empty(0)
    edges = [a + length * ratio**j for j in range(levels + 1)] + [a]
    edges = edges[::-1]
    xs, ws = zip(*(gauss_legendre(lo, hi, n) for lo, hi in zip(edges[:-1], edges[1:])))
    return np.concatenate(xs), np.concatenate(ws)


def tensor_rule(
    lo: np.ndarray, hi: np.ndarray, per_unit: int = 24, min_nodes: int = 16
) -> tuple[np.ndarray, np.ndarray]:
    """Tensor-product composite Gauss-Legendre rule on a box.

    Each axis uses panels of length at most one with ``per_unit`` nodes.
    Returns nodes of shape (N, d) and weights of shape (N,).
    """
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    axes_x, axes_w = [], []
    for a, b in zip(lo, hi):
        if b <= a:
            return np.empty((0, len(lo))), np.empty(0)
        panels = max(1, math.ceil(b - a))
        n = max(min_nodes // panels, per_unit)
        x, w = composite_gl(a, b, panels, n)
        axes_x.append(x)
        axes_w.append(w)
    grids = np.meshgrid(*axes_x, indexing="ij")
    wgrid = np.ones_like(grids[0])
    for k, w in enumerate(axes_w):
        shape = [1] * len(axes_w)
        shape[k] = len(w)
        wgrid = wgrid * w.reshape(shape)
    nodes = np.stack([g.ravel() for g in grids], axis=1)
    return nodes, wgrid.ravel()


def sphere_area(d: int) -> float:
    """Surface measure of the unit sphere S^{d-1} in R^d."""
    return 2.0 * math.pi ** (d / 2) / math.gamma(d / 2)


def sphere_rule(d: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Product quadrature on S^{d-1}: directions (M, d), weights summing to the area.

    d=1 uses the two directions +-1; d=2 the trapezoid rule in angle;
    d >= 3 Gauss-Legendre in the polar angles and trapezoid in the last angle.
    """
    if d == 1:
        return np.array([[1.0], [-1.0]]), np.array([1.0, 1.0])
    m = 2 * n
    phi_last = 2.0 * math.pi * (np.arange(m) + 0.5) / m
    w_last = np.full(m, 2.0 * math.pi / m)
    if d == 2:
        return np.stack([np.cos(phi_last), np.sin(phi_last)], axis=1), w_last
    # polar angles phi_1..phi_{d-2} in [0, pi] with Jacobian prod sin^{d-1-i}
    polar = [gauss_legendre(0.0, math.pi, n) for _ in range(d - 2)]
    mesh = np.meshgrid(*[p[0] for p in polar], phi_last, indexing="ij")
    wmesh = np.meshgrid(*[p[1] for p in polar], w_last, indexing="ij")
    angles = [a.ravel() for a in mesh]
    weights = np.ones_like(angles[0])
    for w in wmesh:
        weights = weights * w.ravel()
    dirs = np.empty((angles[0].size, d))
    sin_prod = np.ones_like(angles[0])
    for i in range(d - 2):
        dirs[:, i] = sin_prod * np.cos(angles[i])
        weights = weights * np.sin(angles[i]) ** (d - 2 - i)
        sin_prod = sin_prod * np.sin(angles[i])
    dirs[:, d - 2] = sin_prod * np.cos(angles[-1])
    dirs[:, d - 1] = sin_prod * np.sin(angles[-1])
    return dirs, weights
