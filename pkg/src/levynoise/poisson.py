"""Solutions of Delta U = -eta' with zero Dirichlet data on reference domains.

The chaos route projects G(x, .) on the Hermite tensors zeta_k; the
Monte-Carlo route integrates G(x, .) against a sampled compensated
measure.  Integrals of G(x, .) use polar coordinates centred at x, with
radial panels graded geometrically toward the pole.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterator, Sequence

import numpy as np

from .basis import tensor_hermite_table
from .chaos import ChaosExpansion, hermite_transform
from .greens import Domain, UnitBall, UnitHypercube, UnitInterval
from .measures import DivergenceError, LevyMeasure
from .multiindex import cantor_pair, unit
from .prm import ConfigurationBatch, PointConfiguration
from .quadrature import gauss_legendre, sphere_rule

__all__ = [
    "SolutionField",
    "green",
    "green_l2sq",
    "solve_chaos",
    "green_hermite_moments",
    "hermite_solution",
    "hermite_solution_quadrature",
    "solve_mc",
    "variance_exact",
    "laplacian_residual",
    "laplacian_residuals",
    "divergence_profile",
    "polar_integrate",
]

DEFAULT_ANGULAR = {1: 1, 2: 64, 3: 16, 4: 6}
POLE_FLOOR = 1e-10
CHUNK = 20_000


def _mass_norm(model) -> float:
    """m for a measure, a bare number, or None (the zero measure)."""
    if model is None:
        return 0.0
    if isinstance(model, (int, float)):
        return float(model)
    return model.m()


def _point(domain: Domain, x) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.size != domain.dim:
        raise ValueError(f"x must have {domain.dim} coordinates")
    return x


def green(domain: Domain, x, y) -> np.ndarray | float:
    """G(x, y); ``y`` may be a single point or an (N, d) array."""
    y_arr = np.asarray(y, dtype=float)
    single = y_arr.ndim <= 1 and y_arr.size == domain.dim
    pts = y_arr.reshape(1, domain.dim) if single else y_arr.reshape(-1, domain.dim)
    x = _point(domain, x)
    if domain.dim > 1 and np.any(np.all(pts == x, axis=1)):
        raise ZeroDivisionError("G(x, y) is singular at y = x for d >= 2")
    vals = domain.green(x, pts)
    return float(vals[0]) if single else vals


# ---------------------------------------------------------------- quadrature


def _directions(domain: Domain, x: np.ndarray, n_ang: int) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(domain, UnitHypercube) and domain.dim == 2:
        # split the circle at the corner directions so each arc sees a smooth exit distance
        corners = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=float) - x
        cuts = np.sort(np.mod(np.arctan2(corners[:, 1], corners[:, 0]), 2 * math.pi))
        cuts = np.append(cuts, cuts[0] + 2 * math.pi)
        th, w = zip(*(gauss_legendre(a, b, n_ang) for a, b in zip(cuts[:-1], cuts[1:])))
        th = np.concatenate(th)
        return np.stack([np.cos(th), np.sin(th)], axis=1), np.concatenate(w)
    return sphere_rule(domain.dim, n_ang)


def _polar_blocks(
    domain: Domain,
    x: np.ndarray,
    r_min: float,
    n_ang: int | None,
    n_rad: int,
    octaves_per_panel: float = 1.0,
    upper: float | None = None,
) -> Iterator[tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """Nodes of a polar rule for r_min < |y - x| < min(R(theta), upper), one radial panel at a time.

    Yields (points (N, d), weights including r^{d-1}, radii).  With
    r_min = 0 the innermost panel is [0, POLE_FLOOR * R].
    """
    dirs, wdir = _directions(domain, x, n_ang or DEFAULT_ANGULAR.get(domain.dim, 6))
    R = domain.ray_exit(x, dirs)
    if upper is not None:
        R = np.minimum(R, upper)
    keep = R > r_min
    dirs, wdir, R = dirs[keep], wdir[keep], R[keep]
    if R.size == 0:
        return
    d = domain.dim
    lo = np.full(R.size, r_min) if r_min > 0 else POLE_FLOOR * R
    span = np.log(R / lo)
    panels = max(1, math.ceil(float(span.max()) / (octaves_per_panel * math.log(2.0))))
    u, wu = gauss_legendre(0.0, 1.0, n_rad)
    edges = np.linspace(0.0, 1.0, panels + 1)
    if r_min == 0:
        # pole panel [0, lo] in the plain radius
        r = lo[:, None] * u[None, :]
        w = wdir[:, None] * lo[:, None] * wu[None, :] * r ** (d - 1)
        yield _assemble(x, dirs, r, w)
    for a, b in zip(edges[:-1], edges[1:]):
        v = a + (b - a) * u
        logr = np.log(lo)[:, None] + span[:, None] * v[None, :]
        r = np.exp(logr)
        # dr = r * span dv
        w = wdir[:, None] * (b - a) * wu[None, :] * span[:, None] * r**d
        yield _assemble(x, dirs, r, w)


def _assemble(x, dirs, r, w):
    pts = x[None, None, :] + r[:, :, None] * dirs[:, None, :]
    return pts.reshape(-1, x.size), w.ravel(), r.ravel()


def polar_integrate(
    domain: Domain,
    x,
    fn: Callable[[np.ndarray, np.ndarray], np.ndarray],
    r_min: float = 0.0,
    n_ang: int | None = None,
    n_rad: int = 12,
    upper: float | None = None,
) -> np.ndarray:
    """Integral of fn(y, G(x, y)) over {y in D : r_min < |y - x| < upper}.

    ``fn`` may return an array whose last axis runs over the nodes.
    """
    x = _point(domain, x)
    total = 0.0
    for pts, w, _ in _polar_blocks(domain, x, r_min, n_ang, n_rad, upper=upper):
        for s in range(0, w.size, CHUNK):
            p = pts[s : s + CHUNK]
            vals = fn(p, domain.green(x, p))
            total = total + np.asarray(vals) @ w[s : s + CHUNK]
    return total


def green_l2sq(domain: Domain, x, n_ang: int | None = None) -> float:
    """Integral of G(x, y)^2 over D; closed forms where available, else polar quadrature."""
    x = _point(domain, x)
    if domain.dim >= 4:
        raise DivergenceError("int G(x, y)^2 dy diverges for d >= 4")
    if domain.on_boundary(x):
        return 0.0
    if isinstance(domain, UnitInterval):
        return float(x[0] ** 2 * (1 - x[0]) ** 2 / 3.0)
    if isinstance(domain, UnitHypercube):
        return domain.green_l2sq_heat(x)
    if isinstance(domain, UnitBall) and not np.any(x):
        return 1.0 / (12 * math.pi) if domain.dim == 3 else 1.0 / (8 * math.pi)
    return float(polar_integrate(domain, x, lambda y, g: g * g, n_ang=n_ang))


def variance_exact(domain: Domain, model, x) -> float:
    """m^2 int_D G(x, y)^2 dy."""
    if domain.dim >= 4:
        raise DivergenceError("the solution is not square integrable for d >= 4")
    return _mass_norm(model) ** 2 * green_l2sq(domain, x)


# ------------------------------------------------------------- chaos route


@dataclass(frozen=True)
class SolutionField:
    """Truncated chaos solution at one point."""

    x: tuple[float, ...]
    chaos: ChaosExpansion
    K: int
    coefficients: np.ndarray
    variance_exact: float | None

    @property
    def variance_partial(self) -> float:
        return float(math.fsum(self.coefficients**2))

    def partial_variances(self) -> np.ndarray:
        return np.cumsum(self.coefficients**2)


def green_hermite_moments(domain: Domain, x, K: int, n_ang: int | None = None, n_rad: int = 12) -> np.ndarray:
    """int_D G(x, y) zeta_k(y) dy for k = 1..K."""
    x = _point(domain, x)
    if domain.on_boundary(x):
        return np.zeros(K)
    return np.asarray(
        polar_integrate(domain, x, lambda y, g: tensor_hermite_table(K, y) * g, n_ang=n_ang, n_rad=n_rad),
        dtype=float,
    )


def solve_chaos(domain: Domain, model, x, K: int, n_ang: int | None = None) -> SolutionField:
    """U(x) = m sum_{k <= K} (int G(x, y) zeta_k(y) dy) K_{eps^{z(k,1)}}."""
    if K < 1:
        raise ValueError("K must be >= 1")
    x = _point(domain, x)
    coeffs = _mass_norm(model) * green_hermite_moments(domain, x, K, n_ang=n_ang)
    chaos = ChaosExpansion((unit(cantor_pair(k, 1)), c) for k, c in enumerate(coeffs, 1))
    exact = variance_exact(domain, model, x) if domain.dim <= 3 else None
    coeffs.setflags(write=False)
    return SolutionField(tuple(x), chaos, K, coeffs, exact)


def hermite_solution(domain: Domain, model, x, z, K: int) -> complex:
    """u(x, z): Hermite transform of the chaos solution."""
    return hermite_transform(solve_chaos(domain, model, x, K).chaos, z)


def hermite_solution_quadrature(domain: Domain, model, x, z, K: int) -> complex:
    """u(x, z) as int G(x, y) H(eta')(y, z) dy, with its own quadrature rule.

    H(eta')(y, z) = m sum_{k <= K} zeta_k(y) z_{z(k,1)}.
    """
    x = _point(domain, x)
    if domain.on_boundary(x):
        return 0j
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    weights = np.zeros(K, dtype=complex)
    for k in range(1, K + 1):
        j = cantor_pair(k, 1)
        if j <= z.size:
            weights[k - 1] = z[j - 1]
    m = _mass_norm(model)

    def integrand(y, g):
        return m * (weights @ tensor_hermite_table(K, y)) * g

    n_ang = DEFAULT_ANGULAR.get(domain.dim, 6) + 8
    return complex(polar_integrate(domain, x, integrand, n_ang=n_ang, n_rad=16))


# ------------------------------------------------------------------ MC route


def solve_mc(domain: Domain, model: LevyMeasure, config, x):
    """sum_i G(x, x_i) z_i - (int_{|z| >= eps} z nu(dz)) int_D G(x, y) dy.

    Returns a float for a single configuration, an array for a batch.
    """
    if domain.dim >= 4:
        raise DivergenceError("Monte-Carlo solution requires d <= 3")
    x = _point(domain, x)
    lo, hi = domain.bounding_box()
    if np.any(np.asarray(config.box.lo) > lo) or np.any(np.asarray(config.box.hi) < hi):
        raise ValueError("the configuration box must contain the domain")
    comp = model.mean_jump(config.eps) * domain.green_integral(x)
    vals = np.empty(config.z.size)
    for s in range(0, vals.size, CHUNK):
        vals[s : s + CHUNK] = domain.green(x, config.x[s : s + CHUNK]) * config.z[s : s + CHUNK]
    if isinstance(config, ConfigurationBatch):
        return np.bincount(config.sample, weights=vals, minlength=config.n_samples) - comp
    if isinstance(config, PointConfiguration):
        return float(vals.sum()) - comp
    raise TypeError("config must be a PointConfiguration or ConfigurationBatch")


# --------------------------------------------------------------- PDE checks


def _probe_points(domain: Domain, h: float) -> np.ndarray:
    """Evaluation points for the stencil: the full interior grid in d = 1, a coarse lattice otherwise."""
    if domain.dim == 1:
        n = int(round(1.0 / h))
        return (np.arange(1, n) * h)[:, None]
    lo, hi = domain.bounding_box()
    axes = [np.arange(a + 0.25, b - 0.2, 0.25) for a, b in zip(lo, hi)]
    grid = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=1)
    # keep the whole stencil away from the boundary
    dirs = np.vstack([np.eye(domain.dim), -np.eye(domain.dim)])
    clear = np.array([bool(domain.contains(p)[0]) and domain.ray_exit(p, dirs).min() > 2 * h for p in grid], dtype=bool)
    return grid[clear]


def laplacian_residuals(domain: Domain, model, kmax: int, h: float, n_ang: int | None = None) -> tuple[np.ndarray, float]:
    """Residuals for k = 1..kmax at once (entry k-1), and the scale h^2.

    Each residual is max |Delta_h c_k(x) + m zeta_k(x)| over interior probe
    points, with c_k(x) = m int G(x, y) zeta_k(y) dy and Delta_h the
    (2d+1)-point stencil.
    """
    m = _mass_norm(model)
    probes = _probe_points(domain, h)
    if m == 0.0:
        return np.zeros(kmax), h * h

    def c(p):
        if not domain.contains(p)[0] or domain.on_boundary(p):
            return np.zeros(kmax)
        return m * green_hermite_moments(domain, p, kmax, n_ang=n_ang)

    worst = np.zeros(kmax)
    eye = np.eye(domain.dim)
    for p in probes:
        centre = c(p)
        lap = sum(c(p + h * e) + c(p - h * e) - 2.0 * centre for e in eye) / (h * h)
        zeta = tensor_hermite_table(kmax, p[None, :])[:, 0]
        worst = np.maximum(worst, np.abs(lap + m * zeta))
    return worst, h * h


def laplacian_residual(domain: Domain, model, k: int, h: float, n_ang: int | None = None) -> tuple[float, float]:
    """max |Delta_h c_k + m zeta_k| over interior points, and the O(h^2) scale h^2."""
    res, scale = laplacian_residuals(domain, model, k, h, n_ang=n_ang)
    return float(res[k - 1]), scale


def _default_domain(d: int) -> Domain:
    from .greens import UnitDisk

    return {1: UnitInterval(), 2: UnitDisk(), 3: UnitBall(3)}.get(d) or UnitHypercube(d)


def divergence_profile(
    d: int, x, deltas: Sequence[float], domain: Domain | None = None, n_ang: int | None = None
) -> list[tuple[float, float]]:
    """I(delta) = int_{D minus B_delta(x)} G(x, y)^2 dy for each delta (descending).

    The outer region is integrated once and each dyadic shell between
    consecutive deltas is added, so the profile costs one pass.
    """
    domain = _default_domain(d) if domain is None else domain
    if domain.dim != d:
        raise ValueError("domain dimension does not match d")
    deltas = [float(v) for v in deltas]
    if any(v <= 0 for v in deltas) or any(b >= a for a, b in zip(deltas[:-1], deltas[1:])):
        raise ValueError("deltas must be positive and strictly decreasing")
    x = _point(domain, x)

    def sq(y, g):
        return g * g

    if d == 1:
        # exact: G is piecewise linear, so GL with 4 nodes per piece integrates G^2 exactly
        out = []
        for delta in deltas:
            total = 0.0
            for a, b in ((0.0, x[0] - delta), (x[0] + delta, 1.0)):
                if b > a:
                    t, w = gauss_legendre(a, b, 4)
                    total += float(w @ domain.green(x, t[:, None]) ** 2)
            out.append((delta, total))
        return out

    running = float(polar_integrate(domain, x, sq, r_min=deltas[0], n_ang=n_ang))
    out = [(deltas[0], running)]
    for outer, inner in zip(deltas[:-1], deltas[1:]):
        running += float(polar_integrate(domain, x, sq, r_min=inner, upper=outer, n_ang=n_ang))
        out.append((inner, running))
    return out
