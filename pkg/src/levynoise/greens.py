"""Reference domains and Dirichlet Green functions of -Laplacian.

Closed forms on the interval, disk and ball.  On the hypercube the Green
function is the time integral of the Dirichlet heat kernel, which factors
into 1D kernels; the eigenfunction series is kept as a reference form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erf, erfc, exp1, gammaincc

from .quadrature import composite_gl, sphere_area

__all__ = [
    "Domain",
    "UnitInterval",
    "UnitDisk",
    "UnitBall",
    "UnitHypercube",
    "make_domain",
    "heat_kernel_1d",
    "fundamental_solution",
]

BOUNDARY_TOL = 1e-12


def fundamental_solution(r, d: int):
    """Newtonian potential of -Laplacian: -ln(r)/(2 pi) for d=2, r^{2-d}/((d-2)|S^{d-1}|) otherwise."""
    r = np.asarray(r, dtype=float)
    if d == 1:
        return -0.5 * r
    if d == 2:
        return -np.log(r) / (2.0 * math.pi)
    return r ** (2.0 - d) / ((d - 2) * sphere_area(d))


class Domain:
    """Bounded reference domain with a Dirichlet Green function."""

    dim: int
    name: str

    def contains(self, y) -> np.ndarray:
        raise NotImplementedError

    def on_boundary(self, x) -> bool:
        raise NotImplementedError

    def ray_exit(self, x, dirs) -> np.ndarray:
        """Distance from interior point x to the boundary along each unit direction."""
        raise NotImplementedError

    def bounding_box(self) -> tuple[tuple[float, ...], tuple[float, ...]]:
        raise NotImplementedError

    def green(self, x, y) -> np.ndarray:
        """G(x, y) for one point x and points y of shape (N, d); zero outside the closure."""
        raise NotImplementedError

    def green_integral(self, x) -> float:
        """Integral of G(x, y) over y in D."""
        raise NotImplementedError

    def _prep(self, x, y):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        y = np.asarray(y, dtype=float)
        if y.ndim == 1:
            y = y[:, None] if self.dim == 1 and y.size != 1 else y[None, :]
        if x.size != self.dim or y.shape[-1] != self.dim:
            raise ValueError(f"points must have dimension {self.dim}")
        return x, y


@dataclass(frozen=True)
class UnitInterval(Domain):
    dim: int = 1
    name: str = "interval"

    def contains(self, y):
        y = np.asarray(y, dtype=float).reshape(-1, 1)
        return (y[:, 0] >= 0.0) & (y[:, 0] <= 1.0)

    def on_boundary(self, x):
        x = float(np.atleast_1d(x)[0])
        return x <= BOUNDARY_TOL or x >= 1.0 - BOUNDARY_TOL

    def ray_exit(self, x, dirs):
        x = float(np.atleast_1d(x)[0])
        dirs = np.asarray(dirs, dtype=float).reshape(-1)
        return np.where(dirs > 0, 1.0 - x, x)

    def bounding_box(self):
        return (0.0,), (1.0,)

    def green(self, x, y):
        x, y = self._prep(x, y)
        xs, ys = x[0], y[:, 0]
        g = np.minimum(xs, ys) * (1.0 - np.maximum(xs, ys))
        inside = (ys >= 0.0) & (ys <= 1.0) & (0.0 <= xs <= 1.0)
        return np.where(inside, g, 0.0)

    def green_integral(self, x):
        x = float(np.atleast_1d(x)[0])
        return 0.5 * x * (1.0 - x)


@dataclass(frozen=True)
class UnitBall(Domain):
    """Unit ball in R^dim (dim >= 2); G = Phi(|x-y|) - Phi(|y| |x - y*|), y* = y/|y|^2."""

    dim: int = 3
    name: str = "ball"

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError("use UnitInterval for d = 1")

    def contains(self, y):
        y = np.atleast_2d(y)
        return np.einsum("ij,ij->i", y, y) <= 1.0

    def on_boundary(self, x):
        return abs(float(np.linalg.norm(x)) - 1.0) <= BOUNDARY_TOL

    def ray_exit(self, x, dirs):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        b = np.asarray(dirs) @ x
        return -b + np.sqrt(np.maximum(b * b - x @ x + 1.0, 0.0))

    def bounding_box(self):
        return (-1.0,) * self.dim, (1.0,) * self.dim

    def green(self, x, y):
        x, y = self._prep(x, y)
        diff = y - x
        r2 = np.einsum("ij,ij->i", diff, diff)
        y2 = np.einsum("ij,ij->i", y, y)
        # |y|^2 |x - y*|^2 = |x|^2 |y|^2 - 2 x.y + 1, regular at y = 0
        s2 = (x @ x) * y2 - 2.0 * (y @ x) + 1.0
        with np.errstate(divide="ignore", invalid="ignore"):
            if self.dim == 2:
                g = np.log(s2 / r2) / (4.0 * math.pi)
            else:
                c = 1.0 / ((self.dim - 2) * sphere_area(self.dim))
                p = (2.0 - self.dim) / 2.0
                g = c * (r2**p - s2**p)
        inside = (y2 <= 1.0) & (x @ x <= 1.0)
        return np.where(inside, np.maximum(g, 0.0), 0.0)

    def green_integral(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return float((1.0 - x @ x) / (2.0 * self.dim))


def UnitDisk() -> UnitBall:
    return UnitBall(dim=2, name="disk")


def heat_kernel_1d(t: float, a, b) -> np.ndarray:
    """Dirichlet heat kernel of d^2/dx^2 on (0, 1) at time t.

    Method of images for small t, sine series otherwise; both truncated
    far below double precision.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if t < 0.1:
        out = np.zeros(np.broadcast(a, b).shape)
        c = 1.0 / math.sqrt(4.0 * math.pi * t)
        for m in range(-3, 4):
            out += np.exp(-((a - b + 2 * m) ** 2) / (4 * t)) - np.exp(-((a + b + 2 * m) ** 2) / (4 * t))
        return c * out
    out = np.zeros(np.broadcast(a, b).shape)
    for n in range(1, 12):
        out += 2.0 * np.sin(n * math.pi * a) * np.sin(n * math.pi * b) * math.exp(-(n * math.pi) ** 2 * t)
    return out


def _heat_mass_1d(t: float, a) -> np.ndarray:
    """Integral of the 1D Dirichlet heat kernel over b in (0, 1)."""
    a = np.asarray(a, dtype=float)
    if t < 0.1:
        s = 2.0 * math.sqrt(t)
        out = np.zeros_like(a)
        for m in range(-3, 4):
            out += 0.5 * (erf((a + 2 * m) / s) - erf((a - 1 + 2 * m) / s))
            out -= 0.5 * (erf((a + 1 + 2 * m) / s) - erf((a + 2 * m) / s))
        return out
    out = np.zeros_like(a)
    for n in range(1, 40, 2):
        out += 4.0 / (n * math.pi) * np.sin(n * math.pi * a) * math.exp(-(n * math.pi) ** 2 * t)
    return out


def _log_time_grid(r_min: float, step: float = 0.1) -> np.ndarray:
    """Nodes in s = log t for trapezoid integration of heat-kernel time integrals."""
    s_lo = math.log(max(r_min, 1e-300) ** 2 / 240.0) if r_min > 0 else -60.0
    s_lo = max(s_lo, -60.0)
    return np.arange(s_lo, math.log(6.0) + step, step)


HEAT_T = 6.0
# below SMALL_T the five nearest images are exact to double precision, above it 16 sine terms are
SMALL_T = 0.02
SERIES_TERMS = 16


def _log_time_rule(rho: float, upper: float, per_unit: int = 8) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre in s = log t on [log(rho^2/240), log(upper)]."""
    s_lo = max(math.log(max(rho, 1e-300) ** 2 / 240.0), -60.0)
    s_hi = math.log(upper)
    panels = max(1, math.ceil(s_hi - s_lo))
    return composite_gl(s_lo, s_hi, panels, per_unit)


def _free_time_integral(r, T: float, d: int) -> np.ndarray:
    """int_0^T (4 pi t)^{-d/2} exp(-r^2/(4t)) dt."""
    r = np.asarray(r, dtype=float)
    u = r * r / (4.0 * T)
    if d == 1:
        return np.sqrt(T / math.pi) * np.exp(-u) - 0.5 * r * erfc(r / (2.0 * math.sqrt(T)))
    if d == 2:
        return exp1(u) / (4.0 * math.pi)
    a = d / 2.0 - 1.0
    with np.errstate(divide="ignore"):
        return r ** (2.0 - d) * gammaincc(a, u) * math.gamma(a) / (4.0 * math.pi ** (d / 2))


@dataclass(frozen=True)
class UnitHypercube(Domain):
    """(0, 1)^dim.  ``n_max`` bounds each axis in the eigenfunction series."""

    dim: int = 2
    n_max: int = 40
    name: str = "hypercube"

    def __post_init__(self):
        if not 1 <= self.dim <= 4:
            raise ValueError("hypercube dimension must be 1..4")

    def contains(self, y):
        y = np.atleast_2d(y)
        return np.all((y >= 0.0) & (y <= 1.0), axis=1)

    def on_boundary(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return bool(np.any(x <= BOUNDARY_TOL) or np.any(x >= 1.0 - BOUNDARY_TOL))

    def ray_exit(self, x, dirs):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        dirs = np.asarray(dirs, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            hit = np.where(dirs > 0, (1.0 - x) / dirs, np.where(dirs < 0, -x / dirs, np.inf))
        return hit.min(axis=1)

    def bounding_box(self):
        return (0.0,) * self.dim, (1.0,) * self.dim

    def green(self, x, y):
        """G(x, y) = int_0^inf prod_j k_t(x_j, y_j) dt.

        The free-space kernel is subtracted up to T and integrated in closed
        form, so the remaining time integral only resolves image terms,
        whose scale is the distance from x to the nearest reflection of y.
        """
        x, y = self._prep(x, y)
        diff = y - x
        r = np.sqrt((diff**2).sum(axis=1))
        inside = self.contains(y)
        out = np.zeros(y.shape[0])
        if not np.any(inside):
            return out
        yi, ri = y[inside], r[inside]
        # squared distance from x to the reflections of y in each face
        img = np.minimum(4.0 * x[None, :] * yi, 4.0 * (1.0 - x[None, :]) * (1.0 - yi)).min(axis=1)
        rho = math.sqrt(float((ri**2 + img).min()))
        s_nodes, s_weights = _log_time_rule(rho, HEAT_T)
        n = np.arange(1, SERIES_TERMS + 1)
        sin_x = [np.sin(math.pi * n * x[j]) for j in range(self.dim)]
        sin_y = [np.sin(math.pi * np.outer(n, yi[:, j])) for j in range(self.dim)]
        acc = np.zeros(yi.shape[0])
        for s, w in zip(s_nodes, s_weights):
            t = math.exp(s)
            prod = np.ones(yi.shape[0])
            if t < SMALL_T:
                c = (4.0 * math.pi * t) ** -0.5
                for j in range(self.dim):
                    a, b = x[j], yi[:, j]
                    prod *= c * (
                        np.exp(-((a - b) ** 2) / (4 * t))
                        + np.exp(-((a - b + 2) ** 2) / (4 * t))
                        + np.exp(-((a - b - 2) ** 2) / (4 * t))
                        - np.exp(-((a + b) ** 2) / (4 * t))
                        - np.exp(-((a + b - 2) ** 2) / (4 * t))
                    )
            else:
                decay = 2.0 * np.exp(-((n * math.pi) ** 2) * t)
                for j in range(self.dim):
                    prod *= (sin_x[j] * decay) @ sin_y[j]
            free = (4.0 * math.pi * t) ** (-self.dim / 2) * np.exp(-(ri**2) / (4.0 * t))
            acc += w * t * (prod - free)
        with np.errstate(divide="ignore"):
            out[inside] = _free_time_integral(ri, HEAT_T, self.dim) + acc
        return out

    def green_series(self, x, y, n_max: int | None = None):
        """Truncated eigenfunction series sum_{|n|_inf <= n_max} e_n(x) e_n(y) / lambda_n."""
        x, y = self._prep(x, y)
        n_max = self.n_max if n_max is None else n_max
        n = np.arange(1, n_max + 1)
        # per-axis factors 2 sin(n pi x_j) sin(n pi y_j), shape (N, d, n_max)
        fac = 2.0 * np.sin(math.pi * n[None, None, :] * x[None, :, None]) * np.sin(
            math.pi * n[None, None, :] * y[:, :, None]
        )
        grids = np.meshgrid(*([n] * self.dim), indexing="ij")
        lam = math.pi**2 * sum(g.astype(float) ** 2 for g in grids)
        out = np.empty(y.shape[0])
        letters = "abcd"[: self.dim]
        expr = ",".join(f"{c}" for c in letters) + f",{letters}->"
        for i in range(y.shape[0]):
            out[i] = np.einsum(expr, *[fac[i, j] for j in range(self.dim)], 1.0 / lam)
        return out

    def series_tail_bound(self, n_max: int | None = None) -> float:
        """sum over |n|_inf > n_max of 2^d / lambda_n^2 (tail of the L2 norm in y), d <= 3."""
        n_max = self.n_max if n_max is None else n_max
        if self.dim >= 4:
            return math.inf
        big = 4 * n_max
        n = np.arange(1, big + 1)
        grids = np.meshgrid(*([n] * self.dim), indexing="ij")
        lam = math.pi**2 * sum(g.astype(float) ** 2 for g in grids)
        mask = np.zeros(lam.shape, bool)
        for g in grids:
            mask |= g > n_max
        tail = float((2.0**self.dim / lam[mask] ** 2).sum())
        # integral estimate beyond the enumerated block
        rest = 2.0**self.dim * sphere_area(self.dim) / 2**self.dim / math.pi**4 * big ** (self.dim - 4) / (4 - self.dim)
        return tail + rest

    def green_integral(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        s_grid = _log_time_grid(0.0)
        step = s_grid[1] - s_grid[0]
        total = 0.0
        for s in s_grid:
            t = math.exp(s)
            total += t * float(np.prod(_heat_mass_1d(t, x)))
        return total * step

    def green_l2sq_heat(self, x) -> float:
        """Integral of G(x, y)^2 over D as int_0^inf t p_t(x, x) dt (finite for d <= 3)."""
        if self.dim >= 4:
            return math.inf
        x = np.atleast_1d(np.asarray(x, dtype=float))
        s_grid = np.arange(-80.0, math.log(8.0), 0.05)
        total = 0.0
        for s in s_grid:
            t = math.exp(s)
            total += t * t * float(np.prod(heat_kernel_1d(t, x, x)))
        return total * 0.05


def make_domain(name: str, dim: int | None = None, n_max: int = 40) -> Domain:
    """Domain by CLI name: interval, disk, ball, hypercube."""
    name = name.lower()
    if name == "interval":
        if dim not in (None, 1):
            raise ValueError("interval is one-dimensional")
        return UnitInterval()
    if name == "disk":
        if dim not in (None, 2):
            raise ValueError("disk is two-dimensional")
        return UnitDisk()
    if name == "ball":
        return UnitBall(dim=3 if dim is None else dim)
    if name in ("hypercube", "cube"):
        return UnitHypercube(dim=1 if dim is None else dim, n_max=n_max)
    raise ValueError(f"unknown domain {name!r}")
