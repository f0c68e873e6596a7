"""Lévy measure models: atomic measures and tabulated densities.

Both variants reduce integration against nu to a weighted node table, so
moments, compensators and truncation variances share one code path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Mapping

import numpy as np

from .quadrature import composite_gl, gauss_legendre, geometric_gl

__all__ = [
    "MeasureError",
    "DivergenceError",
    "LevyMeasure",
    "AtomicMeasure",
    "DensityMeasure",
    "DENSITIES",
    "measure_from_dict",
    "measure_to_dict",
]


class MeasureError(ValueError):
    """Malformed or invalid Lévy measure."""


class DivergenceError(ArithmeticError):
    """A moment or mass integral failed to converge."""


class LevyMeasure:
    """Common interface; subclasses provide :meth:`table`."""

    eps: float = 0.0

    def table(self, lo: float = 0.0, hi: float = math.inf) -> tuple[np.ndarray, np.ndarray]:
        """Nodes and weights representing nu restricted to lo <= |z| < hi."""
        raise NotImplementedError

    def integrate(self, g: Callable[[np.ndarray], np.ndarray], eps: float | None = None) -> float:
        """Integral of g against nu over {|z| >= eps} (``eps`` defaults to the model's)."""
        z, w = self.table(self.eps if eps is None else eps)
        return float(np.dot(w, g(z)))

    def moment(self, k: int, eps: float = 0.0) -> float:
        """Integral of z^k over {|z| >= eps}; orders below 2 need eps > 0 or finite mass."""
        if k < 2 and eps == 0.0:
            self._check_finite_mass()
        z, w = self.table(eps)
        return float(np.dot(w, z**k))

    def m2(self) -> float:
        return self.moment(2)

    def m(self) -> float:
        """L2(nu) norm of the identity, (int z^2 nu(dz))^{1/2}."""
        return math.sqrt(self.m2())

    def mass(self, eps: float | None = None) -> float:
        """nu({|z| >= eps})."""
        eps = self.eps if eps is None else eps
        if eps == 0.0:
            self._check_finite_mass()
        z, w = self.table(eps)
        return float(w.sum())

    def mean_jump(self, eps: float | None = None) -> float:
        """Integral of z over {|z| >= eps}: the compensator density of the jump size."""
        eps = self.eps if eps is None else eps
        if eps == 0.0:
            self._check_finite_mass()
        z, w = self.table(eps)
        return float(np.dot(w, z))

    def small_jump_variance(self, eps: float | None = None) -> float:
        """Integral of z^2 over {|z| < eps}: variance per unit volume of omitted jumps."""
        eps = self.eps if eps is None else eps
        if eps <= 0.0:
            return 0.0
        z, w = self.table(0.0, eps)
        return float(np.dot(w, z**2))

    def sample_jumps(self, rng: np.random.Generator, n: int, eps: float | None = None) -> np.ndarray:
        raise NotImplementedError

    def _check_finite_mass(self) -> None:
        pass


@dataclass(frozen=True)
class AtomicMeasure(LevyMeasure):
    """nu = sum_i w_i delta_{z_i} with z_i != 0 and w_i > 0."""

    z: tuple[float, ...]
    w: tuple[float, ...]
    eps: float = 0.0

    def __post_init__(self):
        if len(self.z) != len(self.w) or not self.z:
            raise MeasureError("atoms need matching, nonempty z and w lists")
        if any(v == 0.0 for v in self.z):
            raise MeasureError("Lévy measures carry no atom at 0")
        if any(not (v > 0.0) for v in self.w):
            raise MeasureError("atom weights must be positive")
        if any(not math.isfinite(v) for v in self.z + self.w):
            raise MeasureError("atoms must be finite")
        if self.eps < 0:
            raise MeasureError("eps must be >= 0")
        object.__setattr__(self, "z", tuple(float(v) for v in self.z))
        object.__setattr__(self, "w", tuple(float(v) for v in self.w))

    @classmethod
    def of(cls, atoms: Mapping[float, float] | list[tuple[float, float]], eps: float = 0.0):
        items = list(atoms.items()) if isinstance(atoms, Mapping) else list(atoms)
        return cls(tuple(a for a, _ in items), tuple(b for _, b in items), eps)

    def table(self, lo=0.0, hi=math.inf):
        z = np.asarray(self.z)
        w = np.asarray(self.w)
        keep = (np.abs(z) >= lo) & (np.abs(z) < hi)
        return z[keep], w[keep]

    def sample_jumps(self, rng, n, eps=None):
        z, w = self.table(self.eps if eps is None else eps)
        if n == 0:
            return np.empty(0)
        if w.size == 0:
            raise MeasureError("no atoms above the truncation threshold")
        idx = rng.choice(z.size, size=n, p=w / w.sum())
        return z[idx]


def _exponential(z):
    return np.where(z > 0, np.exp(-np.abs(z)), 0.0)


def _symmetric_exponential(z):
    return 0.5 * np.exp(-np.abs(z))


def _gamma(z):
    return np.where(z > 0, np.exp(-np.abs(z)) / np.abs(z), 0.0)


def _tempered_stable(z):
    a = np.abs(z)
    return np.exp(-a) / a**1.5


def _gaussian(z):
    return np.exp(-0.5 * z**2) / math.sqrt(2.0 * math.pi)


DENSITIES: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "exponential": _exponential,
    "symmetric_exponential": _symmetric_exponential,
    "gamma": _gamma,
    "tempered_stable": _tempered_stable,
    "gaussian": _gaussian,
}


@dataclass(frozen=True)
class DensityMeasure(LevyMeasure):
    """nu(dz) = f(z) dz on ``support`` minus {0}, integrated by composite Gauss-Legendre.

    Panels are refined geometrically toward the origin, where Lévy
    densities may be non-integrable; moments of order >= 2 stay finite.
    """

    expr_id: str
    support: tuple[float, float]
    nodes: int = 24
    eps: float = 0.0
    density: Callable[[np.ndarray], np.ndarray] | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.density is None:
            if self.expr_id not in DENSITIES:
                raise MeasureError(f"unknown density expr_id {self.expr_id!r}")
            object.__setattr__(self, "density", DENSITIES[self.expr_id])
        a, b = map(float, self.support)
        if not (a < b) or not (math.isfinite(a) and math.isfinite(b)):
            raise MeasureError("density support must be a finite interval [a, b]")
        if self.eps < 0:
            raise MeasureError("eps must be >= 0")
        object.__setattr__(self, "support", (a, b))

    def _pieces(self, lo: float, hi: float) -> list[tuple[float, float, int]]:
        """Intervals of |z| in [lo, hi) on each sign, as (start, stop, sign)."""
        a, b = self.support
        out = []
        for sign, (s0, s1) in ((1, (max(a, 0.0), b)), (-1, (max(-b, 0.0), -a))):
            start, stop = max(s0, lo), min(s1, hi)
            if stop > start:
                out.append((start, stop, sign))
        return out

    def _rule(self, lo: float, hi: float, refine: int = 1):
        zs, ws = [], []
        n = self.nodes * refine
        for start, stop, sign in self._pieces(lo, hi):
            if start == 0.0:
                x, w = geometric_gl(0.0, stop, n, levels=60)
            else:
                x, w = composite_gl(start, stop, 16 * refine, n)
            zs.append(sign * x)
            ws.append(w)
        if not zs:
            return np.empty(0), np.empty(0)
        z = np.concatenate(zs)
        w = np.concatenate(ws)
        dens = self.density(z)
        return z, w * dens

    def table(self, lo=0.0, hi=math.inf):
        return self._rule(lo, hi)

    def moment(self, k: int, eps: float = 0.0) -> float:
        val = super().moment(k, eps)
        z, w = self._rule(eps, math.inf, refine=2)
        check = float(np.dot(w, z**k))
        if not math.isfinite(val) or abs(check - val) > 1e-8 * max(1.0, abs(val)):
            raise DivergenceError(f"moment of order {k} did not converge ({val} vs {check})")
        return val

    def _check_finite_mass(self) -> None:
        # integrable near 0 iff the mass of (0, r) shrinks with r
        for start, stop, _ in self._pieces(0.0, math.inf):
            if start == 0.0:
                tiny = min(stop, 1e-6)
                z, w = self._rule(0.0, tiny)
                if not (float(w.sum()) < 1e-4):
                    raise DivergenceError(
                        f"density {self.expr_id!r} has infinite mass near 0; use eps > 0"
                    )

    def sample_jumps(self, rng, n, eps=None):
        eps = self.eps if eps is None else eps
        if eps == 0.0:
            self._check_finite_mass()
        if n == 0:
            return np.empty(0)
        zs, cdfs = _inverse_cdf_table(self, eps)
        piece = rng.choice(len(cdfs), size=n, p=np.array([c[-1] for c in cdfs]) / sum(c[-1] for c in cdfs))
        u = rng.random(n)
        out = np.empty(n)
        for p, (grid, cum) in enumerate(zip(zs, cdfs)):
            sel = piece == p
            out[sel] = np.interp(u[sel] * cum[-1], cum, grid)
        return out


@lru_cache(maxsize=32)
def _inverse_cdf_table(model: DensityMeasure, eps: float):
    """Cumulative masses on a fine grid per sign piece; linear inverse within cells."""
    xi, wi = gauss_legendre(-1.0, 1.0, 8)
    zs, cdfs = [], []
    for start, stop, sign in model._pieces(eps, math.inf):
        lo = max(start, 1e-12)
        if start == 0.0 or stop / lo > 100:
            grid = np.geomspace(lo, stop, 4097)
        else:
            grid = np.linspace(lo, stop, 4097)
        mid = 0.5 * (grid[1:] + grid[:-1])
        half = 0.5 * (grid[1:] - grid[:-1])
        x = mid[:, None] + half[:, None] * xi[None, :]
        cell_mass = (model.density(sign * x) * wi[None, :]).sum(axis=1) * half
        zs.append(sign * grid)
        cdfs.append(np.concatenate([[0.0], np.cumsum(cell_mass)]))
    return zs, cdfs


def measure_from_dict(spec: Mapping) -> LevyMeasure:
    """Build a measure from its JSON form (see the README for the schema)."""
    kind = spec.get("type")
    eps = float(spec.get("eps", 0.0))
    if kind == "atoms":
        atoms = spec.get("atoms")
        if not atoms:
            raise MeasureError("'atoms' must be a nonempty list")
        try:
            return AtomicMeasure(
                tuple(float(a["z"]) for a in atoms), tuple(float(a["w"]) for a in atoms), eps
            )
        except (KeyError, TypeError) as exc:
            raise MeasureError(f"malformed atom entry: {exc}") from exc
    if kind == "density":
        try:
            support = tuple(spec["support"])
        except KeyError as exc:
            raise MeasureError("density measure needs 'support'") from exc
        return DensityMeasure(
            expr_id=str(spec.get("expr_id")),
            support=support,
            nodes=int(spec.get("nodes", 24)),
            eps=eps,
        )
    raise MeasureError(f"unknown measure type {kind!r}")


def measure_to_dict(model: LevyMeasure) -> dict:
    if isinstance(model, AtomicMeasure):
        out = {"type": "atoms", "atoms": [{"z": z, "w": w} for z, w in zip(model.z, model.w)]}
    elif isinstance(model, DensityMeasure):
        out = {
            "type": "density",
            "expr_id": model.expr_id,
            "support": list(model.support),
            "nodes": model.nodes,
        }
    else:
        raise MeasureError(f"cannot serialise {type(model).__name__}")
    if model.eps:
        out["eps"] = model.eps
    return out
