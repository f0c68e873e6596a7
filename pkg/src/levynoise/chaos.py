"""Finite chaos expansions sum_alpha c_alpha K_alpha and their algebra.

Wick products, Kondratiev norms, the dual pairing and the Hermite
transform all act on the coefficient map; no completed spaces are built.
"""

from __future__ import annotations

import math
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np

from .multiindex import ZERO, MultiIndex

__all__ = [
    "ChaosExpansion",
    "wick",
    "expectation",
    "inner",
    "l2_norm",
    "kondratiev_norm",
    "hermite_transform",
    "neighborhood_sum",
    "in_neighborhood",
    "growth_constant",
]


class ChaosExpansion:
    """Immutable sparse map MultiIndex -> coefficient with no stored zeros."""

    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping[MultiIndex, float] | Iterable[tuple[MultiIndex, float]] = ()):
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict[MultiIndex, float] = {}
        for alpha, c in items:
            if not isinstance(alpha, MultiIndex):
                alpha = MultiIndex(alpha)
            acc[alpha] = acc.get(alpha, 0.0) + float(c)
        self._terms = MappingProxyType({a: c for a, c in acc.items() if c != 0.0})

    @classmethod
    def constant(cls, c: float) -> "ChaosExpansion":
        return cls({ZERO: c})

    @classmethod
    def basis(cls, alpha: MultiIndex | Sequence[int], c: float = 1.0) -> "ChaosExpansion":
        return cls({MultiIndex(alpha) if not isinstance(alpha, MultiIndex) else alpha: c})

    @property
    def terms(self) -> Mapping[MultiIndex, float]:
        return self._terms

    def __len__(self) -> int:
        return len(self._terms)

    def __iter__(self):
        return iter(sorted(self._terms))

    def __getitem__(self, alpha) -> float:
        if not isinstance(alpha, MultiIndex):
            alpha = MultiIndex(alpha)
        return self._terms.get(alpha, 0.0)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ChaosExpansion):
            return NotImplemented
        return dict(self._terms) == dict(other._terms)

    def __repr__(self) -> str:
        body = " + ".join(f"{c:g}*K{a.to_text()}" for a, c in self.items())
        return f"ChaosExpansion({body or '0'})"

    def items(self) -> list[tuple[MultiIndex, float]]:
        return sorted(self._terms.items())

    def __add__(self, other: "ChaosExpansion") -> "ChaosExpansion":
        return ChaosExpansion(list(self._terms.items()) + list(other._terms.items()))

    def __neg__(self) -> "ChaosExpansion":
        return ChaosExpansion({a: -c for a, c in self._terms.items()})

    def __sub__(self, other: "ChaosExpansion") -> "ChaosExpansion":
        return self + (-other)

    def __mul__(self, scalar: float) -> "ChaosExpansion":
        return ChaosExpansion({a: scalar * c for a, c in self._terms.items()})

    __rmul__ = __mul__

    def max_order(self) -> int:
        return max((a.order() for a in self._terms), default=0)

    def graded(self, n: int) -> "ChaosExpansion":
        """Terms with |alpha| = n: the n-th chaos component."""
        return ChaosExpansion({a: c for a, c in self._terms.items() if a.order() == n})

    def wick(self, other: "ChaosExpansion") -> "ChaosExpansion":
        return wick(self, other)

    def to_dict(self) -> dict:
        return {"terms": [{"alpha": list(a.entries), "c": c} for a, c in self.items()]}

    @classmethod
    def from_dict(cls, data: Mapping) -> "ChaosExpansion":
        return cls((MultiIndex(t["alpha"]), float(t["c"])) for t in data["terms"])


def wick(F: ChaosExpansion, G: ChaosExpansion) -> ChaosExpansion:
    """Wick product: the coefficient of gamma is sum_{alpha+beta=gamma} a_alpha b_beta."""
    out: dict[MultiIndex, float] = {}
    for a, ca in F.terms.items():
        for b, cb in G.terms.items():
            g = a + b
            out[g] = out.get(g, 0.0) + ca * cb
    return ChaosExpansion(out)


def expectation(F: ChaosExpansion) -> float:
    return F[ZERO]


def inner(F: ChaosExpansion, G: ChaosExpansion) -> float:
    """Dual pairing sum_alpha alpha! a_alpha b_alpha."""
    small, big = (F, G) if len(F) <= len(G) else (G, F)
    return math.fsum(
        a.factorial() * c * big.terms[a] for a, c in small.terms.items() if a in big.terms
    )


def l2_norm(F: ChaosExpansion) -> float:
    """L2(mu) norm (sum alpha! c_alpha^2)^{1/2}."""
    return math.sqrt(math.fsum(a.factorial() * c * c for a, c in F.terms.items()))


def kondratiev_norm(F: ChaosExpansion, rho: float, k: float) -> float:
    """(sum (alpha!)^{1+rho} c_alpha^2 (2N)^{k alpha})^{1/2}.

    Test-function norms use rho >= 0, k >= 0; distribution norms pass
    -rho and -k.
    """
    return math.sqrt(
        math.fsum(a.factorial() ** (1.0 + rho) * c * c * a.weight(k) for a, c in F.terms.items())
    )


def _as_point(z) -> np.ndarray:
    return np.atleast_1d(np.asarray(z, dtype=complex))


def _power(z: np.ndarray, alpha: MultiIndex) -> complex:
    """z^alpha; coordinates beyond the stored point are zero."""
    val = 1.0 + 0j
    for j, v in enumerate(alpha.entries, 1):
        if v:
            if j > z.size:
                return 0j
            val *= z[j - 1] ** v
    return val


def hermite_transform(F: ChaosExpansion, z) -> complex:
    """sum_alpha c_alpha z^alpha at a finitely supported complex point."""
    z = _as_point(z)
    return complex(sum(c * _power(z, a) for a, c in F.items()))


def neighborhood_sum(z, q: float) -> float:
    """sum_{alpha != 0} |z^alpha|^2 (2N)^{q alpha} in closed form; inf if divergent."""
    z = _as_point(z)
    prod = 1.0
    for j, zj in enumerate(z, 1):
        t = abs(zj) ** 2 * (2.0 * j) ** q
        if t >= 1.0:
            return math.inf
        prod /= 1.0 - t
    return prod - 1.0


def in_neighborhood(z, q: float, R: float) -> bool:
    """Membership of z in K_q(R)."""
    return neighborhood_sum(z, q) < R * R


def growth_constant(F: ChaosExpansion, q: float) -> float:
    """(sum_alpha c_alpha^2 (2N)^{-q alpha})^{1/2}.

    By Cauchy-Schwarz, |HF(z)| <= growth_constant(F, q) * (1 + neighborhood_sum(z, q))^{1/2}.
    """
    return math.sqrt(math.fsum(c * c * a.weight(-q) for a, c in F.terms.items()))
