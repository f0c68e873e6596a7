"""Multi-indices, Cantor pairing and the graded bijection N^d -> N.

Positions are 1-based throughout: ``MultiIndex((2, 0, 3))`` has
``alpha_1 = 2`` and ``alpha_3 = 3``.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Iterable, Sequence

__all__ = [
    "MultiIndex",
    "ZERO",
    "unit",
    "cantor_pair",
    "cantor_unpair",
    "dim_bijection",
    "dim_unbijection",
]


class MultiIndex:
    """Finitely supported sequence of non-negative integers.

    Trailing zeros are stripped so that equal indices compare and hash equal.
    """

    __slots__ = ("_entries", "_hash")

    def __init__(self, entries: Iterable[int] = ()):
        vals = [int(e) for e in entries]
        if any(v < 0 for v in vals):
            raise ValueError(f"multi-index entries must be non-negative: {vals}")
        while vals and vals[-1] == 0:
            vals.pop()
        self._entries = tuple(vals)
        self._hash = hash(self._entries)

    @property
    def entries(self) -> tuple[int, ...]:
        return self._entries

    def __getitem__(self, position: int) -> int:
        """Entry at 1-based ``position``; zero beyond the stored support."""
        if position < 1:
            raise IndexError("multi-index positions start at 1")
        if position > len(self._entries):
            return 0
        return self._entries[position - 1]

    def __len__(self) -> int:
        return len(self._entries)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MultiIndex):
            return NotImplemented
        return self._entries == other._entries

    def __hash__(self) -> int:
        return self._hash

    def __lt__(self, other: "MultiIndex") -> bool:
        return (self.order(), self._entries) < (other.order(), other._entries)

    def __repr__(self) -> str:
        return f"MultiIndex({list(self._entries)})"

    def __str__(self) -> str:
        return self.to_text()

    def __add__(self, other: "MultiIndex") -> "MultiIndex":
        a, b = self._entries, other._entries
        n = max(len(a), len(b))
        return MultiIndex(
            (a[i] if i < len(a) else 0) + (b[i] if i < len(b) else 0) for i in range(n)
        )

    def support(self) -> list[int]:
        """1-based positions with nonzero entries."""
        return [i + 1 for i, v in enumerate(self._entries) if v]

    def order(self) -> int:
        return sum(self._entries)

    def index(self) -> int:
        """Position of the last nonzero entry, 0 for the zero index."""
        return len(self._entries)

    def factorial(self) -> float:
        """Product of entry factorials as a float.

        Raises OverflowError when the product is not representable.
        """
        prod = 1
        for v in self._entries:
            prod *= math.factorial(v)
        return float(prod)

    def weight(self, k: float) -> float:
        """(2N)^{k alpha} = prod_j (2j)^{k alpha_j}; ``k`` may be negative."""
        w = 1.0
        for j, v in enumerate(self._entries, 1):
            if v:
                w *= (2.0 * j) ** (k * v)
        return w

    def to_text(self) -> str:
        return "[" + ",".join(str(v) for v in self._entries) + "]"

    @classmethod
    def from_text(cls, text: str) -> "MultiIndex":
        body = text.strip()
        if not (body.startswith("[") and body.endswith("]")):
            raise ValueError(f"malformed multi-index {text!r}")
        body = body[1:-1].strip()
        if not body:
            return cls()
        return cls(int(tok) for tok in body.split(","))


ZERO = MultiIndex()


def unit(l: int, power: int = 1) -> MultiIndex:
    """``power * eps^l``: ``power`` at position ``l`` and zeros elsewhere."""
    if l < 1:
        raise ValueError("unit index positions start at 1")
    return MultiIndex([0] * (l - 1) + [power])


def cantor_pair(i: int, j: int) -> int:
    """Diagonal enumeration of N x N: j + (i+j-2)(i+j-1)/2."""
    if i < 1 or j < 1:
        raise ValueError("cantor_pair arguments must be >= 1")
    return j + (i + j - 2) * (i + j - 1) // 2


def cantor_unpair(k: int) -> tuple[int, int]:
    """Inverse of :func:`cantor_pair`."""
    if k < 1:
        raise ValueError("cantor_unpair argument must be >= 1")
    # diagonal s = i + j - 1 holds the values (s-1)s/2 + 1 .. s(s+1)/2
    s = (math.isqrt(8 * k - 7) + 1) // 2
    while s * (s + 1) // 2 < k:
        s += 1
    while (s - 1) * s // 2 >= k:
        s -= 1
    j = k - (s - 1) * s // 2
    return s + 1 - j, j


def _compositions(n: int, parts: int) -> int:
    """Number of ways to write n as an ordered sum of ``parts`` positive integers."""
    if parts == 0:
        return 1 if n == 0 else 0
    if n < parts:
        return 0
    return math.comb(n - 1, parts - 1)


def dim_bijection(idx: Sequence[int]) -> int:
    """Graded-lexicographic rank (1-based) of a tuple in N^d.

    Tuples are ordered by coordinate sum, ties broken lexicographically.
    """
    d = len(idx)
    if d == 0:
        raise ValueError("empty tuple")
    if any(i < 1 for i in idx):
        raise ValueError("tuple entries must be >= 1")
    total = sum(idx)
    rank = math.comb(total - 1, d)  # tuples with smaller coordinate sum
    remaining = total
    for p, v in enumerate(idx[:-1]):
        rest = d - p - 1
        for smaller in range(1, v):
            rank += _compositions(remaining - smaller, rest)
        remaining -= v
    return rank + 1


@lru_cache(maxsize=65536)
def dim_unbijection(k: int, d: int) -> tuple[int, ...]:
    """Inverse of :func:`dim_bijection` for dimension ``d``."""
    if k < 1 or d < 1:
        raise ValueError("dim_unbijection needs k >= 1 and d >= 1")
    if d == 1:
        return (k,)
    total = d
    while math.comb(total, d) < k:
        total += 1
    r = k - 1 - math.comb(total - 1, d)
    out = []
    remaining = total
    for p in range(d - 1):
        rest = d - p - 1
        v = 1
        while True:
            c = _compositions(remaining - v, rest)
            if r < c:
                break
            r -= c
            v += 1
        out.append(v)
        remaining -= v
    out.append(remaining)
    return tuple(out)
