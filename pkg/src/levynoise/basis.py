"""Hermite functions, their d-fold tensors and the jump polynomials p_m.

Hermite functions are 1-based: ``hermite_fn(1, t) = pi^{-1/4} exp(-t^2/2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .measures import DivergenceError, LevyMeasure
from .multiindex import cantor_unpair, dim_unbijection

__all__ = [
    "hermite_fn",
    "hermite_table",
    "hermite_integral_table",
    "tensor_hermite",
    "JumpBasis",
    "BasisError",
    "build_jump_basis",
    "eval_p",
    "delta_k",
]

RANK_TOL = 1e-12
_PI_QUARTER = math.pi ** -0.25


class BasisError(IndexError):
    """Requested basis element lies beyond the available basis."""


def hermite_table(nmax: int, t) -> np.ndarray:
    """Values of xi_1..xi_nmax at ``t``; result has shape (nmax,) + shape(t)."""
    t = np.asarray(t, dtype=float)
    out = np.empty((nmax,) + t.shape)
    if nmax == 0:
        return out
    out[0] = _PI_QUARTER * np.exp(-0.5 * t * t)
    if nmax > 1:
        out[1] = math.sqrt(2.0) * t * out[0]
    for n in range(2, nmax):
        # psi_n = t sqrt(2/n) psi_{n-1} - sqrt((n-1)/n) psi_{n-2}; xi_{n+1} = psi_n
        out[n] = t * math.sqrt(2.0 / n) * out[n - 1] - math.sqrt((n - 1) / n) * out[n - 2]
    return out


def hermite_fn(n: int, t):
    """n-th L2(R)-orthonormal Hermite function (1-based)."""
    if n < 1:
        raise ValueError("Hermite functions are indexed from 1")
    val = hermite_table(n, t)[n - 1]
    return float(val) if val.ndim == 0 else val


def hermite_integral_table(nmax: int, a, b) -> np.ndarray:
    """Integrals of xi_1..xi_nmax over [a, b] (signed), shape (nmax,) + shape(a).

    Gauss-Legendre with enough nodes to resolve the oscillations of xi_nmax.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    a, b = np.broadcast_arrays(a, b)
    length = float(np.max(np.abs(b - a))) if a.size else 0.0
    nodes = int(48 + 2 * nmax + 16 * length * math.sqrt(2 * nmax + 1))
    x, w = np.polynomial.legendre.leggauss(nodes)
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    pts = mid[..., None] + half[..., None] * x
    vals = hermite_table(nmax, pts)
    return np.tensordot(vals, w, axes=([-1], [0])) * half


def tensor_hermite(k: int, x, d: int | None = None):
    """zeta_k(x) = prod_j xi_{i_j}(x_j) with (i_1..i_d) the graded bijection inverse of k.

    ``x`` has shape (..., d); ``d`` defaults to its last dimension.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x[None]
    d = x.shape[-1] if d is None else d
    idx = dim_unbijection(k, d)
    val = np.ones(x.shape[:-1])
    for j, i in enumerate(idx):
        val = val * hermite_table(i, x[..., j])[i - 1]
    return float(val) if val.ndim == 0 else val


def tensor_hermite_table(kmax: int, x) -> np.ndarray:
    """zeta_1..zeta_kmax at points ``x`` of shape (N, d); result (kmax, N)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    d = x.shape[1]
    idx = [dim_unbijection(k, d) for k in range(1, kmax + 1)]
    nmax = max(max(t) for t in idx)
    axes = [hermite_table(nmax, x[:, j]) for j in range(d)]
    out = np.ones((kmax, x.shape[0]))
    for k, tup in enumerate(idx):
        for j, i in enumerate(tup):
            out[k] *= axes[j][i - 1]
    return out


@dataclass(frozen=True)
class JumpBasis:
    """Polynomials p_1..p_M orthonormal in L2(nu).

    ``coeffs[m-1, j]`` is the coefficient of z^j in p_m; ``m_norm`` is
    (int z^2 nu(dz))^{1/2}.  ``capped`` records that fewer than
    ``requested`` polynomials exist (rank-deficient moment matrix).
    """

    coeffs: np.ndarray
    m_norm: float
    requested: int

    @property
    def M(self) -> int:
        return self.coeffs.shape[0]

    @property
    def capped(self) -> bool:
        return self.M < self.requested

    def __call__(self, m: int, z):
        return eval_p(self, m, z)

    def table(self, z) -> np.ndarray:
        """Values of p_1..p_M at ``z``: shape (M,) + shape(z)."""
        z = np.asarray(z, dtype=float)
        out = np.empty((self.M,) + z.shape)
        for m in range(1, self.M + 1):
            out[m - 1] = eval_p(self, m, z)
        return out

    def gram(self, model: LevyMeasure) -> np.ndarray:
        """Gram matrix (p_i, p_j) in L2(nu), by direct integration against the node table."""
        z, w = model.table(0.0)
        vals = self.table(z)
        return (vals * w) @ vals.T


def build_jump_basis(model: LevyMeasure, M: int) -> JumpBasis:
    """Orthonormal polynomials p_m = z l_{m-1} / ||l_{m-1}||_rho, rho(dz) = z^2 nu(dz).

    The l_m come from a Cholesky factorisation of the Hankel matrix
    H_ij = int z^{i+j} rho(dz) = moment(i+j+2).  The variable is rescaled
    for conditioning.  A pivot below RANK_TOL (relative to the largest)
    stops the construction and yields a capped basis.
    """
    if M < 1:
        raise ValueError("M must be >= 1")
    moments = np.array([model.moment(k) for k in range(2, 2 * M + 1)])
    if not np.all(np.isfinite(moments)):
        raise DivergenceError("non-finite moments; the jump basis needs moments up to order 2M")
    m2 = moments[0]
    if not m2 > 0:
        raise DivergenceError("int z^2 nu(dz) must be positive")
    scale = math.sqrt(moments[2] / m2) if M > 1 else math.sqrt(m2)
    scaled = moments / scale ** np.arange(2, 2 * M + 1)
    H = np.array([[scaled[i + j] for j in range(M)] for i in range(M)])

    L = np.zeros((M, M))
    max_pivot = 0.0
    rank = M
    for i in range(M):
        s = H[i, i] - np.dot(L[i, :i], L[i, :i])
        max_pivot = max(max_pivot, s)
        if s <= RANK_TOL * max_pivot:
            rank = i
            break
        L[i, i] = math.sqrt(s)
        for j in range(i + 1, M):
            L[j, i] = (H[j, i] - np.dot(L[j, :i], L[i, :i])) / L[i, i]
    L = L[:rank, :rank]
    # rows of L^{-1}: monomial coefficients of the rho-orthonormal l_0..l_{rank-1}
    Linv = np.linalg.solve(L, np.eye(rank)) if rank else np.zeros((0, 0))
    coeffs = np.zeros((rank, M + 1))
    powers = scale ** -np.arange(1, rank + 1)
    for m in range(rank):
        # p_{m+1}(z) = (z/s) l~_m(z/s)
        coeffs[m, 1 : rank + 1] = Linv[m] * powers
    m_norm = math.sqrt(m2)
    coeffs[0, :] = 0.0
    coeffs[0, 1] = 1.0 / m_norm
    coeffs.setflags(write=False)
    return JumpBasis(coeffs=coeffs, m_norm=m_norm, requested=M)


def eval_p(basis: JumpBasis, m: int, z):
    """p_m(z) by Horner's rule."""
    if not 1 <= m <= basis.M:
        raise BasisError(f"p_{m} outside the basis (M = {basis.M})")
    row = basis.coeffs[m - 1]
    z = np.asarray(z, dtype=float)
    acc = np.zeros_like(z)
    for c in row[: m + 1][::-1]:
        acc = acc * z + c
    return float(acc) if acc.ndim == 0 else acc


def delta_k(basis: JumpBasis, k: int, x, z):
    """delta_k(x, z) = zeta_i(x) p_j(z) where (i, j) = cantor_unpair(k).

    ``x`` has shape (..., d) and ``z`` broadcasts against x[..., 0].
    """
    i, j = cantor_unpair(k)
    if j > basis.M:
        raise BasisError(f"delta_{k} needs p_{j} but the jump basis has M = {basis.M}")
    return tensor_hermite(i, x) * eval_p(basis, j, z)
