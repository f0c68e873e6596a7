"""Poisson random measure sampling, compensated integrals and chaos data of eta.

Configurations are finite-activity samples of the measure with intensity
Lebesgue x nu on a box; jumps with |z| < eps are dropped together with
their compensator, and the variance they would have carried is reported.

Functions that evaluate a pairing accept either a single
:class:`PointConfiguration` (returning a float) or a
:class:`ConfigurationBatch` (returning one value per sample).
"""

from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .basis import (
    BasisError,
    JumpBasis,
    delta_k,
    eval_p,
    hermite_integral_table,
    hermite_table,
    tensor_hermite_table,
)
from .chaos import ChaosExpansion
from .measures import DivergenceError, LevyMeasure
from .multiindex import MultiIndex, cantor_pair, cantor_unpair, dim_unbijection, unit
from .quadrature import tensor_rule

__all__ = [
    "Box",
    "RandomSource",
    "PointConfiguration",
    "ConfigurationBatch",
    "TestFunction",
    "MCEstimate",
    "sample_prm",
    "sample_batch",
    "integrate_pi",
    "l2_pi",
    "truncation_variance",
    "pair_raw",
    "pair_compensated",
    "eta_sample",
    "eta_chaos",
    "white_noise_chaos",
    "eta_mixed_partial",
    "prm_noise_chaos",
    "delta_function",
    "charlier_eval",
    "k_alpha_eval",
    "k_alpha_matrix",
    "char_functional_check",
    "moment_formula",
    "mean_estimate",
    "variance_estimate",
]

THREADS_ENV = "LEVYNOISE_THREADS"
CHUNK = 20_000


@dataclass(frozen=True)
class Box:
    """Axis-aligned box prod [lo_i, hi_i]."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        if len(self.lo) != len(self.hi) or not self.lo:
            raise ValueError("box corners must have equal, nonzero length")
        if any(b < a for a, b in zip(self.lo, self.hi)):
            raise ValueError("box upper corner below lower corner")
        object.__setattr__(self, "lo", tuple(float(v) for v in self.lo))
        object.__setattr__(self, "hi", tuple(float(v) for v in self.hi))

    @classmethod
    def unit(cls, d: int) -> "Box":
        return cls((0.0,) * d, (1.0,) * d)

    @classmethod
    def cube(cls, lo: float, hi: float, d: int) -> "Box":
        return cls((lo,) * d, (hi,) * d)

    @classmethod
    def from_lengths(cls, lengths: Sequence[float]) -> "Box":
        return cls((0.0,) * len(lengths), tuple(lengths))

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def volume(self) -> float:
        return math.prod(b - a for a, b in zip(self.lo, self.hi))

    def contains(self, x) -> np.ndarray:
        x = np.atleast_2d(x)
        return np.all((x >= np.asarray(self.lo)) & (x <= np.asarray(self.hi)), axis=1)

    def intersect(self, lo, hi) -> "Box":
        new_lo = np.maximum(self.lo, lo)
        new_hi = np.maximum(np.minimum(self.hi, hi), new_lo)
        return Box(tuple(new_lo), tuple(new_hi))


@dataclass(frozen=True)
class RandomSource:
    """Seeded source with reproducible stream splitting."""

    seed: int
    path: tuple[int, ...] = ()

    def generator(self) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence(self.seed, spawn_key=self.path))

    def spawn(self, n: int) -> list["RandomSource"]:
        return [RandomSource(self.seed, self.path + (i,)) for i in range(n)]


def _generator(rng) -> np.random.Generator:
    if isinstance(rng, RandomSource):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


@dataclass(frozen=True)
class PointConfiguration:
    """One realisation: points ``x`` (n, d) with jump sizes ``z`` (n,)."""

    box: Box
    eps: float
    x: np.ndarray
    z: np.ndarray
    mass: float

    def __post_init__(self):
        self.x.setflags(write=False)
        self.z.setflags(write=False)

    @property
    def n_points(self) -> int:
        return self.z.size

    # batch-compatible view
    n_samples = 1

    @property
    def sample(self) -> np.ndarray:
        return np.zeros(self.z.size, dtype=np.intp)


@dataclass(frozen=True)
class ConfigurationBatch:
    """Many independent realisations stored flat; ``sample[p]`` owns point p."""

    box: Box
    eps: float
    x: np.ndarray
    z: np.ndarray
    sample: np.ndarray
    n_samples: int
    mass: float

    def __len__(self) -> int:
        return self.n_samples

    def __getitem__(self, i: int) -> PointConfiguration:
        sel = self.sample == i
        return PointConfiguration(self.box, self.eps, self.x[sel].copy(), self.z[sel].copy(), self.mass)

    def counts(self) -> np.ndarray:
        return np.bincount(self.sample, minlength=self.n_samples)


def _per_sample(cfg, values: np.ndarray):
    """Sum point values within each sample."""
    if isinstance(cfg, PointConfiguration):
        return float(np.sum(values))
    return np.bincount(cfg.sample, weights=values, minlength=cfg.n_samples)


def _draw(model: LevyMeasure, box: Box, eps: float, gen: np.random.Generator, n: int):
    mass = model.mass(eps) * box.volume if box.volume > 0 else 0.0
    if not math.isfinite(mass):
        raise DivergenceError("infinite restricted mass; raise eps")
    counts = gen.poisson(mass, size=n) if mass > 0 else np.zeros(n, dtype=np.int64)
    total = int(counts.sum())
    lo, hi = np.asarray(box.lo), np.asarray(box.hi)
    x = lo + (hi - lo) * gen.random((total, box.dim))
    z = model.sample_jumps(gen, total, eps)
    return counts, x, z, mass


def sample_prm(model: LevyMeasure, box: Box, eps: float | None, rng) -> PointConfiguration:
    """Exact sample of the measure restricted to box x {|z| >= eps}."""
    eps = model.eps if eps is None else eps
    _, x, z, mass = _draw(model, box, eps, _generator(rng), 1)
    return PointConfiguration(box, eps, x, z, mass)


def _threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def sample_batch(model: LevyMeasure, box: Box, eps: float | None, n: int, rng) -> ConfigurationBatch:
    """``n`` independent configurations.

    Work is split into fixed chunks, each with its own spawned stream, so
    the result depends on the seed only and not on the thread count.
    """
    eps = model.eps if eps is None else eps
    source = rng if isinstance(rng, RandomSource) else RandomSource(int(_generator(rng).integers(2**63)))
    sizes = [min(CHUNK, n - s) for s in range(0, n, CHUNK)]
    streams = source.spawn(len(sizes))

    def work(args):
        size, stream = args
        return _draw(model, box, eps, stream.generator(), size)

    jobs = list(zip(sizes, streams))
    if _threads() > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(_threads()) as pool:
            parts = list(pool.map(work, jobs))
    else:
        parts = [work(j) for j in jobs]
    counts = np.concatenate([p[0] for p in parts]) if parts else np.zeros(0, dtype=np.int64)
    x = np.concatenate([p[1] for p in parts]) if parts else np.empty((0, box.dim))
    z = np.concatenate([p[2] for p in parts]) if parts else np.empty(0)
    mass = parts[0][3] if parts else model.mass(eps) * box.volume
    sample = np.repeat(np.arange(n), counts)
    for arr in (x, z, sample):
        arr.setflags(write=False)
    return ConfigurationBatch(box, eps, x, z, sample, n, mass)


@dataclass(frozen=True)
class TestFunction:
    """f(x, z) = 1_rect(x) * fn(x, z); ``rect`` lets quadrature skip the indicator's kink."""

    __test__ = False  # not a pytest class

    fn: Callable[[np.ndarray, np.ndarray], np.ndarray]
    rect: tuple[tuple[float, ...], tuple[float, ...]] | None = None
    name: str = field(default="f", compare=False)

    def __call__(self, x, z) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        z = np.asarray(z, dtype=float)
        vals = np.broadcast_to(np.asarray(self.fn(x, z), dtype=float), z.shape)
        if self.rect is not None:
            lo, hi = map(np.asarray, self.rect)
            inside = np.all((x >= lo) & (x <= hi), axis=1)
            vals = np.where(inside, vals, 0.0)
        return vals

    def __mul__(self, other: "TestFunction") -> "TestFunction":
        other = as_test_function(other)
        rect = self.rect
        if other.rect is not None:
            if rect is None:
                rect = other.rect
            else:
                lo = tuple(np.maximum(rect[0], other.rect[0]))
                hi = tuple(np.maximum(np.minimum(rect[1], other.rect[1]), lo))
                rect = (lo, hi)
        f, g = self.fn, other.fn
        return TestFunction(lambda x, z: f(x, z) * g(x, z), rect, f"{self.name}*{other.name}")

    @classmethod
    def product(cls, space=None, jump=None, rect=None, name: str = "f") -> "TestFunction":
        """space(x) * jump(z), optionally times the indicator of ``rect``."""
        sp = space or (lambda x: np.ones(x.shape[0]))
        jp = jump or (lambda z: np.ones_like(z))
        if rect is not None:
            rect = (tuple(map(float, rect[0])), tuple(map(float, rect[1])))
        return cls(lambda x, z: sp(x) * jp(z), rect, name)


def as_test_function(f) -> TestFunction:
    return f if isinstance(f, TestFunction) else TestFunction(f)


def integrate_pi(
    f,
    model: LevyMeasure,
    box: Box,
    eps: float | None = None,
    transform: Callable[[np.ndarray], np.ndarray] | None = None,
    per_unit: int = 24,
) -> float | complex:
    """Integral of transform(f) over box x {|z| >= eps} against Lebesgue x nu.

    ``transform`` must vanish at 0 when ``f`` carries a rectangle, since the
    quadrature only covers box intersected with that rectangle.
    """
    f = as_test_function(f)
    eps = model.eps if eps is None else eps
    region = box if f.rect is None else box.intersect(*f.rect)
    if region.volume == 0.0:
        return 0.0
    X, wx = tensor_rule(np.asarray(region.lo), np.asarray(region.hi), per_unit=per_unit)
    z, wz = model.table(eps)
    if z.size == 0:
        return 0.0
    Xr = np.repeat(X, z.size, axis=0)
    Zr = np.tile(z, X.shape[0])
    vals = f.fn(Xr, Zr)
    vals = np.broadcast_to(vals, Zr.shape)
    if transform is not None:
        vals = transform(vals)
    vals = np.asarray(vals).reshape(X.shape[0], z.size)
    total = wx @ vals @ wz
    if np.iscomplexobj(total):
        return complex(total)
    total = float(total)
    if not math.isfinite(total):
        raise DivergenceError("non-finite compensator integral")
    return total


def l2_pi(f, model: LevyMeasure, box: Box, eps: float | None = None) -> float:
    """||f||^2 in L2(pi) over the sampled region."""
    return integrate_pi(f, model, box, eps, transform=np.square)


def truncation_variance(model: LevyMeasure, box: Box, eps: float | None = None) -> float:
    """Variance carried by the omitted jumps |z| < eps over the box."""
    return model.small_jump_variance(eps) * box.volume


def pair_raw(cfg, f):
    """<omega, f> = sum_i f(x_i, z_i)."""
    f = as_test_function(f)
    if cfg.z.size == 0:
        return _per_sample(cfg, np.empty(0))
    return _per_sample(cfg, f(cfg.x, cfg.z))


def pair_compensated(cfg, model: LevyMeasure, f, compensator: float | None = None):
    """<omega - pi, f> with the compensator restricted to the sampled jumps.

    ``compensator`` may be passed when the integral is known in closed form.
    """
    if compensator is None:
        compensator = integrate_pi(f, model, cfg.box, cfg.eps)
    return pair_raw(cfg, f) - compensator


def _rect_of(x) -> tuple[np.ndarray, np.ndarray]:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return np.minimum(0.0, x), np.maximum(0.0, x)


def eta_sample(cfg, model: LevyMeasure, x):
    """d-parameter Lévy field eta(x): compensated jump sum over the rectangle between 0 and x.

    Coordinates below 0 use oriented integrals (int_0^{x_j} = -int_{x_j}^0),
    so eta agrees with :func:`eta_chaos` and its mixed partial is the white
    noise on all of R^d.
    """
    lo, hi = _rect_of(x)
    box = cfg.box
    if np.any(lo < np.asarray(box.lo) - 1e-12) or np.any(hi > np.asarray(box.hi) + 1e-12):
        raise ValueError("eta(x) needs the rectangle [0, x] inside the sampled box")
    sign = float(np.prod(np.sign(np.asarray(x, dtype=float))))
    inside = np.all((cfg.x >= lo) & (cfg.x <= hi), axis=1) if cfg.z.size else np.zeros(0, bool)
    vol = float(np.prod(hi - lo))
    return sign * (_per_sample(cfg, np.where(inside, cfg.z, 0.0)) - vol * model.mean_jump(cfg.eps))


def _eta_integrals(x, K: int) -> np.ndarray:
    """prod_j int_0^{x_j} xi_{i_j} (oriented) for k = 1..K."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    d = x.size
    idx = [dim_unbijection(k, d) for k in range(1, K + 1)]
    nmax = max(max(t) for t in idx)
    axis_tables = hermite_integral_table(nmax, np.zeros(d), x)  # (nmax, d)
    out = np.ones(K)
    for k, tup in enumerate(idx):
        for j, i in enumerate(tup):
            out[k] *= axis_tables[i - 1, j]
    return out


def _first_chaos(coeffs: np.ndarray, jump_index: int = 1) -> ChaosExpansion:
    return ChaosExpansion(
        (unit(cantor_pair(k, jump_index)), c) for k, c in enumerate(coeffs, 1) if c != 0.0
    )


def eta_chaos(model: LevyMeasure, x, K: int) -> ChaosExpansion:
    """Truncated chaos expansion of eta(x): m int_{[0,x]} zeta_k on eps^{z(k,1)}, k <= K."""
    return _first_chaos(model.m() * _eta_integrals(x, K))


def white_noise_chaos(model: LevyMeasure, x, K: int) -> ChaosExpansion:
    """Truncated white noise m zeta_k(x) on eps^{z(k,1)}, k <= K."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return _first_chaos(model.m() * tensor_hermite_table(K, x[None, :])[:, 0])


_FD4 = ((-2, 1.0 / 12), (-1, -8.0 / 12), (1, 8.0 / 12), (2, -1.0 / 12))


def eta_mixed_partial(model: LevyMeasure, x, K: int, h: float = 1e-3) -> ChaosExpansion:
    """d-th mixed partial of eta_chaos coefficients by fourth-order central differences."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    d = x.size
    acc = np.zeros(K)
    for combo in itertools.product(_FD4, repeat=d):
        shift = np.array([s for s, _ in combo], dtype=float) * h
        weight = math.prod(w for _, w in combo)
        acc += weight * _eta_integrals(x + shift, K)
    return _first_chaos(model.m() * acc / h**d)


def prm_noise_chaos(
    model: LevyMeasure, basis: JumpBasis, x, z: float, Ks: int, Km: int
) -> ChaosExpansion:
    """White noise of the compensated measure: zeta_k(x) p_m(z) on eps^{z(k,m)}."""
    if Km > basis.M:
        raise BasisError(f"Km = {Km} exceeds the jump basis size {basis.M}")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    zeta = tensor_hermite_table(Ks, x[None, :])[:, 0]
    pm = np.array([eval_p(basis, m, z) for m in range(1, Km + 1)])
    return ChaosExpansion(
        (unit(cantor_pair(k, m)), zeta[k - 1] * pm[m - 1])
        for k in range(1, Ks + 1)
        for m in range(1, Km + 1)
    )


def delta_function(basis: JumpBasis, k: int) -> TestFunction:
    """delta_k(x, z) = zeta_i(x) p_j(z) as a test function."""
    i, j = cantor_unpair(k)
    if j > basis.M:
        raise BasisError(f"delta_{k} needs p_{j}; jump basis has M = {basis.M}")
    return TestFunction(lambda x, z, _k=k: delta_k(basis, _k, x, z), name=f"delta_{k}")


def charlier_eval(cfg, model: LevyMeasure, f, g=None, order: int = 1):
    """Generalised Charlier polynomial of order <= 2 paired with f (order 1) or f (x) g (order 2).

    The order-2 form is the polarised second Taylor coefficient of
    exp(<omega, log(1 + phi)> - <pi, phi>):
    <omega - pi, f><omega - pi, g> - <omega, f g>.
    """
    if order == 0:
        return 1.0 if isinstance(cfg, PointConfiguration) else np.ones(cfg.n_samples)
    if order == 1:
        return pair_compensated(cfg, model, f)
    if order == 2:
        f = as_test_function(f)
        g = f if g is None else as_test_function(g)
        cf = pair_compensated(cfg, model, f)
        cg = cf if g is f else pair_compensated(cfg, model, g)
        return cf * cg - pair_raw(cfg, f * g)
    raise ValueError("Charlier evaluation is implemented for orders 0, 1, 2 only")


def _split_alpha(alpha: MultiIndex) -> list[int]:
    """Positions of alpha repeated by multiplicity, e.g. [1,0,2] -> [1, 3, 3]."""
    out = []
    for pos in alpha.support():
        out += [pos] * alpha[pos]
    return out


def k_alpha_matrix(cfg, model: LevyMeasure, basis: JumpBasis, alphas: Sequence[MultiIndex]) -> np.ndarray:
    """Values of K_alpha for each alpha (|alpha| <= 2), shape (n_samples, len(alphas)).

    Per-sample sums of delta_l and delta_j delta_l are computed once and reused.
    """
    pos = sorted({p for a in alphas for p in _split_alpha(a)})
    if any(a.order() > 2 for a in alphas):
        raise ValueError("K_alpha evaluation supports |alpha| <= 2")
    n = cfg.n_samples
    vals = {}
    comp = {}
    for l in pos:
        f = delta_function(basis, l)
        vals[l] = f(cfg.x, cfg.z) if cfg.z.size else np.empty(0)
        comp[l] = integrate_pi(f, model, cfg.box, cfg.eps)

    def sums(v):
        return np.bincount(cfg.sample, weights=v, minlength=n) if v.size else np.zeros(n)

    c1 = {l: sums(vals[l]) - comp[l] for l in pos}
    out = np.empty((n, len(alphas)))
    for col, a in enumerate(alphas):
        parts = _split_alpha(a)
        if not parts:
            out[:, col] = 1.0
        elif len(parts) == 1:
            out[:, col] = c1[parts[0]]
        else:
            j, l = parts
            out[:, col] = c1[j] * c1[l] - sums(vals[j] * vals[l])
    return out


def k_alpha_eval(cfg, model: LevyMeasure, basis: JumpBasis, alpha: MultiIndex):
    """K_alpha(omega) for |alpha| <= 2."""
    if alpha.order() > 2:
        raise ValueError("K_alpha evaluation supports |alpha| <= 2")
    vals = k_alpha_matrix(cfg, model, basis, [alpha])[:, 0]
    return float(vals[0]) if isinstance(cfg, PointConfiguration) else vals


@dataclass(frozen=True)
class MCEstimate:
    """A Monte-Carlo estimate with its theory value and standard error."""

    quantity: str
    estimate: float
    theory: float
    std_error: float
    n_samples: int
    seed: int | None = None
    eps: float = 0.0
    truncation_var: float = 0.0

    @property
    def z_score(self) -> float:
        if self.std_error == 0.0:
            return 0.0 if self.estimate == self.theory else math.inf
        return abs(self.estimate - self.theory) / self.std_error

    def within(self, n_se: float = 3.0, slack: float = 0.0) -> bool:
        return abs(self.estimate - self.theory) <= n_se * self.std_error + slack

    def row(self) -> dict:
        return {
            "quantity": self.quantity,
            "estimate": self.estimate,
            "theory": self.theory,
            "std_error": self.std_error,
            "n_samples": self.n_samples,
            "seed": self.seed,
            "eps": self.eps,
            "truncation_var": self.truncation_var,
        }


def mean_estimate(values, theory: float, quantity: str, **meta) -> MCEstimate:
    v = np.asarray(values, dtype=float)
    se = float(v.std(ddof=1) / math.sqrt(v.size))
    return MCEstimate(quantity, float(v.mean()), float(theory), se, v.size, **meta)


def variance_estimate(values, theory: float, quantity: str, **meta) -> MCEstimate:
    """Sample variance with SE sqrt((mu_4 - s^4)/n)."""
    v = np.asarray(values, dtype=float)
    c = v - v.mean()
    s2 = float(np.mean(c * c)) * v.size / (v.size - 1)
    mu4 = float(np.mean(c**4))
    se = math.sqrt(max(mu4 - s2 * s2, 0.0) / v.size)
    return MCEstimate(quantity, s2, float(theory), se, v.size, **meta)


def char_functional_check(
    model: LevyMeasure, box: Box, eps: float | None, f, n: int, rng
) -> tuple[complex, complex, float]:
    """Empirical E exp(i <omega, f>) against exp(int (e^{if} - 1) dpi), with its SE."""
    eps = model.eps if eps is None else eps
    batch = sample_batch(model, box, eps, n, rng)
    vals = np.exp(1j * pair_raw(batch, f))
    emp = complex(vals.mean())
    theory = complex(np.exp(integrate_pi(f, model, box, eps, transform=lambda v: np.exp(1j * v) - 1.0)))
    se = float(math.sqrt(np.mean(np.abs(vals - emp) ** 2) / n))
    return emp, theory, se


def _compositions(n: int, k: int):
    """Ordered k-tuples of positive integers summing to n."""
    for cuts in itertools.combinations(range(1, n), k - 1):
        bounds = (0,) + cuts + (n,)
        yield tuple(b - a for a, b in zip(bounds[:-1], bounds[1:]))


def moment_formula(model: LevyMeasure, box: Box, f, n: int, eps: float | None = None) -> float:
    """Raw n-th moment of <omega, f> from the integrals <pi, f^j>, j <= n.

    M_n = sum_k n!/k! sum_{compositions a of n into k parts} prod_j <pi, f^{a_j}>/a_j!.
    """
    if n < 1:
        raise ValueError("moment order must be >= 1")
    powers = {j: integrate_pi(f, model, box, eps, transform=lambda v, j=j: v**j) for j in range(1, n + 1)}
    total = 0.0
    for k in range(1, n + 1):
        inner_sum = 0.0
        for comp in _compositions(n, k):
            inner_sum += math.prod(powers[a] / math.factorial(a) for a in comp)
        total += math.factorial(n) / math.factorial(k) * inner_sum
    return total
