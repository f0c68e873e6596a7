"""Named numerical checks, one per acceptance criterion, each returning report rows.

Every row carries the estimate, the reference value, the standard error
(Monte-Carlo rows), the tolerance and the verdict, so the CSV written by
``levynoise verify`` can be re-checked by a script.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import chaos as ch
from .basis import build_jump_basis, eval_p
from .greens import UnitBall, UnitDisk, UnitHypercube, UnitInterval
from .measures import AtomicMeasure
from .multiindex import MultiIndex
from .poisson import divergence_profile, green_l2sq, laplacian_residuals, polar_integrate, solve_chaos, solve_mc
from .prm import (
    Box,
    RandomSource,
    TestFunction,
    char_functional_check,
    eta_mixed_partial,
    k_alpha_matrix,
    l2_pi,
    moment_formula,
    pair_compensated,
    pair_raw,
    sample_batch,
    white_noise_chaos,
)

__all__ = ["CheckRow", "CheckResult", "CHECKS", "SUITES", "run_check", "run_suite", "REPORT_COLUMNS"]

REPORT_COLUMNS = (
    "criterion",
    "check",
    "quantity",
    "estimate",
    "theory",
    "std_error",
    "tolerance",
    "tolerance_kind",
    "passed",
    "n_samples",
    "seed",
)

SYMMETRIC_PAIR = AtomicMeasure.of([(-1.0, 1.0), (1.0, 1.0)])
FIVE_ATOMS = AtomicMeasure.of([(-2.0, 0.3), (-0.5, 1.1), (0.7, 0.8), (1.3, 0.5), (3.0, 0.2)])
UNIT_RATE = AtomicMeasure.of([(1.0, 1.0)])
HALF_PAIR = AtomicMeasure.of([(-1.0, 0.5), (1.0, 0.5)])
MC_SAMPLES = 100_000


@dataclass(frozen=True)
class CheckRow:
    """``tolerance_kind`` is one of abs, rel, se (multiples of std_error), range, max."""

    quantity: str
    estimate: float
    theory: float
    tolerance: float
    tolerance_kind: str
    std_error: float | None = None
    n_samples: int | None = None
    passed_override: bool | None = None

    @property
    def passed(self) -> bool:
        if self.passed_override is not None:
            return self.passed_override
        diff = abs(self.estimate - self.theory)
        if self.tolerance_kind == "abs":
            return diff <= self.tolerance
        if self.tolerance_kind == "rel":
            return diff <= self.tolerance * abs(self.theory)
        if self.tolerance_kind == "se":
            return diff <= self.tolerance * (self.std_error or 0.0)
        if self.tolerance_kind == "max":
            return self.estimate <= self.tolerance
        raise ValueError(self.tolerance_kind)


@dataclass
class CheckResult:
    criterion: int
    name: str
    rows: list[CheckRow]
    elapsed: float
    budget: float | None
    seed: int | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        in_time = self.budget is None or self.elapsed <= self.budget
        return in_time and all(r.passed for r in self.rows)

    def report_rows(self) -> list[tuple]:
        out = [
            (self.criterion, self.name, r.quantity, r.estimate, r.theory, r.std_error, r.tolerance,
             r.tolerance_kind, r.passed, r.n_samples, self.seed)
            for r in self.rows
        ]
        if self.budget is not None:
            out.append((self.criterion, self.name, "runtime_seconds", self.elapsed, None, None,
                        self.budget, "max", self.elapsed <= self.budget, None, self.seed))
        return out

    def summary(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        worst = [r.quantity for r in self.rows if not r.passed]
        extra = f" (failed: {', '.join(worst[:5])}{'...' if len(worst) > 5 else ''})" if worst else ""
        if self.budget is not None and self.elapsed > self.budget:
            extra += f" (runtime {self.elapsed:.1f}s > {self.budget:.0f}s)"
        return f"[{verdict}] criterion {self.criterion:2d} {self.name}: {len(self.rows)} rows, {self.elapsed:.2f}s{extra}"


def _mc_rows(quantity: str, values: np.ndarray, theory: float, kind: str = "mean") -> CheckRow:
    v = np.asarray(values, dtype=float)
    n = v.size
    if kind == "mean":
        est = float(v.mean())
        se = float(v.std(ddof=1) / math.sqrt(n))
    else:
        c = v - v.mean()
        est = float(np.sum(c * c) / (n - 1))
        se = math.sqrt(max(float(np.mean(c**4)) - est * est, 0.0) / n)
    return CheckRow(quantity, est, float(theory), 3.0, "se", se, n)


# ------------------------------------------------------------------ checks


def check_basis(seed: int) -> list[CheckRow]:
    rows = []
    for label, model, M in (("pair", SYMMETRIC_PAIR, 2), ("five_atoms", FIVE_ATOMS, 5)):
        basis = build_jump_basis(model, M)
        gram = basis.gram(model)
        rows.append(CheckRow(f"{label}: max |Gram - I|", float(np.abs(gram - np.eye(basis.M)).max()), 0.0, 1e-10, "abs"))
        m = model.m()
        p1 = np.zeros(basis.coeffs.shape[1])
        p1[1] = 1.0 / m
        rows.append(CheckRow(f"{label}: max |p_1 coeffs - (0, 1/m)|", float(np.abs(basis.coeffs[0] - p1).max()), 0.0, 0.0, "abs"))
        z, w = model.table()
        proj = np.array([np.dot(w, z * eval_p(basis, k, z)) for k in range(1, basis.M + 1)])
        target = np.zeros(basis.M)
        target[0] = m
        rows.append(CheckRow(f"{label}: max |(z, p_m) - m delta_m1|", float(np.abs(proj - target).max()), 0.0, 1e-10, "abs"))
        rows.append(CheckRow(f"{label}: basis size", float(basis.M), float(M), 0.0, "abs"))
    return rows


def _isometry_functions() -> list[TestFunction]:
    return [
        TestFunction.product(jump=lambda z: z, name="z"),
        TestFunction.product(space=lambda x: x[:, 0], jump=lambda z: z * z, name="x1*z^2"),
        TestFunction.product(space=lambda x: np.cos(math.pi * x[:, 1]), jump=lambda z: z, name="cos(pi x2)*z"),
        TestFunction.product(jump=np.abs, rect=((0.0, 0.0), (0.5, 1.0)), name="1_[0,1/2]x[0,1](x)*|z|"),
        TestFunction.product(space=lambda x: np.exp(-x[:, 0] - x[:, 1]), jump=lambda z: z**3, name="exp(-x1-x2)*z^3"),
    ]


def check_isometry(seed: int) -> list[CheckRow]:
    box = Box.unit(2)
    batch = sample_batch(FIVE_ATOMS, box, 0.0, MC_SAMPLES, RandomSource(seed))
    rows = []
    for f in _isometry_functions():
        vals = pair_compensated(batch, FIVE_ATOMS, f)
        rows.append(_mc_rows(f"Var <omega - pi, {f.name}>", vals, l2_pi(f, FIVE_ATOMS, box), kind="var"))
    return rows


def charlier_alphas(max_index: int = 6) -> list[MultiIndex]:
    """All alpha with |alpha| <= 2 and Index(alpha) <= max_index, in graded order."""
    out = [MultiIndex(())]
    for l in range(1, max_index + 1):
        e = [0] * l
        e[-1] = 1
        out.append(MultiIndex(e))
    for i, j in itertools.combinations_with_replacement(range(1, max_index + 1), 2):
        e = [0] * max(i, j)
        e[i - 1] += 1
        e[j - 1] += 1
        out.append(MultiIndex(e))
    return sorted(out)


def check_charlier(seed: int) -> list[CheckRow]:
    # the Hermite functions zeta_1..zeta_3 carry < 1e-20 of their L2 mass outside [-8, 8]
    box = Box.cube(-8.0, 8.0, 1)
    basis = build_jump_basis(FIVE_ATOMS, 3)
    alphas = charlier_alphas(6)
    batch = sample_batch(FIVE_ATOMS, box, 0.0, MC_SAMPLES, RandomSource(seed))
    K = k_alpha_matrix(batch, FIVE_ATOMS, basis, alphas)
    rows = []
    for a, b in itertools.combinations_with_replacement(range(len(alphas)), 2):
        theory = alphas[a].factorial() if a == b else 0.0
        rows.append(_mc_rows(f"E[K{alphas[a].to_text()} K{alphas[b].to_text()}]", K[:, a] * K[:, b], theory))
    return rows


def check_charfun_moments(seed: int) -> list[CheckRow]:
    box = Box.unit(1)
    rows = []
    chi = TestFunction.product(name="chi")
    for c in (1.0, math.pi):
        f = TestFunction.product(jump=lambda z, c=c: c * np.ones_like(z), name=f"{c:g}*chi")
        emp, theory, se = char_functional_check(UNIT_RATE, box, 0.0, f, MC_SAMPLES, RandomSource(seed).spawn(2)[0])
        rows.append(CheckRow(f"|E exp(i<omega,{c:.6g} chi>) - theory|", abs(emp - theory), 0.0, 3.0, "se", se, MC_SAMPLES))
    rows.append(CheckRow("closed form at c = pi vs exp(-2)", float(abs(np.exp(np.exp(1j * math.pi) - 1) - math.exp(-2))), 0.0, 1e-15, "abs"))
    batch = sample_batch(UNIT_RATE, box, 0.0, MC_SAMPLES, RandomSource(seed).spawn(2)[1])
    counts = pair_raw(batch, chi)
    touchard = {1: 1.0, 2: 2.0, 3: 5.0, 4: 15.0}
    for n in range(1, 5):
        mf = moment_formula(UNIT_RATE, box, chi, n)
        rows.append(CheckRow(f"moment formula M_{n} vs Poisson(1) raw moment", mf, touchard[n], 1e-12, "rel"))
        rows.append(_mc_rows(f"E[<omega, chi>^{n}]", counts**n, mf))
    return rows


def _random_expansion(rng: np.random.Generator) -> ch.ChaosExpansion:
    terms = {}
    for _ in range(rng.integers(1, 6)):
        length = int(rng.integers(0, 5))
        alpha = MultiIndex(tuple(int(v) for v in rng.integers(0, 3, size=length)))
        terms[alpha] = float(rng.normal())
    return ch.ChaosExpansion(terms)


def _abs_transform(F: ch.ChaosExpansion, z: np.ndarray) -> float:
    """Transform of |F| at |z|: the natural scale of rounding in the transform of F."""
    return abs(ch.hermite_transform(ch.ChaosExpansion({a: abs(c) for a, c in F.items()}), np.abs(z)))


def _coef_gap(F: ch.ChaosExpansion, G: ch.ChaosExpansion) -> float:
    keys = set(F.terms) | set(G.terms)
    scale = max([abs(c) for c in F.terms.values()] + [abs(c) for c in G.terms.values()] + [1e-300])
    return max((abs(F[a] - G[a]) for a in keys), default=0.0) / scale


def check_wick_hermite(seed: int) -> list[CheckRow]:
    rng = np.random.default_rng(seed)
    hom, comm, assoc, unit_gap = 0.0, 0.0, 0.0, 0.0
    one = ch.ChaosExpansion.constant(1.0)
    for _ in range(100):
        F, G, H = (_random_expansion(rng) for _ in range(3))
        z = rng.normal(size=4) + 1j * rng.normal(size=4)
        lhs = ch.hermite_transform(ch.wick(F, G), z)
        rhs = ch.hermite_transform(F, z) * ch.hermite_transform(G, z)
        scale = _abs_transform(F, z) * _abs_transform(G, z)
        hom = max(hom, abs(lhs - rhs) / scale if scale else abs(lhs - rhs))
        comm = max(comm, _coef_gap(ch.wick(F, G), ch.wick(G, F)))
        assoc = max(assoc, _coef_gap(ch.wick(ch.wick(F, G), H), ch.wick(F, ch.wick(G, H))))
        unit_gap = max(unit_gap, _coef_gap(ch.wick(F, one), F))
    return [
        CheckRow("max relative |H(F<>G) - HF HG|", hom, 0.0, 1e-12, "abs", n_samples=100),
        CheckRow("max relative coefficient gap F<>G vs G<>F", comm, 0.0, 1e-12, "abs", n_samples=100),
        CheckRow("max relative coefficient gap (F<>G)<>H vs F<>(G<>H)", assoc, 0.0, 1e-12, "abs", n_samples=100),
        CheckRow("max relative coefficient gap F<>1 vs F", unit_gap, 0.0, 1e-12, "abs", n_samples=100),
    ]


def check_white_noise(seed: int) -> list[CheckRow]:
    rows = []
    for x in ([0.37], [-0.8], [0.4, 0.9], [-0.3, 1.2]):
        fd = eta_mixed_partial(FIVE_ATOMS, x, 20)
        wn = white_noise_chaos(FIVE_ATOMS, x, 20)
        gap = max(abs(fd[a] - wn[a]) for a in set(fd.terms) | set(wn.terms))
        rows.append(CheckRow(f"x={x}: max_k<=20 |d^d eta_k - eta'_k|", gap, 0.0, 1e-6, "abs"))
    return rows


def check_poisson_1d(seed: int) -> list[CheckRow]:
    dom, model, x = UnitInterval(), SYMMETRIC_PAIR, [0.5]
    exact = model.m2() / 48.0
    sol = solve_chaos(dom, model, x, 200)
    batch = sample_batch(model, Box.unit(1), 0.0, MC_SAMPLES, RandomSource(seed))
    u = solve_mc(dom, model, batch, x)
    return [
        CheckRow("variance_exact vs m^2/48", sol.variance_exact, exact, 1e-14, "rel"),
        CheckRow("partial variance K=200 vs m^2/48", sol.variance_partial, exact, 0.01, "rel"),
        _mc_rows("MC Var U(1/2)", u, exact, kind="var"),
        _mc_rows("MC E U(1/2)", u, 0.0),
    ]


def check_poisson_ball(seed: int) -> list[CheckRow]:
    dom, model, x = UnitBall(3), HALF_PAIR, [0.0, 0.0, 0.0]
    exact = 1.0 / (12.0 * math.pi)
    quad = model.m2() * float(polar_integrate(dom, x, lambda y, g: g * g))
    batch = sample_batch(model, Box.cube(-1.0, 1.0, 3), 0.0, MC_SAMPLES, RandomSource(seed))
    u = solve_mc(dom, model, batch, x)
    return [
        CheckRow("m^2 (polar quadrature of G^2) vs 1/(12 pi)", quad, exact, 1e-6, "abs"),
        _mc_rows("MC Var U(0)", u, exact, kind="var"),
        _mc_rows("MC E U(0)", u, 0.0),
    ]


def check_residual(seed: int) -> list[CheckRow]:
    rows = []
    for dom in (UnitInterval(), UnitDisk()):
        coarse, _ = laplacian_residuals(dom, SYMMETRIC_PAIR, 5, 0.05)
        fine, _ = laplacian_residuals(dom, SYMMETRIC_PAIR, 5, 0.025)
        for k in range(1, 6):
            ratio = coarse[k - 1] / fine[k - 1]
            rows.append(CheckRow(f"{dom.name} k={k}: residual(h)/residual(h/2)", ratio, 4.0, 0.2, "rel"))
    return rows


def check_divergence(seed: int) -> list[CheckRow]:
    rows = []
    deltas = [2.0**-j for j in range(1, 21)]
    cases = ((1, UnitInterval(), [0.5], 1.0 / 48), (2, UnitDisk(), [0.0, 0.0], 1.0 / (8 * math.pi)),
             (3, UnitBall(3), [0.0, 0.0, 0.0], 1.0 / (12 * math.pi)))
    for d, dom, x, limit in cases:
        prof = divergence_profile(d, x, deltas, domain=dom)
        step = abs(prof[-1][1] - prof[-2][1])
        rows.append(CheckRow(f"d={d} {dom.name}: |I(delta_min) - I(2 delta_min)|", step, 0.0, 1e-6, "abs"))
        rows.append(CheckRow(f"d={d} {dom.name}: I(delta_min) vs full integral", prof[-1][1], limit, 1e-5, "abs"))
    prof = divergence_profile(4, [0.5] * 4, [0.1 * 2.0**-j for j in range(5)], domain=UnitHypercube(4))
    vals = [v for _, v in prof]
    diffs = np.diff(vals)
    for j in range(len(diffs) - 1):
        rows.append(CheckRow(
            f"d=4 hypercube: shell ratio delta={prof[j + 1][0]:g}", float(diffs[j] / diffs[j + 1]), 1.0, 0.2, "rel"
        ))
    rows.append(CheckRow("d=4 hypercube: last shell vs ln2/(8 pi^2)", float(diffs[-1]), math.log(2) / (8 * math.pi**2), 0.2, "rel"))
    return rows


@dataclass(frozen=True)
class Check:
    criterion: int
    name: str
    fn: Callable[[int], list[CheckRow]]
    budget: float | None


CHECKS: dict[str, Check] = {
    c.name: c
    for c in (
        Check(1, "basis_orthonormality", check_basis, 1.0),
        Check(2, "ito_isometry", check_isometry, 30.0),
        Check(3, "charlier_orthogonality", check_charlier, 120.0),
        Check(4, "charfun_moments", check_charfun_moments, 60.0),
        Check(5, "wick_hermite", check_wick_hermite, None),
        Check(6, "white_noise_derivative", check_white_noise, None),
        Check(7, "poisson_1d", check_poisson_1d, 120.0),
        Check(8, "poisson_ball_3d", check_poisson_ball, 300.0),
        Check(9, "pde_residual", check_residual, None),
        Check(10, "dimension_threshold", check_divergence, None),
    )
}

SUITES: dict[str, list[str]] = {
    "all": list(CHECKS),
    "basis": ["basis_orthonormality"],
    "prm": ["ito_isometry", "charlier_orthogonality", "charfun_moments"],
    "chaos": ["wick_hermite", "white_noise_derivative"],
    "poisson": ["poisson_1d", "poisson_ball_3d", "pde_residual", "dimension_threshold"],
}


def _resolve(name: str) -> list[str]:
    if name in SUITES:
        return SUITES[name]
    if name in CHECKS:
        return [name]
    if name.isdigit():
        for c in CHECKS.values():
            if c.criterion == int(name):
                return [c.name]
    raise KeyError(f"unknown suite or check {name!r}; choose from {sorted(SUITES) + sorted(CHECKS)}")


def run_check(name: str, seed: int = 7) -> CheckResult:
    check = CHECKS[_resolve(name)[0]]
    start = time.perf_counter()
    rows = check.fn(seed)
    elapsed = time.perf_counter() - start
    return CheckResult(check.criterion, check.name, rows, elapsed, check.budget, seed)


def run_suite(suite: str = "all", seed: int = 7) -> list[CheckResult]:
    return [run_check(name, seed) for name in _resolve(suite)]
