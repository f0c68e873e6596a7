"""One test per acceptance criterion, run at the pre-committed seed 7.

Each test pins the tolerance kinds of its check so a loosened threshold in
``levynoise.verify`` fails here rather than passing silently.
"""

import pytest

from levynoise.verify import run_check

SEED = 7
SUMMARIES: dict[int, str] = {}

EXPECTED_TOLERANCES = {
    1: {("abs", 0.0), ("abs", 1e-10)},
    2: {("se", 3.0)},
    3: {("se", 3.0)},
    4: {("abs", 1e-15), ("rel", 1e-12), ("se", 3.0)},
    5: {("abs", 1e-12)},
    6: {("abs", 1e-6)},
    7: {("rel", 1e-14), ("rel", 0.01), ("se", 3.0)},
    8: {("abs", 1e-6), ("se", 3.0)},
    9: {("rel", 0.2)},
    10: {("abs", 1e-6), ("abs", 1e-5), ("rel", 0.2)},
}


def _run(criterion: int):
    result = run_check(str(criterion), seed=SEED)
    line = result.summary()
    SUMMARIES[criterion] = line
    print(line)
    assert {(r.tolerance_kind, r.tolerance) for r in result.rows} == EXPECTED_TOLERANCES[criterion]
    failed = [(r.quantity, r.estimate, r.theory, r.std_error) for r in result.rows if not r.passed]
    assert result.passed, f"{line}\nfailed rows: {failed}\nelapsed {result.elapsed:.2f}s, budget {result.budget}"


def test_criterion_01_jump_basis_orthonormality():
    _run(1)


def test_criterion_02_ito_isometry():
    _run(2)


def test_criterion_03_charlier_orthogonality():
    _run(3)


def test_criterion_04_characteristic_functional_and_moments():
    _run(4)


def test_criterion_05_wick_hermite_homomorphism():
    _run(5)


def test_criterion_06_white_noise_derivative():
    _run(6)


def test_criterion_07_poisson_interval():
    _run(7)


def test_criterion_08_poisson_ball():
    _run(8)


def test_criterion_09_pde_residual_order():
    _run(9)


def test_criterion_10_dimension_threshold():
    _run(10)
