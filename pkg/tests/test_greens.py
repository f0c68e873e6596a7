import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from levynoise.greens import (
    UnitBall,
    UnitDisk,
    UnitHypercube,
    UnitInterval,
    fundamental_solution,
    heat_kernel_1d,
    make_domain,
)
from levynoise.poisson import green, green_l2sq, polar_integrate

# Frozen oracles: scipy quad/dblquad in spherical coordinates (ball, disk) and
# a Richardson-extrapolated eigenfunction sum with N = 2000, 4000 (square).
BALL_L2_X = 0.0237135441968143
DISK_L2_X = 0.030043408609550026
SQUARE_L2_X = 0.008786253208277903


def torsion_series(x, N=801):
    """int G(x, y) dy on the cube from the sine series of the constant 1."""
    n = np.arange(1, N + 1, 2).astype(float)
    f = [4 / (n * math.pi) * np.sin(n * math.pi * xj) for xj in x]
    g = np.meshgrid(*([n] * len(x)), indexing="ij")
    lam = math.pi**2 * sum(a**2 for a in g)
    letters = "abc"[: len(x)]
    return float(np.einsum(",".join(letters) + f",{letters}->", *f, 1 / lam))


def test_interval_matches_discrete_green_function():
    # inverse of the second-difference matrix is exact for piecewise linear G
    n = 20
    h = 1.0 / n
    A = (2 * np.eye(n - 1) - np.eye(n - 1, k=1) - np.eye(n - 1, k=-1)) / h**2
    Ginv = np.linalg.inv(A) / h
    grid = np.arange(1, n) * h
    D = UnitInterval()
    for i in (2, 9, 15):
        assert np.allclose(D.green([grid[i]], grid[:, None]), Ginv[i], atol=1e-12)
    assert green(D, [0.5], [0.25]) == 0.125


def test_fundamental_solution_forms():
    assert fundamental_solution(2.0, 3) == pytest.approx(1 / (8 * math.pi))
    assert fundamental_solution(math.e, 2) == pytest.approx(-1 / (2 * math.pi))
    assert fundamental_solution(0.5, 4) == pytest.approx(4 / (2 * 2 * math.pi**2))


def test_ball_centre_closed_form():
    y = np.array([[0.5, 0.0, 0.0], [0.0, 0.2, 0.1]])
    r = np.linalg.norm(y, axis=1)
    assert np.allclose(UnitBall(3).green(np.zeros(3), y), (1 / r - 1) / (4 * math.pi), rtol=1e-14)
    assert np.allclose(
        UnitDisk().green(np.zeros(2), y[:, :2]), -np.log(np.linalg.norm(y[:, :2], axis=1)) / (2 * math.pi), rtol=1e-14
    )


@pytest.mark.parametrize(
    "domain, x, expected",
    [
        (UnitBall(3), [0.0, 0.0, 0.0], 1 / (12 * math.pi)),
        (UnitDisk(), [0.0, 0.0], 1 / (8 * math.pi)),
        (UnitBall(3), [0.3, 0.0, 0.2], BALL_L2_X),
        (UnitDisk(), [0.4, 0.1], DISK_L2_X),
        (UnitHypercube(2), [0.3, 0.6], SQUARE_L2_X),
        (UnitInterval(), [0.3], 0.09 * 0.49 / 3),
    ],
)
def test_green_l2sq_oracles(domain, x, expected):
    assert green_l2sq(domain, x) == pytest.approx(expected, rel=1e-10)


def test_polar_quadrature_matches_centre_closed_form():
    v = polar_integrate(UnitBall(3), np.zeros(3), lambda y, g: g * g)
    assert v == pytest.approx(1 / (12 * math.pi), rel=1e-12)


@pytest.mark.parametrize(
    "domain, x",
    [(UnitBall(3), [0.3, 0.0, 0.2]), (UnitDisk(), [0.4, 0.1]), (UnitHypercube(2), [0.3, 0.6])],
)
def test_green_integral_against_quadrature(domain, x):
    x = np.array(x)
    assert domain.green_integral(x) == pytest.approx(polar_integrate(domain, x, lambda y, g: g), rel=1e-9)


@pytest.mark.parametrize("x", [[0.3, 0.6], [0.2, 0.5, 0.7], [0.1]])
def test_hypercube_green_integral_torsion_series(x):
    assert UnitHypercube(len(x)).green_integral(x) == pytest.approx(torsion_series(x), rel=1e-7)


def test_hypercube_one_dimensional_is_interval():
    y = np.linspace(0.01, 0.99, 23)[:, None]
    assert np.allclose(UnitHypercube(1).green([0.37], y), UnitInterval().green([0.37], y), atol=1e-12)


def test_heat_and_series_forms_agree():
    sq = UnitHypercube(2)
    x = np.array([0.3, 0.6])
    y = np.array([[0.7, 0.2], [0.35, 0.62], [0.9, 0.95]])
    assert np.allclose(sq.green(x, y), sq.green_series(x, y, 800), rtol=1e-7)
    assert sq.series_tail_bound(40) > sq.series_tail_bound(80) > 0
    assert UnitHypercube(4).series_tail_bound() == math.inf


def test_heat_kernel_mass_and_symmetry():
    a = np.array([0.2, 0.5])
    t = 0.05
    y, w = np.polynomial.legendre.leggauss(200)
    y = 0.5 * (y + 1)
    k = np.array([heat_kernel_1d(t, ai, y) for ai in a])
    assert np.all(k @ (0.5 * w) < 1)
    assert heat_kernel_1d(t, 0.2, 0.7) == pytest.approx(heat_kernel_1d(t, 0.7, 0.2))


DOMAINS = [UnitInterval(), UnitDisk(), UnitBall(3), UnitHypercube(2), UnitHypercube(3)]


def interior_points(domain, draw):
    pts = []
    for _ in range(2):
        v = np.array([draw(st.floats(0.05, 0.95)) for _ in range(domain.dim)])
        if isinstance(domain, UnitBall):
            v = (2 * v - 1) / math.sqrt(domain.dim) * 0.95
        pts.append(v)
    return pts


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(DOMAINS), st.data())
def test_symmetric_and_positive(domain, data):
    x, y = interior_points(domain, data.draw)
    if np.allclose(x, y):
        return
    gxy = domain.green(x, y[None, :])[0]
    gyx = domain.green(y, x[None, :])[0]
    assert gxy > 0
    assert gxy == pytest.approx(gyx, rel=1e-9)


@pytest.mark.parametrize("domain", DOMAINS)
def test_vanishes_on_boundary(domain):
    x = np.full(domain.dim, 0.3) / (math.sqrt(domain.dim) if isinstance(domain, UnitBall) else 1)
    d = domain.dim
    if isinstance(domain, UnitBall):
        b = np.eye(d)[:2] * -1
    else:
        b = np.vstack([np.zeros(d), np.ones(d)])
    assert np.allclose(domain.green(x, b), 0.0, atol=1e-12)
    assert green_l2sq(domain, b[0]) == 0.0


@pytest.mark.parametrize(
    "domain, x, y",
    [
        (UnitDisk(), [0.1, 0.2], [-0.4, 0.3]),
        (UnitBall(3), [0.1, 0.2, 0.0], [-0.3, 0.3, 0.2]),
        (UnitHypercube(2), [0.3, 0.6], [0.7, 0.3]),
        (UnitHypercube(3), [0.3, 0.6, 0.5], [0.7, 0.3, 0.4]),
    ],
)
def test_harmonic_away_from_pole(domain, x, y):
    x, y = np.array(x), np.array(y)
    eye = np.eye(domain.dim)

    def lap(h):
        pts = np.vstack([y] + [y + s * h * e for e in eye for s in (1, -1)])
        g = domain.green(x, pts)
        return (g[1:].sum() - 2 * domain.dim * g[0]) / h**2

    l1, l2 = lap(0.02), lap(0.01)
    assert abs(l2) < 1e-3
    assert abs(l2) < abs(l1)


def test_pole_is_an_error():
    with pytest.raises(ZeroDivisionError):
        green(UnitDisk(), [0.1, 0.1], [0.1, 0.1])
    assert green(UnitInterval(), [0.5], [0.5]) == 0.25


def test_make_domain():
    assert make_domain("disk") == UnitDisk()
    assert make_domain("hypercube", 3).dim == 3
    with pytest.raises(ValueError):
        make_domain("interval", 2)
    with pytest.raises(ValueError):
        make_domain("hypercube", 5)
