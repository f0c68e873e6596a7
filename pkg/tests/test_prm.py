import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from levynoise.basis import build_jump_basis, eval_p, hermite_fn
from levynoise.chaos import l2_norm
from levynoise.measures import AtomicMeasure, DensityMeasure, DivergenceError
from levynoise.multiindex import ZERO, MultiIndex, cantor_pair, unit
from levynoise.prm import (
    Box,
    PointConfiguration,
    RandomSource,
    TestFunction,
    char_functional_check,
    charlier_eval,
    eta_chaos,
    eta_sample,
    integrate_pi,
    k_alpha_matrix,
    l2_pi,
    mean_estimate,
    moment_formula,
    pair_compensated,
    pair_raw,
    prm_noise_chaos,
    sample_batch,
    sample_prm,
    variance_estimate,
    white_noise_chaos,
)

UNIT_RATE = AtomicMeasure.of([(1.0, 1.0)])


def stirling2(n, k):
    """Stirling numbers of the second kind by the explicit alternating sum."""
    return sum((-1) ** j * math.comb(k, j) * (k - j) ** n for j in range(k + 1)) // math.factorial(k)


def touchard(n, lam):
    return sum(stirling2(n, k) * lam**k for k in range(n + 1))


def poisson_pmf(n, lam):
    return math.exp(-lam + n * math.log(lam) - math.lgamma(n + 1))


# --- boxes and sampling -----------------------------------------------------

def test_box_basics():
    b = Box((0.0, -1.0), (2.0, 0.5))
    assert b.dim == 2 and b.volume == pytest.approx(3.0)
    assert Box.from_lengths([2, 3]).volume == 6.0
    assert b.contains([[1.0, 0.0], [3.0, 0.0]]).tolist() == [True, False]
    assert b.intersect((1.0, 0.0), (5.0, 5.0)) == Box((1.0, 0.0), (2.0, 0.5))
    with pytest.raises(ValueError):
        Box((1.0,), (0.0,))


def test_empty_box_has_no_points():
    cfg = sample_prm(UNIT_RATE, Box((0.0,), (0.0,)), 0.0, 1)
    assert cfg.n_points == 0
    assert pair_raw(cfg, lambda x, z: z) == 0.0


def test_poisson_counts(five_atoms):
    box = Box((0.0, 0.0), (2.0, 1.5))
    batch = sample_batch(five_atoms, box, 0.0, 40000, RandomSource(3))
    lam = five_atoms.mass() * box.volume
    counts = batch.counts()
    assert counts.mean() == pytest.approx(lam, abs=4 * math.sqrt(lam / counts.size))
    assert counts.var() == pytest.approx(lam, rel=0.05)
    assert np.all(box.contains(batch.x))
    assert set(np.unique(batch.z)) <= set(five_atoms.z)


def test_sampling_is_deterministic():
    a = sample_batch(UNIT_RATE, Box.unit(2), 0.0, 500, RandomSource(9))
    b = sample_batch(UNIT_RATE, Box.unit(2), 0.0, 500, RandomSource(9))
    assert np.array_equal(a.x, b.x) and np.array_equal(a.sample, b.sample)
    c = sample_batch(UNIT_RATE, Box.unit(2), 0.0, 500, RandomSource(10))
    assert not np.array_equal(a.counts(), c.counts())


def test_thread_count_does_not_change_samples(monkeypatch, five_atoms):
    n = 45000  # three chunks
    monkeypatch.setenv("LEVYNOISE_THREADS", "1")
    a = sample_batch(five_atoms, Box.unit(1), 0.0, n, RandomSource(4))
    monkeypatch.setenv("LEVYNOISE_THREADS", "3")
    b = sample_batch(five_atoms, Box.unit(1), 0.0, n, RandomSource(4))
    assert np.array_equal(a.x, b.x) and np.array_equal(a.z, b.z)


def test_batch_item_matches_flat_storage():
    batch = sample_batch(UNIT_RATE, Box.unit(1), 0.0, 50, RandomSource(1))
    f = lambda x, z: x[:, 0] * z
    flat = pair_raw(batch, f)
    assert flat[7] == pytest.approx(pair_raw(batch[7], f))


def test_infinite_mass_needs_truncation():
    gamma = DensityMeasure("gamma", (-0.0, 20.0))
    with pytest.raises(DivergenceError):
        sample_prm(gamma, Box.unit(1), 0.0, 1)
    cfg = sample_prm(gamma, Box.unit(1), 1.0, 1)
    assert np.all(np.abs(cfg.z) >= 1.0)


# --- pairings ---------------------------------------------------------------

def test_integrate_pi_closed_form(five_atoms):
    f = TestFunction.product(lambda x: x[:, 0] ** 2, lambda z: z, rect=((0.0,), (0.5,)))
    exact = (0.5**3 / 3) * sum(z * w for z, w in zip(five_atoms.z, five_atoms.w))
    assert integrate_pi(f, five_atoms, Box.unit(1)) == pytest.approx(exact, rel=1e-13)
    assert l2_pi(f, five_atoms, Box.unit(1)) == pytest.approx(
        (0.5**5 / 5) * sum(z * z * w for z, w in zip(five_atoms.z, five_atoms.w)), rel=1e-13
    )


def test_campbell_mean_and_variance(five_atoms):
    box = Box.unit(2)
    f = TestFunction.product(lambda x: np.cos(x[:, 0]) + x[:, 1], lambda z: z)
    batch = sample_batch(five_atoms, box, 0.0, 60000, RandomSource(11))
    vals = pair_compensated(batch, five_atoms, f)
    assert mean_estimate(vals, 0.0, "mean").within(4)
    assert variance_estimate(vals, l2_pi(f, five_atoms, box), "var").within(4)


def test_charlier_order_two_exact_poisson_moments():
    # N ~ Poisson(lam): E[(N-lam)^2 - N] = 0 and E[((N-lam)^2 - N)^2] = 2 lam^2
    lam = 2.5
    box = Box((0.0,), (lam,))
    f = TestFunction.product(rect=box_rect(box))
    m1 = m2 = 0.0
    for n in range(80):
        cfg = PointConfiguration(box, 0.0, np.full((n, 1), 0.5), np.ones(n), lam)
        c2 = charlier_eval(cfg, UNIT_RATE, f, f, order=2)
        p = poisson_pmf(n, lam)
        m1 += p * c2
        m2 += p * c2 * c2
    assert m1 == pytest.approx(0.0, abs=1e-12)
    assert m2 == pytest.approx(2 * lam**2, rel=1e-12)


def box_rect(box):
    return (box.lo, box.hi)


@pytest.mark.parametrize("n", range(1, 7))
def test_moment_formula_matches_touchard(n):
    lam = 1.7
    box = Box((0.0,), (lam,))
    assert moment_formula(UNIT_RATE, box, lambda x, z: np.ones_like(z), n) == pytest.approx(
        touchard(n, lam), rel=1e-12
    )


def test_char_functional_trivial_at_zero(pair):
    emp, theory, se = char_functional_check(pair, Box.unit(1), 0.0, lambda x, z: 0 * z, 200, RandomSource(0))
    assert emp == 1.0 and theory == 1.0 and se == 0.0


def test_k_alpha_zero_is_one(five_atoms):
    basis = build_jump_basis(five_atoms, 3)
    batch = sample_batch(five_atoms, Box.cube(-4, 4, 1), 0.0, 20, RandomSource(2))
    vals = k_alpha_matrix(batch, five_atoms, basis, [ZERO, unit(1)])
    assert np.all(vals[:, 0] == 1.0)
    with pytest.raises(ValueError):
        k_alpha_matrix(batch, five_atoms, basis, [MultiIndex([3])])


# --- eta and the noises -----------------------------------------------------

def test_eta_unit_rate_is_centred_poisson():
    batch = sample_batch(UNIT_RATE, Box.unit(1), 0.0, 50000, RandomSource(5))
    vals = eta_sample(batch, UNIT_RATE, [0.6])
    assert mean_estimate(vals, 0.0, "mean").within(4)
    assert variance_estimate(vals, 0.6, "var").within(4)
    assert np.allclose(vals + 0.6, np.round(vals + 0.6))


def test_eta_orientation_and_increments(pair):
    box = Box.cube(-1.0, 1.0, 2)
    cfg = sample_prm(pair, box, 0.0, 21)
    x = np.array([0.4, 0.7])
    # the rectangle [0, x] in the flipped quadrant carries the sign of prod x_j
    direct = eta_sample(cfg, pair, [-0.4, 0.7])
    lo, hi = (-0.4, 0.0), (0.0, 0.7)
    inside = np.all((cfg.x >= lo) & (cfg.x <= hi), axis=1)
    assert direct == pytest.approx(-(cfg.z[inside].sum() - 0.28 * pair.mean_jump()))
    assert eta_sample(cfg, pair, [0.0, 0.7]) == 0.0
    with pytest.raises(ValueError):
        eta_sample(cfg, pair, x * 3)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.05, 2.0), st.floats(0.05, 2.0))
def test_eta_chaos_parseval_bound(a, b):
    # sum_k (int_0^x zeta_k)^2 increases to |[0,x]| and never exceeds it
    nu = AtomicMeasure.of([(2.0, 0.5)])
    x = [a, b]
    s1 = l2_norm(eta_chaos(nu, x, 30)) ** 2
    s2 = l2_norm(eta_chaos(nu, x, 90)) ** 2
    assert s1 <= s2 + 1e-12
    assert s2 <= nu.m2() * a * b * (1 + 1e-12)


def test_eta_chaos_parseval_converges():
    s = l2_norm(eta_chaos(UNIT_RATE, [1.0], 200)) ** 2
    assert 0.95 < s < 1.0


def test_white_noise_coefficients(pair):
    W = white_noise_chaos(pair, [0.3], 6)
    for k in range(1, 7):
        assert W[unit(cantor_pair(k, 1))] == pytest.approx(math.sqrt(2) * hermite_fn(k, 0.3), rel=1e-14)
    assert eta_chaos(pair, [0.0], 5).terms == {}


def test_prm_noise_recovers_white_noise(five_atoms):
    # int z * (zeta_k(x) p_m(z)) nu(dz) = m zeta_k(x) [m == 1], since z = m p_1(z)
    basis = build_jump_basis(five_atoms, 4)
    x = [0.25, -0.4]
    W = white_noise_chaos(five_atoms, x, 5)
    z, w = five_atoms.table()
    acc = {}
    for zi, wi in zip(z, w):
        for a, c in prm_noise_chaos(five_atoms, basis, x, zi, 5, 4).items():
            acc[a] = acc.get(a, 0.0) + wi * zi * c
    for a, v in acc.items():
        assert v == pytest.approx(W[a], abs=1e-12)
    assert prm_noise_chaos(five_atoms, basis, x, 1.3, 1, 1)[unit(1)] == pytest.approx(
        hermite_fn(1, 0.25) * hermite_fn(1, -0.4) * eval_p(basis, 1, 1.3)
    )


def test_charlier_gram_z_scores_are_calibrated():
    # across independent seeds the entrywise z-scores of the empirical Gram
    # matrix behave like standard normals: unbiased estimator, honest SE
    from levynoise.verify import check_charlier

    z = np.array([abs(r.estimate - r.theory) / r.std_error for s in (101, 102, 103) for r in check_charlier(s) if r.std_error > 0])
    assert 0.85 < np.mean(z * z) < 1.15
    assert np.mean(z > 3) < 0.01
