import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from levynoise.chaos import (
    ChaosExpansion,
    expectation,
    growth_constant,
    hermite_transform,
    in_neighborhood,
    inner,
    kondratiev_norm,
    l2_norm,
    neighborhood_sum,
    wick,
)
from levynoise.multiindex import ZERO, MultiIndex, unit

alphas = st.lists(st.integers(0, 2), max_size=4).map(MultiIndex)
coeffs = st.floats(-3, 3, allow_nan=False).filter(lambda c: abs(c) > 1e-3)
expansions = st.dictionaries(alphas, coeffs, min_size=1, max_size=5).map(ChaosExpansion)
points = st.lists(
    st.complex_numbers(max_magnitude=1.5, allow_nan=False, allow_infinity=False), min_size=4, max_size=4
)


def close(F, G, tol=1e-12):
    keys = set(F.terms) | set(G.terms)
    scale = max([1.0] + [abs(c) for c in F.terms.values()])
    return all(abs(F[a] - G[a]) <= tol * scale for a in keys)


def test_zero_coefficients_dropped():
    F = ChaosExpansion({unit(1): 0.0, unit(2): 1.5})
    assert len(F) == 1 and F[unit(1)] == 0.0
    assert len(F - F) == 0


def test_wick_of_first_order_terms():
    F = ChaosExpansion({unit(1): 2.0, unit(2): 1.0})
    G = ChaosExpansion({unit(1): 3.0})
    assert wick(F, G) == ChaosExpansion({MultiIndex([2]): 6.0, MultiIndex([1, 1]): 3.0})


def test_inner_and_norms_weight_factorials():
    F = ChaosExpansion({MultiIndex([2]): 1.0, MultiIndex([1, 1]): 2.0, ZERO: 0.5})
    assert inner(F, F) == pytest.approx(2 * 1 + 1 * 4 + 0.25)
    assert l2_norm(F) == pytest.approx(math.sqrt(6.25))
    assert expectation(F) == 0.5
    # Kondratiev: (alpha!)^{1+rho} c^2 (2N)^{k alpha}
    expected = 2.0**1.5 * 1 * 2.0**2 + 1 * 4 * (2.0 * 4.0) + 0.25
    assert kondratiev_norm(F, 0.5, 1.0) == pytest.approx(math.sqrt(expected))
    assert kondratiev_norm(F, 0.0, 0.0) == pytest.approx(l2_norm(F))


def test_hermite_transform_ignores_missing_coordinates():
    F = ChaosExpansion({MultiIndex([1, 0, 1]): 2.0, unit(1): 1.0})
    assert hermite_transform(F, [0.5j]) == 0.5j
    assert hermite_transform(F, [1.0, 9.0, 3.0]) == 7.0


def test_neighborhood_closed_form_matches_series():
    z = np.array([0.2 + 0.1j, -0.1, 0.05j])
    q = 1.0
    t = [abs(zj) ** 2 * (2 * j) ** q for j, zj in enumerate(z, 1)]
    # sum over nonzero alpha of prod t_j^{alpha_j}
    series = sum(t[0] ** a * t[1] ** b * t[2] ** c for a in range(60) for b in range(60) for c in range(60)) - 1
    assert neighborhood_sum(z, q) == pytest.approx(series, rel=1e-12)
    assert in_neighborhood(z, q, 1.0)
    assert neighborhood_sum([1.0], 1.0) == math.inf


def test_json_round_trip():
    F = ChaosExpansion({MultiIndex([1, 0, 2]): -1.25, ZERO: 3.0})
    assert ChaosExpansion.from_dict(F.to_dict()) == F


@given(expansions, expansions, points)
def test_hermite_transform_turns_wick_into_product(F, G, z):
    lhs = hermite_transform(wick(F, G), z)
    rhs = hermite_transform(F, z) * hermite_transform(G, z)
    scale = sum(abs(c) for c in F.terms.values()) * sum(abs(c) for c in G.terms.values()) * 1.5**16
    assert abs(lhs - rhs) <= 1e-12 * scale


@given(expansions, expansions, expansions)
def test_wick_commutative_associative_unital(F, G, K):
    assert close(wick(F, G), wick(G, F))
    assert close(wick(wick(F, G), K), wick(F, wick(G, K)), tol=1e-11)
    assert wick(F, ChaosExpansion.constant(1.0)) == F


@given(expansions, expansions, st.floats(-2, 2, allow_nan=False))
def test_inner_is_bilinear(F, G, s):
    assert inner(F * s + G, F) == pytest.approx(s * inner(F, F) + inner(G, F), abs=1e-9)


@settings(max_examples=50)
@given(expansions, points, st.floats(0.5, 3.0))
def test_growth_bound(F, z, q):
    z = [v * 0.2 for v in z]
    bound = growth_constant(F, q) * math.sqrt(1 + neighborhood_sum(z, q))
    assert abs(hermite_transform(F, z)) <= bound * (1 + 1e-12)


@given(expansions, st.floats(0, 2), st.floats(0, 2))
def test_kondratiev_norms_monotone_in_k(F, k1, dk):
    assert kondratiev_norm(F, 0.3, k1) <= kondratiev_norm(F, 0.3, k1 + dk) * (1 + 1e-12)
    assert kondratiev_norm(F, -0.3, -k1 - dk) <= kondratiev_norm(F, -0.3, -k1) * (1 + 1e-12)
