import math

import mpmath
import numpy as np
import pytest
from scipy.stats import norm

from mixlab.divergences import Gaussian1D, renyi_gaussian
from mixlab.oracles import (QuadraticChainLaw, exact_iterate_law, exact_renyi_gap,
                            random_walk_escape, sc_lower_bound_value, walk_supremum_probability)

# 400-digit mpmath evaluation of (-x - log(1 - x)) / 2 at x = 0.9^10
KL_GAP_C09_T5 = 0.04003668550324421749939887921344441855058


def test_iterate_variance():
    assert exact_iterate_law(QuadraticChainLaw(1.0, 0.1, 3)).variance == pytest.approx(0.49322)
    assert exact_iterate_law(QuadraticChainLaw(1.0, 0.1, 0)).variance == 0.0
    assert exact_iterate_law(QuadraticChainLaw(0.0, 0.1, 7)).variance == pytest.approx(1.4)
    assert exact_iterate_law(QuadraticChainLaw(10.0, 0.1, 7)).variance == pytest.approx(0.2)
    inf = exact_iterate_law(QuadraticChainLaw(1.0, 0.1, math.inf)).variance
    assert inf == pytest.approx(0.2 / (1 - 0.81))
    with pytest.raises(ValueError):
        exact_iterate_law(QuadraticChainLaw(0.0, 0.1, math.inf))


def test_iterate_variance_matches_recursion():
    lam, eta = 0.7, 0.3
    c = 1 - eta * lam
    v = 0.0
    for T in range(1, 40):
        v = c * c * v + 2 * eta
        assert exact_iterate_law(QuadraticChainLaw(lam, eta, T)).variance == pytest.approx(
            v, rel=1e-13)


def test_stationary_law_is_a_fixed_point():
    q = QuadraticChainLaw(1.5, 0.2, math.inf)
    v = exact_iterate_law(q).variance
    assert q.c ** 2 * v + 2 * q.eta == pytest.approx(v, rel=1e-14)


def test_regularity_choice():
    assert QuadraticChainLaw.from_regularity(0.5, 2.0, 0.1).lam == 0.5
    assert QuadraticChainLaw.from_regularity(0.5, 19.0, 0.1).lam == 0.5
    assert QuadraticChainLaw.from_regularity(0.5, 19.8, 0.1).lam == 19.8
    assert QuadraticChainLaw.from_regularity(5.0, 15.0, 0.1).lam == 15.0  # tie goes to M
    with pytest.raises(ValueError):
        QuadraticChainLaw(1.0, 3.0)


def test_frozen_kl_gap():
    assert exact_renyi_gap(1, 0.9, 5) == pytest.approx(KL_GAP_C09_T5, rel=1e-14)


def _mp_gap(alpha, c, T):
    with mpmath.workdps(400):
        x = mpmath.mpf(c) ** (2 * T)
        if alpha == 1:
            g = (-x - mpmath.log(1 - x)) / 2
        else:
            b = 1 - mpmath.mpf(alpha)
            g = mpmath.log(1 - b * x) / (2 * b) - mpmath.log(1 - x) / 2
        return float(g)


def test_gap_against_high_precision():
    for alpha in (1, 1.5, 2, 4):
        for c in (0.1, 0.5, 0.9, 0.999):
            for T in (1, 3, 40, 400):
                ref = _mp_gap(alpha, c, T)
                assert exact_renyi_gap(alpha, c, T) == pytest.approx(ref, rel=1e-13, abs=1e-300)


def test_gap_matches_gaussian_formula():
    for alpha in (1.0, 1.5, 2.0, 4.0):
        for c in (0.3, 0.9, 0.999):
            for T in (1, 4, 50):
                q = QuadraticChainLaw(1 - c, 1.0, T)
                got = exact_renyi_gap(alpha, c, T)
                ref = renyi_gaussian(alpha, exact_iterate_law(q),
                                     exact_iterate_law(QuadraticChainLaw(1 - c, 1.0, math.inf)))
                assert got == pytest.approx(ref, rel=1e-9, abs=1e-15)


def test_gap_independent_of_stepsize():
    for eta in (0.01, 0.1, 0.5):
        lam = 0.2 / eta  # c = 0.8
        law = exact_iterate_law(QuadraticChainLaw(lam, eta, 6))
        pi = exact_iterate_law(QuadraticChainLaw(lam, eta, math.inf))
        assert renyi_gaussian(2, law, pi) == pytest.approx(exact_renyi_gap(2, 0.8, 6), rel=1e-10)


def test_lower_bound_value():
    assert sc_lower_bound_value(1, 0.9, 1) == pytest.approx(0.164025)


@pytest.mark.parametrize("alpha", [1.0, 2.0])
def test_lower_bound_holds_for_small_orders(alpha):
    for c in np.linspace(0.05, 0.99, 30):
        for T in (1, 2, 5, 20):
            gap = exact_renyi_gap(alpha, c, T)
            low = sc_lower_bound_value(alpha, c, T)
            assert low <= gap * (1 + 1e-12)
            assert gap <= 2 * low * (1 + 1e-12) or c ** (2 * T) > 0.3


def test_lower_bound_fails_at_order_four():
    # known counterexample to alpha c^{4T} / 4 <= gap for alpha = 4
    gap = exact_renyi_gap(4, 0.5, 1)
    assert gap == pytest.approx(0.050572, abs=1e-6)
    assert gap < sc_lower_bound_value(4, 0.5, 1) == 0.0625


def test_walk_escape_respects_ceiling():
    est = random_walk_escape(1.0, 0.0025, 10, trials=20_000, seed=1)
    assert est.ceiling == pytest.approx(math.exp(-1 / 1.6), rel=1e-12)
    assert est.respected and est.estimate < 0.25
    with pytest.raises(ValueError):
        random_walk_escape(1.0, 0.0025, 10, trials=10)


def _quadrature_supremum(a, T, n=1601, two_sided=True):
    # P(max_{t<=T} S_t >= a) by propagating the surviving density on a grid
    lo = -a if two_sided else -a - 12 * math.sqrt(T)
    x = np.linspace(lo, a, n)
    h = x[1] - x[0]
    w = np.ones(n)
    w[[0, -1]] = 0.5
    K = norm.pdf(x[:, None] - x[None, :]) * h * w[None, :]
    f = norm.pdf(x)
    for _ in range(T - 1):
        f = K @ f
    return 1 - h * np.sum(w * f)


def test_one_sided_supremum_bound():
    for a, T in ((3, 4), (8, 100), (5, 10)):
        est = walk_supremum_probability(a, T, trials=50_000, seed=a, two_sided=False)
        assert est.respected
        assert abs(est.estimate - _quadrature_supremum(a, T, two_sided=False)) <= 4 * est.stderr


def test_two_sided_supremum_counterexample():
    oracle = _quadrature_supremum(8, 100)
    assert oracle == pytest.approx(0.76245, abs=5e-5)
    est = walk_supremum_probability(8, 100, trials=100_000, seed=0)
    assert abs(est.estimate - oracle) <= 4 * est.stderr
    assert est.ceiling == pytest.approx(math.exp(-0.32))
    assert not est.respected
    assert est.estimate <= 2 * est.ceiling


def test_two_sided_supremum_within_doubled_ceiling():
    for a, T in ((2, 3), (4, 16), (6, 50), (10, 200)):
        est = walk_supremum_probability(a, T, trials=50_000, seed=T)
        assert est.estimate <= 2 * est.ceiling + 3 * est.stderr
