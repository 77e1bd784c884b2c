import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.special import ndtr

from mixlab.divergences import (INF, DegenerateReference, DiscreteDist, DivergenceValue,
                                Gaussian1D, OracleScaleExceeded, OrderTooLargeForVariancePair,
                                chi2_discrete, comparison_bounds, empirical_tv,
                                empirical_tv_stderr, hellinger_alpha_from_renyi,
                                hellinger_discrete, renyi_discrete, renyi_from_hellinger_alpha,
                                renyi_gaussian, renyi_vectors, shifted_renyi_discrete,
                                translation_shift_upper_bound, tv_discrete)


def kl_gauss(g0, g1):
    r = g0.variance / g1.variance
    return 0.5 * (r - 1 - math.log(r) + (g1.mean - g0.mean) ** 2 / g1.variance)


# --- Gaussians ----------------------------------------------------------------

def test_gaussian_self_divergence():
    g = Gaussian1D(0.3, 2.0)
    for a in (1, 1.5, 2, 7):
        assert renyi_gaussian(a, g, g) == 0.0


@pytest.mark.parametrize("alpha", [1.0, 2.0, 3.5])
def test_translated_gaussians(alpha):
    w, s2 = 0.7, 0.4
    assert renyi_gaussian(alpha, Gaussian1D(w, s2), Gaussian1D(0, s2)) == pytest.approx(
        alpha * w * w / (2 * s2), rel=1e-14)


def test_order_one_limit(rng):
    for _ in range(100):
        g0 = Gaussian1D(rng.normal(), rng.uniform(0.2, 3))
        g1 = Gaussian1D(rng.normal(), rng.uniform(0.2, 3))
        kl = kl_gauss(g0, g1)
        assert renyi_gaussian(1.0, g0, g1) == pytest.approx(kl, rel=1e-12, abs=1e-14)
        try:
            near = renyi_gaussian(1 + 1e-6, g0, g1)
        except OrderTooLargeForVariancePair:
            continue
        assert abs(near - kl) <= 1e-4


def test_gaussian_errors():
    with pytest.raises(OrderTooLargeForVariancePair):
        renyi_gaussian(3.0, Gaussian1D(0, 2.0), Gaussian1D(0, 1.0))
    with pytest.raises(DegenerateReference):
        renyi_gaussian(2.0, Gaussian1D(0, 1.0), Gaussian1D(0, 0.0))
    assert renyi_gaussian(2.0, Gaussian1D(0, 0.0), Gaussian1D(0, 1.0)) == INF
    with pytest.raises(ValueError):
        Gaussian1D(0, -1.0)


def test_nearly_equal_variances_stay_accurate():
    # D_2(N(0, 1+u) || N(0, 1)) = -log(1 - u^2) / 2 exactly; tiny u used to cancel to 0
    for u in (1e-3, 1e-6, 1e-9):
        got = renyi_gaussian(2.0, Gaussian1D(0, 1 + u), Gaussian1D(0, 1))
        assert got == pytest.approx(-0.5 * math.log1p(-u * u), rel=1e-8)


def test_translation_upper_bound():
    g0, g1 = Gaussian1D(1.0, 0.5), Gaussian1D(0.0, 0.5)
    assert translation_shift_upper_bound(2, g0, g1, 2.0) == 0.0
    assert translation_shift_upper_bound(2, g0, g1, 0.25) == pytest.approx(2 * 0.75 ** 2 / 1.0)


# --- discrete -----------------------------------------------------------------

def test_discrete_examples():
    mu = DiscreteDist([0, 1], [1, 0])
    nu = DiscreteDist([0, 1], [0.5, 0.5])
    assert renyi_discrete(2, mu, nu) == pytest.approx(math.log(2), rel=1e-15)
    assert renyi_discrete(1, mu, nu) == pytest.approx(math.log(2), rel=1e-15)
    assert renyi_discrete(2, nu, nu) == 0.0
    assert renyi_discrete(1, DiscreteDist([0, 5], [0.5, 0.5]), nu) == INF
    assert renyi_discrete(2, nu, DiscreteDist.dirac(0.0)) == INF
    assert tv_discrete(mu, nu) == pytest.approx(0.5)
    assert chi2_discrete(mu, nu) == pytest.approx(1.0)
    assert hellinger_discrete(mu, nu) == pytest.approx(math.sqrt(2 - math.sqrt(2)))


def test_discrete_validation():
    with pytest.raises(ValueError):
        DiscreteDist([1, 0], [0.5, 0.5])
    with pytest.raises(ValueError):
        DiscreteDist([0, 1], [0.5, 0.6])
    with pytest.raises(ValueError):
        DivergenceValue("kl", -1.0)
    d = DiscreteDist.from_atoms([2.0, 0.0, 2.0])
    np.testing.assert_allclose(d.weights, [1 / 3, 2 / 3])


def test_pushforward_and_convolve():
    d = DiscreteDist([0, 1], [0.5, 0.5])
    np.testing.assert_array_equal(d.pushforward(lambda x: 0 * x).support, [0])
    c = d.convolve(d)
    np.testing.assert_allclose(c.support, [0, 1, 2])
    np.testing.assert_allclose(c.weights, [0.25, 0.5, 0.25])


def test_comparison_examples():
    assert comparison_bounds(0, 0) == (0, 0, 0)
    assert comparison_bounds(1 / 8, 0).tv_bound == pytest.approx(0.25)
    assert comparison_bounds(0, math.log(2)).chi2 == pytest.approx(1.0)


def test_comparisons_hold_on_random_pairs(rng):
    for _ in range(200):
        p = rng.dirichlet(np.ones(5))
        q = rng.dirichlet(np.ones(5))
        mu, nu = DiscreteDist(np.arange(5), p), DiscreteDist(np.arange(5), q)
        b = comparison_bounds(renyi_discrete(1, mu, nu), renyi_discrete(2, mu, nu))
        assert tv_discrete(mu, nu) <= b.tv_bound + 1e-12
        assert hellinger_discrete(mu, nu) <= b.hellinger_bound + 1e-12
        assert chi2_discrete(mu, nu) == pytest.approx(b.chi2, rel=1e-10)


def test_hellinger_alpha_round_trip(rng):
    assert hellinger_alpha_from_renyi(3, 0.0) == 0.0
    assert hellinger_alpha_from_renyi(2, 0.7) == pytest.approx(math.expm1(0.7))
    for _ in range(200):
        a, d = rng.uniform(1.01, 10), rng.exponential()
        back = renyi_from_hellinger_alpha(a, hellinger_alpha_from_renyi(a, d))
        assert abs(back - d) <= 1e-12 * max(1, d)
    with pytest.raises(ValueError):
        hellinger_alpha_from_renyi(1.0, 0.1)


@given(st.lists(st.floats(0.01, 1), min_size=4, max_size=4),
       st.lists(st.floats(0.01, 1), min_size=4, max_size=4))
def test_renyi_monotone_in_order(pw, qw):
    p = np.array(pw) / sum(pw)
    q = np.array(qw) / sum(qw)
    vals = [renyi_vectors(a, p, q) for a in (1, 1.5, 2, 4)]
    assert all(x <= y + 1e-12 for x, y in zip(vals, vals[1:]))


# --- shifted ------------------------------------------------------------------

def test_shifted_zero_shift_is_plain():
    mu = DiscreteDist([0, 1, 2], [0.2, 0.5, 0.3])
    nu = DiscreteDist([0, 1, 2], [0.4, 0.4, 0.2])
    for a in (1, 2):
        assert shifted_renyi_discrete(a, mu, nu, 0.0) == pytest.approx(
            renyi_discrete(a, mu, nu), rel=1e-12)


def test_shifted_diracs():
    for z in (0.3, 1.0):
        assert shifted_renyi_discrete(1, DiscreteDist.dirac(0.0), DiscreteDist.dirac(0.3), z) == 0
    assert shifted_renyi_discrete(1, DiscreteDist.dirac(0.0), DiscreteDist.dirac(0.3), 0.2) == INF


def test_shifted_is_monotone_and_dominated():
    mu = DiscreteDist([0, 1, 2, 3], [0.1, 0.2, 0.3, 0.4])
    nu = DiscreteDist([0, 1, 2, 3], [0.4, 0.3, 0.2, 0.1])
    for a in (1, 2):
        vals = [shifted_renyi_discrete(a, mu, nu, z) for z in (0, 0.5, 1, 2, 3)]
        assert vals[0] == pytest.approx(renyi_discrete(a, mu, nu))
        assert all(x >= y - 1e-9 for x, y in zip(vals, vals[1:]))
        assert vals[-1] == pytest.approx(0, abs=1e-8)


def _grid_oracle(alpha, mass, q):
    # atom 0 may go to nu atoms {0, 1}, atom 1 to {1, 2}
    s = np.arange(0, 1 + 5e-4, 1e-3)
    S, R = np.meshgrid(s, s, indexing="ij")
    m0 = mass[0] * (1 - S)
    m1 = mass[0] * S + mass[1] * R
    m2 = mass[1] * (1 - R)
    P = np.stack([m0, m1, m2])
    Q = np.asarray(q)[:, None, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        if alpha == 1:
            terms = np.where(P > 0, P * np.log(P / Q), 0.0)
            vals = terms.sum(axis=0)
        else:
            vals = np.log(np.sum(P ** alpha * Q ** (1 - alpha), axis=0)) / (alpha - 1)
    return float(vals.min())


@pytest.mark.parametrize("alpha", [1, 2])
def test_shifted_against_grid_search(alpha):
    mu = DiscreteDist([0.4, 1.6], [0.7, 0.3])
    nu = DiscreteDist([0.0, 1.0, 2.0], [0.2, 0.3, 0.5])
    got = shifted_renyi_discrete(alpha, mu, nu, 0.6)
    oracle = _grid_oracle(alpha, mu.weights, nu.weights)
    assert got <= oracle + 1e-9
    assert got >= oracle - 5e-6  # grid resolution


def test_shifted_full_result():
    mu = DiscreteDist([0.4, 1.6], [0.7, 0.3])
    nu = DiscreteDist([0.0, 1.0, 2.0], [0.2, 0.3, 0.5])
    res = shifted_renyi_discrete(1, mu, nu, 0.6, full=True)
    assert res.gap <= 1e-7
    np.testing.assert_allclose(res.coupling.sum(axis=1), mu.weights, atol=1e-12)
    np.testing.assert_allclose(res.coupling.sum(axis=0), res.mu_shifted, atol=1e-12)


def test_oracle_scale_limit():
    big = DiscreteDist(np.arange(17), np.full(17, 1 / 17))
    with pytest.raises(OracleScaleExceeded):
        shifted_renyi_discrete(1, big, big, 1.0)


# --- empirical ----------------------------------------------------------------

def test_empirical_tv_gaussians():
    rng = np.random.default_rng(7)
    a = rng.normal(0, 1, 100_000)
    b = rng.normal(1, 1, 100_000)
    truth = 2 * ndtr(0.5) - 1
    assert truth == pytest.approx(0.38292, abs=1e-5)
    assert abs(empirical_tv(a, b) - truth) <= 0.02
    assert 0 < empirical_tv_stderr(a, b) < 0.01


def test_empirical_tv_extremes():
    x = np.linspace(0, 1, 1000)
    assert empirical_tv(x, x) == 0.0
    assert empirical_tv(x, x + 5) == 1.0
    with pytest.raises(ValueError):
        empirical_tv([], x)
    with pytest.raises(ValueError):
        empirical_tv(x, x, bins=1)
