import math

import numpy as np
import pytest
from scipy.optimize import minimize

from mixlab.bounds import (BoundReport, UnboundedDomain, allocation_beta, bound_reports,
                           mixing_time_lower_convex, mixing_time_lower_strongly_convex,
                           mixing_time_upper_convex, mixing_time_upper_strongly_convex,
                           optimal_shift_allocation, pabi_divergence_bound, tv_upper_bound_at,
                           unconstrained_diameter_adapter)
from mixlab.geometry import Ball, Interval, WholeSpace


# --- PABI ---------------------------------------------------------------------

def test_pabi_modes():
    assert pabi_divergence_bound(2, 1.0, 0.5, 1.0, 4) == pytest.approx(2 / (2 * 0.5 * 4))
    assert pabi_divergence_bound(2, 1.0, 0.5, 0.9, 4) == pytest.approx(2 * 0.9 ** 8)
    near = pabi_divergence_bound(1, 1.0, 1.0, 1 - 1e-13, 10, "continuous")
    at = pabi_divergence_bound(1, 1.0, 1.0, 1.0, 10, "continuous")
    assert abs(near - at) <= 1e-9 * at
    with pytest.raises(ValueError):
        pabi_divergence_bound(1, 1.0, 1.0, 0.5, 0)
    with pytest.raises(ValueError):
        pabi_divergence_bound(1, 1.0, 1.0, 0.5, 3, "exotic")


def test_continuous_sharpens_piecewise():
    for c in np.linspace(0.01, 1.0, 40):
        for T in (1, 2, 5, 30, 300):
            cont = pabi_divergence_bound(1, 1.0, 1.0, c, T, "continuous")
            piece = pabi_divergence_bound(1, 1.0, 1.0, c, T, "piecewise")
            assert cont <= piece * (1 + 1e-12)


def test_allocation_examples():
    np.testing.assert_allclose(optimal_shift_allocation(1.0, 1.0, 4), [0.25] * 4)
    assert np.sum(optimal_shift_allocation(1.0, 1.0, 4) ** 2) == pytest.approx(0.25)


def test_allocation_matches_numeric_qp():
    c, D, T = 0.5, 1.0, 2
    w = c ** -np.arange(1, T + 1)
    res = minimize(lambda a: a @ a, np.full(T, D / w.sum()), jac=lambda a: 2 * a,
                   constraints=[{"type": "eq", "fun": lambda a: w @ a - D, "jac": lambda a: w}],
                   method="SLSQP", options={"ftol": 1e-15, "maxiter": 500})
    np.testing.assert_allclose(optimal_shift_allocation(c, D, T), res.x, atol=1e-8)
    np.testing.assert_allclose(res.x, [0.1, 0.2], atol=1e-8)


def test_allocation_feasible_and_consistent():
    for c in (0.3, 0.7, 0.99, 1.0):
        for T in (1, 3, 25):
            for D in (0.5, 2.0):
                a = optimal_shift_allocation(c, D, T)
                w = c ** -np.arange(1, T + 1, dtype=float)
                assert abs(w @ a - D) <= 1e-10 * max(1, D)
                sigma2, alpha = 0.3, 1.7
                cont = pabi_divergence_bound(alpha, D, sigma2, c, T, "continuous")
                assert alpha / (2 * sigma2) * (a @ a) == pytest.approx(cont, rel=1e-10)
                assert allocation_beta(c, T) * D * D == pytest.approx(a @ a, rel=1e-10)


# --- convex mixing times ------------------------------------------------------

def test_convex_upper_examples():
    D, eta = 1.0, 0.01
    assert mixing_time_upper_convex(D, eta, 0.25) == 200
    assert mixing_time_upper_convex(D, eta, 1 / 16) == 400
    assert mixing_time_upper_convex(D, eta, 0.1, "kl") == 1025
    assert mixing_time_upper_convex(D, eta, 0.1, "renyi", 1.0) == 1025
    with pytest.raises(ValueError):
        mixing_time_upper_convex(D, eta, 1.0)
    with pytest.raises(UnboundedDomain):
        mixing_time_upper_convex(math.inf, eta, 0.1)


def test_convex_tv_blocks_divide_by_four():
    # each block cuts worst-case TV by 4: eps = 4^-k needs exactly k blocks
    for k in range(1, 6):
        assert mixing_time_upper_convex(1.0, 0.01, 4.0 ** -k) == 200 * k
    assert mixing_time_upper_convex(1.0, 0.01, 0.2) == 400


def test_convex_lower_examples():
    assert mixing_time_lower_convex(1.0, 0.01) == 1
    assert mixing_time_lower_convex(10.0, 0.01) == 100
    for D in (3.0, 7.0, 20.0):
        ratio = mixing_time_lower_convex(2 * D, 0.01) / mixing_time_lower_convex(D, 0.01)
        assert 3.5 <= ratio <= 4.5


def test_upper_dominates_lower():
    for D in (0.5, 1, 4, 30):
        for eta in (1e-3, 1e-2, 0.1):
            up = mixing_time_upper_convex(D, eta, 0.25)
            lo = mixing_time_lower_convex(D, eta)
            assert up >= lo
            if D * D / (100 * eta) >= 1:
                assert up / lo <= 200


def test_tv_upper_bound_at():
    assert tv_upper_bound_at(0, 1.0, 0.01) == 1.0
    assert tv_upper_bound_at(200, 1.0, 0.01) <= 0.25
    assert tv_upper_bound_at(800, 1.0, 0.01) <= 4.0 ** -4


# --- strongly convex ----------------------------------------------------------

def test_sc_upper_example():
    assert mixing_time_upper_strongly_convex(1.0, 0.1, 1.0, 1.0, 1e-3) == 38
    # scan oracle: first T with the divergence bound below eps
    T = 1
    while 2.5 * 0.9 ** (2 * T) > 1e-3:
        T += 1
    assert T == 38
    assert mixing_time_upper_strongly_convex(1.0, 0.1, 1.0, 1.0, 10.0) == 1


def test_sc_upper_redirects_at_zero_curvature():
    assert (mixing_time_upper_strongly_convex(1.0, 0.01, 0.0, 1.0, 0.1, metric="kl")
            == mixing_time_upper_convex(1.0, 0.01, 0.1, "kl"))


def test_sc_lower_example():
    assert mixing_time_lower_strongly_convex(1.0, 0.9, 1e-3) == 13
    T = 0
    while 0.9 ** (4 * (T + 1)) / 4 > 1e-3:
        T += 1
    assert T == 13
    assert mixing_time_lower_strongly_convex(1.0, 0.9, 0.25) == 0


def test_sc_lower_doubled_order():
    # the shift is ceil-based, so it lands within one of ln2 / (4 ln(1/c)) on either side
    for c in (0.5, 0.8, 0.9, 0.99):
        for eps in (1e-2, 1e-3, 1e-5):
            base = mixing_time_lower_strongly_convex(1.0, c, eps)
            doubled = mixing_time_lower_strongly_convex(2.0, c, eps)
            shift = math.log(2) / (4 * math.log(1 / c))
            assert math.floor(shift) <= doubled - base <= math.ceil(shift)


def test_sc_sandwich():
    for m, M, eta in ((1, 1, 0.1), (0.5, 2, 0.2), (1, 4, 0.05)):
        c = max(abs(1 - eta * m), abs(1 - eta * M))
        for eps in (1e-2, 1e-4):
            for alpha in (1.0, 2.0):
                assert (mixing_time_lower_strongly_convex(alpha, c, eps)
                        <= mixing_time_upper_strongly_convex(1.0, eta, m, M, eps, alpha))


# --- adapter and reports ------------------------------------------------------

def test_adapter():
    patch = unconstrained_diameter_adapter(Interval(-1, 2), 0.01)
    assert patch.D == 3.0 and not patch.proxied and patch.tv_target(0.01) == 0.01
    assert unconstrained_diameter_adapter(Ball([0, 0], 1.0), 0.01).D == 2.0
    patch = unconstrained_diameter_adapter(WholeSpace(1), 0.01, D_proxy=5.0)
    assert patch.proxied and patch.tv_target(0.01) == pytest.approx(0.03)
    assert mixing_time_upper_convex(patch.D, 0.01, 0.01) == 20000
    with pytest.raises(UnboundedDomain):
        unconstrained_diameter_adapter(WholeSpace(1), 0.01)


def test_bound_reports():
    reps = bound_reports(1.0, 0.1, 1e-3, alphas=(1.0, 2.0), m=1.0, M=1.0)
    assert all(isinstance(r, BoundReport) for r in reps)
    kinds = {(r.formula_id, r.metric, r.alpha) for r in reps}
    assert ("strongly-convex-lower", "renyi", 1.0) in kinds
    sc = [r for r in reps if r.formula_id == "strongly-convex-upper" and r.alpha == 1.0]
    assert sc[0].value == 38
