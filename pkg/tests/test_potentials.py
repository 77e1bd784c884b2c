import numpy as np
import pytest

from mixlab.potentials import (DiagonalQuadratic, FiniteSumPotential, IsotropicQuadratic,
                               StepsizeTooLarge, Zero, contraction_coefficient, gradient_step,
                               minibatch_gradient, potential_from_dict, potential_to_dict)


def test_regularity_aggregates():
    F = FiniteSumPotential([IsotropicQuadratic(0.5, [0.0, 0.0]), DiagonalQuadratic([1.0, 3.0])])
    assert (F.m, F.M) == (0.5, 3.0)
    assert F.dim == 2 and F.n == 2


def test_minibatch_mean():
    F = FiniteSumPotential([IsotropicQuadratic(1.0, [0.0]), IsotropicQuadratic(2.0, [1.0]),
                            Zero(1)])
    # mean of gradients 1*x and 2*(x-1) at x = 3
    assert minibatch_gradient(F, [0, 1], 3.0) == pytest.approx(3.5)
    assert minibatch_gradient(F, [2], 3.0) == 0.0
    assert minibatch_gradient(F, [0, 1, 2], 3.0) == pytest.approx(7.0 / 3)


def test_gradient_step_examples():
    F = FiniteSumPotential([IsotropicQuadratic(1.0)])
    assert gradient_step(F, [0], 0.1, 1.0) == pytest.approx(0.9)
    x = np.array([[1.0], [2.0]])
    np.testing.assert_allclose(gradient_step(F, [0], 0.1, x), [[0.9], [1.8]])


def test_contraction_coefficient_cases():
    assert contraction_coefficient(1.0, 1.0, 0.1) == pytest.approx(0.9)
    assert contraction_coefficient(0.0, 4.0, 0.5) == 1.0
    assert contraction_coefficient(1.0, 3.0, 0.5) == 0.5
    assert contraction_coefficient(0.0, 0.0, 7.0) == 1.0
    assert contraction_coefficient(2.0, 2.0, 0.5) == 0.0
    with pytest.raises(StepsizeTooLarge):
        contraction_coefficient(0.0, 1.0, 2.5)
    with pytest.raises(ValueError):
        contraction_coefficient(2.0, 1.0, 0.1)


def test_step_contracts_by_c(rng):
    F = FiniteSumPotential([DiagonalQuadratic([0.4, 2.0, 1.1], [1.0, 0.0, -1.0]),
                            DiagonalQuadratic([0.8, 0.5, 2.0])])
    eta = 0.7
    c = contraction_coefficient(F.m, F.M, eta)
    for batch in ([0], [1], [0, 1]):
        x = rng.normal(size=(5000, 3))
        y = rng.normal(size=(5000, 3))
        gx, gy = gradient_step(F, batch, eta, x), gradient_step(F, batch, eta, y)
        assert np.all(np.linalg.norm(gx - gy, axis=1)
                      <= c * np.linalg.norm(x - y, axis=1) + 1e-12)


def test_batch_validation():
    F = FiniteSumPotential([Zero(1), Zero(1)])
    with pytest.raises(IndexError):
        minibatch_gradient(F, [2], 0.0)
    with pytest.raises(ValueError):
        minibatch_gradient(F, [], 0.0)


def test_batch_rows_independent_of_stacking(rng):
    F = FiniteSumPotential([DiagonalQuadratic(rng.uniform(0, 2, 2), rng.normal(size=2))
                            for _ in range(5)])
    x = rng.normal(size=(64, 2))
    B = np.stack([rng.choice(5, 3, replace=False) for _ in range(64)])
    full = F.batch_gradients(x, B)
    for i in (0, 17, 63):
        np.testing.assert_array_equal(F.batch_gradients(x[i:i + 1], B[i:i + 1])[0], full[i])


def test_config_round_trip():
    data = {"components": [{"kind": "zero", "dim": 2},
                           {"kind": "diagonal_quadratic", "curvature": [1.0, 2.0],
                            "center": [0.0, 1.0]}]}
    F = potential_from_dict(data)
    assert potential_to_dict(F) == data
