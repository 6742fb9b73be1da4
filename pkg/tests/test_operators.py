import math

import numpy as np
import pytest

from stefansim import Grid, GridFunction, State, SpectralOperator, apply_A, semigroup, K_A, state_norm
from stefansim.errors import GridMismatch
from stefansim.operators import smoothing_check


@pytest.fixture
def grid():
    return Grid(1.0, 127)


@pytest.fixture
def op(grid):
    return SpectralOperator(grid, 1.0, 1.0)


def _mode(grid, k):
    return GridFunction.from_callable(grid, lambda x: np.sin(k * np.pi * x / grid.L))


def test_eigenvalues_negative_sorted(op):
    assert np.all(op.eigenvalues_plus < 0)
    assert np.all(np.diff(op.eigenvalues_plus) < 0)


def test_apply_A_zero_and_scalar(op, grid):
    Z = State.zero(grid)
    out = apply_A(op, Z)
    assert state_norm(out, "L2") == 0.0
    one = State(GridFunction.zero(grid), GridFunction.zero(grid), 1.0)
    assert apply_A(op, one).p == -1.0


def test_apply_A_eigenrelation(op, grid):
    phi = _mode(grid, 1)
    X = State(phi, GridFunction.zero(grid), 0.0)
    out = apply_A(op, X)
    expected = op.eigenvalues_plus[0] * phi.values
    assert np.max(np.abs(out.u1.values - expected)) / np.max(np.abs(expected)) < 1e-12


def test_apply_A_grid_mismatch(op):
    other = Grid(1.0, 63)
    with pytest.raises(GridMismatch):
        apply_A(op, State.zero(other))


def test_semigroup_identity_at_zero(op, grid):
    rng = np.random.default_rng(0)
    X = State(GridFunction(grid, rng.standard_normal(grid.M)), GridFunction(grid, rng.standard_normal(grid.M)), 1.3)
    Y = semigroup(op, 0.0, X)
    assert np.max(np.abs(Y.u1.values - X.u1.values)) < 1e-14
    assert Y.p == X.p


def test_semigroup_eigen_decay(op, grid):
    phi = _mode(grid, 1)
    X = State(phi, GridFunction.zero(grid), 0.0)
    t = 0.1
    Y = semigroup(op, t, X)
    factor = math.exp(t * op.eigenvalues_plus[0])
    assert np.max(np.abs(Y.u1.values - factor * phi.values)) < 1e-12
    assert np.max(np.abs(Y.u2.values)) == 0.0


def test_semigroup_contraction(op, grid):
    rng = np.random.default_rng(1)
    for _ in range(20):
        X = State(
            GridFunction(grid, rng.standard_normal(grid.M)),
            GridFunction(grid, rng.standard_normal(grid.M)),
            float(rng.standard_normal()),
        )
        t = float(rng.uniform(0.0, 2.0))
        assert state_norm(semigroup(op, t, X), "L2") <= state_norm(X, "L2") * (1 + 1e-14)
        # negative type: decay is at least e^{-t}
        assert state_norm(semigroup(op, t, X), "L2") <= math.exp(-t) * state_norm(X, "L2") * (1 + 1e-12)


def test_semigroup_property(op, grid):
    rng = np.random.default_rng(2)
    X = State(GridFunction(grid, rng.standard_normal(grid.M)), GridFunction(grid, rng.standard_normal(grid.M)), 0.4)
    a = semigroup(op, 0.3, semigroup(op, 0.2, X))
    b = semigroup(op, 0.5, X)
    assert state_norm(a - b, "L2") < 1e-12 * state_norm(b, "L2")


def test_semigroup_rejects_negative_time(op, grid):
    with pytest.raises(ValueError):
        semigroup(op, -0.1, State.zero(grid))


def test_K_A_scalar_direction_and_regression(grid):
    # eta = 1: the scalar slot attains the supremum, value exactly 1
    assert K_A(SpectralOperator(grid, 1.0, 1.0)) == pytest.approx(1.0, abs=1e-14)
    # frozen regression value for an asymmetric pair
    assert K_A(SpectralOperator(grid, 0.3, 2.0)) == pytest.approx(3.3331637784812576, rel=1e-10)


def test_K_A_swap_symmetry(grid):
    a = K_A(SpectralOperator(grid, 0.5, 1.7))
    b = K_A(SpectralOperator(grid, 1.7, 0.5))
    assert a == pytest.approx(b, rel=1e-13)


def test_smoothing_check(op, grid):
    phi = _mode(grid, 3)
    X = State(phi, GridFunction.zero(grid), 0.0)
    worst = 0.0
    for t in np.geomspace(1e-4, 1.0, 9):
        lhs, rhs = smoothing_check(op, float(t), X, 1.0, 0.0)
        worst = max(worst, lhs / rhs)
    assert math.isfinite(worst) and worst > 0
    # beta = alpha: plain contraction
    lhs, rhs = smoothing_check(op, 0.5, X, 1.0, 1.0)
    assert lhs <= rhs * (1 + 1e-14)


def test_generator_consistency(op, grid):
    k = np.arange(1, grid.M + 1)
    rng = np.random.default_rng(4)
    from scipy.fft import dst

    coeffs = rng.standard_normal(grid.M) * k**-4.0
    f = GridFunction(grid, dst(coeffs, type=1) / (2.0 * (grid.M + 1)))
    X = State(f, GridFunction.zero(grid), 0.7)
    AX = apply_A(op, X)
    errs = []
    for eps in (1e-3, 5e-4):
        diff = (1.0 / eps) * (semigroup(op, eps, X) - X)
        errs.append(state_norm(diff - AX, "L2"))
    assert errs[1] < 0.7 * errs[0]
