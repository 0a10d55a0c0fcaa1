import math

import numpy as np
import pytest
import scipy.linalg

from dynburst.semigroup import (DiagonalSemigroup, GrowthBoundError, MatrixSemigroup, ScalarSemigroup,
                                SemigroupModel)
from dynburst.space import DimensionError, Sin, Space, inner, make_function, norm

JORDAN = np.array([[0.0, 1.0], [0.0, 0.0]])


def random_matrix_semigroup(n=6, seed=0, space=None):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(n, n)) / math.sqrt(n)
    # crude but valid growth constants: ||exp(tA)|| <= exp(t ||A||)
    sp = space or Space("abstract", n)
    s = np.sqrt(sp.weights)
    a = float(np.linalg.norm(s[:, None] * A / s[None, :], 2))
    return MatrixSemigroup(A, 1.0, a, sp)


def test_identity_at_zero():
    sp = Space("abstract", 3)
    for S in (ScalarSemigroup(1.0, sp), DiagonalSemigroup([-1.0, 0.5, 2.0]), random_matrix_semigroup(3)):
        for k in range(3):
            e = sp.element(np.eye(3)[k])
            assert np.allclose(S.apply(0.0, e).coeffs, e.coeffs, atol=1e-12, rtol=0)


def test_scalar_apply(grid):
    x = make_function(Sin(1), grid)
    y = ScalarSemigroup(1.0, grid).apply(1.0, x)
    assert np.allclose(y.coeffs, math.e * x.coeffs, rtol=1e-15, atol=0)


def test_diagonal_apply():
    S = DiagonalSemigroup([-1.0, 2.0])
    y = S.apply(0.5, S.space.element([1, 1]))
    assert y.coeffs[0] == pytest.approx(math.exp(-0.5), rel=1e-15)
    assert y.coeffs[1] == pytest.approx(math.e, rel=1e-15)
    assert y.coeffs[0] == pytest.approx(0.606531, abs=5e-7)
    assert y.coeffs[1] == pytest.approx(2.718282, abs=5e-7)


def test_adjoint_trivial_cases(grid):
    g = make_function(Sin(2), grid)
    S = ScalarSemigroup(1.0, grid)
    assert np.array_equal(S.apply_adjoint(0.0, g).coeffs, g.coeffs)
    assert np.allclose(S.apply_adjoint(0.1, g).coeffs, math.exp(0.1) * g.coeffs, rtol=1e-15)


@pytest.mark.parametrize("space", [Space("abstract", 7), Space("grid", 7)])
def test_matrix_adjoint_pairing(space):
    S = random_matrix_semigroup(7, seed=4, space=space)
    rng = np.random.default_rng(1)
    for _ in range(20):
        x = space.element(rng.normal(size=7))
        g = space.element(rng.normal(size=7))
        t = float(rng.uniform(0, 2))
        lhs = inner(S.apply(t, x), g)
        rhs = inner(x, S.apply_adjoint(t, g))
        assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(lhs))


def test_growth_bounds():
    assert ScalarSemigroup(1.0).growth_bound() == (1.0, 1.0)
    assert DiagonalSemigroup([-3.0, -1.0]).growth_bound() == (1.0, -1.0)
    # ||exp(tJ)|| = (t + sqrt(t^2 + 4)) / 2 reaches 1 + sqrt(2) at t = 2
    MatrixSemigroup(JORDAN, 1.0, 1.0)
    MatrixSemigroup(JORDAN, 2.5, 0.0)
    with pytest.raises(GrowthBoundError):
        MatrixSemigroup(JORDAN, 1.0, 0.0)
    with pytest.raises(GrowthBoundError):
        MatrixSemigroup(JORDAN, 2.4, 0.0)


def test_jordan_norm_oracle():
    S = MatrixSemigroup(JORDAN, 2.5, 0.0)
    for t in (0.3, 1.0, 2.0):
        assert S.operator_norm(t, S.space) == pytest.approx((t + math.sqrt(t * t + 4)) / 2, rel=1e-12)


def test_errors():
    S = ScalarSemigroup(1.0, Space("abstract", 2))
    x = Space("abstract", 2).element([1, 1])
    with pytest.raises(ValueError):
        S.apply(-0.1, x)
    with pytest.raises(ValueError):
        S.apply_adjoint(-1e-9, x)
    with pytest.raises(DimensionError):
        S.apply(0.1, Space("abstract", 3).element([1, 1, 1]))
    with pytest.raises(ValueError):
        MatrixSemigroup(np.ones((2, 3)), 1.0, 1.0)
    with pytest.raises(ValueError):
        SemigroupModel(0.5, 0.0)


@pytest.mark.parametrize("make", [
    lambda: DiagonalSemigroup(np.linspace(-2, 1, 5)),
    lambda: random_matrix_semigroup(5, seed=2),
    lambda: ScalarSemigroup(0.7, Space("abstract", 5)),
])
def test_semigroup_law(make):
    S = make()
    rng = np.random.default_rng(9)
    x = S.space.element(rng.normal(size=5))
    for t, s in rng.uniform(0, 2, size=(100, 2)):
        lhs = S.apply(t + s, x)
        rhs = S.apply(t, S.apply(s, x))
        assert norm(lhs - rhs) <= 1e-9 * norm(x)


def test_strong_continuity():
    S = random_matrix_semigroup(4, seed=3)
    x = S.space.element([1.0, -2.0, 0.5, 3.0])
    dist = [norm(S.apply(2.0 ** -k, x) - x) for k in range(1, 21)]
    assert all(b < a for a, b in zip(dist, dist[1:]))
    assert dist[-1] < 1e-5


def test_expm_matches_eigendecomposition():
    # A = V diag(lam) V^-1 with a well-conditioned V
    rng = np.random.default_rng(5)
    V = np.eye(4) + 0.3 * rng.normal(size=(4, 4))
    lam = np.array([-2.0, -0.5, 0.3, 1.0])
    A = V @ np.diag(lam) @ np.linalg.inv(V)
    D = DiagonalSemigroup(lam)
    S = MatrixSemigroup(A, np.linalg.cond(V), 1.0)
    for t in (0.1, 0.7, 2.0):
        expected = V @ np.diag(D.factor(t)) @ np.linalg.inv(V)
        assert np.allclose(S.factor(t), expected, rtol=1e-12, atol=1e-12 * np.abs(expected).max())


def test_matrix_factor_is_scipy_expm():
    S = random_matrix_semigroup(3, seed=8)
    assert np.array_equal(S.factor(0.4), scipy.linalg.expm(0.4 * S.A))


def test_operator_norm_scalar_diagonal():
    sp = Space("abstract", 2)
    assert ScalarSemigroup(1.0, sp).operator_norm(1.0, sp) == pytest.approx(math.e)
    assert DiagonalSemigroup([-1.0, 2.0]).operator_norm(0.5, sp) == pytest.approx(math.e)
