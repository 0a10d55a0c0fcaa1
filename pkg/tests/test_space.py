import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from dynburst.space import (Const, Cos, DimensionError, Poly, Sin, Space, inner, make_function, norm,
                            parse_expr)


def test_inner_with_zero(grid):
    g = make_function(Poly((0, 1)), grid)
    assert inner(grid.zero(), g) == 0.0


def test_inner_three_sin_against_one(grid):
    # analytic integral, cross-checked by adaptive quadrature
    exact = 3 * (1 - math.cos(1))
    oracle, _ = integrate.quad(lambda x: 3 * math.sin(x), 0, 1, epsabs=1e-14)
    assert exact == pytest.approx(oracle, rel=1e-13)
    assert exact == pytest.approx(1.379093, abs=5e-7)
    val = inner(make_function(Sin(3), grid), make_function(Const(1), grid))
    assert val == pytest.approx(exact, rel=1e-6)


def test_inner_linear_polys(grid):
    val = inner(make_function(Poly((2, 1)), grid), make_function(Poly((0, 1)), grid))
    assert val == pytest.approx(4 / 3, rel=1e-6)


def test_norms(grid):
    assert norm(grid.zero()) == 0.0
    assert norm(make_function(Const(1), grid)) == pytest.approx(1.0, abs=1e-15)
    assert norm(make_function(Poly((2, 1)), grid)) == pytest.approx(math.sqrt(19 / 3), rel=1e-6)
    assert math.sqrt(19 / 3) == pytest.approx(2.516611, abs=5e-7)


def test_make_function_points(grid):
    assert np.all(make_function(Const(0), grid).coeffs == 0)
    assert make_function(Sin(3), grid).coeffs[0] == 0.0
    assert make_function(Poly((2, 1)), grid).coeffs[-1] == 3.0
    assert len(make_function(Cos(1), 17)) == 17


def test_dimension_mismatch():
    a = make_function(Const(1), Space("grid", 9))
    b = make_function(Const(1), Space("grid", 17))
    with pytest.raises(DimensionError):
        inner(a, b)
    with pytest.raises(DimensionError):
        a + b
    with pytest.raises(DimensionError):
        Space("grid", 9).element(np.zeros(4))


def test_abstract_space_is_euclidean():
    sp = Space("abstract", 3)
    x = sp.element([1, 2, 2])
    assert norm(x) == 3.0
    with pytest.raises(ValueError):
        make_function(Const(1), sp)


def test_element_is_immutable(grid):
    x = make_function(Sin(1), grid)
    with pytest.raises(ValueError):
        x.coeffs[0] = 1.0


def test_parse_expr():
    assert parse_expr({"sin": 3}) == Sin(3.0)
    assert parse_expr({"poly": [2, 1]}) == Poly((2.0, 1.0))
    assert parse_expr(2.5) == Const(2.5)
    with pytest.raises(ValueError):
        parse_expr({"tan": 1})
    with pytest.raises(ValueError):
        parse_expr({"sin": 1, "cos": 2})


coef = st.floats(-5, 5, allow_nan=False)


@settings(max_examples=60, deadline=None)
@given(st.lists(coef, min_size=4, max_size=4), st.lists(coef, min_size=4, max_size=4))
def test_cauchy_schwarz(p, q):
    sp = Space("grid", 65)
    x = make_function(Poly(tuple(p)), sp) + make_function(Sin(p[0]), sp)
    y = make_function(Poly(tuple(q)), sp) + make_function(Cos(q[1]), sp)
    assert abs(inner(x, y)) <= norm(x) * norm(y) * (1 + 1e-12) + 1e-300
    assert inner(x, y) == pytest.approx(inner(y, x), rel=1e-14, abs=1e-300)


def test_trapezoid_rate():
    # error of the grid inner product for a smooth integrand shrinks ~4x per doubling
    exact = 2.5 * (math.cos(1) + math.sin(1) - 1)
    errs = []
    for n in (33, 65, 129, 257, 513):
        sp = Space("grid", n)
        errs.append(abs(inner(make_function(Cos(2.5), sp), make_function(Poly((0, 1)), sp)) - exact))
    for e0, e1 in zip(errs, errs[1:]):
        assert e0 / e1 >= 3.5
