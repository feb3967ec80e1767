from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from muband.errors import MalformedCSVError, RangeError, TooFewPointsError
from muband.grid import Grid, GridFunction, cumulative_integral, derivative, integrate


def test_grid_basics():
    g = Grid(0.0, 1.0, 101)
    assert g.spacing == pytest.approx(0.01)
    assert g.t[0] == 0.0 and g.t[-1] == 1.0
    assert len(g.midpoints) == 100
    with pytest.raises(ValueError):
        g.t[0] = 3.0
    assert g.refined().n_points == 201
    assert g.locate(0.505) == 50
    assert g.locate(5.0) == 99


def test_grid_rejects_bad_input():
    with pytest.raises(TooFewPointsError):
        Grid(0.0, 1.0, 2)
    with pytest.raises(RangeError):
        Grid(1.0, 1.0, 10)


def test_grid_function_validation():
    g = Grid(0.0, 1.0, 11)
    with pytest.raises(ValueError):
        GridFunction(g, np.ones(10))
    with pytest.raises(ValueError):
        GridFunction(g, np.full(11, np.nan))


def test_derivative_of_square_is_exact():
    g = Grid(0.0, 1.0, 101)
    f = GridFunction.from_callable(g, lambda t: t**2)
    assert np.max(np.abs(derivative(f).values - 2 * g.t)) <= 1e-10


def test_derivative_of_constant_is_zero():
    g = Grid(-1.0, 2.0, 51)
    f = GridFunction(g, np.full(51, 3.7))
    assert np.max(np.abs(derivative(f).values)) <= 1e-13
    assert np.max(np.abs(derivative(f, 2).values)) <= 1e-10


def test_second_derivative_of_sine():
    g = Grid(0.0, math.pi, 3143)  # spacing about 1e-3
    f = GridFunction.from_callable(g, np.sin)
    err = derivative(f, 2).values[1:-1] + np.sin(g.t[1:-1])
    assert np.max(np.abs(err)) <= 1e-7


def test_derivative_on_five_points():
    g = Grid(0.0, 1.0, 5)
    f = GridFunction.from_callable(g, lambda t: t**3 - 2 * t**2)
    assert np.max(np.abs(derivative(f).values - (3 * g.t**2 - 4 * g.t))) <= 1e-12
    assert np.max(np.abs(derivative(f, 2).values - (6 * g.t - 4))) <= 1e-11
    with pytest.raises(TooFewPointsError):
        derivative(GridFunction(Grid(0.0, 1.0, 4), np.ones(4)))


def test_derivative_rejects_bad_order():
    g = Grid(0.0, 1.0, 11)
    with pytest.raises(ValueError):
        derivative(GridFunction(g, g.t), 3)


def test_integrate_examples():
    g = Grid(0.0, 1.0, 11)
    assert integrate(GridFunction(g, np.ones(11)), 0.0, 1.0) == 1.0
    g = Grid(0.0, math.pi / 2, 2001)
    assert integrate(GridFunction.from_callable(g, np.cos)) == pytest.approx(1.0, abs=1e-8)
    g = Grid(0.0, 2.0, 21)
    assert integrate(GridFunction.from_callable(g, lambda t: t**3), 0.0, 2.0) == pytest.approx(4.0, abs=1e-10)


def test_integrate_partial_cells_exact_for_cubics():
    g = Grid(0.0, 2.0, 20)  # odd cell count exercises the 3/8 closure
    f = GridFunction.from_callable(g, lambda t: t**3 - t)
    F = lambda t: t**4 / 4 - t**2 / 2
    for a, b in [(0.03, 1.97), (0.5, 0.51), (0.0, 1.234), (0.7, 0.7)]:
        assert integrate(f, a, b) == pytest.approx(F(b) - F(a), abs=1e-12)


def test_integrate_rejects_outside():
    g = Grid(0.0, 1.0, 11)
    with pytest.raises(RangeError):
        integrate(GridFunction(g, g.t), -0.5, 0.5)
    with pytest.raises(RangeError):
        integrate(GridFunction(g, g.t), 0.8, 0.2)


def test_cumulative_integral_with_offset():
    g = Grid(0.0, 1.0, 201)
    f = GridFunction.from_callable(g, np.exp)
    run = cumulative_integral(f, 0.5)
    assert np.max(np.abs(run.values - (np.exp(g.t) - math.exp(0.5)))) <= 1e-9


def test_derivative_recovers_cumulative_integral():
    # O(dt^3) in sup norm: halving dt reduces the error by at least ~8x
    errs = []
    for n in (101, 201):
        g = Grid(0.0, 2.0, n)
        f = GridFunction.from_callable(g, lambda t: np.sin(3 * t) + t**2)
        back = derivative(cumulative_integral(f))
        errs.append(np.max(np.abs(back.values - f.values)))
    assert errs[1] < errs[0] / 6
    assert errs[1] < 1e-5


def test_csv_round_trip(tmp_path):
    g = Grid(-1.0, 1.0, 17)
    f = GridFunction.from_callable(g, lambda t: np.exp(t) / 3)
    path = tmp_path / "f.csv"
    text = f.to_csv(path)
    assert text.splitlines()[0] == "t,value"
    back = GridFunction.from_csv(path)
    assert np.array_equal(back.values, f.values)
    assert back.grid == g


def test_csv_rejects_bad_header(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("x,y\n0,1\n")
    with pytest.raises(MalformedCSVError):
        GridFunction.from_csv(p)


def test_spline_call_and_slice():
    g = Grid(0.0, 1.0, 101)
    f = GridFunction.from_callable(g, np.sin, np.cos, lambda t: -np.sin(t))
    assert f(0.333) == pytest.approx(math.sin(0.333), abs=1e-9)
    s = f.slice(10, 21)
    assert s.grid.n_points == 11 and s.t[0] == pytest.approx(0.1)
    assert s.has_exact_derivatives()
    assert not s.strip().has_exact_derivatives()


coef = st.floats(-5, 5, allow_nan=False)


@settings(max_examples=40, deadline=None)
@given(a=coef, b=coef, k=st.floats(0.1, 4.0), order=st.sampled_from([1, 2]))
def test_derivative_is_linear(a, b, k, order):
    g = Grid(0.0, 1.0, 64)
    f = GridFunction.from_callable(g, lambda t: np.sin(k * t))
    h = GridFunction.from_callable(g, lambda t: np.exp(-k * t))
    combo = derivative(GridFunction(g, a * f.values + b * h.values), order).values
    parts = a * derivative(f, order).values + b * derivative(h, order).values
    # rounding of the stencil sums scales like |values| / dt^order
    scale = (1.0 + abs(a) + abs(b)) / g.spacing**order
    assert np.max(np.abs(combo - parts)) <= 1e-13 * scale


@settings(max_examples=30, deadline=None)
@given(c=st.lists(st.floats(-3, 3), min_size=4, max_size=4),
       a=st.floats(0.0, 1.0), width=st.floats(0.0, 1.0))
def test_integrate_is_exact_for_cubics(c, a, width):
    g = Grid(0.0, 2.0, 23)
    f = GridFunction.from_callable(g, lambda t: c[0] + c[1] * t + c[2] * t**2 + c[3] * t**3)
    F = lambda t: c[0] * t + c[1] * t**2 / 2 + c[2] * t**3 / 3 + c[3] * t**4 / 4
    b = a + width
    assert integrate(f, a, b) == pytest.approx(F(b) - F(a), abs=1e-11)
