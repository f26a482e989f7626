import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import erfcx

from fracdnn.errors import ConvergenceError, NonFiniteError, ShapeError
from fracdnn.fractional import (TimeGrid, l1_coefficient, l1_coefficients, left_history_sum,
                                mittag_leffler, right_history_sum, solve_caputo_ivp, step_scale)

# E_{1/2}(-4) from a 50-digit mpmath series, cross-checked with exp(z^2) erfc(-z)
ML_HALF_MINUS4 = 0.13699945762506139


def test_frozen_mittag_leffler_reference():
    mpmath.mp.dps = 50
    series = mpmath.nsum(lambda k: mpmath.mpf(-4) ** k / mpmath.gamma(k / 2 + 1), [0, mpmath.inf])
    assert float(series) == pytest.approx(ML_HALF_MINUS4, abs=1e-16)
    assert erfcx(4.0) == pytest.approx(ML_HALF_MINUS4, rel=1e-14)


@pytest.mark.parametrize("m, gamma, expected", [
    (1, 1.0, 0.0),
    (0, 0.5, 1.0),
    (1, 0.5, math.sqrt(2) - 1),
])
def test_l1_coefficient_examples(m, gamma, expected):
    assert l1_coefficient(m, gamma) == pytest.approx(expected, abs=1e-15)


def test_l1_coefficient_against_mpmath():
    mpmath.mp.dps = 30
    for m in (1, 2, 7, 100):
        for g in (0.1, 0.5, 0.9):
            ref = (mpmath.mpf(m + 1) ** (1 - mpmath.mpf(g)) - mpmath.mpf(m) ** (1 - mpmath.mpf(g)))
            assert l1_coefficient(m, g) == pytest.approx(float(ref), rel=1e-12)


def test_vectorized_coefficients_match_scalar():
    a = l1_coefficients(50, 0.3)
    assert a == pytest.approx([l1_coefficient(m, 0.3) for m in range(50)], rel=1e-14)


@given(st.floats(0.01, 0.99))
@settings(max_examples=30, deadline=None)
def test_coefficients_positive_and_decreasing(gamma):
    a = l1_coefficients(10_001, gamma)
    assert a[0] == 1.0
    assert np.all(a > 0)
    assert np.all(np.diff(a) < 0)


def test_coefficients_vanish_at_gamma_one():
    a = l1_coefficients(20, 1.0)
    assert a[0] == 1.0 and not np.any(a[1:])


def test_invalid_order_rejected():
    with pytest.raises(ValueError):
        l1_coefficient(1, 0.0)
    with pytest.raises(ValueError):
        l1_coefficient(1, 1.5)
    with pytest.raises(ValueError):
        l1_coefficient(-1, 0.5)


@pytest.mark.parametrize("tau, gamma, expected", [
    (0.2, 1.0, 0.2),
    (1.0, 0.5, float(mpmath.gamma(1.5))),
    (0.2, 0.5, float(mpmath.sqrt(0.2) * mpmath.gamma(1.5))),
])
def test_step_scale(tau, gamma, expected):
    assert step_scale(tau, gamma) == pytest.approx(expected, rel=1e-14)


def test_step_scale_values_quoted():
    assert step_scale(1.0, 0.5) == pytest.approx(0.8862269, abs=1e-7)
    assert step_scale(0.2, 0.5) == pytest.approx(0.3963327, abs=1e-7)


def test_left_history_sum_examples(rng):
    states = rng.standard_normal((6, 2, 3))
    assert not np.any(left_history_sum(states, 1, 0.5))
    assert not np.any(left_history_sum(states, 5, 1.0))
    val = left_history_sum([0.0, 1.0, 3.0], 3, 0.5)
    assert val == pytest.approx((math.sqrt(3) - math.sqrt(2)) + 2 * (math.sqrt(2) - 1), abs=1e-14)
    assert val == pytest.approx(1.1463, abs=1e-4)


def test_left_history_sum_matches_loop(rng):
    Y = rng.standard_normal((8, 3, 2))
    j = 7
    ref = sum(l1_coefficient(j - k, 0.3) * (Y[k] - Y[k - 1]) for k in range(1, j))
    assert np.allclose(left_history_sum(Y, j, 0.3), ref, rtol=1e-13, atol=1e-14)


def test_left_history_sum_shortfall():
    with pytest.raises(ShapeError):
        left_history_sum([0.0, 1.0], 3, 0.5)


def test_right_history_sum_examples(rng):
    P = rng.standard_normal((5, 2, 2))
    assert not np.any(right_history_sum(P, 3, 4, 0.5))
    const = np.ones((5, 2, 2)) * 3.7
    assert not np.any(right_history_sum(const, 0, 4, 0.5))
    # P_2 = 1, P_3 = 4, N = 3, j = 1: a_0 (4 - 1)
    assert right_history_sum([np.nan, np.nan, 1.0, 4.0], 1, 3, 0.5) == pytest.approx(3.0)


def test_right_history_sum_matches_loop(rng):
    N, j, g = 7, 2, 0.4
    P = rng.standard_normal((N + 1, 3))
    ref = sum(l1_coefficient(k - j - 1, g) * (P[k + 1] - P[k]) for k in range(j + 1, N))
    assert np.allclose(right_history_sum(P, j, N, g), ref, rtol=1e-13)


def test_right_history_sum_shortfall():
    with pytest.raises(ShapeError):
        right_history_sum([0.0, 1.0], 0, 3, 0.5)


def test_mittag_leffler_examples():
    assert mittag_leffler(0.5, 0.0, 1e-12) == 1.0
    assert mittag_leffler(1.0, 1.0, 1e-12) == pytest.approx(math.e, rel=1e-14)
    assert mittag_leffler(0.5, -4.0, 1e-10) == pytest.approx(ML_HALF_MINUS4, abs=1e-9)


@pytest.mark.parametrize("z", [-4.0, -3.0, -1.5, -0.5, 0.0, 0.7, 2.0])
def test_mittag_leffler_half_closed_form(z):
    # E_{1/2}(z) = exp(z^2) erfc(-z)
    assert mittag_leffler(0.5, z) == pytest.approx(erfcx(-z), abs=2e-9)


def test_mittag_leffler_exponential_limit():
    for z in np.linspace(-5, 3, 9):
        assert mittag_leffler(1.0, z) == pytest.approx(math.exp(z), rel=1e-10, abs=1e-12)


def test_mittag_leffler_full_output_and_cap():
    value, n_terms, last = mittag_leffler(0.5, -1.0, 1e-12, full_output=True)
    assert last < 1e-12 and n_terms > 1
    with pytest.raises(ConvergenceError):
        mittag_leffler(0.5, -4.0, 1e-12, max_terms=10)


def test_solve_constant_rhs_preserves_state():
    grid = TimeGrid(0.01, 100)
    u = solve_caputo_ivp(0.3, lambda v: np.zeros_like(v), np.array([0.5, -2.0]), grid)
    assert np.all(u == np.array([0.5, -2.0]))


def test_solve_gamma_one_is_forward_euler():
    grid = TimeGrid(0.05, 40)
    f = lambda v: np.sin(v) - 0.5 * v
    u = solve_caputo_ivp(1.0, f, np.array([1.0, 0.3]), grid)
    ref = [np.array([1.0, 0.3])]
    for _ in range(40):
        ref.append(ref[-1] + 0.05 * f(ref[-1]))
    assert np.allclose(u, ref, rtol=1e-14, atol=0)


def test_solve_matches_direct_transcription():
    g, tau, N = 0.5, 0.05, 20
    u = solve_caputo_ivp(g, lambda v: -4 * v, 0.5, TimeGrid(tau, N))
    ref = [0.5]
    c = tau ** g * math.gamma(2 - g)
    for j in range(N):
        hist = sum(l1_coefficient(j - k, g) * (ref[k + 1] - ref[k]) for k in range(j))
        ref.append(ref[j] - hist + c * (-4 * ref[j]))
    assert u == pytest.approx(ref, rel=1e-12, abs=1e-15)


def test_solve_reports_overflow():
    with pytest.raises(NonFiniteError) as info, np.errstate(over="ignore"):
        solve_caputo_ivp(0.5, lambda v: v * v * 1e10, 10.0, TimeGrid(0.1, 50))
    assert info.value.index >= 1


def test_solve_tracks_mittag_leffler_solution():
    grid = TimeGrid(0.005, 200)
    u = solve_caputo_ivp(0.5, lambda v: -4 * v, 0.5, grid)
    ref = 0.5 * erfcx(4 * np.sqrt(grid.t))
    assert np.max(np.abs(u - ref)) <= 2e-2


def test_interior_error_is_first_order():
    # away from the t = 0 layer the L1 error halves with tau
    errs = []
    for tau in (0.02, 0.01, 0.005, 0.0025):
        grid = TimeGrid(tau, int(round(1 / tau)))
        u = solve_caputo_ivp(0.5, lambda v: -4 * v, 0.5, grid)
        mask = grid.t >= 0.1
        errs.append(np.max(np.abs(u - 0.5 * erfcx(4 * np.sqrt(grid.t)))[mask]))
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    assert np.all(ratios > 1.8)


def test_grid_refinement_monotone_max_error():
    # max-over-grid error for the Mittag-Leffler example shrinks as tau halves
    errs = []
    for tau in (0.02, 0.01, 0.005, 0.0025):
        grid = TimeGrid(tau, int(round(1 / tau)))
        u = solve_caputo_ivp(0.5, lambda v: -4 * v, 0.5, grid)
        errs.append(np.max(np.abs(u - 0.5 * erfcx(4 * np.sqrt(grid.t)))))
    assert all(a > b for a, b in zip(errs, errs[1:])), errs


def test_time_grid():
    g = TimeGrid(0.2, 5)
    assert g.final_time == pytest.approx(1.0)
    assert g.t[0] == 0 and g.t[-1] == pytest.approx(1.0)
    with pytest.raises(ValueError):
        TimeGrid(0.0, 5)
