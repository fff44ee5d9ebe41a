import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from symdelay.convergence import (
    divergence_slope_vs_geometry, doubling_gaps, extrapolate_limit, linear_fit, loglog_slope,
    model_fit, predicted_slope, residual_rows,
)
from symdelay.errors import ValidationError
from symdelay.geometry import ball, ellipse, egg

R = np.geomspace(20.0, 5120.0, 9)


def test_one_over_r_limit():
    v = 1.0 + 0.3 / R
    verdict = extrapolate_limit(R, v)
    assert verdict.mode == "converged"
    assert verdict.limit == pytest.approx(1.0, abs=1e-10)
    assert verdict.coefficients[1] == pytest.approx(0.3, abs=1e-8)


def test_gap_above_tolerance_not_converged():
    # final doubling gap 3/5120 > 1e-4: the fit limit is reported but no verdict
    verdict = extrapolate_limit(R, 1.0 + 3.0 / R)
    assert verdict.mode == "undetermined"
    assert verdict.fit_limit == pytest.approx(1.0, abs=1e-10)


def test_second_order_model():
    v = 2.0 - 4.0 / R + 50.0 / R ** 2
    verdict = extrapolate_limit(R, v, model="c/r + d/r^2", tol=1e-3)
    assert verdict.limit == pytest.approx(2.0, abs=1e-10)
    assert verdict.converged


def test_linear_drift_classified():
    rng = np.random.default_rng(3)
    v = 0.1 * R + 1e-3 * rng.normal(size=R.size)
    verdict = extrapolate_limit(R, v)
    assert verdict.mode == "linear-divergence"
    assert verdict.slope == pytest.approx(0.1, rel=1e-4)


def test_slow_convergence_undetermined():
    r = np.geomspace(1.0, 16.0, 5)
    verdict = extrapolate_limit(r, 1.0 + 100.0 / np.sqrt(r))
    assert verdict.mode == "undetermined"
    assert verdict.note


def test_too_few_doublings():
    r = np.linspace(10.0, 15.0, 5)
    verdict = extrapolate_limit(r, 0.01 * np.sin(r))
    assert verdict.mode == "undetermined"


def test_relative_tolerance():
    v = 1000.0 + 1.0 / R
    assert extrapolate_limit(R, v, tol=1e-6, relative=True).converged
    assert not extrapolate_limit(R, v, tol=1e-9).converged


def test_doubling_gaps_exact_grid():
    r = np.array([1.0, 2.0, 4.0, 8.0, 16.0])
    radii, gaps = doubling_gaps(r, 1.0 / r)
    assert np.allclose(radii, [2, 4, 8, 16])
    assert np.allclose(gaps, [0.5, 0.25, 0.125, 0.0625])


def test_loglog_slope_of_power_law():
    s, _, r2 = loglog_slope(R, 7.0 / R)
    assert s == pytest.approx(-1.0, abs=1e-12)
    assert r2 == pytest.approx(1.0)


def test_predicted_slopes():
    # ellipse 2:1, outgoing along x, incoming along y: tau2 slope zero (symmetric)
    e = ellipse(2.0, 1.0)
    assert predicted_slope(e, [0, 1], [1, 0], 1.0) == pytest.approx(0.0, abs=1e-14)
    # tau_in - tau: (2 + 2 - 1 - 1)/2
    assert predicted_slope(e, [0, 1], [1, 0], 1.0, "tau_in_minus_tau") == pytest.approx(1.0)
    # egg 1 + eps cos: forward scattering along x gives (1.3 - 0.7 - 1.3 + 0.7)/2 = 0
    assert predicted_slope(egg(0.3), [1, 0], [1, 0], 1.0) == pytest.approx(0.0, abs=1e-12)
    assert predicted_slope(egg(0.3), [1, 0], [0, 1], 2.0) == pytest.approx(-0.15, abs=1e-12)
    assert predicted_slope(ball(2), [1, 0], [0, 1], 1.0) == 0.0


def test_slope_comparison():
    e = egg(0.3)
    v = 5.0 - 0.15 * R
    cmp_ = divergence_slope_vs_geometry(R, v, e, [1, 0], [0, 1], 2.0)
    assert cmp_.relative and cmp_.discrepancy < 1e-10
    flat = divergence_slope_vs_geometry(R, np.ones_like(R), ball(2), [1, 0], [0, 1], 1.0)
    assert not flat.relative and flat.discrepancy < 1e-12


def test_bad_inputs():
    with pytest.raises(ValidationError):
        extrapolate_limit([1, 2, 3], [1, 2, 3])
    with pytest.raises(ValidationError):
        extrapolate_limit(R[::-1], R)
    with pytest.raises(ValidationError):
        extrapolate_limit(R, np.full(R.size, np.nan))
    with pytest.raises(ValidationError):
        model_fit(R, R, model="exp")


def test_verdict_serialises():
    verdict = extrapolate_limit(R, 1.0 + 3.0 / R)
    json.dumps(verdict.to_dict())
    rows = residual_rows(R, 1.0 + 3.0 / R, verdict)
    assert max(abs(x[2]) for x in rows) < 1e-10


@settings(max_examples=40, deadline=None)
@given(st.floats(-10, 10), st.floats(-50, 50))
def test_exact_model_recovered(limit, c):
    v = limit + c / R
    coef, _, resid, _ = model_fit(R, v)
    assert coef[0] == pytest.approx(limit, abs=1e-9)
    assert coef[1] == pytest.approx(c, abs=1e-6)
    assert np.max(np.abs(resid)) < 1e-9


@settings(max_examples=40, deadline=None)
@given(st.floats(-5, 5), st.floats(-3, 3))
def test_linear_fit_exact(a, s):
    s_fit, _, a_fit, _ = linear_fit(R, a + s * R)
    assert s_fit == pytest.approx(s, abs=1e-10)
    assert a_fit == pytest.approx(a, abs=1e-6)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.5, 3.0), st.floats(-20, 20))
def test_shift_invariance(shift, c):
    base = extrapolate_limit(R, 1.0 + c / R)
    moved = extrapolate_limit(R, 1.0 + shift + c / R)
    assert moved.mode == base.mode
    assert moved.fit_limit == pytest.approx(base.fit_limit + shift, abs=1e-9)
    assert math.isclose(moved.final_gap, base.final_gap, abs_tol=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.floats(-5, 5), st.floats(-2, 2), st.integers(1, 4))
def test_more_rows_never_flip_converged(limit, c, extra):
    base = np.geomspace(20.0, 2560.0, 8)
    if not extrapolate_limit(base, limit + c / base).converged:
        return
    longer = np.geomspace(20.0, 2560.0 * 2 ** extra, 8 + extra)
    assert extrapolate_limit(longer, limit + c / longer).mode != "linear-divergence"
