import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from symdelay.classical import (
    FreeLine, IntegratorOptions, crossing_times, delay_row, full_time_reversal,
    integrate_trajectory, r_grid_from_dict, scattering_data, scattering_trajectory,
    time_delay_curve, time_delays,
)
from symdelay.errors import CrossingError, IntegratorError, ValidationError
from symdelay.geometry import IntervalUnion, ball, egg, ellipse, interval
from symdelay.potentials import BumpPotential, ZeroPotential


def _radial_tau(V0, rho, E):
    """Head-on delay through an origin-centred bump: 2 int_0^rho (1/p(x) - 1/p0) dx."""
    p0 = math.sqrt(2 * E)
    pot = BumpPotential(V0, rho)

    def f(x):
        v = float(pot.evaluate(np.array([[x]]))[0])
        return 1.0 / math.sqrt(2 * (E - v)) - 1.0 / p0

    val, _ = quad(f, 0.0, rho, epsabs=1e-13, epsrel=1e-13, limit=200)
    return 2.0 * val


# ---------------------------------------------------------------------------
# free motion


def test_free_chord_sqrt3():
    line = FreeLine([-5.0, 0.5], [1.0, 0.0])
    tm, tp = crossing_times(line, ball(2), 1.0)
    assert tm + tp == pytest.approx(math.sqrt(3.0), abs=1e-10)


def test_free_ellipse_sojourn():
    # chord of length 12 along the major axis of 3*(2:1 ellipse) at speed 2
    line = FreeLine([-20.0, 0.0], [2.0, 0.0])
    tm, tp = crossing_times(line, ellipse(2.0, 1.0), 3.0)
    assert tm + tp == pytest.approx(6.0, abs=1e-10)


def test_zero_potential_has_no_delay():
    traj = scattering_trajectory(ZeroPotential(), 0.7, b=0.3, direction=0.4)
    for region in (ball(2), ellipse(2, 1), egg(0.3)):
        row = time_delays(traj, region, 5.0)
        assert row.tau == pytest.approx(0.0, abs=1e-10)
        assert row.tau_in == pytest.approx(0.0, abs=1e-10)
        assert row.T_r == pytest.approx(row.T0_r, abs=1e-10)


# ---------------------------------------------------------------------------
# oracles with a potential


@pytest.mark.parametrize("V0", [0.3, -0.4])
def test_radial_head_on_delay(V0):
    E, rho = 1.0, 1.0
    traj = scattering_trajectory(BumpPotential(V0, rho), E, b=0.0)
    expected = _radial_tau(V0, rho, E)
    for r in (2.0, 10.0, 40.0):
        row = time_delays(traj, ball(2), r)
        assert row.tau == pytest.approx(expected, abs=1e-8)
        assert row.tau_in == pytest.approx(expected, abs=1e-8)


def test_head_on_backscatter_1d():
    # V0 > E: reflection at the turning point x_t with V(x_t) = E
    V0, rho, E = 2.0, 1.0, 1.0
    pot = BumpPotential(V0, rho)
    traj = scattering_trajectory(pot, E, b=0.0, dimension=1)
    assert traj.p_plus[0] == pytest.approx(-traj.p_minus[0], rel=1e-10)
    # V0*exp(1 - 1/(1 - s^2)) = E at s_t
    s_t = math.sqrt(1.0 - 1.0 / (1.0 - math.log(E / V0)))
    p0 = math.sqrt(2 * E)

    def f(x):
        v = float(pot.evaluate(np.array([[x]]))[0])
        return 1.0 / math.sqrt(max(2 * (E - v), 1e-300))

    inner, _ = quad(f, -rho, -s_t * rho, limit=400, epsabs=1e-12)
    for r in (3.0, 12.0):
        row = time_delays(traj, ball(1), r)
        T = 2 * ((r - rho) / p0 + inner)
        assert row.T_r == pytest.approx(T, abs=1e-6)
        assert row.tau == pytest.approx(T - 2 * r / p0, abs=1e-6)


def test_row_identity():
    traj = scattering_trajectory(BumpPotential(0.5, 1.0, [0.5, 0.3]), 1.0, b=0.2,
                                 direction=1.0)
    sd = scattering_data(traj, egg(0.3), 20.0)
    row = delay_row(sd, traj.energy, traj.impact_parameter)
    assert row.tau == pytest.approx(row.tau1 + row.tau2, abs=1e-10)


def test_ball_tau_equals_tau_in_for_centred_bump():
    traj = scattering_trajectory(BumpPotential(0.4, 1.0), 1.0, b=0.5)
    curve = time_delay_curve(traj, ball(2), [4.0, 8.0, 16.0])
    assert np.allclose(curve.column("tau"), curve.column("tau_in"), atol=1e-8)
    assert np.ptp(curve.column("tau")) < 1e-8


# ---------------------------------------------------------------------------
# reversal and invariants


def test_time_reversal_involution():
    traj = scattering_trajectory(BumpPotential(0.5, 1.0, [0.5, 0.3]), 1.0, b=0.6,
                                 direction=1.0)
    rev = full_time_reversal(traj)
    assert full_time_reversal(rev) is traj
    t = np.linspace(-3, 3, 7)
    assert np.allclose(rev.position(t), traj.position(-t), atol=1e-12)
    assert np.allclose(rev.momentum(t), -traj.momentum(-t), atol=1e-12)


@settings(max_examples=8, deadline=None)
@given(st.floats(-0.8, 0.8), st.floats(0.0, 2 * math.pi), st.floats(0.5, 2.0))
def test_reversed_delay_matches(b, direction, E):
    traj = scattering_trajectory(BumpPotential(0.5, 1.0, [0.5, 0.3]), E, b=b,
                                 direction=direction)
    region = egg(0.3)
    a = time_delays(traj, region, 10.0)
    r = time_delays(full_time_reversal(traj), region, 10.0)
    assert r.tau == pytest.approx(a.tau, abs=1e-8)


@settings(max_examples=8, deadline=None)
@given(st.floats(-1.5, 1.5), st.floats(0.0, 2 * math.pi))
def test_energy_conserved(b, direction):
    traj = scattering_trajectory(BumpPotential(-0.6, 1.0), 1.0, b=b, direction=direction)
    assert traj.energy_drift() <= 1e-8 * traj.energy
    assert np.linalg.norm(traj.p_plus) == pytest.approx(np.linalg.norm(traj.p_minus),
                                                        rel=1e-8)


def test_verlet_agrees_with_dop853():
    pot = BumpPotential(0.5, 1.0, [0.5, 0.3])
    x0, p0 = [-4.0, 0.2], [math.sqrt(2.0), 0.0]
    a = integrate_trajectory(pot, x0, p0)
    b = integrate_trajectory(pot, x0, p0, IntegratorOptions(method="verlet", verlet_dt=5e-4,
                                                             energy_tol=1e-5))
    ra = time_delays(a, ball(2), 10.0)
    rb = time_delays(b, ball(2), 10.0)
    assert rb.tau == pytest.approx(ra.tau, abs=1e-5)


# ---------------------------------------------------------------------------
# error paths


def test_non_convex_needs_first_last():
    reg = IntervalUnion([(-1.0, 1.0), (2.0, 3.0)])
    traj = scattering_trajectory(ZeroPotential(), 0.5, dimension=1)
    with pytest.raises(ValidationError):
        crossing_times(traj, reg, 5.0)
    tm, tp = crossing_times(traj, reg, 5.0, mode="first-last")
    assert tm + tp == pytest.approx(20.0, abs=1e-8)


def test_missed_region_raises():
    line = FreeLine([-5.0, 3.0], [1.0, 0.0])
    with pytest.raises(CrossingError):
        crossing_times(line, ball(2), 1.0)


def test_small_radius_rejected():
    traj = scattering_trajectory(BumpPotential(0.5, 1.0), 1.0)
    with pytest.raises(ValidationError):
        time_delays(traj, ball(2), 1.0)


def test_non_positive_energy_rejected():
    with pytest.raises(ValidationError):
        scattering_trajectory(BumpPotential(0.5, 1.0), 0.0)


def test_energy_drift_detected():
    pot = BumpPotential(0.5, 1.0)
    with pytest.raises(IntegratorError):
        integrate_trajectory(pot, [-3.0, 0.1], [1.0, 0.0],
                             IntegratorOptions(method="verlet", verlet_dt=0.2,
                                               energy_tol=1e-12))


def test_r_grid_block():
    g = r_grid_from_dict({"r_min": 2, "r_max": 32, "points": 5})
    assert np.allclose(g, [2, 4, 8, 16, 32])
    with pytest.raises(ValidationError):
        r_grid_from_dict({"r_min": 2})
    with pytest.raises(ValidationError):
        r_grid_from_dict({"r_min": 2, "r_max": 1})


def test_interval_region_1d_delay():
    # asymmetric 1-D interval, free motion: zero delay
    traj = scattering_trajectory(ZeroPotential(), 1.0, dimension=1)
    row = time_delays(traj, interval(-1.0, 2.0), 4.0)
    assert row.T_r == pytest.approx(12.0 / math.sqrt(2.0), abs=1e-10)
    assert row.tau == pytest.approx(0.0, abs=1e-10)
