import math

import numpy as np
import pytest
from hypothesis import given, settings as hsettings, strategies as st
from scipy.integrate import quad, trapezoid

from symdelay.errors import AssumptionIError, ValidationError, WraparoundError
from symdelay.geometry import ball, interval
from symdelay.potentials import BumpPotential, ZeroPotential
from symdelay.quantum.delays import (
    QuantumSettings, a0_commutator_expectation, a0_expectation, conjugation_identity_check,
    full_time_reversal_q, g_commutator_expectation, gaussian_bump,
    inverse_momentum_expectation, lnp_commutator_expectation, proposition_asympt_check,
    quantum_time_delays, sojourn_time, tau_free,
)
from symdelay.quantum.grid import (
    Grid, check_window, energy_cutoff, gaussian_state, prepare_state, smoothstep,
)
from symdelay.quantum.propagation import (
    SplitStep, free_evolve, free_evolve_psi, full_evolve, scattering_operator,
)
from symdelay.quantum.stationary import (
    apply_stationary_s, smatrix, spectral_transform, stationary_ew_delay,
)

# plain Gaussians carry no energy window, so the excluded momentum is explicit
SETTINGS = QuantumSettings(k_excluded=2.0)
K0 = 5.0
ENERGIES = np.linspace(6.0, 22.0, 1601)


def _small_state():
    grid = Grid(2048, 200.0)
    return grid, gaussian_state(grid, 0.0, 3.0, K0)


@pytest.fixture(scope="module")
def small():
    return _small_state()


@pytest.fixture(scope="module")
def bump():
    return BumpPotential(5.0, 2.0)


# ---------------------------------------------------------------------------
# grid and Fourier convention


def test_fourier_convention_matches_analytic_gaussian():
    grid = Grid(4096, 100.0)
    x0, s, k0 = 1.3, 1.7, 2.0
    phi = gaussian_state(grid, x0, s, k0)
    k = grid.k
    exact = ((2 * s ** 2 / math.pi) ** 0.25 * np.exp(-s ** 2 * (k - k0) ** 2)
             * np.exp(-1j * (k - k0) * x0))
    assert np.max(np.abs(phi.momentum() - exact)) < 1e-12


def test_parseval_and_round_trip(small):
    grid, phi = small
    assert grid.momentum_norm(phi.psi) == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(grid.to_position(grid.to_momentum(phi.psi)), phi.psi, atol=1e-14)


def test_filtered_state_respects_window():
    grid = Grid(2048, 200.0)
    phi = prepare_state(grid, 0.0, 3.0, 4.975, (10.0, 15.0), width_fraction=0.05)
    assert phi.mass_outside_window() < 1e-12
    assert phi.norm() == pytest.approx(1.0, abs=1e-13)


def test_smoothstep_and_cutoff():
    u = np.array([-1.0, 0.0, 0.5, 1.0, 2.0])
    assert np.allclose(smoothstep(u), [0, 0, 0.5, 1, 1])
    c = energy_cutoff(np.array([9.0, 12.5, 16.0]), (10.0, 15.0))
    assert np.allclose(c, [0, 1, 0])


def test_window_and_grid_validation():
    with pytest.raises(ValidationError):
        Grid(1000, 10.0)
    grid = Grid(256, 10.0)
    with pytest.raises(ValidationError):
        check_window(grid, (0.0, 1.0))
    with pytest.raises(ValidationError):
        check_window(grid, (10.0, 1e4))
    with pytest.raises(ValidationError):
        prepare_state(Grid(2048, 200.0), 0.0, 3.0, 0.0, (10.0, 15.0))


# ---------------------------------------------------------------------------
# propagation


def test_free_spreading_matches_formula():
    grid = Grid(4096, 200.0)
    s = 2.0
    phi = gaussian_state(grid, 0.0, s, 1.0)
    t = 7.0
    out = free_evolve(phi, t).psi
    prob = np.abs(out) ** 2 * grid.dx
    mean = float(np.sum(grid.x * prob))
    var = float(np.sum((grid.x - mean) ** 2 * prob))
    assert mean == pytest.approx(t * 1.0, abs=1e-10)
    assert var == pytest.approx(s ** 2 * (1 + t ** 2 / (4 * s ** 4)), rel=1e-10)


def test_split_step_free_equals_exact(small):
    grid, phi = small
    prop = SplitStep(grid, ZeroPotential(), 0.002)
    a = full_evolve(phi, 1.0, prop).psi
    b = free_evolve_psi(grid, phi.psi, 1.0)
    assert grid.norm(a - b) < 1e-12


def test_split_step_unitary_and_reversible(small, bump):
    grid, phi = small
    prop = SplitStep(grid, bump, 0.002)
    fwd = full_evolve(phi, 0.5, prop)
    assert fwd.norm() == pytest.approx(1.0, abs=1e-12)
    back = full_evolve(fwd, -0.5, prop)
    assert grid.norm(back.psi - phi.psi) < 1e-11
    with pytest.raises(ValidationError):
        full_evolve(phi, 0.0011, prop)


def test_wraparound_detected(small):
    _, phi = small
    with pytest.raises(WraparoundError):
        free_evolve(phi, 19.0)


def test_cook_scattering_operator_matches_stationary(small, bump):
    grid, phi = small
    prop = SplitStep(grid, bump, 0.002)
    cook = scattering_operator(phi, prop, cook_tol=1e-8)
    assert cook.residual <= 1e-8
    stat = apply_stationary_s(phi, bump)
    assert grid.norm(cook.state.psi - stat.psi) < 1e-4
    assert cook.state.norm() == pytest.approx(1.0, abs=1e-10)


# ---------------------------------------------------------------------------
# stationary scattering


def test_smatrix_unitary_and_reciprocal():
    lam = np.linspace(0.3, 20.0, 40)
    S = smatrix(BumpPotential(5.0, 2.0, [0.4]), lam)
    m = S.matrices
    assert np.max(S.unitarity_defect()) < 1e-9
    assert np.allclose(np.abs(m[:, 0, 0]) ** 2 + np.abs(m[:, 1, 0]) ** 2, 1.0, atol=1e-9)
    assert np.allclose(m[:, 0, 0], m[:, 1, 1], atol=1e-9)
    assert np.allclose(np.abs(m[:, 1, 0]), np.abs(m[:, 0, 1]), atol=1e-9)


def test_even_potential_symmetric_reflection():
    S = smatrix(BumpPotential(-3.0, 1.5), np.linspace(0.5, 10.0, 12))
    assert np.allclose(S.matrices[:, 1, 0], S.matrices[:, 0, 1], atol=1e-9)


def test_born_approximation():
    # weak bump: t - 1 = (1/ik) int V, r_L = (1/ik) int V e^{2ikx}
    V0, rho = 1e-4, 1.0
    pot = BumpPotential(V0, rho, [0.3])
    k = 1.2
    S = smatrix(pot, [0.5 * k * k]).matrices[0]
    v = lambda x: float(pot.evaluate(np.array([[x]]))[0])
    iv, _ = quad(v, -0.7, 1.3, epsabs=1e-16)
    re, _ = quad(lambda x: v(x) * math.cos(2 * k * x), -0.7, 1.3, epsabs=1e-16)
    im, _ = quad(lambda x: v(x) * math.sin(2 * k * x), -0.7, 1.3, epsabs=1e-16)
    assert S[0, 0] - 1 == pytest.approx(iv / (1j * k), rel=1e-3)
    assert S[1, 0] == pytest.approx((re + 1j * im) / (1j * k), rel=1e-3)


def test_zero_potential_trivial():
    S = smatrix(ZeroPotential(), [1.0, 2.0])
    assert np.allclose(S.matrices, np.eye(2))
    grid, phi = _small_state()
    assert grid.norm(apply_stationary_s(phi, ZeroPotential()).psi - phi.psi) < 1e-13
    assert stationary_ew_delay(ZeroPotential(), phi, ENERGIES).value == pytest.approx(
        0.0, abs=1e-14)


def test_spectral_transform_normalised(small):
    _, phi = small
    dens = np.sum(np.abs(spectral_transform(phi, ENERGIES)) ** 2, axis=1)
    assert trapezoid(dens, ENERGIES) == pytest.approx(1.0, abs=1e-6)


def test_ew_equals_minus_a0_commutator_with_stationary_s(small, bump):
    _, phi = small
    sphi = apply_stationary_s(phi, bump)
    ew = stationary_ew_delay(bump, phi, ENERGIES).value
    a0 = a0_commutator_expectation(phi, sphi, SETTINGS)
    assert ew == pytest.approx(-a0, rel=1e-4)


# ---------------------------------------------------------------------------
# spectral expectations


@hsettings(max_examples=15, deadline=None)
@given(st.floats(-3.0, 3.0))
def test_a0_grows_linearly_under_free_flow(t):
    _, phi = _small_state()
    k = SETTINGS.excluded_k(phi)
    moved = free_evolve(phi, t)
    assert a0_expectation(moved, k) == pytest.approx(a0_expectation(phi, k) + t, abs=1e-8)


def test_lnp_commutator_equals_a0(small):
    _, phi = small
    k = SETTINGS.excluded_k(phi)
    shifted = phi.with_psi(np.roll(phi.psi, 37))
    assert lnp_commutator_expectation(shifted, k) == pytest.approx(
        a0_expectation(shifted, k), abs=1e-9)


def test_g_commutator_for_ball_is_twice_a0(small):
    # G(k) = -ln|k| for the unit interval, so i[Q^2, G] = 2 A0
    grid, phi = small
    shifted = phi.with_psi(np.roll(phi.psi, 50))
    k = SETTINGS.excluded_k(phi)
    assert g_commutator_expectation(shifted, ball(1), SETTINGS) == pytest.approx(
        2 * a0_expectation(shifted, k), abs=1e-9)


def test_inverse_momentum_of_reflected_state(small):
    grid, phi = small
    k = SETTINGS.excluded_k(phi)
    ip = inverse_momentum_expectation(phi, k)
    assert ip == pytest.approx(1 / K0, rel=1e-2)
    assert inverse_momentum_expectation(phi.conj(), k) == pytest.approx(-ip, abs=1e-14)


def test_excluded_window_guard():
    grid = Grid(2048, 200.0)
    slow = gaussian_state(grid, 0.0, 3.0, 0.3)
    with pytest.raises(ValidationError):
        a0_commutator_expectation(slow, slow, QuantumSettings(k_excluded=1.0))
    with pytest.raises(ValidationError):
        a0_commutator_expectation(slow, slow, QuantumSettings())


# ---------------------------------------------------------------------------
# sojourn times


def test_free_sojourn_of_symmetric_interval(small):
    # for V = 0 with S = 1 every delay vanishes
    grid, phi = small
    rep = quantum_time_delays(phi, ball(1), [4.0, 8.0], ZeroPotential(), SETTINGS, sphi=phi)
    assert np.allclose(rep.column("tau"), 0.0, atol=1e-10)
    assert np.allclose(rep.column("tau_free"), 0.0, atol=1e-10)
    assert tau_free(phi, phi, ball(1), 8.0, SETTINGS) == pytest.approx(0.0, abs=1e-12)


def test_free_sojourn_time_ballistic(small):
    # a fast narrow-momentum packet spends about 2r/k inside (-r, r)
    _, phi = small
    val, tail = sojourn_time(phi, ball(1), 10.0, None, SETTINGS)
    assert tail < 1e-8
    assert val == pytest.approx(20.0 / K0, rel=2e-3)


def test_proposition_small_grid(small):
    grid, phi = small
    moved = phi.with_psi(np.roll(phi.psi, int(3.0 / grid.dx)))
    rec = proposition_asympt_check(moved, ball(1), [4.0, 8.0, 16.0], SETTINGS)
    assert rec.relative_error < 1e-4
    with pytest.raises(AssumptionIError):
        proposition_asympt_check(moved, interval(-1.0, 2.0), [4.0], SETTINGS)
    rec = proposition_asympt_check(moved, interval(-1.0, 2.0), [4.0, 8.0], SETTINGS,
                                   allow_violation=True)
    assert not rec.assumption_I
    assert rec.predicted_slope == pytest.approx(1 / K0, rel=1e-2)


def test_full_time_reversal_is_conjugation(small):
    _, phi = small
    f = full_time_reversal_q(phi)
    assert np.allclose(f.psi, np.conj(phi.psi))


def test_small_radius_rejected(small, bump):
    _, phi = small
    with pytest.raises(ValidationError):
        quantum_time_delays(phi, ball(1), [1.0, 4.0], bump, SETTINGS, sphi=phi)


# ---------------------------------------------------------------------------
# conjugation identity


@pytest.mark.parametrize("t", [0.3, -0.3, 0.7, -0.7, 1.5])
def test_conjugation_identity(t):
    grid = Grid(4096, 80.0)
    phi = gaussian_state(grid, 0.5, 1.0, 2.0)
    assert conjugation_identity_check(phi, gaussian_bump(0.3, 1.5), t) < 1e-10


def test_conjugation_rejects_unresolved_chirp():
    grid = Grid(256, 80.0)
    phi = gaussian_state(grid, 0.5, 1.0, 2.0)
    with pytest.raises(ValidationError):
        conjugation_identity_check(phi, gaussian_bump(), 0.05)
