"""Stationary scattering matrix of a 1-D potential and the Eisenbud-Wigner delay.

For energy ``lam = k^2/2`` the incoming directions are ``omega = +1`` (wave
arriving from the left) and ``omega = -1`` (from the right).  With plane waves
referred to the origin,

    left incidence:  e^{ikx} + r_L e^{-ikx}  (x << 0),   t_L e^{ikx}  (x >> 0)
    right incidence: e^{-ikx} + r_R e^{ikx}  (x >> 0),   t_R e^{-ikx} (x << 0)

and ``S = [[t_L, r_R], [r_L, t_R]]`` maps incoming to outgoing amplitudes in
the basis ``(+1, -1)``.  Equivalently, in momentum space
``(S phi)^(k) = t_L phi^(k) + r_R phi^(-k)`` and
``(S phi)^(-k) = r_L phi^(k) + t_R phi^(-k)`` for ``k > 0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp, trapezoid

from ..errors import UnitarityError, ValidationError
from ..potentials import Potential
from .grid import Grid, WaveState


@dataclass(frozen=True)
class SMatrix1D:
    energies: np.ndarray
    matrices: np.ndarray  # shape (n, 2, 2)

    def unitarity_defect(self) -> np.ndarray:
        eye = np.eye(2)
        prod = np.conj(np.swapaxes(self.matrices, 1, 2)) @ self.matrices
        return np.linalg.norm(prod - eye, ord=2, axis=(1, 2))

    @property
    def transmission(self) -> np.ndarray:
        return self.matrices[:, 0, 0]

    @property
    def reflection(self) -> np.ndarray:
        return self.matrices[:, 1, 0]

    def rows(self):
        """CSV rows: lambda and Re/Im of t_L, r_R, r_L, t_R."""
        m = self.matrices
        out = []
        for lam, s in zip(self.energies, m):
            out.append((float(lam),) + tuple(
                float(f(z)) for z in (s[0, 0], s[0, 1], s[1, 0], s[1, 1])
                for f in (np.real, np.imag)))
        return out


def _support_interval(potential: Potential) -> float:
    R = potential.support_radius
    return R if R > 0 else 1.0


def transfer_matrices(potential: Potential, energies: np.ndarray,
                      rtol: float = 1e-12, atol: float = 1e-14) -> np.ndarray:
    """Fundamental matrices mapping ``(psi, psi')`` at ``x = X`` to ``x = -X``.

    All energies are integrated together in one vectorised system.
    """
    lam = np.asarray(energies, dtype=float)
    if np.any(lam <= 0):
        raise ValidationError("energy grid must be strictly positive")
    X = _support_interval(potential)
    n = lam.size

    def rhs(x, y):
        v = float(potential.evaluate(np.array([[x]]))[0])
        u = y.reshape(4, n)
        # columns: (u, u') and (v, v') fundamental solutions
        du = np.empty_like(u)
        du[0] = u[1]
        du[1] = 2.0 * (v - lam) * u[0]
        du[2] = u[3]
        du[3] = 2.0 * (v - lam) * u[2]
        return du.ravel()

    y0 = np.concatenate([np.ones(n), np.zeros(n), np.zeros(n), np.ones(n)])
    sol = solve_ivp(rhs, (X, -X), y0, method="DOP853", rtol=rtol, atol=atol)
    if not sol.success:
        raise ValidationError(f"stationary integration failed: {sol.message}")
    u = sol.y[:, -1].reshape(4, n)
    M = np.empty((n, 2, 2))
    M[:, 0, 0], M[:, 1, 0] = u[0], u[1]
    M[:, 0, 1], M[:, 1, 1] = u[2], u[3]
    return M


def smatrix(potential: Potential, energies, unitarity_tol: Optional[float] = 1e-8,
            rtol: float = 1e-12) -> SMatrix1D:
    lam = np.atleast_1d(np.asarray(energies, dtype=float))
    if potential.is_zero():
        mats = np.broadcast_to(np.eye(2, dtype=complex), (lam.size, 2, 2)).copy()
        return SMatrix1D(lam, mats)
    X = _support_interval(potential)
    k = np.sqrt(2.0 * lam)
    M = transfer_matrices(potential, lam, rtol=rtol)
    mats = np.empty((lam.size, 2, 2), dtype=complex)
    # left incidence: psi = e^{ikx} at x = X, propagated to -X
    a = np.exp(1j * k * X)
    st_right = np.stack([a, 1j * k * a], axis=1)
    st_left = np.einsum("nij,nj->ni", M, st_right)
    p, dp = st_left[:, 0], st_left[:, 1]
    xl = -X
    A = (1j * k * p + dp) / (2j * k) * np.exp(-1j * k * xl)
    B = (1j * k * p - dp) / (2j * k) * np.exp(1j * k * xl)
    t_L, r_L = 1.0 / A, B / A
    # right incidence: psi = e^{-ikx} at x = -X, propagated to +X with M^{-1}
    b = np.exp(1j * k * X)
    st_l = np.stack([b, -1j * k * b], axis=1)
    Minv = np.empty_like(M)
    Minv[:, 0, 0], Minv[:, 1, 1] = M[:, 1, 1], M[:, 0, 0]
    Minv[:, 0, 1], Minv[:, 1, 0] = -M[:, 0, 1], -M[:, 1, 0]
    Minv /= (M[:, 0, 0] * M[:, 1, 1] - M[:, 0, 1] * M[:, 1, 0])[:, None, None]
    st_r = np.einsum("nij,nj->ni", Minv, st_l)
    q, dq = st_r[:, 0], st_r[:, 1]
    xr = X
    C = (1j * k * q - dq) / (2j * k) * np.exp(1j * k * xr)   # coefficient of e^{-ikx}
    D = (1j * k * q + dq) / (2j * k) * np.exp(-1j * k * xr)  # coefficient of e^{ikx}
    t_R, r_R = 1.0 / C, D / C
    mats[:, 0, 0], mats[:, 0, 1] = t_L, r_R
    mats[:, 1, 0], mats[:, 1, 1] = r_L, t_R
    out = SMatrix1D(lam, mats)
    if unitarity_tol is not None:
        worst = float(np.max(out.unitarity_defect()))
        if worst > unitarity_tol:
            raise UnitarityError(f"S(lambda) unitarity defect {worst:.2e} > {unitarity_tol:g}")
    return out


def smatrix_derivative(potential: Potential, energies, h: float = 1e-3,
                       unitarity_tol: Optional[float] = 1e-8):
    """``S(lambda)`` and central-difference ``dS/dlambda`` on the grid."""
    lam = np.asarray(energies, dtype=float)
    if np.any(lam - h <= 0):
        raise ValidationError("energy grid must stay positive under differencing")
    stacked = np.concatenate([lam, lam - h, lam + h])
    S = smatrix(potential, stacked, unitarity_tol)
    n = lam.size
    mid = S.matrices[:n]
    dS = (S.matrices[2 * n:] - S.matrices[n:2 * n]) / (2.0 * h)
    return SMatrix1D(lam, mid), dS


def spectral_transform(state: WaveState, energies, chunk: int = 64) -> np.ndarray:
    """``phi(lambda, omega) = (2 lambda)^(-1/4) phi^(omega sqrt(2 lambda))``.

    Returns an array of shape ``(n, 2)`` with columns ``omega = +1, -1``; the
    Fourier transform is evaluated directly at the off-grid momenta.
    """
    lam = np.asarray(energies, dtype=float)
    if np.any(lam <= 0):
        raise ValidationError("energy grid must be strictly positive")
    grid = state.grid
    psi = state.psi
    keep = np.abs(psi) > 1e-17 * np.max(np.abs(psi))
    x = grid.x[keep]
    w = psi[keep] * grid.dx / math.sqrt(2.0 * math.pi)
    k = np.sqrt(2.0 * lam)
    ks = np.concatenate([k, -k])
    vals = np.empty(ks.size, dtype=complex)
    for i in range(0, ks.size, chunk):
        kk = ks[i:i + chunk]
        vals[i:i + chunk] = np.exp(-1j * np.outer(kk, x)) @ w
    n = lam.size
    pref = (2.0 * lam) ** -0.25
    return np.stack([pref * vals[:n], pref * vals[n:]], axis=1)


def energy_grid(window, points: int = 801) -> np.ndarray:
    lo, hi = window
    if not 0 < lo < hi:
        raise ValidationError("energy window must be a compact interval in (0, inf)")
    return np.linspace(lo, hi, points)


@dataclass(frozen=True)
class StationaryDelay:
    value: float
    imaginary: float
    norm_check: float
    energies: np.ndarray
    integrand: np.ndarray
    smatrix: SMatrix1D
    max_unitarity_defect: float

    def rows(self):
        return [row + (float(g),) for row, g in zip(self.smatrix.rows(), self.integrand)]


def stationary_ew_delay(potential: Potential, state: WaveState, energies=None,
                        h: float = 1e-3, unitarity_tol: float = 1e-8) -> StationaryDelay:
    """``-i int dlambda <phi(lambda), S* dS/dlambda phi(lambda)>`` by the trapezoid rule."""
    if energies is None:
        if state.window is None:
            raise ValidationError("state has no energy window; pass an energy grid")
        energies = energy_grid(state.window)
    lam = np.asarray(energies, dtype=float)
    S, dS = smatrix_derivative(potential, lam, h, unitarity_tol)
    phi = spectral_transform(state, lam)
    Sh = np.conj(np.swapaxes(S.matrices, 1, 2))
    kernel = Sh @ dS
    vec = np.einsum("nij,nj->ni", kernel, phi)
    integrand = -1j * np.sum(np.conj(phi) * vec, axis=1)
    value = trapezoid(integrand, lam)
    density = np.sum(np.abs(phi) ** 2, axis=1)
    norm = trapezoid(density, lam)
    return StationaryDelay(float(value.real), float(value.imag), float(norm), lam,
                           integrand.real, S, float(np.max(S.unitarity_defect())))


def apply_stationary_s(state: WaveState, potential: Potential,
                       unitarity_tol: Optional[float] = 1e-8,
                       weight_cut: float = 1e-28) -> WaveState:
    """``S`` applied through its momentum-space action on the grid modes.

    Modes whose weight is below ``weight_cut`` times the peak are left unchanged.
    """
    grid = state.grid
    phat = grid.to_momentum(state.psi)
    k = grid.k
    N = grid.N
    # only modes carrying spectral weight (at +k or -k) are transformed
    w = np.abs(phat) ** 2
    w = np.maximum(w, w[(N - np.arange(N)) % N])
    pos = (k > 0) & (w > weight_cut * w.max())
    idx_pos = np.flatnonzero(pos)
    idx_neg = (N - idx_pos) % N
    S = smatrix(potential, 0.5 * k[idx_pos] ** 2, unitarity_tol).matrices
    out = phat.copy()
    a, b = phat[idx_pos], phat[idx_neg]
    out[idx_pos] = S[:, 0, 0] * a + S[:, 0, 1] * b
    out[idx_neg] = S[:, 1, 0] * a + S[:, 1, 1] * b
    return state.with_psi(grid.to_position(out))
