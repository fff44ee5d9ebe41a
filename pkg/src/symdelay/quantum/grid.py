"""Uniform 1-D grid, wave states and spectral multipliers.

Fourier convention (hbar = m = 1):

    x_n = -L/2 + n*dx,   k_m = 2*pi*fftfreq(N, dx),
    psi_hat(k_m) = dx/sqrt(2 pi) * exp(-i k_m x_0) * fft(psi)_m,

so that ``sum |psi|^2 dx == sum |psi_hat|^2 dk`` and ``psi_hat`` samples the
unitary continuous transform ``(2 pi)^(-1/2) int exp(-ikx) psi(x) dx``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import fft as sfft

from ..errors import ValidationError


class Grid:
    """Periodic box ``[-L/2, L/2)`` with ``N`` points (``N`` a power of two)."""

    def __init__(self, N: int = 16384, L: float = 400.0):
        N = int(N)
        if N < 16 or N & (N - 1):
            raise ValidationError("grid size N must be a power of two >= 16")
        if not L > 0:
            raise ValidationError("box length L must be positive")
        self.N = N
        self.L = float(L)
        self.dx = self.L / N
        self.x = -0.5 * self.L + self.dx * np.arange(N)
        self.k = 2.0 * np.pi * np.fft.fftfreq(N, self.dx)
        self.dk = 2.0 * np.pi / self.L
        self.k_nyquist = np.pi / self.dx
        self._phase = self.dx / math.sqrt(2.0 * math.pi) * np.exp(-1j * self.k * self.x[0])

    def __repr__(self) -> str:
        return f"Grid(N={self.N}, L={self.L:g})"

    def to_momentum(self, psi: np.ndarray) -> np.ndarray:
        return self._phase * sfft.fft(psi)

    def to_position(self, phi: np.ndarray) -> np.ndarray:
        return sfft.ifft(phi / self._phase)

    def apply_multiplier(self, psi: np.ndarray, mult: np.ndarray) -> np.ndarray:
        """``m(P) psi`` for a multiplier sampled on ``self.k``."""
        return sfft.ifft(mult * sfft.fft(psi))

    def inner(self, a: np.ndarray, b: np.ndarray) -> complex:
        """``<a, b>`` (conjugate-linear in ``a``)."""
        return complex(np.vdot(a, b)) * self.dx

    def norm(self, psi: np.ndarray) -> float:
        return math.sqrt(float(np.sum(np.abs(psi) ** 2)) * self.dx)

    def momentum_norm(self, psi: np.ndarray) -> float:
        return math.sqrt(float(np.sum(np.abs(self.to_momentum(psi)) ** 2)) * self.dk)

    def interval_weights(self, lo: float, hi: float) -> np.ndarray:
        """Fraction of each cell ``[x_n - dx/2, x_n + dx/2]`` inside ``(lo, hi)``."""
        a = self.x - 0.5 * self.dx
        b = self.x + 0.5 * self.dx
        return np.clip((np.minimum(b, hi) - np.maximum(a, lo)) / self.dx, 0.0, 1.0)

    def region_weights(self, intervals: Sequence[Tuple[float, float]], r: float,
                       shift: float = 0.0) -> np.ndarray:
        """Weights of ``r * union(intervals) + shift``; must lie inside the box."""
        w = np.zeros(self.N)
        for lo, hi in intervals:
            a, b = r * lo + shift, r * hi + shift
            if a <= self.x[0] or b >= self.x[-1]:
                raise ValidationError("dilated region does not fit inside the box")
            w += self.interval_weights(a, b)
        return np.minimum(w, 1.0)

    def edge_mask(self, fraction: float = 0.025) -> np.ndarray:
        return np.abs(self.x) > 0.5 * self.L * (1.0 - 2.0 * fraction)

    def to_dict(self) -> dict:
        return {"N": self.N, "L": self.L}


def smoothstep(u: np.ndarray) -> np.ndarray:
    """C-infinity step: 0 for u <= 0, 1 for u >= 1."""
    u = np.asarray(u, dtype=float)
    f = np.where(u > 0, np.exp(-1.0 / np.where(u > 0, u, 1.0)), 0.0)
    v = 1.0 - u
    g = np.where(v > 0, np.exp(-1.0 / np.where(v > 0, v, 1.0)), 0.0)
    return f / (f + g)


def energy_cutoff(lam: np.ndarray, window: Tuple[float, float],
                  width_fraction: float = 0.2) -> np.ndarray:
    """Smooth plateau equal to 1 inside ``window`` away from its edges, 0 outside."""
    lo, hi = window
    w = width_fraction * (hi - lo)
    return smoothstep((lam - lo) / w) * smoothstep((hi - lam) / w)


@dataclass(frozen=True)
class WaveState:
    grid: Grid
    psi: np.ndarray
    window: Optional[Tuple[float, float]] = None

    def with_psi(self, psi: np.ndarray) -> "WaveState":
        return replace(self, psi=psi)

    def norm(self) -> float:
        return self.grid.norm(self.psi)

    def momentum(self) -> np.ndarray:
        return self.grid.to_momentum(self.psi)

    def conj(self) -> "WaveState":
        return self.with_psi(np.conj(self.psi))

    def kinetic_distribution(self) -> np.ndarray:
        """``|psi_hat(k)|^2`` on the grid momenta."""
        return np.abs(self.momentum()) ** 2

    def mass_outside_window(self, window=None) -> float:
        window = window or self.window
        lam = 0.5 * self.grid.k ** 2
        out = (lam < window[0]) | (lam > window[1])
        dist = self.kinetic_distribution()
        return float(np.sum(dist[out]) / np.sum(dist))


def check_window(grid: Grid, window) -> Tuple[float, float]:
    try:
        lo, hi = float(window[0]), float(window[1])
    except (TypeError, IndexError, ValueError) as exc:
        raise ValidationError(f"malformed energy window: {exc}") from exc
    if not 0.0 < lo < hi:
        raise ValidationError("energy window must be a compact interval in (0, inf)")
    if hi >= 0.5 * grid.k_nyquist ** 2:
        raise ValidationError("energy window exceeds the grid Nyquist energy")
    return lo, hi


def prepare_state(grid: Grid, x0: float = 0.0, sigma: float = 8.0, k0: float = 5.0,
                  window=(10.0, 15.0), width_fraction: float = 0.2,
                  outside_tol: float = 1e-10) -> WaveState:
    """Gaussian with position spread ``sigma``, filtered by a smooth cutoff in J."""
    lo, hi = check_window(grid, window)
    if not sigma > 0:
        raise ValidationError("sigma must be positive")
    g = np.exp(-((grid.x - x0) ** 2) / (4.0 * sigma ** 2) + 1j * k0 * grid.x)
    lam = 0.5 * grid.k ** 2
    cut = energy_cutoff(lam, (lo, hi), width_fraction)
    raw = grid.norm(g)
    psi = grid.apply_multiplier(g, cut)
    nrm = grid.norm(psi)
    if nrm < 1e-6 * raw:
        raise ValidationError("energy window carries no spectral mass of the Gaussian")
    psi = psi / nrm
    state = WaveState(grid, psi, (lo, hi))
    leak = state.mass_outside_window()
    if leak > outside_tol:
        raise ValidationError(f"spectral mass {leak:.2e} outside J above {outside_tol:g}")
    return state


def inverse_momentum(grid: Grid, k_excluded: float) -> np.ndarray:
    """Multiplier ``1/k`` set to zero on ``|k| < k_excluded``."""
    k = grid.k
    out = np.zeros_like(k)
    keep = np.abs(k) >= k_excluded
    out[keep] = 1.0 / k[keep]
    return out


def excluded_mass(grid: Grid, psi: np.ndarray, k_excluded: float) -> float:
    dist = np.abs(grid.to_momentum(psi)) ** 2
    return float(np.sum(dist[np.abs(grid.k) < k_excluded]) / np.sum(dist))


def default_excluded_k(window) -> float:
    """Half the smallest momentum in J."""
    return 0.5 * math.sqrt(2.0 * window[0])


def gaussian_state(grid: Grid, x0: float = 0.0, sigma: float = 1.0,
                   k0: float = 0.0) -> WaveState:
    """Normalised Gaussian ``exp(-(x-x0)^2/(4 sigma^2) + i k0 x)`` without energy filter."""
    if not sigma > 0:
        raise ValidationError("sigma must be positive")
    g = np.exp(-((grid.x - x0) ** 2) / (4.0 * sigma ** 2) + 1j * k0 * grid.x)
    return WaveState(grid, g / grid.norm(g), None)
