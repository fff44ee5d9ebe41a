"""Free and full time evolution on the grid, wave and scattering operators."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import fft as sfft

from ..errors import NotConvergedError, ValidationError, WraparoundError
from ..potentials import Potential
from .grid import Grid, WaveState

EDGE_FRACTION = 0.025
WRAP_TOL = 1e-8


def edge_mass(grid: Grid, psi: np.ndarray, fraction: float = EDGE_FRACTION) -> float:
    return float(np.sum(np.abs(psi[grid.edge_mask(fraction)]) ** 2)) * grid.dx


def check_wraparound(grid: Grid, psi: np.ndarray, tol: float = WRAP_TOL,
                     where: str = "") -> None:
    m = edge_mass(grid, psi)
    if m > tol:
        raise WraparoundError(
            f"wavepacket reached the box edge{(' ' + where) if where else ''}: "
            f"edge mass {m:.2e} > {tol:g}; enlarge L or shorten the time window")


def free_evolve_psi(grid: Grid, psi: np.ndarray, t: float) -> np.ndarray:
    """``exp(-i t P^2/2) psi``, exact on the grid."""
    if t == 0.0:
        return psi.copy()
    return sfft.ifft(np.exp(-0.5j * t * grid.k ** 2) * sfft.fft(psi))


def free_evolve(state: WaveState, t: float, check: bool = True) -> WaveState:
    psi = free_evolve_psi(state.grid, state.psi, t)
    if check:
        check_wraparound(state.grid, psi, where=f"in free evolution to t={t:g}")
    return state.with_psi(psi)


class SplitStep:
    """Strang splitting ``e^{-iV dt/2} e^{-iP^2 dt/2} e^{-iV dt/2}`` with cached phases."""

    def __init__(self, grid: Grid, potential: Potential, dt: float = 0.002):
        if dt == 0:
            raise ValidationError("time step must be nonzero")
        self.grid = grid
        self.dt = float(dt)
        self.potential = potential
        v = potential.evaluate(grid.x[:, None])
        self.v = v
        self.free_potential = not np.any(v)
        self._half = np.exp(-0.5j * self.dt * v)
        self._kin = np.exp(-0.5j * self.dt * grid.k ** 2)

    def step(self, psi: np.ndarray, n: int = 1, reverse: bool = False) -> np.ndarray:
        """Advance ``n`` steps (backward in time when ``reverse``)."""
        half = np.conj(self._half) if reverse else self._half
        kin = np.conj(self._kin) if reverse else self._kin
        if self.free_potential:
            if n == 0:
                return psi.copy()
            mult = np.exp((1j if reverse else -1j) * 0.5 * n * self.dt * self.grid.k ** 2)
            return sfft.ifft(mult * sfft.fft(psi))
        out = psi.copy()
        if n == 0:
            return out
        out *= half
        full = half * half
        for j in range(n):
            out = sfft.ifft(kin * sfft.fft(out))
            out *= full if j < n - 1 else half
        return out

    def steps_for(self, t: float) -> int:
        n = abs(t) / self.dt
        nr = int(round(n))
        if abs(n - nr) > 1e-9 * max(1.0, n):
            raise ValidationError(f"time {t:g} is not a multiple of dt={self.dt:g}")
        return nr


def full_evolve(state: WaveState, t: float, propagator: SplitStep,
                check: bool = True) -> WaveState:
    """``exp(-i t H) psi`` by split-step; ``t`` must be a multiple of ``dt``."""
    n = propagator.steps_for(t)
    psi = propagator.step(state.psi, n, reverse=t < 0)
    if check:
        check_wraparound(state.grid, psi, where=f"in full evolution by t={t:g}")
    return state.with_psi(psi)


@dataclass
class CookResult:
    state: WaveState
    T: float
    residual: float
    history: list = field(default_factory=list)


@dataclass(frozen=True)
class PacketExtent:
    center: float
    spread: float
    k_lo: float
    k_hi: float
    k_mean: float


def packet_extent(state: WaveState, quantile: float = 1e-12) -> PacketExtent:
    """Centre, position spread and momentum range (``quantile`` tails cut) of a state."""
    grid = state.grid
    dist = state.kinetic_distribution()
    order = np.argsort(np.abs(grid.k))
    ks = np.abs(grid.k)[order]
    cdf = np.cumsum(dist[order])
    cdf /= cdf[-1]
    k_lo = float(ks[min(np.searchsorted(cdf, quantile), ks.size - 1)])
    k_hi = float(ks[min(np.searchsorted(cdf, 1.0 - quantile), ks.size - 1)])
    k_mean = float(np.sum(np.abs(grid.k) * dist) / np.sum(dist))
    prob = np.abs(state.psi) ** 2
    prob /= prob.sum()
    c = float(np.sum(grid.x * prob))
    spread = math.sqrt(float(np.sum((grid.x - c) ** 2 * prob)))
    return PacketExtent(c, spread, max(k_lo, 1e-12), k_hi, k_mean)


def max_time_in_box(grid: Grid, state: WaveState, margin_sigmas: float = 6.0) -> float:
    """Largest ``|t|`` for which the free state stays inside the box interior."""
    ext = packet_extent(state)
    reach = abs(ext.center) + margin_sigmas * ext.spread
    room = 0.5 * grid.L * (1.0 - 2.0 * EDGE_FRACTION) - reach
    if room <= 0:
        raise ValidationError("state does not fit inside the box")
    return room / ext.k_hi


def _round_time(t: float, dt: float) -> float:
    return dt * max(1, int(math.ceil(t / dt - 1e-9)))


def _cook(state: WaveState, apply, T0: float, cook_tol: float, T_max: float,
          growth: float, dt: float, what: str) -> CookResult:
    history = []
    T = _round_time(min(T0, T_max / growth), dt)
    prev = apply(T)
    history.append((T, None))
    while True:
        T_next = T * growth
        last = T_next >= T_max
        if last:
            T_next = T_max
        T_next = dt * math.floor(T_next / dt + 1e-9)
        if T_next <= T:
            raise NotConvergedError(f"{what} not converged: box too small", residual=None)
        cur = apply(T_next)
        res = state.grid.norm(cur - prev)
        history.append((T_next, res))
        T, prev = T_next, cur
        if res <= cook_tol:
            return CookResult(state.with_psi(cur), T, res, history)
        if last:
            raise NotConvergedError(
                f"{what} not converged: residual {res:.2e} > {cook_tol:g} at T={T:g}",
                residual=res)


def default_cook_start(state: WaveState, potential: Potential,
                       margin_sigmas: float = 9.0) -> float:
    """Time after which the free state is ``margin_sigmas`` spreads clear of the support."""
    ext = packet_extent(state)
    dist = abs(ext.center) + potential.support_radius + margin_sigmas * ext.spread
    return max(dist / ext.k_lo, 1.0)


def wave_operator(state: WaveState, sign: str, propagator: SplitStep,
                  cook_tol: float = 1e-8, T0: Optional[float] = None,
                  T_max: Optional[float] = None, growth: float = 1.25) -> CookResult:
    """Cook approximation of ``W^-`` (``sign='-'``) or ``W^+`` (``sign='+'``).

    ``W^- phi = lim_{T->inf} e^{-iTH} e^{iTH0} phi`` and
    ``W^+ phi = lim_{T->inf} e^{iTH} e^{-iTH0} phi``.
    """
    if sign not in ("-", "+"):
        raise ValidationError("sign must be '-' or '+'")
    s = 1.0 if sign == "-" else -1.0
    grid = state.grid
    T0 = T0 if T0 is not None else default_cook_start(state, propagator.potential)
    T_max = T_max if T_max is not None else max_time_in_box(grid, state)

    def apply(T):
        psi = free_evolve_psi(grid, state.psi, -s * T)
        check_wraparound(grid, psi, where="in the wave-operator limit")
        return propagator.step(psi, propagator.steps_for(T), reverse=s < 0)

    return _cook(state, apply, T0, cook_tol, T_max, growth, propagator.dt,
                 f"W^{sign}")


def scattering_operator(state: WaveState, propagator: SplitStep, cook_tol: float = 1e-8,
                        T0: Optional[float] = None, T_max: Optional[float] = None,
                        growth: float = 1.25, inverse: bool = False) -> CookResult:
    """``S phi = lim e^{iTH0} e^{-2iTH} e^{iTH0} phi`` (``S^-1`` when ``inverse``)."""
    grid = state.grid
    T0 = T0 if T0 is not None else default_cook_start(state, propagator.potential)
    T_max = T_max if T_max is not None else max_time_in_box(grid, state)
    s = -1.0 if inverse else 1.0

    def apply(T):
        psi = free_evolve_psi(grid, state.psi, -s * T)
        check_wraparound(grid, psi, where="in the scattering-operator limit")
        psi = propagator.step(psi, 2 * propagator.steps_for(T), reverse=inverse)
        check_wraparound(grid, psi, where="in the scattering-operator limit")
        return free_evolve_psi(grid, psi, -s * T)

    return _cook(state, apply, T0, cook_tol, T_max, growth, propagator.dt,
                 "S^-1" if inverse else "S")
