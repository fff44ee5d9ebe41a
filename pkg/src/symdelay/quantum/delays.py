"""Sojourn-time integrals, quantum time delays and the related identities in 1-D.

One propagation of ``e^{-itH} W^- phi`` over a symmetric window ``[-T, T]``
(started from ``e^{iTH0} phi``) feeds every region radius at once; the free
integrands for ``phi`` and ``S phi`` are obtained spectrally at the same
times.  All time integrals use the trapezoid rule on a uniform grid that
contains ``t = 0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import fft as sfft
from scipy.integrate import trapezoid

from ..errors import (AssumptionIError, SojournTailError, ValidationError,
                      WraparoundError)
from ..geometry import Region, ShapeAverages, check_assumption_I, intervals_1d
from ..potentials import Potential
from .grid import (Grid, WaveState, default_excluded_k, excluded_mass,
                   inverse_momentum)
from .propagation import (EDGE_FRACTION, CookResult, SplitStep, check_wraparound,
                          edge_mass, free_evolve_psi, packet_extent,
                          scattering_operator)

CSV_COLUMNS = ("r", "T_r", "T0_phi", "T0_Sphi", "tau_in", "tau", "tau_free")


@dataclass(frozen=True)
class QuantumSettings:
    dt: float = 0.002
    stride: int = 25
    cook_tol: float = 1e-8
    tail_tol: float = 1e-8
    unitarity_tol: float = 1e-8
    excluded_tol: float = 1e-10
    k_excluded: Optional[float] = None
    margin_sigmas: float = 6.5
    extend_factor: float = 1.25
    max_extensions: int = 4

    def excluded_k(self, state: WaveState) -> float:
        if self.k_excluded is not None:
            return self.k_excluded
        if state.window is None:
            raise ValidationError("state has no energy window; set k_excluded")
        return default_excluded_k(state.window)


# ---------------------------------------------------------------------------
# spectral expectations

def _check_excluded(state: WaveState, k_excl: float, tol: float, name: str) -> None:
    m = excluded_mass(state.grid, state.psi, k_excl)
    if m > tol:
        raise ValidationError(
            f"spectral mass {m:.2e} of {name} in the excluded window |k| < {k_excl:g} "
            f"exceeds {tol:g}")


def a0_expectation(state: WaveState, k_excluded: float) -> float:
    """``<psi, A0 psi>`` with ``A0 = (P/P^2 Q + Q P/P^2)/2`` = ``Re <P^-1 psi, Q psi>``."""
    grid = state.grid
    pinv = grid.apply_multiplier(state.psi, inverse_momentum(grid, k_excluded))
    return grid.inner(pinv, grid.x * state.psi).real


def inverse_momentum_expectation(state: WaveState, k_excluded: float) -> float:
    """``<psi, P^-1 psi>``."""
    grid = state.grid
    dist = np.abs(grid.to_momentum(state.psi)) ** 2
    return float(np.sum(dist * inverse_momentum(grid, k_excluded)) * grid.dk)


def a0_commutator_expectation(phi: WaveState, sphi: WaveState,
                              settings: QuantumSettings = QuantumSettings()) -> float:
    """``<phi, S*[A0, S] phi> = <S phi, A0 S phi> - <phi, A0 phi>``."""
    k_excl = settings.excluded_k(phi)
    _check_excluded(phi, k_excl, settings.excluded_tol, "phi")
    _check_excluded(sphi, k_excl, settings.excluded_tol, "S phi")
    return a0_expectation(sphi, k_excl) - a0_expectation(phi, k_excl)


def g_multiplier(grid: Grid, region: Region, k_excluded: float,
                 tolerance: float = 1e-9) -> np.ndarray:
    """``G_Sigma(k)`` on the grid, built as ``G(k/|k|) - ln|k|`` and zeroed near 0."""
    if region.dimension != 1:
        raise ValidationError("the quantum engine is one-dimensional")
    avg = ShapeAverages(region, tolerance)
    gp, gm = avg.G([1.0]), avg.G([-1.0])
    k = grid.k
    out = np.zeros_like(k)
    keep = np.abs(k) >= k_excluded
    out[keep] = np.where(k[keep] > 0, gp, gm) - np.log(np.abs(k[keep]))
    return out


def g_commutator_expectation(state: WaveState, region: Region,
                             settings: QuantumSettings = QuantumSettings()) -> float:
    """``<psi, i[Q^2, G(P)] psi>``.

    With the inner product conjugate-linear in its first slot this equals
    ``-2 Im <Q^2 psi, G(P) psi>``.
    """
    k_excl = settings.excluded_k(state)
    _check_excluded(state, k_excl, settings.excluded_tol, "the state")
    grid = state.grid
    gpsi = grid.apply_multiplier(state.psi, g_multiplier(grid, region, k_excl))
    return -2.0 * grid.inner(grid.x ** 2 * state.psi, gpsi).imag


def lnp_commutator_expectation(state: WaveState, k_excluded: float) -> float:
    """``(i/2) <psi, [Q^2, -ln|P|] psi>``, which equals ``<psi, A0 psi>``."""
    grid = state.grid
    k = grid.k
    mult = np.zeros_like(k)
    keep = np.abs(k) >= k_excluded
    mult[keep] = -np.log(np.abs(k[keep]))
    gpsi = grid.apply_multiplier(state.psi, mult)
    return -grid.inner(grid.x ** 2 * state.psi, gpsi).imag


# ---------------------------------------------------------------------------
# sojourn integrals

@dataclass(frozen=True)
class RegionSpec:
    """A dilated, optionally translated 1-D region: ``r * union(intervals) + shift``."""

    r: float
    intervals: Tuple[Tuple[float, float], ...]
    shift: float = 0.0

    @property
    def extent(self) -> float:
        return max(max(abs(self.r * a + self.shift), abs(self.r * b + self.shift))
                   for a, b in self.intervals)


@dataclass
class SojournRun:
    times: np.ndarray
    regions: List[RegionSpec]
    full: Optional[np.ndarray]
    free_phi: np.ndarray
    free_sphi: np.ndarray
    T: float
    tail: float
    s_consistency: Optional[float] = None
    max_edge_mass: float = 0.0

    def integrals(self, which: str) -> np.ndarray:
        data = {"full": self.full, "free_phi": self.free_phi,
                "free_sphi": self.free_sphi}[which]
        return trapezoid(data, self.times, axis=1)

    def half_integrals(self, which: str):
        data = {"full": self.full, "free_phi": self.free_phi,
                "free_sphi": self.free_sphi}[which]
        i0 = int(np.argmin(np.abs(self.times)))
        neg = trapezoid(data[:, :i0 + 1], self.times[:i0 + 1], axis=1)
        pos = trapezoid(data[:, i0:], self.times[i0:], axis=1)
        return neg, pos

    @property
    def tail_bound(self) -> float:
        """Crude bound on the neglected integral beyond the window."""
        return self.tail * self.T


def plan_window(states: Sequence[WaveState], extent: float, settings: QuantumSettings,
                potential: Optional[Potential] = None) -> float:
    """Half-window ``T`` after which every packet has left the largest region."""
    T = 0.0
    for st in states:
        ext = packet_extent(st)
        reach = abs(ext.center) + settings.margin_sigmas * ext.spread
        if potential is not None:
            reach += potential.support_radius
        T = max(T, (extent + reach) / ext.k_lo)
    unit = settings.dt * settings.stride
    return unit * math.ceil(T / unit - 1e-9)


def _box_room(grid: Grid) -> float:
    return 0.5 * grid.L * (1.0 - 2.0 * EDGE_FRACTION)


def _fits(states, T, settings) -> bool:
    grid = states[0].grid
    for st in states:
        ext = packet_extent(st)
        if ext.k_hi * T + abs(ext.center) + settings.margin_sigmas * ext.spread > _box_room(grid):
            return False
    return True


def sojourn_run(phi: WaveState, sphi: WaveState, regions: Sequence[RegionSpec],
                propagator: Optional[SplitStep], settings: QuantumSettings = QuantumSettings(),
                T: Optional[float] = None) -> SojournRun:
    """Integrands ``||chi psi(t)||^2`` for the full and both free evolutions.

    ``propagator=None`` records only the free integrands.  The window is
    extended while the integrands at its ends exceed ``tail_tol``.
    """
    grid = phi.grid
    extent = max(reg.extent for reg in regions)
    pot = propagator.potential if propagator is not None else None
    if T is None:
        T = plan_window([phi, sphi], extent, settings, pot)
    for attempt in range(settings.max_extensions + 1):
        if not _fits([phi, sphi], T, settings):
            raise ValidationError(
                f"time window T={T:g} needed for region extent {extent:g} does not fit "
                f"inside the box (L={grid.L:g}); enlarge L or reduce r")
        run = _record(phi, sphi, regions, propagator, settings, T)
        if run.tail <= settings.tail_tol:
            return run
        unit = settings.dt * settings.stride
        T_new = unit * math.ceil(T * settings.extend_factor / unit)
        if not _fits([phi, sphi], T_new, settings):
            break
        T = T_new
    raise SojournTailError(
        f"sojourn tail not converged: end integrand {run.tail:.2e} > {settings.tail_tol:g} "
        f"at T={T:g}")


def _record(phi, sphi, regions, propagator, settings, T) -> SojournRun:
    grid = phi.grid
    dt, stride = settings.dt, settings.stride
    unit = dt * stride
    n_half = int(round(T / unit))
    n_rec = 2 * n_half + 1
    times = unit * (np.arange(n_rec) - n_half)
    W = np.stack([grid.region_weights(reg.intervals, reg.r, reg.shift) for reg in regions])
    W *= grid.dx
    phat = sfft.fft(phi.psi)
    shat = sfft.fft(sphi.psi)
    k2 = 0.5 * grid.k ** 2
    free_phi = np.empty((len(regions), n_rec))
    free_sphi = np.empty_like(free_phi)
    full = None if propagator is None else np.empty_like(free_phi)
    edge = grid.edge_mask()
    worst_edge = 0.0
    psi = None
    if propagator is not None:
        psi = free_evolve_psi(grid, phi.psi, times[0])
    for i, t in enumerate(times):
        ph = np.exp(-1j * t * k2)
        a = sfft.ifft(ph * phat)
        b = sfft.ifft(ph * shat)
        pa = np.abs(a) ** 2
        pb = np.abs(b) ** 2
        free_phi[:, i] = W @ pa
        free_sphi[:, i] = W @ pb
        e = max(float(pa[edge].sum()), float(pb[edge].sum())) * grid.dx
        if propagator is not None:
            pf = np.abs(psi) ** 2
            full[:, i] = W @ pf
            e = max(e, float(pf[edge].sum()) * grid.dx)
            if i + 1 < n_rec:
                psi = propagator.step(psi, stride)
        worst_edge = max(worst_edge, e)
        if e > 1e-8:
            raise WraparoundError(
                f"wavepacket reached the box edge at t={t:g}: edge mass {e:.2e}")
    ends = [free_phi[:, [0, -1]], free_sphi[:, [0, -1]]]
    if full is not None:
        ends.append(full[:, [0, -1]])
    tail = float(max(np.max(np.abs(x)) for x in ends))
    s_cons = None
    if propagator is not None:
        s_T = free_evolve_psi(grid, psi, -times[-1])
        s_cons = grid.norm(s_T - sphi.psi)
    return SojournRun(times, list(regions), full, free_phi, free_sphi, float(times[-1]),
                      tail, s_cons, worst_edge)


# ---------------------------------------------------------------------------
# delays

@dataclass(frozen=True)
class QuantumDelayRow:
    r: float
    T_r: float
    T0_phi: float
    T0_Sphi: float
    tau_in: float
    tau: float
    tau_free: float

    def as_tuple(self):
        return tuple(getattr(self, c) for c in CSV_COLUMNS)


@dataclass
class QuantumDelayReport:
    rows: List[QuantumDelayRow]
    sphi: WaveState
    cook: Optional[CookResult]
    run: SojournRun
    shift: float = 0.0
    shifted_rows: List[QuantumDelayRow] = field(default_factory=list)

    def column(self, name: str, shifted: bool = False) -> np.ndarray:
        rows = self.shifted_rows if shifted else self.rows
        return np.array([getattr(row, name) for row in rows])

    @property
    def r(self) -> np.ndarray:
        return self.column("r")


def _rows_from_run(run: SojournRun, idx: Sequence[int]) -> List[QuantumDelayRow]:
    T = run.integrals("full")
    T0 = run.integrals("free_phi")
    T0s = run.integrals("free_sphi")
    neg_f, pos_f = run.half_integrals("free_phi")
    neg_s, pos_s = run.half_integrals("free_sphi")
    rows = []
    for i in idx:
        tau_free = 0.5 * (neg_f[i] - neg_s[i]) + 0.5 * (pos_s[i] - pos_f[i])
        rows.append(QuantumDelayRow(
            run.regions[i].r, float(T[i]), float(T0[i]), float(T0s[i]),
            float(T[i] - T0[i]), float(T[i] - 0.5 * (T0[i] + T0s[i])), float(tau_free)))
    return rows


def region_intervals(region: Region) -> Tuple[Tuple[float, float], ...]:
    if region.dimension != 1:
        raise ValidationError("the quantum engine is one-dimensional")
    return tuple((float(a), float(b)) for a, b in intervals_1d(region))


def check_state(state: WaveState, settings: QuantumSettings, name: str = "phi") -> None:
    if state.window is not None and state.mass_outside_window() > settings.excluded_tol:
        raise ValidationError(f"{name} has spectral mass outside its energy window")
    _check_excluded(state, settings.excluded_k(state), settings.excluded_tol, name)


def quantum_time_delays(phi: WaveState, region: Region, r_grid: Sequence[float],
                        potential: Potential, settings: QuantumSettings = QuantumSettings(),
                        sphi: Optional[WaveState] = None, shift: float = 0.0,
                        propagator: Optional[SplitStep] = None) -> QuantumDelayReport:
    """Rows ``(r, T_r, T0_phi, T0_Sphi, tau_in, tau, tau_free)`` over ``r_grid``.

    ``shift`` additionally evaluates the delays for the region translated by
    ``shift`` (same propagation); they are returned in ``shifted_rows``.
    """
    rs = np.asarray(r_grid, dtype=float)
    if rs.size == 0 or np.any(np.diff(rs) <= 0) or rs[0] <= 0:
        raise ValidationError("r grid must be positive and increasing")
    check_state(phi, settings)
    ivs = region_intervals(region)
    inner = min(min(abs(a), abs(b)) for a, b in ivs)
    if rs[0] * inner < potential.support_radius:
        raise ValidationError("smallest dilated region must contain the potential support")
    prop = propagator or SplitStep(phi.grid, potential, settings.dt)
    cook = None
    if sphi is None:
        cook = scattering_operator(phi, prop, settings.cook_tol)
        sphi = cook.state
    check_state(sphi, settings, "S phi")
    regions = [RegionSpec(float(r), ivs) for r in rs]
    if shift:
        regions += [RegionSpec(float(r), ivs, float(shift)) for r in rs]
    run = sojourn_run(phi, sphi, regions, prop, settings)
    n = rs.size
    rows = _rows_from_run(run, range(n))
    shifted = _rows_from_run(run, range(n, 2 * n)) if shift else []
    return QuantumDelayReport(rows, sphi, cook, run, shift, shifted)


def tau_free(phi: WaveState, sphi: WaveState, region: Region, r: float,
             settings: QuantumSettings = QuantumSettings(), T: Optional[float] = None) -> float:
    """Auxiliary sojourn time from free evolutions of ``phi`` and ``S phi`` only."""
    run = sojourn_run(phi, sphi, [RegionSpec(float(r), region_intervals(region))], None,
                      settings, T)
    neg_f, pos_f = run.half_integrals("free_phi")
    neg_s, pos_s = run.half_integrals("free_sphi")
    return float(0.5 * (neg_f[0] - neg_s[0]) + 0.5 * (pos_s[0] - pos_f[0]))


def sojourn_time(state: WaveState, region: Region, r: float,
                 propagator: Optional[SplitStep] = None,
                 settings: QuantumSettings = QuantumSettings(), T: Optional[float] = None):
    """``int ||chi_r e^{-itH} W^- psi||^2 dt`` (free dynamics if ``propagator`` is None).

    Returns ``(value, tail_bound)``.
    """
    spec = [RegionSpec(float(r), region_intervals(region))]
    run = sojourn_run(state, state, spec, propagator, settings, T)
    which = "free_phi" if propagator is None else "full"
    return float(run.integrals(which)[0]), run.tail_bound


# ---------------------------------------------------------------------------
# identities

@dataclass
class PropositionRecord:
    r: np.ndarray
    lhs: np.ndarray
    rhs: float
    relative_error: float
    assumption_I: bool
    worst_defect: float
    predicted_slope: float
    verdict: Optional[dict] = None

    def rows(self):
        return [(float(a), float(b), self.rhs) for a, b in zip(self.r, self.lhs)]


def proposition_asympt_check(phi: WaveState, region: Region, r_grid: Sequence[float],
                             settings: QuantumSettings = QuantumSettings(),
                             allow_violation: bool = False) -> PropositionRecord:
    """``int_0^inf <phi, (e^{itH0} chi_r e^{-itH0} - e^{-itH0} chi_r e^{itH0}) phi> dt``.

    The limit is compared with ``-<phi, i[Q^2, G(P)] phi>``.  Regions violating
    the symmetry assumption are rejected unless ``allow_violation``; then the
    linear drift ``r <phi, M(P)/|P| phi>`` is reported as ``predicted_slope``.
    """
    from ..convergence import QUANTUM_REL_TOL, extrapolate_limit

    chk = check_assumption_I(region)
    if not chk.holds and not allow_violation:
        raise AssumptionIError(
            f"region violates the shape-symmetry assumption (worst defect "
            f"{chk.worst_defect:.3g} at {chk.worst_direction})", chk.worst_defect)
    check_state(phi, settings)
    ivs = region_intervals(region)
    rs = np.asarray(r_grid, dtype=float)
    regions = [RegionSpec(float(r), ivs) for r in rs]
    run = sojourn_run(phi, phi, regions, None, settings)
    neg, pos = run.half_integrals("free_phi")
    lhs = pos - neg
    rhs = -g_commutator_expectation(phi, region, settings)
    rel = abs(lhs[-1] - rhs) / max(abs(rhs), 1e-300)
    grid = phi.grid
    k_excl = settings.excluded_k(phi)
    lp = max(b for _, b in ivs)
    lm = -min(a for a, _ in ivs)
    dist = np.abs(grid.to_momentum(phi.psi)) ** 2
    k = grid.k
    keep = np.abs(k) >= k_excl
    m = np.where(k > 0, lp - lm, lm - lp)
    slope = float(np.sum((dist * m)[keep] / np.abs(k[keep])) * grid.dk)
    verdict = None
    if rs.size >= 5:
        verdict = extrapolate_limit(rs, lhs, tol=QUANTUM_REL_TOL, relative=True).to_dict()
    return PropositionRecord(rs, lhs, float(rhs), float(rel), chk.holds,
                             chk.worst_defect, slope, verdict)


def gaussian_bump(center: float = 0.0, width: float = 1.5) -> Callable[[np.ndarray], np.ndarray]:
    def F(y):
        return np.exp(-0.5 * ((np.asarray(y) - center) / width) ** 2)
    return F


def conjugation_identity_check(phi: WaveState, F: Callable[[np.ndarray], np.ndarray],
                               t: float, wrap_tol: float = 1e-8) -> float:
    """``|| e^{itH0} F(Q) e^{-itH0} phi - Z_{-1/t} F(tP) Z_{1/t} phi ||`` with ``Z_s = e^{isQ^2/2}``."""
    if t == 0:
        raise ValidationError("t must be nonzero")
    grid = phi.grid
    x = grid.x
    prob = np.abs(phi.psi) ** 2
    support = x[prob > 1e-30 * prob.max()]
    reach = float(np.max(np.abs(support)))
    ext = packet_extent(phi)
    if reach / abs(t) + ext.k_hi > 0.9 * grid.k_nyquist:
        raise ValidationError("chirp exp(iQ^2/2t) is not resolved on this grid")
    a = free_evolve_psi(grid, phi.psi, t)
    check_wraparound(grid, a, wrap_tol, "in the conjugation check")
    lhs = free_evolve_psi(grid, F(x) * a, -t)
    chirp = np.exp(0.5j * x ** 2 / t)
    b = grid.apply_multiplier(chirp * phi.psi, F(t * grid.k))
    rhs = np.conj(chirp) * b
    check_wraparound(grid, lhs, wrap_tol, "in the conjugation check")
    check_wraparound(grid, rhs, wrap_tol, "in the conjugation check")
    return grid.norm(lhs - rhs)


def full_time_reversal_q(sphi: WaveState) -> WaveState:
    """``f(phi) = conj(S phi)``, given ``S phi``."""
    return sphi.conj()


@dataclass
class ReversalRecord:
    r: np.ndarray
    tau_phi: np.ndarray
    tau_f: np.ndarray
    tau_in_phi: np.ndarray
    tau_in_f: np.ndarray
    involution_residual: float
    s_symmetry_residual: Optional[float] = None

    @property
    def max_relative_gap(self) -> float:
        return float(np.max(np.abs(self.tau_phi - self.tau_f) / np.abs(self.tau_phi)))

    @property
    def max_mean_gap(self) -> float:
        return float(np.max(np.abs(self.tau_phi - 0.5 * (self.tau_in_phi + self.tau_in_f))))


def s_symmetry_residual(phi: WaveState, propagator: SplitStep,
                        settings: QuantumSettings = QuantumSettings()) -> float:
    """``|| S conj(phi) - conj(S^-1 phi) ||`` for real potentials."""
    a = scattering_operator(phi.conj(), propagator, settings.cook_tol).state.psi
    b = scattering_operator(phi, propagator, settings.cook_tol, inverse=True).state.psi
    return phi.grid.norm(a - np.conj(b))


def reversal_invariance_check(phi: WaveState, region: Region, r_grid: Sequence[float],
                              potential: Potential,
                              settings: QuantumSettings = QuantumSettings(),
                              base: Optional[QuantumDelayReport] = None,
                              with_s_symmetry: bool = True) -> ReversalRecord:
    """Delays of ``phi`` and of its full time reversal ``conj(S phi)``."""
    if np.any(np.iscomplex(potential.evaluate(phi.grid.x[:, None]))):
        raise ValidationError("time reversal needs a real potential")
    prop = SplitStep(phi.grid, potential, settings.dt)
    rep = base or quantum_time_delays(phi, region, r_grid, potential, settings,
                                      propagator=prop)
    fphi = full_time_reversal_q(rep.sphi)
    rep_f = quantum_time_delays(fphi, region, r_grid, potential, settings, propagator=prop)
    inv = phi.grid.norm(np.conj(rep_f.sphi.psi) - phi.psi)
    sym = s_symmetry_residual(phi, prop, settings) if with_s_symmetry else None
    return ReversalRecord(rep.r, rep.column("tau"), rep_f.column("tau"),
                          rep.column("tau_in"), rep_f.column("tau_in"), inv, sym)


@dataclass
class TranslationRecord:
    a: float
    lhs: float
    rhs: float
    tau_sigma: float
    commutator_term: float
    relative_error: float
    lhs_verdict: dict
    base_verdict: dict


def translation_covariance_check(phi: WaveState, a: float, region: Region,
                                 r_grid: Sequence[float], potential: Potential,
                                 settings: QuantumSettings = QuantumSettings(),
                                 report: Optional[QuantumDelayReport] = None
                                 ) -> TranslationRecord:
    """Delay for the region translated by ``a`` against ``tau + a <phi, S*[P/P^2, S] phi>``.

    In one dimension ``G(P/|P|)`` is constant on each half line, so the shape
    commutator vanishes on states supported away from ``k = 0``.
    """
    from ..convergence import QUANTUM_REL_TOL, extrapolate_limit

    if report is None or report.shift != a:
        report = quantum_time_delays(phi, region, r_grid, potential, settings, shift=a)
    k_excl = settings.excluded_k(phi)
    term = a * (inverse_momentum_expectation(report.sphi, k_excl)
                - inverse_momentum_expectation(phi, k_excl))
    r = report.r
    v_base = extrapolate_limit(r, report.column("tau"), tol=QUANTUM_REL_TOL, relative=True)
    v_lhs = extrapolate_limit(r, report.column("tau", shifted=True), tol=QUANTUM_REL_TOL,
                              relative=True)
    tau_sigma = v_base.fit_limit
    lhs = v_lhs.fit_limit
    rhs = tau_sigma + term
    rel = abs(lhs - rhs) / max(abs(rhs), 1e-300)
    return TranslationRecord(float(a), float(lhs), float(rhs), float(tau_sigma), float(term),
                             float(rel), v_lhs.to_dict(), v_base.to_dict())
