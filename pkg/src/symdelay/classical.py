"""Classical scattering trajectories, sojourn times and time delays.

Units are m = 1 throughout: ``x' = p`` and ``p' = -grad V``.  The time
origin of a trajectory is the time of its initial condition; a region
radius ``r`` gives entry at ``-t_minus`` and exit at ``t_plus``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import brentq

from .errors import (CrossingError, IntegratorError, NonScatteringError,
                     ValidationError)
from .geometry import Region, StarRegion
from .potentials import Potential

CSV_COLUMNS = ("r", "T_r", "T0_r", "T0p_r", "tau_in", "tau", "tau1", "tau2", "E", "b")


@dataclass(frozen=True)
class IntegratorOptions:
    method: str = "DOP853"
    rtol: float = 1e-12
    atol: float = 1e-12
    escape_factor: float = 2.0
    max_time: float = 1e5
    energy_tol: float = 1e-8
    asymptotic_tol: float = 1e-10
    verlet_dt: float = 1e-3
    max_steps: int = 10_000_000


class Path:
    """Anything with a position map and free asymptotic ends."""

    dimension: int

    def position(self, t) -> np.ndarray:
        raise NotImplementedError

    def outside_interval(self, radius: float):
        """``(t_lo, t_hi)`` with ``|x(t)| >= radius`` for ``t <= t_lo`` and ``t >= t_hi``."""
        raise NotImplementedError

    def sample_times(self) -> np.ndarray:
        return np.empty(0)


def _free_window(x_ref, p, t_ref, radius):
    pp = float(p @ p)
    t_star = t_ref - float(x_ref @ p) / pp
    half = radius / math.sqrt(pp) * (1.0 + 1e-9) + 1e-12
    return t_star - half, t_star + half


class FreeLine(Path):
    """``x(t) = x_ref + p*(t - t_ref)``."""

    def __init__(self, x_ref, p, t_ref: float = 0.0):
        self.x_ref = np.asarray(x_ref, dtype=float).ravel()
        self.p = np.asarray(p, dtype=float).ravel()
        self.t_ref = float(t_ref)
        self.dimension = self.x_ref.size
        if not np.any(self.p):
            raise ValidationError("free line needs nonzero momentum")

    def position(self, t):
        t = np.asarray(t, dtype=float)
        return self.x_ref + np.multiply.outer(t - self.t_ref, self.p)

    def momentum(self, t):
        t = np.asarray(t, dtype=float)
        return np.broadcast_to(self.p, t.shape + (self.dimension,)).copy()

    def outside_interval(self, radius):
        return _free_window(self.x_ref, self.p, self.t_ref, radius)

    def reversed(self) -> "FreeLine":
        # (x(-t), -p): x_ref + p(-t - t_ref) = x_ref - p(t + t_ref)
        return FreeLine(self.x_ref, -self.p, -self.t_ref)


class Trajectory(Path):
    """Integrated phase-space path with free extension beyond its samples."""

    def __init__(self, t, x, p, state_fn: Callable, potential: Potential,
                 stats: Optional[dict] = None, impact_parameter: float = 0.0):
        self.t = np.asarray(t, dtype=float)
        self.x = np.asarray(x, dtype=float)
        self.p = np.asarray(p, dtype=float)
        self.dimension = self.x.shape[1]
        self._state_fn = state_fn
        self.potential = potential
        self.stats = dict(stats or {})
        self.impact_parameter = float(impact_parameter)
        self._reverse_of: Optional[Trajectory] = None
        self.energy_samples = 0.5 * np.sum(self.p ** 2, axis=1) + potential.evaluate(self.x)
        self.energy = float(self.energy_samples[0])

    # asymptotic data
    @property
    def p_minus(self) -> np.ndarray:
        return self.p[0]

    @property
    def p_plus(self) -> np.ndarray:
        return self.p[-1]

    @property
    def speed(self) -> float:
        return math.sqrt(2.0 * self.energy)

    def energy_drift(self) -> float:
        return float(np.max(np.abs(self.energy_samples - self.energy_samples[0])))

    def incoming_line(self) -> FreeLine:
        return FreeLine(self.x[0], self.p[0], self.t[0])

    def outgoing_line(self) -> FreeLine:
        return FreeLine(self.x[-1], self.p[-1], self.t[-1])

    def state(self, t):
        """Positions and momenta at times ``t`` (any shape)."""
        t = np.asarray(t, dtype=float)
        flat = np.atleast_1d(t).ravel()
        xs = np.empty((flat.size, self.dimension))
        ps = np.empty_like(xs)
        lo = flat < self.t[0]
        hi = flat > self.t[-1]
        mid = ~(lo | hi)
        if np.any(lo):
            xs[lo] = self.x[0] + np.outer(flat[lo] - self.t[0], self.p[0])
            ps[lo] = self.p[0]
        if np.any(hi):
            xs[hi] = self.x[-1] + np.outer(flat[hi] - self.t[-1], self.p[-1])
            ps[hi] = self.p[-1]
        if np.any(mid):
            xm, pm = self._state_fn(flat[mid])
            xs[mid], ps[mid] = xm, pm
        shape = t.shape + (self.dimension,)
        return xs.reshape(shape), ps.reshape(shape)

    def position(self, t):
        return self.state(t)[0]

    def momentum(self, t):
        return self.state(t)[1]

    def sample_times(self):
        return self.t

    def outside_interval(self, radius):
        lo = _free_window(self.x[0], self.p[0], self.t[0], radius)[0]
        hi = _free_window(self.x[-1], self.p[-1], self.t[-1], radius)[1]
        return min(lo, self.t[0]), max(hi, self.t[-1])

    def reversed(self) -> "Trajectory":
        """Full time reversal ``(x(-t), -p(-t))``."""
        if self._reverse_of is not None:
            return self._reverse_of
        fn = self._state_fn

        def rev_state(t):
            xr, pr = fn(-np.asarray(t))
            return xr, -pr

        out = Trajectory(-self.t[::-1], self.x[::-1], -self.p[::-1], rev_state,
                         self.potential, self.stats, self.impact_parameter)
        # asymptotes of the reversed path: incoming line of the reversal is the
        # mirrored outgoing line, so the impact parameter is recomputed
        out.impact_parameter = impact_parameter(out.x[0], out.p[0])
        out._reverse_of = self
        return out


def impact_parameter(x, p) -> float:
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    if x.size == 1:
        return 0.0
    phat = p / np.linalg.norm(p)
    return float(np.linalg.norm(x - (x @ phat) * phat))


def _escape_radius(potential: Potential, x0, opts: IntegratorOptions) -> float:
    rho = potential.support_radius
    base = opts.escape_factor * rho if rho > 0 else 1.0
    return max(base, float(np.linalg.norm(x0)) * (1.0 + 1e-6) + 1e-9)


def integrate_trajectory(potential: Potential, x0, p0,
                         options: Optional[IntegratorOptions] = None) -> Trajectory:
    """Solve Hamilton's equations forward and backward until escape."""
    opts = options or IntegratorOptions()
    x0 = np.asarray(x0, dtype=float).ravel()
    p0 = np.asarray(p0, dtype=float).ravel()
    if x0.shape != p0.shape:
        raise ValidationError("x0 and p0 must have the same dimension")
    d = x0.size
    if d not in (1, 2):
        raise ValidationError("classical runs support d in {1, 2}")
    E = 0.5 * float(p0 @ p0) + float(potential.evaluate(x0[None, :])[0])
    if not E > 0:
        raise ValidationError("scattering requires positive energy")
    R = _escape_radius(potential, x0, opts)
    if opts.method == "verlet":
        t, y, state_fn, stats = _verlet(potential, x0, p0, R, opts)
    else:
        t, y, state_fn, stats = _adaptive(potential, x0, p0, R, opts)
    traj = Trajectory(t, y[:, :d], y[:, d:], state_fn, potential, stats,
                      impact_parameter(y[0, :d], y[0, d:]))
    drift = traj.energy_drift()
    traj.stats["energy_drift"] = drift
    traj.stats["escape_radius"] = R
    if drift > opts.energy_tol * abs(E):
        raise IntegratorError(
            f"energy drift {drift:.3e} exceeds {opts.energy_tol:.1e}*|E|")
    for end in (0, -1):
        g = float(np.linalg.norm(potential.gradient(traj.x[end][None, :])))
        if g > opts.asymptotic_tol:
            raise IntegratorError("asymptotic momentum not stabilised at path end")
    return traj


def _adaptive(potential, x0, p0, R, opts):
    d = x0.size

    def rhs(_t, y):
        return np.concatenate([y[d:], -potential.gradient(y[:d][None, :])[0]])

    def escape(_t, y):
        return float(y[:d] @ y[:d]) - R * R

    escape.terminal = True
    escape.direction = 1.0
    y0 = np.concatenate([x0, p0])
    runs = []
    for t_end in (opts.max_time, -opts.max_time):
        sol = solve_ivp(rhs, (0.0, t_end), y0, method=opts.method, rtol=opts.rtol,
                        atol=opts.atol, dense_output=True, events=escape)
        if sol.status != 1:
            if sol.status == 0:
                raise NonScatteringError("non-scattering trajectory: no escape "
                                         f"within |t| <= {opts.max_time:g}")
            raise IntegratorError(f"integrator failed: {sol.message}")
        runs.append(sol)
    fwd, bwd = runs
    t = np.concatenate([bwd.t[::-1], fwd.t[1:]])
    y = np.concatenate([bwd.y[:, ::-1], fwd.y[:, 1:]], axis=1).T
    # terminal state from the event location, exact at the sample
    fsol, bsol = fwd.sol, bwd.sol

    def state_fn(ts):
        ts = np.asarray(ts, dtype=float)
        out = np.empty((ts.size, 2 * d))
        neg = ts < 0
        if np.any(neg):
            out[neg] = bsol(ts[neg]).T
        if np.any(~neg):
            out[~neg] = fsol(ts[~neg]).T
        return out[:, :d], out[:, d:]

    stats = {"method": opts.method, "nfev": int(fwd.nfev + bwd.nfev),
             "steps": int(t.size - 1)}
    return t, y, state_fn, stats


def _verlet(potential, x0, p0, R, opts):
    dt = opts.verlet_dt
    d = x0.size

    def run(sign):
        h = sign * dt
        x = x0.copy()
        p = p0.copy()
        g = potential.gradient(x[None, :])[0]
        xs, ps, gs = [x.copy()], [p.copy()], [g.copy()]
        for _ in range(opts.max_steps):
            p_half = p - 0.5 * h * g
            x = x + h * p_half
            g = potential.gradient(x[None, :])[0]
            p = p_half - 0.5 * h * g
            xs.append(x.copy())
            ps.append(p.copy())
            gs.append(g.copy())
            if x @ x >= R * R and sign * (x @ p) > 0:
                return np.array(xs), np.array(ps), np.array(gs)
        raise NonScatteringError("non-scattering trajectory: no escape within max_steps")

    xf, pf, gf = run(1.0)
    xb, pb, gb = run(-1.0)
    nb, nf = len(xb), len(xf)
    t = np.concatenate([-dt * np.arange(nb)[::-1], dt * np.arange(1, nf)])
    x = np.concatenate([xb[::-1], xf[1:]])
    p = np.concatenate([pb[::-1], pf[1:]])
    g = np.concatenate([gb[::-1], gf[1:]])
    xspl = CubicHermiteSpline(t, x, p, axis=0)
    pspl = CubicHermiteSpline(t, p, -g, axis=0)

    def state_fn(ts):
        return xspl(ts), pspl(ts)

    stats = {"method": "verlet", "dt": dt, "steps": int(t.size - 1)}
    return t, np.concatenate([x, p], axis=1), state_fn, stats


def scattering_trajectory(potential: Potential, energy: float, b: float = 0.0,
                          direction: float = 0.0, dimension: int = 2,
                          options: Optional[IntegratorOptions] = None) -> Trajectory:
    """Trajectory with incoming direction angle ``direction`` and impact parameter ``b``.

    The initial point sits on the incoming asymptote outside the support.
    In one dimension ``direction`` is 0 (moving right) or pi (moving left).
    """
    if not energy > 0:
        raise ValidationError("scattering requires positive energy")
    speed = math.sqrt(2.0 * energy)
    dist = 1.5 * max(potential.support_radius, 1.0) + abs(b)
    if dimension == 1:
        s = 1.0 if math.cos(direction) >= 0 else -1.0
        return integrate_trajectory(potential, [-s * dist], [s * speed], options)
    u = np.array([math.cos(direction), math.sin(direction)])
    n = np.array([-u[1], u[0]])
    return integrate_trajectory(potential, -dist * u + b * n, speed * u, options)


# ---------------------------------------------------------------------------
# crossings

def _residual_fn(path: Path, region: Region, r: float):
    if isinstance(region, StarRegion):
        def f(t):
            return region.residual(path.position(t), r)
        return f, True

    def g(t):
        inside = region.indicator(path.position(t) / r)
        return np.where(inside, -1.0, 1.0)
    return g, False


def crossing_times(path: Path, region: Region, r: float, mode: str = "convex",
                   samples: int = 4097, time_tol: float = 1e-11):
    """Return ``(t_minus, t_plus)``: entry at ``-t_minus``, exit at ``t_plus``.

    ``mode="convex"`` requires a declared-convex region and exactly one entry;
    ``mode="first-last"`` takes the first entry and last exit.
    """
    if region.dimension != path.dimension:
        raise ValidationError("region and path dimensions differ")
    if not r > 0:
        raise ValidationError("region radius must be positive")
    if mode == "convex":
        if not region.convex:
            raise ValidationError("non-convex region: use mode='first-last'")
    elif mode != "first-last":
        raise ValidationError(f"unknown crossing mode {mode!r}")
    t_lo, t_hi = path.outside_interval(r * region.bounding_radius * 1.01)
    ts = np.linspace(t_lo, t_hi, samples)
    extra = path.sample_times()
    extra = extra[(extra > t_lo) & (extra < t_hi)]
    ts = np.union1d(ts, extra)
    f, smooth = _residual_fn(path, region, r)
    vals = f(ts)
    inside = vals < 0
    if inside[0] or inside[-1]:
        raise CrossingError("path endpoints are not outside the region")
    idx = np.flatnonzero(inside[1:] != inside[:-1])
    if idx.size == 0:
        raise CrossingError("no crossing: path never enters the region")

    def locate(i):
        a, b = ts[i], ts[i + 1]
        if smooth:
            fa = float(vals[i])
            fb = float(vals[i + 1])
            if fa == 0.0:
                return a
            if fb == 0.0:
                return b
            scalar = lambda s: float(f(np.array([s]))[0])
            return brentq(scalar, a, b, xtol=time_tol, rtol=4 * np.finfo(float).eps)
        ina = bool(inside[i])
        while b - a > time_tol:
            m = 0.5 * (a + b)
            if (float(f(np.array([m]))[0]) < 0) == ina:
                a = m
            else:
                b = m
        return 0.5 * (a + b)

    entries = [locate(i) for i in idx if not inside[i]]
    exits = [locate(i) for i in idx if inside[i]]
    if mode == "convex" and (len(entries) != 1 or len(exits) != 1):
        raise CrossingError(
            f"{len(entries)} entries for a declared-convex region (expected 1)")
    return -entries[0], exits[-1]


# ---------------------------------------------------------------------------
# sojourn times and delays

@dataclass(frozen=True)
class ScatteringData:
    r: float
    t_minus: float
    t_plus: float
    p_minus: np.ndarray
    p_plus: np.ndarray
    x_minus: np.ndarray
    x_plus: np.ndarray
    x0_plus: np.ndarray
    x0p_minus: np.ndarray
    T: float
    T0: float
    T0p: float

    @property
    def xt_minus(self) -> np.ndarray:
        return self.x_minus + self.t_minus * self.p_minus

    @property
    def xt_plus(self) -> np.ndarray:
        return self.x_plus - self.t_plus * self.p_plus


def check_radius(region: Region, potential: Potential, r: float,
                 margin: float = 1.5) -> None:
    rmin = region.min_support if isinstance(region, StarRegion) else region.inner_radius
    if r * rmin < margin * potential.support_radius:
        raise ValidationError(
            f"r={r:g} too small: dilated region must contain the potential support "
            f"(need r*min(ell) >= {margin}*rho)")


def scattering_data(traj: Trajectory, region: Region, r: float,
                    mode: str = "convex") -> ScatteringData:
    check_radius(region, traj.potential, r)
    tm, tp = crossing_times(traj, region, r, mode)
    x_minus = traj.position(np.array([-tm]))[0]
    x_plus = traj.position(np.array([tp]))[0]
    incoming = FreeLine(x_minus, traj.p_minus, -tm)
    outgoing = FreeLine(x_plus, traj.p_plus, tp)
    a_in, b_in = crossing_times(incoming, region, r, mode)
    a_out, b_out = crossing_times(outgoing, region, r, mode)
    x0_plus = incoming.position(np.array([b_in]))[0]
    x0p_minus = outgoing.position(np.array([-a_out]))[0]
    return ScatteringData(r, tm, tp, traj.p_minus.copy(), traj.p_plus.copy(),
                          x_minus, x_plus, x0_plus, x0p_minus,
                          tm + tp, a_in + b_in, a_out + b_out)


def sojourn_times(traj: Trajectory, region: Region, r: float, mode: str = "convex"):
    """``(T_r, T0_r, T0p_r)`` for the full, incoming free and outgoing free paths."""
    sd = scattering_data(traj, region, r, mode)
    return sd.T, sd.T0, sd.T0p


@dataclass(frozen=True)
class DelayRow:
    r: float
    T_r: float
    T0_r: float
    T0p_r: float
    tau_in: float
    tau: float
    tau1: float
    tau2: float
    E: float
    b: float

    def as_tuple(self):
        return tuple(getattr(self, c) for c in CSV_COLUMNS)


def delay_row(sd: ScatteringData, energy: float, b: float,
              identity_tol: float = 1e-10) -> DelayRow:
    pm, pp = sd.p_minus, sd.p_plus
    nm, npl = float(pm @ pm), float(pp @ pp)
    tau_in = sd.T - sd.T0
    tau = sd.T - 0.5 * (sd.T0 + sd.T0p)
    tau1 = float(pm @ sd.xt_minus) / nm - float(pp @ sd.xt_plus) / npl
    tau2 = 0.5 * (float(pp @ sd.x_plus) / npl - float(pm @ sd.x_minus) / nm
                  - float(pm @ sd.x0_plus) / nm + float(pp @ sd.x0p_minus) / npl)
    scale = max(abs(sd.T), abs(tau), 1.0)
    if abs(tau - tau1 - tau2) > identity_tol * scale:
        raise IntegratorError("row identity tau = tau1 + tau2 violated")
    return DelayRow(sd.r, sd.T, sd.T0, sd.T0p, tau_in, tau, tau1, tau2, energy, b)


def time_delays(traj: Trajectory, region: Region, r: float,
                mode: str = "convex") -> DelayRow:
    sd = scattering_data(traj, region, r, mode)
    return delay_row(sd, traj.energy, traj.impact_parameter)


@dataclass
class TimeDelayCurve:
    rows: list = field(default_factory=list)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(row, name) for row in self.rows])

    @property
    def r(self) -> np.ndarray:
        return self.column("r")

    def as_dicts(self):
        return [asdict(row) for row in self.rows]


def time_delay_curve(traj: Trajectory, region: Region, r_grid: Sequence[float],
                     mode: str = "convex") -> TimeDelayCurve:
    rs = np.asarray(r_grid, dtype=float)
    if np.any(np.diff(rs) <= 0):
        raise ValidationError("r grid must be increasing")
    return TimeDelayCurve([time_delays(traj, region, float(r), mode) for r in rs])


def full_time_reversal(traj):
    """``(x(t), p(t)) -> (x(-t), -p(-t))`` for trajectories and free lines."""
    return traj.reversed()


def classical_ew_delay(traj: Trajectory, region: Region, r_grid: Sequence[float],
                       mode: str = "convex", tol: float = 1e-4):
    """Extrapolated limit of ``tau1`` over ``r_grid`` as a convergence verdict."""
    from .convergence import extrapolate_limit

    curve = time_delay_curve(traj, region, r_grid, mode)
    return extrapolate_limit(curve.r, curve.column("tau1"), tol=tol)


def geometric_grid(r_min: float, r_max: float, points: int) -> np.ndarray:
    if not (0 < r_min < r_max) or points < 2:
        raise ValidationError("need 0 < r_min < r_max and >= 2 points")
    return np.geomspace(r_min, r_max, points)


def r_grid_from_dict(doc: dict) -> np.ndarray:
    try:
        r_min = float(doc["r_min"])
        r_max = float(doc["r_max"])
        points = int(doc.get("points", 9))
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed r-grid block: {exc}") from exc
    spacing = doc.get("spacing", "geometric")
    if spacing == "geometric":
        return geometric_grid(r_min, r_max, points)
    if spacing == "linear":
        if not (0 < r_min < r_max) or points < 2:
            raise ValidationError("need 0 < r_min < r_max and >= 2 points")
        return np.linspace(r_min, r_max, points)
    raise ValidationError(f"unknown r spacing {spacing!r}")
