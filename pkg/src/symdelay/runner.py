"""Batch runner: executes a validated experiment and writes its artifacts.

Every experiment produces, inside ``<out>/<name>/``:

* one CSV per table (columns documented in ``docs/data_dictionary.md``),
* ``verdicts.json`` with the convergence verdicts and check records,
* ``report.txt`` listing each check as ``<label>: pass|FAIL`` together with
  the effective tolerances.

Artifacts are written only after all computation succeeded, and contain no
timestamps, so identical configs give byte-identical files.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import classical as cl
from .config import (DEFAULT_TOLERANCES, ExperimentConfig, crossing_mode, integrator_options, quantum_setup,
                     trajectory_specs)
from .convergence import (divergence_slope_vs_geometry, extrapolate_limit, loglog_slope,
                          residual_rows)
from .errors import NumericalError, SymDelayError, ValidationError
from .geometry import (G_sigma, R_sigma, StarRegion, check_assumption_I, direction_grid,
                       region_from_dict)
from .potentials import potential_from_dict, potential_to_dict

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3


@dataclass(frozen=True)
class CheckSpec:
    name: str
    kind: str
    criterion: Optional[int]
    label: str


_SPECS = [
    CheckSpec("geometry-exactness", "geometry-check", 1, "R_sigma quadrature vs closed form"),
    CheckSpec("g-homogeneity", "geometry-check", 1, "G homogeneity (random regions)"),
    CheckSpec("g-evenness", "geometry-check", 1, "G evenness (random regions)"),
    CheckSpec("region-g", "geometry-check", None, "G_{region} homogeneity"),
    CheckSpec("region-symmetry", "geometry-check", None, "shape-symmetry condition"),
    CheckSpec("ball-equivalence", "classical-delay", 2, "ball: tau and tau_in share the limit"),
    CheckSpec("tau-converges", "classical-delay", 3, "tau converges"),
    CheckSpec("tau-in-slope", "classical-delay", 3, "tau_in linear drift matches geometry"),
    CheckSpec("tau-diverges", "classical-delay", 4, "tau drifts with the geometric slope"),
    CheckSpec("classical-reversal", "reversal-check", 5, "classical time-reversal invariance"),
    CheckSpec("theorem", "quantum-delay", 6, "tau_Sigma, EW and A0 commutator agree"),
    CheckSpec("tau-free", "quantum-delay", 7, "tau - tau_free decreases to zero"),
    CheckSpec("stationary-s", "quantum-delay", None, "time-domain S vs stationary S"),
    CheckSpec("prop-asympt", "proposition-check", 8, "free time integral vs G commutator"),
    CheckSpec("prop-asympt-drift", "proposition-check", None,
              "asymmetric region: linear drift of the free time integral"),
    CheckSpec("conjugation", "proposition-check", 9, "chirp conjugation identity"),
    CheckSpec("s-symmetry", "reversal-check", 10, "S conj(phi) = conj(S^-1 phi)"),
    CheckSpec("quantum-reversal", "reversal-check", 10, "quantum time-reversal invariance"),
    CheckSpec("translation", "translation-check", 11, "translation covariance"),
]
CHECKS: Dict[str, CheckSpec] = {c.name: c for c in _SPECS}

DEFAULT_CHECKS = {
    "geometry-check": ("geometry-exactness", "g-homogeneity", "g-evenness", "region-g"),
    "classical-delay": ("tau-converges",),
    "quantum-delay": ("theorem", "tau-free", "stationary-s"),
    "proposition-check": ("prop-asympt",),
    ("reversal-check", "classical"): ("classical-reversal",),
    ("reversal-check", "quantum"): ("s-symmetry", "quantum-reversal"),
    "translation-check": ("translation",),
}


@dataclass
class CheckResult:
    name: str
    label: str
    criterion: Optional[int]
    passed: bool
    value: Optional[float]
    threshold: str
    detail: str = ""

    def line(self) -> str:
        tag = f"[criterion {self.criterion}] " if self.criterion else ""
        val = "" if self.value is None else f" value={_fmt(self.value)}"
        status = "pass" if self.passed else "FAIL"
        extra = f" ({self.detail})" if self.detail else ""
        return f"{tag}{self.label}: {status}{val} threshold={self.threshold}{extra}"


@dataclass
class Table:
    name: str
    header: Sequence[str]
    rows: List[Sequence]


@dataclass
class RunResult:
    config: ExperimentConfig
    checks: List[CheckResult] = field(default_factory=list)
    tables: List[Table] = field(default_factory=list)
    verdicts: Dict[str, object] = field(default_factory=dict)
    status: int = EXIT_OK
    error: Optional[str] = None

    @property
    def passed(self) -> bool:
        return self.status == EXIT_OK

    def check(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else "nan"
    return str(v)


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(u) for k, u in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(u) for u in v]
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return _jsonable(v.item())
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def _result(cfg: ExperimentConfig, name: str, passed: bool, value, threshold: str,
            detail: str = "") -> CheckResult:
    spec = CHECKS[name]
    label = spec.label
    if "{region}" in label and cfg.region is not None:
        label = label.format(region=(cfg.region.spec or {}).get("kind", "region"))
    v = None if value is None else float(value)
    return CheckResult(name, label, spec.criterion, bool(passed), v, threshold, detail)


# ---------------------------------------------------------------------------
# geometry

def _random_star_region(rng: np.random.Generator, dimension: int) -> StarRegion:
    if dimension == 1:
        return StarRegion(1, rng.uniform(0.3, 3.0, size=2), convex=True)
    n = 64
    ang = 2.0 * np.pi * np.arange(n) / n
    log_ell = np.log(rng.uniform(0.5, 2.0)) * np.ones(n)
    for m in range(1, 4):
        a, b = rng.uniform(-0.15, 0.15, size=2)
        log_ell += a * np.cos(m * ang) + b * np.sin(m * ang)
    return StarRegion(2, np.exp(log_ell), angles=ang)


def _random_point(rng: np.random.Generator, dimension: int) -> np.ndarray:
    u = rng.normal(size=dimension)
    u /= np.linalg.norm(u)
    return u * math.exp(rng.uniform(math.log(0.2), math.log(5.0)))


def run_geometry(cfg: ExperimentConfig, workers: int = 1) -> RunResult:
    res = RunResult(cfg)
    tol = cfg.tolerances["geometry_abs"]
    rng = np.random.default_rng(cfg.seed)
    trials = int(cfg.options.get("trials", 100))
    rows = []
    worst_r = worst_h = worst_e = 0.0
    for i in range(trials):
        d = 1 if i % 5 == 0 else 2
        reg = _random_star_region(rng, d)
        x = _random_point(rng, d)
        lam = math.exp(rng.uniform(math.log(0.1), math.log(10.0)))
        rq = R_sigma(reg, x, method="quadrature")
        rc = R_sigma(reg, x, method="closed")
        g1 = G_sigma(reg, x, method="quadrature")
        g_l = G_sigma(reg, lam * x, method="quadrature")
        g_m = G_sigma(reg, -x, method="quadrature")
        err_r, err_h, err_e = abs(rq - rc), abs(g_l - (g1 - math.log(lam))), abs(g_m - g1)
        worst_r, worst_h, worst_e = max(worst_r, err_r), max(worst_h, err_h), max(worst_e, err_e)
        rows.append((i, d, float(np.linalg.norm(x)), lam, rq, rc, err_r, err_h, err_e))
    res.tables.append(Table("geometry", ("trial", "dimension", "x_norm", "lambda",
                                         "R_quadrature", "R_closed", "abs_err",
                                         "G_homogeneity_err", "G_evenness_err"), rows))
    thr = f"<= {tol:g}"
    for name, worst in (("geometry-exactness", worst_r), ("g-homogeneity", worst_h),
                        ("g-evenness", worst_e)):
        if name in cfg.checks:
            res.checks.append(_result(cfg, name, worst <= tol, worst, thr,
                                      f"{trials} random star regions"))
    if cfg.region is not None:
        reg = cfg.region
        dirs = direction_grid(reg.dimension, int(cfg.options.get("directions", 32)))
        worst = 0.0
        for u in dirs:
            g1 = G_sigma(reg, u, method="quadrature")
            for lam in (0.25, 3.0):
                worst = max(worst, abs(G_sigma(reg, lam * u, method="quadrature")
                                       - (g1 - math.log(lam))))
        if "region-g" in cfg.checks:
            res.checks.append(_result(cfg, "region-g", worst <= tol, worst, thr))
        chk = check_assumption_I(reg, dirs)
        res.verdicts["assumption_I"] = {"holds": chk.holds, "worst_defect": chk.worst_defect,
                                        "worst_direction": chk.worst_direction}
        if "region-symmetry" in cfg.checks:
            expect = bool(cfg.options.get("expect_symmetric", True))
            res.checks.append(_result(cfg, "region-symmetry", chk.holds == expect,
                                      chk.worst_defect, f"holds={expect}"))
    return res


# ---------------------------------------------------------------------------
# classical

def _classical_task(args):
    region_doc, pot_doc, spec, opts_doc, r_grid, mode, reverse = args
    region = region_from_dict(region_doc)
    pot = potential_from_dict(pot_doc)
    opts = cl.IntegratorOptions(**opts_doc)
    traj = cl.scattering_trajectory(pot, spec["energy"], spec["b"], spec["direction"],
                                    spec["dimension"], opts)
    curve = cl.time_delay_curve(traj, region, r_grid, mode)
    out = {"rows": curve.rows, "p_minus": traj.p_minus.tolist(),
           "p_plus": traj.p_plus.tolist(), "speed": traj.speed,
           "energy_drift": float(traj.stats.get("energy_drift", 0.0))}
    if reverse:
        out["rev_rows"] = cl.time_delay_curve(traj.reversed(), region, r_grid, mode).rows
    return out


def _map(fn, tasks, workers: int):
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, tasks))
    return [fn(t) for t in tasks]


def _classical_curves(cfg: ExperimentConfig, workers: int, reverse: bool = False):
    specs = trajectory_specs(cfg.raw)
    opts = integrator_options(cfg.raw)
    mode = crossing_mode(cfg)
    region_doc = cfg.region.spec
    pot_doc = potential_to_dict(cfg.potential)
    tasks = [(region_doc, pot_doc, s, asdict(opts), [float(r) for r in cfg.r_grid], mode,
              reverse) for s in specs]
    return specs, mode, _map(_classical_task, tasks, workers)


def run_classical(cfg: ExperimentConfig, workers: int = 1) -> RunResult:
    res = RunResult(cfg)
    specs, mode, outs = _classical_curves(cfg, workers)
    tol = cfg.tolerances
    rows, resid = [], []
    per_traj = []
    for j, (spec, out) in enumerate(zip(specs, outs)):
        curve = cl.TimeDelayCurve(out["rows"])
        r = curve.r
        tau, tau_in = curve.column("tau"), curve.column("tau_in")
        rows += [(j,) + row.as_tuple() for row in curve.rows]
        v_tau = extrapolate_limit(r, tau, tol=tol["classical_converge"])
        v_in = extrapolate_limit(r, tau_in, tol=tol["classical_converge"])
        v_ew = extrapolate_limit(r, curve.column("tau1"), tol=tol["classical_converge"])
        resid += [(j, "tau") + row for row in residual_rows(r, tau, v_tau)]
        entry = {"trajectory": j, "energy": spec["energy"], "b": spec["b"],
                 "direction": spec["direction"], "mode": mode,
                 "energy_drift": out["energy_drift"],
                 "tau": v_tau.to_dict(), "tau_in": v_in.to_dict(), "tau1": v_ew.to_dict()}
        pm, pp, p = out["p_minus"], out["p_plus"], out["speed"]
        if isinstance(cfg.region, StarRegion):
            entry["slope_tau_in"] = divergence_slope_vs_geometry(
                r, tau_in, cfg.region, pm, pp, p, "tau_in_minus_tau").to_dict()
            entry["slope_tau2"] = divergence_slope_vs_geometry(
                r, tau, cfg.region, pm, pp, p, "tau2").to_dict()
        diff = np.abs(tau - tau_in)
        if np.all(diff > 0):
            s, s_err, r2 = loglog_slope(r, diff)
            entry["loglog_tau_minus_tau_in"] = {"slope": s, "slope_error": s_err,
                                                "r_squared": r2}
        per_traj.append(entry)
    res.tables.append(Table("classical_delays", ("trajectory",) + cl.CSV_COLUMNS, rows))
    res.tables.append(Table("classical_residuals", ("trajectory", "quantity", "r", "value",
                                                    "residual"), resid))
    res.verdicts["trajectories"] = per_traj
    n = len(per_traj)

    if "ball-equivalence" in cfg.checks:
        centre, band = tol["loglog_slope"], tol["loglog_slope_band"]
        worst_slope, worst_lim, ok = 0.0, 0.0, True
        for e in per_traj:
            ll = e.get("loglog_tau_minus_tau_in")
            dev = abs(ll["slope"] - centre) if ll else math.inf
            lim = abs(e["tau"]["fit_limit"] - e["tau_in"]["fit_limit"])
            worst_slope, worst_lim = max(worst_slope, dev), max(worst_lim, lim)
            ok &= dev <= band and lim <= tol["limit_agreement"]
        res.checks.append(_result(
            cfg, "ball-equivalence", ok, worst_lim,
            f"|slope-({centre:g})| <= {band:g}, |limit gap| <= {tol['limit_agreement']:g}",
            f"{n} trajectories, worst slope deviation {worst_slope:.3g}"))
    if "tau-converges" in cfg.checks:
        gaps = [e["tau"]["final_gap"] for e in per_traj]
        ok = all(e["tau"]["mode"] == "converged" or e["tau"]["final_gap"] <= tol["final_gap"]
                 for e in per_traj) and max(gaps) <= tol["final_gap"]
        res.checks.append(_result(cfg, "tau-converges", ok, max(gaps),
                                  f"final doubling gap <= {tol['final_gap']:g}",
                                  f"{n} trajectories"))
    for name, key, mode_req in (("tau-in-slope", "slope_tau_in", "tau_in"),
                                ("tau-diverges", "slope_tau2", "tau")):
        if name not in cfg.checks:
            continue
        if not isinstance(cfg.region, StarRegion):
            raise ValidationError(f"check {name!r} needs a star region")
        worst = max(e[key]["discrepancy"] for e in per_traj)
        ok = worst <= tol["slope_relative"] and all(
            e[mode_req]["mode"] == "linear-divergence" for e in per_traj)
        res.checks.append(_result(cfg, name, ok, worst,
                                  f"relative slope discrepancy <= {tol['slope_relative']:g}",
                                  f"{n} trajectories, verdict linear-divergence required"))
    return res


def run_classical_reversal(cfg: ExperimentConfig, workers: int = 1) -> RunResult:
    res = RunResult(cfg)
    specs, mode, outs = _classical_curves(cfg, workers, reverse=True)
    rows = []
    worst_rev = worst_mean = 0.0
    for j, out in enumerate(outs):
        for a, b in zip(out["rows"], out["rev_rows"]):
            d_rev = abs(a.tau - b.tau)
            d_mean = abs(a.tau - 0.5 * (a.tau_in + b.tau_in))
            worst_rev, worst_mean = max(worst_rev, d_rev), max(worst_mean, d_mean)
            rows.append((j, a.r, a.tau, b.tau, a.tau_in, b.tau_in, d_rev, d_mean))
    res.tables.append(Table("classical_reversal", ("trajectory", "r", "tau", "tau_rev",
                                                   "tau_in", "tau_in_rev", "abs_tau_diff",
                                                   "abs_mean_diff"), rows))
    thr = cfg.tolerances["reversal_abs"]
    res.verdicts["classical_reversal"] = {"max_abs_tau_diff": worst_rev,
                                          "max_abs_mean_diff": worst_mean}
    res.checks.append(_result(cfg, "classical-reversal", max(worst_rev, worst_mean) <= thr,
                              max(worst_rev, worst_mean), f"<= {thr:g}",
                              f"{len(specs)} trajectories x {len(cfg.r_grid)} radii"))
    return res


# ---------------------------------------------------------------------------
# quantum

def _pairwise(values: Dict[str, float]) -> Tuple[float, str]:
    worst, pair = 0.0, ""
    keys = sorted(values)
    for i, a in enumerate(keys):
        for b in keys[i + 1:]:
            va, vb = values[a], values[b]
            rel = abs(va - vb) / max(abs(va), abs(vb), 1e-300)
            if rel >= worst:
                worst, pair = rel, f"{a} vs {b}"
    return worst, pair


def _delay_table(name: str, rows) -> Table:
    from .quantum.delays import CSV_COLUMNS
    return Table(name, CSV_COLUMNS, [row.as_tuple() for row in rows])


def _cook_table(report) -> Table:
    hist = report.cook.history if report.cook is not None else []
    return Table("cook_history", ("T", "residual"),
                 [(T, "" if r is None else r) for T, r in hist])


def run_quantum_delay(cfg: ExperimentConfig, workers: int = 1) -> RunResult:
    from .quantum.delays import a0_commutator_expectation, quantum_time_delays
    from .quantum.propagation import SplitStep
    from .quantum.stationary import apply_stationary_s, stationary_ew_delay

    res = RunResult(cfg)
    tol = cfg.tolerances
    grid, state, settings = quantum_setup(cfg)
    prop = SplitStep(grid, cfg.potential, settings.dt)
    rep = quantum_time_delays(state, cfg.region, cfg.r_grid, cfg.potential, settings,
                              propagator=prop)
    r = rep.r
    tau = rep.column("tau")
    rel_tol = tol["quantum_converge_relative"]
    v_tau = extrapolate_limit(r, tau, tol=rel_tol, relative=True)
    v_in = extrapolate_limit(r, rep.column("tau_in"), tol=rel_tol, relative=True)
    ew = stationary_ew_delay(cfg.potential, state, unitarity_tol=tol["unitarity_tol"])
    a0 = a0_commutator_expectation(state, rep.sphi, settings)
    res.tables += [_delay_table("quantum_delays", rep.rows),
                   Table("smatrix", ("lambda", "t_L_re", "t_L_im", "r_R_re", "r_R_im",
                                     "r_L_re", "r_L_im", "t_R_re", "t_R_im",
                                     "ew_integrand"), ew.rows()),
                   _cook_table(rep),
                   Table("quantum_residuals", ("r", "tau", "residual"),
                         residual_rows(r, tau, v_tau))]
    res.verdicts.update({
        "tau": v_tau.to_dict(), "tau_in": v_in.to_dict(),
        "note": "quantum extrapolation uses the c/r model as a working hypothesis",
        "ew_delay": ew.value, "ew_imaginary": ew.imaginary, "ew_norm_check": ew.norm_check,
        "max_unitarity_defect": ew.max_unitarity_defect,
        "minus_a0_commutator": -a0,
        "cook": {"T": rep.cook.T, "residual": rep.cook.residual} if rep.cook else None,
        "window_T": rep.run.T, "tail": rep.run.tail, "tail_bound": rep.run.tail_bound,
        "s_consistency": rep.run.s_consistency, "max_edge_mass": rep.run.max_edge_mass,
    })
    if "theorem" in cfg.checks:
        vals = {"tau_Sigma": v_tau.fit_limit, "ew": ew.value, "minus_a0": -a0}
        worst, pair = _pairwise(vals)
        ok = worst <= tol["theorem_relative"] and v_tau.converged
        res.checks.append(_result(
            cfg, "theorem", ok, worst, f"pairwise relative <= {tol['theorem_relative']:g}",
            f"worst pair {pair}; tau_Sigma={_fmt(vals['tau_Sigma'])} ew={_fmt(ew.value)} "
            f"-a0={_fmt(-a0)}; tau verdict {v_tau.mode}"))
    if "tau-free" in cfg.checks:
        gap = np.abs(tau - rep.column("tau_free"))
        floor = tol["cook_tol"]
        decreasing = bool(np.all(np.diff(gap) <= floor))
        bound = tol["tau_free_relative"] * abs(v_tau.fit_limit)
        res.verdicts["tau_free_gap"] = gap.tolist()
        res.checks.append(_result(
            cfg, "tau-free", decreasing and gap[-1] <= bound, float(gap[-1]),
            f"non-increasing (noise floor {floor:g}) and final <= {bound:.3g}",
            "" if decreasing else "gap not non-increasing"))
    if "stationary-s" in cfg.checks:
        s_stat = apply_stationary_s(state, cfg.potential, tol["unitarity_tol"])
        diff = grid.norm(s_stat.psi - rep.sphi.psi) / state.norm()
        res.verdicts["stationary_s_difference"] = diff
        thr = tol["stationary_s_relative"]
        res.checks.append(_result(cfg, "stationary-s", diff <= thr, diff, f"<= {thr:g}"))
    return res


def run_proposition(cfg: ExperimentConfig, workers: int = 1) -> RunResult:
    from .quantum.delays import (conjugation_identity_check, gaussian_bump,
                                 proposition_asympt_check)

    res = RunResult(cfg)
    tol = cfg.tolerances
    grid, state, settings = quantum_setup(cfg)
    if "prop-asympt" in cfg.checks or "prop-asympt-drift" in cfg.checks:
        allow = "prop-asympt-drift" in cfg.checks
        rec = proposition_asympt_check(state, cfg.region, cfg.r_grid, settings,
                                       allow_violation=allow)
        res.tables.append(Table("proposition", ("r", "lhs", "rhs"), rec.rows()))
        res.verdicts["proposition"] = {
            "rhs": rec.rhs, "relative_error": rec.relative_error,
            "assumption_I": rec.assumption_I, "worst_defect": rec.worst_defect,
            "predicted_slope": rec.predicted_slope, "lhs": rec.verdict}
        if "prop-asympt" in cfg.checks:
            thr = tol["prop_asympt_relative"]
            res.checks.append(_result(cfg, "prop-asympt", rec.relative_error <= thr,
                                      rec.relative_error, f"relative <= {thr:g}",
                                      f"rhs={_fmt(rec.rhs)}"))
        if "prop-asympt-drift" in cfg.checks:
            from .convergence import linear_fit, top_half
            rh, vh = top_half(rec.r, rec.lhs, minimum=3)
            s, _, _, _ = linear_fit(rh, vh)
            pred = rec.predicted_slope
            disc = abs(s - pred) / max(abs(pred), 1e-300)
            thr = tol["slope_relative"]
            res.checks.append(_result(cfg, "prop-asympt-drift", disc <= thr, disc,
                                      f"relative slope discrepancy <= {thr:g}",
                                      f"fitted {s:.6g}, predicted {pred:.6g}"))
    if "conjugation" in cfg.checks:
        times = [float(t) for t in cfg.options.get("times", [0.3, -0.3, 0.7, -0.7])]
        fdoc = dict(cfg.options.get("F") or {})
        F = gaussian_bump(float(fdoc.get("center", 0.3)), float(fdoc.get("width", 1.5)))
        rows = [(t, conjugation_identity_check(state, F, t)) for t in times]
        res.tables.append(Table("conjugation", ("t", "residual"), rows))
        worst = max(v for _, v in rows)
        thr = tol["conjugation_abs"]
        res.checks.append(_result(cfg, "conjugation", worst <= thr, worst, f"<= {thr:g}",
                                  f"t in {times}"))
    return res


def run_quantum_reversal(cfg: ExperimentConfig, workers: int = 1) -> RunResult:
    from .quantum.delays import reversal_invariance_check

    res = RunResult(cfg)
    tol = cfg.tolerances
    grid, state, settings = quantum_setup(cfg)
    rec = reversal_invariance_check(state, cfg.region, cfg.r_grid, cfg.potential, settings,
                                    with_s_symmetry="s-symmetry" in cfg.checks)
    rows = [(float(r), a, b, c, d) for r, a, b, c, d in
            zip(rec.r, rec.tau_phi, rec.tau_f, rec.tau_in_phi, rec.tau_in_f)]
    res.tables.append(Table("quantum_reversal", ("r", "tau_phi", "tau_f_phi", "tau_in_phi",
                                                 "tau_in_f_phi"), rows))
    mean_rel = float(np.max(np.abs(rec.tau_phi - 0.5 * (rec.tau_in_phi + rec.tau_in_f))
                            / np.abs(rec.tau_phi)))
    res.verdicts["quantum_reversal"] = {
        "max_relative_gap": rec.max_relative_gap, "max_relative_mean_gap": mean_rel,
        "involution_residual": rec.involution_residual,
        "s_symmetry_residual": rec.s_symmetry_residual}
    if "s-symmetry" in cfg.checks:
        thr = tol["s_symmetry_abs"]
        res.checks.append(_result(cfg, "s-symmetry", rec.s_symmetry_residual <= thr,
                                  rec.s_symmetry_residual, f"<= {thr:g}"))
    if "quantum-reversal" in cfg.checks:
        thr = tol["q_reversal_relative"]
        worst = max(rec.max_relative_gap, mean_rel)
        res.checks.append(_result(
            cfg, "quantum-reversal", worst <= thr, worst, f"relative <= {thr:g}",
            f"involution residual {rec.involution_residual:.3g}"))
    return res


def run_translation(cfg: ExperimentConfig, workers: int = 1) -> RunResult:
    from .quantum.delays import quantum_time_delays, translation_covariance_check

    res = RunResult(cfg)
    tol = cfg.tolerances
    grid, state, settings = quantum_setup(cfg)
    a = float(cfg.options.get("a", 2.0))
    rep = quantum_time_delays(state, cfg.region, cfg.r_grid, cfg.potential, settings,
                              shift=a)
    rec = translation_covariance_check(state, a, cfg.region, cfg.r_grid, cfg.potential,
                                       settings, report=rep)
    rows = [(float(r), x, y) for r, x, y in
            zip(rep.r, rep.column("tau"), rep.column("tau", shifted=True))]
    res.tables += [Table("translation", ("r", "tau", "tau_translated"), rows),
                   _delay_table("quantum_delays", rep.rows),
                   _delay_table("quantum_delays_translated", rep.shifted_rows)]
    res.verdicts["translation"] = _jsonable(asdict(rec))
    thr = tol["translation_relative"]
    ok = rec.relative_error <= thr and rec.lhs_verdict["mode"] == "converged"
    res.checks.append(_result(cfg, "translation", ok, rec.relative_error,
                              f"relative <= {thr:g}",
                              f"lhs={_fmt(rec.lhs)} rhs={_fmt(rec.rhs)} a={a:g}"))
    return res


HANDLERS: Dict[str, Callable[[ExperimentConfig, int], RunResult]] = {
    "geometry-check": run_geometry,
    "classical-delay": run_classical,
    "quantum-delay": run_quantum_delay,
    "proposition-check": run_proposition,
    "translation-check": run_translation,
}


def execute(cfg: ExperimentConfig, workers: int = 1) -> RunResult:
    """Run an experiment in memory; numerical aborts become a status, not an exception."""
    if cfg.kind == "reversal-check":
        handler = (run_classical_reversal if cfg.raw.get("engine", "quantum") == "classical"
                   else run_quantum_reversal)
    else:
        handler = HANDLERS[cfg.kind]
    try:
        res = handler(cfg, workers)
    except ValidationError as exc:
        res = RunResult(cfg, status=EXIT_VALIDATION, error=f"validation: {exc}")
        return res
    except (NumericalError, SymDelayError) as exc:
        res = RunResult(cfg, status=EXIT_NUMERICAL,
                        error=f"numerical abort ({type(exc).__name__}): {exc}")
        return res
    res.status = EXIT_OK if all(c.passed for c in res.checks) else EXIT_CHECK_FAILED
    return res


# ---------------------------------------------------------------------------
# artifacts

def _csv_text(table: Table) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.header)
    for row in table.rows:
        w.writerow([_fmt(float(v)) if isinstance(v, (float, np.floating)) else v
                    for v in row])
    return buf.getvalue()


_EXTRAPOLATED_KINDS = ("quantum-delay", "translation-check", "proposition-check")


def report_text(res: RunResult) -> str:
    cfg = res.config
    lines = [f"experiment: {cfg.name}", f"kind: {cfg.kind}", f"seed: {cfg.seed}"]
    if res.error:
        lines.append(f"status: aborted, {res.error}")
    lines.append("effective tolerances:")
    for k, v in sorted(cfg.tolerances.items()):
        default = DEFAULT_TOLERANCES.get(k)
        note = "" if default == v else f"  (override; default {_fmt(default)})"
        lines.append(f"  {k} = {_fmt(v)}{note}")
    if cfg.kind in _EXTRAPOLATED_KINDS:
        lines.append("note: quantum tau_r limits use the fitted model tau_inf + c/r, "
                     "a working hypothesis (no convergence rate is known)")
    lines.append("checks:")
    lines += [f"  {c.line()}" for c in res.checks]
    n_ok = sum(c.passed for c in res.checks)
    lines.append(f"summary: {n_ok}/{len(res.checks)} checks passed")
    return "\n".join(lines) + "\n"


def write_artifacts(res: RunResult, out_dir) -> Path:
    """Write CSVs, ``verdicts.json`` and ``report.txt``; returns the experiment directory."""
    target = Path(out_dir) / res.config.name
    target.mkdir(parents=True, exist_ok=True)
    for table in res.tables:
        (target / f"{table.name}.csv").write_text(_csv_text(table))
    summary = {
        "experiment": res.config.name, "kind": res.config.kind, "seed": res.config.seed,
        "status": res.status, "error": res.error,
        "tolerances": res.config.tolerances,
        "checks": [asdict(c) for c in res.checks],
        "verdicts": res.verdicts,
    }
    (target / "verdicts.json").write_text(
        json.dumps(_jsonable(summary), indent=2, sort_keys=True) + "\n")
    (target / "report.txt").write_text(report_text(res))
    return target


def run(cfg: ExperimentConfig, out_dir=None, workers: int = 1) -> RunResult:
    """Execute and, unless the run aborted, write artifacts under ``out_dir``."""
    res = execute(cfg, workers)
    out = out_dir or cfg.output
    if out is not None and res.status in (EXIT_OK, EXIT_CHECK_FAILED):
        write_artifacts(res, out)
    return res
