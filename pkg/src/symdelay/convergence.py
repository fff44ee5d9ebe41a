"""Verdicts on sampled delay curves: limits, Cauchy gaps and linear drifts."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict
from typing import Optional, Sequence

import numpy as np

from .errors import ValidationError
from .geometry import Region, StarRegion

MODELS = ("c/r", "c/r + d/r^2")
CLASSICAL_TOL = 1e-4
QUANTUM_REL_TOL = 1e-2


@dataclass
class ConvergenceVerdict:
    mode: str
    limit: Optional[float] = None
    limit_error: Optional[float] = None
    slope: Optional[float] = None
    slope_error: Optional[float] = None
    r_squared: Optional[float] = None
    gaps: list = field(default_factory=list)
    gap_radii: list = field(default_factory=list)
    final_gap: Optional[float] = None
    tolerance: Optional[float] = None
    model: str = "c/r"
    coefficients: list = field(default_factory=list)
    residuals: list = field(default_factory=list)
    fit_limit: Optional[float] = None
    fit_limit_error: Optional[float] = None
    note: str = ""

    @property
    def converged(self) -> bool:
        return self.mode == "converged"

    def to_dict(self) -> dict:
        out = asdict(self)
        return {k: _jsonable(v) for k, v in out.items()}


def _jsonable(v):
    if isinstance(v, (list, tuple)):
        return [_jsonable(u) for u in v]
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def _check_rows(r, values, minimum=5):
    r = np.asarray(r, dtype=float).ravel()
    v = np.asarray(values, dtype=float).ravel()
    if r.size != v.size:
        raise ValidationError("r and values differ in length")
    if r.size < minimum:
        raise ValidationError(f"need at least {minimum} rows")
    if np.any(np.diff(r) <= 0) or r[0] <= 0:
        raise ValidationError("r must be positive and increasing")
    if not np.all(np.isfinite(v)):
        raise ValidationError("values must be finite")
    return r, v


def doubling_gaps(r, values):
    """``|v(R) - v(R/2)|`` at ``R = r_max / 2^j``, ordered by increasing ``R``.

    Values between grid points are interpolated linearly in ``1/r``.
    """
    r = np.asarray(r, dtype=float)
    v = np.asarray(values, dtype=float)
    inv = 1.0 / r[::-1]
    vals = v[::-1]

    def at(x):
        return float(np.interp(1.0 / x, inv, vals))

    radii, gaps = [], []
    top = r[-1]
    while top / 2.0 >= r[0] * (1.0 - 1e-12):
        radii.append(top)
        gaps.append(abs(at(top) - at(max(top / 2.0, r[0]))))
        top /= 2.0
    return np.array(radii[::-1]), np.array(gaps[::-1])


def top_half(r, values, minimum: int = 2):
    n = len(r)
    k = min(max((n + 1) // 2, minimum), n)
    return np.asarray(r)[n - k:], np.asarray(values)[n - k:]


def linear_fit(r, values):
    """Least-squares ``a + s*r``: returns ``(s, s_err, a, R^2)``."""
    r = np.asarray(r, dtype=float)
    v = np.asarray(values, dtype=float)
    A = np.stack([np.ones_like(r), r], axis=1)
    coef, *_ = np.linalg.lstsq(A, v, rcond=None)
    resid = v - A @ coef
    ss_res = float(resid @ resid)
    ss_tot = float(np.sum((v - v.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else (1.0 if ss_res == 0 else 0.0)
    dof = max(r.size - 2, 1)
    cov = np.linalg.inv(A.T @ A) * ss_res / dof
    return float(coef[1]), float(math.sqrt(max(cov[1, 1], 0.0))), float(coef[0]), r2


def loglog_slope(r, values):
    """Slope of ``log|values|`` against ``log r`` over all rows."""
    r = np.asarray(r, dtype=float)
    v = np.abs(np.asarray(values, dtype=float))
    if np.any(v <= 0):
        raise ValidationError("log-log fit needs nonzero values")
    s, s_err, _, r2 = linear_fit(np.log(r), np.log(v))
    return s, s_err, r2


def model_fit(r, values, model: str = "c/r"):
    """Fit ``tau_inf + c/r`` (optionally ``+ d/r^2``); returns coef, cov, residuals, cond."""
    if model not in MODELS:
        raise ValidationError(f"unknown model {model!r}")
    r = np.asarray(r, dtype=float)
    v = np.asarray(values, dtype=float)
    cols = [np.ones_like(r), 1.0 / r]
    if model == "c/r + d/r^2":
        cols.append(1.0 / r ** 2)
    A = np.stack(cols, axis=1)
    # column scaling keeps the conditioning number meaningful
    scale = np.max(np.abs(A), axis=0)
    As = A / scale
    coef_s, *_ = np.linalg.lstsq(As, v, rcond=None)
    cond = float(np.linalg.cond(As))
    resid = v - As @ coef_s
    dof = max(r.size - A.shape[1], 1)
    sigma2 = float(resid @ resid) / dof
    cov_s = np.linalg.pinv(As.T @ As) * sigma2
    coef = coef_s / scale
    cov = cov_s / np.outer(scale, scale)
    return coef, cov, resid, cond


def extrapolate_limit(r: Sequence[float], values: Sequence[float], model: str = "c/r",
                      tol: float = CLASSICAL_TOL, relative: bool = False,
                      noise_floor: Optional[float] = None,
                      min_doublings: int = 3) -> ConvergenceVerdict:
    """Classify a sampled sequence and extrapolate its limit when it converges.

    ``tol`` is absolute unless ``relative`` is true, in which case it is taken
    relative to the magnitude of the fitted limit.  Gaps may grow by at most
    ``noise_floor`` (default ``tol/100``) between doublings and still count as
    decreasing.
    """
    r, v = _check_rows(r, values)
    # top half of the grid, but at least two rows more than fit parameters
    rf, vf = top_half(r, v, minimum=4 if model == "c/r" else 5)
    coef, cov, resid, cond = model_fit(rf, vf, model)
    radii, gaps = doubling_gaps(r, v)
    limit = float(coef[0])
    abs_tol = tol * abs(limit) if relative else tol
    floor = abs_tol * 1e-2 if noise_floor is None else noise_floor
    verdict = ConvergenceVerdict(
        mode="undetermined", gaps=gaps.tolist(), gap_radii=radii.tolist(),
        final_gap=float(gaps[-1]) if gaps.size else None, tolerance=abs_tol,
        model=model, coefficients=[float(c) for c in coef],
        residuals=[float(x) for x in resid], fit_limit=limit,
        fit_limit_error=float(math.sqrt(max(cov[0, 0], 0.0)) + np.max(np.abs(resid))))
    if not np.all(np.isfinite(coef)) or cond > 1e12:
        verdict.note = "ill-conditioned fit"
        return verdict
    last = gaps[-min_doublings:] if gaps.size >= min_doublings else np.empty(0)
    decreasing = last.size == min_doublings and bool(
        np.all(np.diff(last) <= floor))
    if decreasing and gaps[-1] <= abs_tol:
        verdict.mode = "converged"
        verdict.limit = limit
        verdict.limit_error = verdict.fit_limit_error
        return verdict
    rh, vh = top_half(r, v, minimum=3)
    s, s_err, _, r2 = linear_fit(rh, vh)
    verdict.slope, verdict.slope_error, verdict.r_squared = s, s_err, r2
    drift = abs(s) * (rh[-1] - rh[0])
    if r2 >= 0.99 and drift > abs_tol:
        verdict.mode = "linear-divergence"
    elif gaps.size < min_doublings:
        verdict.note = f"fewer than {min_doublings} doublings in the r grid"
    elif not decreasing:
        verdict.note = "doubling gaps not decreasing"
    else:
        verdict.note = "final doubling gap above tolerance"
    return verdict


@dataclass(frozen=True)
class SlopeComparison:
    fitted: float
    fitted_error: float
    predicted: float
    discrepancy: float
    relative: bool
    r_squared: float

    def to_dict(self) -> dict:
        return asdict(self)


def predicted_slope(region: Region, p_hat_minus, p_hat_plus, p: float,
                    which: str = "tau2") -> float:
    """Geometric slope of ``tau2`` or ``tau_in - tau`` in ``r``."""
    if not isinstance(region, StarRegion):
        raise ValidationError("slope prediction needs boundary_distance (star region)")
    pm = np.asarray(p_hat_minus, dtype=float)
    pp = np.asarray(p_hat_plus, dtype=float)
    pm = pm / np.linalg.norm(pm)
    pp = pp / np.linalg.norm(pp)
    d = region.boundary_distance
    if which == "tau2":
        return (d(pp) - d(-pp) - d(pm) + d(-pm)) / (2.0 * p)
    if which == "tau_in_minus_tau":
        return (d(pp) + d(-pp) - d(pm) - d(-pm)) / (2.0 * p)
    raise ValidationError(f"unknown slope variant {which!r}")


def divergence_slope_vs_geometry(r, values, region: Region, p_hat_minus, p_hat_plus,
                                 p: float, which: str = "tau2") -> SlopeComparison:
    """Compare the top-half linear slope of ``values`` with the geometric prediction.

    The discrepancy is relative when the prediction is nonzero, absolute otherwise.
    """
    r, v = _check_rows(r, values, minimum=3)
    pred = predicted_slope(region, p_hat_minus, p_hat_plus, p, which)
    rh, vh = top_half(r, v, minimum=3)
    s, s_err, _, r2 = linear_fit(rh, vh)
    if pred != 0.0:
        return SlopeComparison(s, s_err, pred, abs(s - pred) / abs(pred), True, r2)
    return SlopeComparison(s, s_err, pred, abs(s), False, r2)


def residual_rows(r, values, verdict: ConvergenceVerdict):
    """``(r, value, model residual)`` rows over the full grid."""
    r = np.asarray(r, dtype=float)
    v = np.asarray(values, dtype=float)
    coef = np.asarray(verdict.coefficients, dtype=float)
    model = coef[0] + coef[1] / r
    if coef.size > 2:
        model = model + coef[2] / r ** 2
    return [(float(a), float(b), float(b - m)) for a, b, m in zip(r, v, model)]
