"""Experiment configuration: one YAML or JSON document per experiment.

Top-level keys::

    name        free-form identifier used in artifact names
    kind        geometry-check | classical-delay | quantum-delay |
                proposition-check | reversal-check | translation-check
    checks      list of check names (defaults depend on ``kind``)
    region      region block (see ``geometry.region_from_dict``)
    potential   potential block (see ``potentials.potential_from_dict``)
    trajectories  classical: {dimension, energy, direction, impact_parameters}
                  or {dimension, list: [{energy, b, direction}, ...]}
    integrator  classical: IntegratorOptions fields
    grid        quantum: {N, L}
    state       quantum: {kind: filtered|gaussian, x0, sigma, k0, J, width_fraction}
    propagation quantum: {dt, stride, margin_sigmas}
    r_grid      {r_min, r_max, points, spacing}
    tolerances  overrides of the per-check thresholds
    options     kind-specific extras (translation a, conjugation times, ...)
    output      output directory (overridden by --out)
    seed        integer seed for randomised checks
"""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import yaml

from .classical import IntegratorOptions, r_grid_from_dict
from .errors import ValidationError
from .geometry import Region, region_from_dict
from .potentials import Potential, potential_from_dict

KINDS = ("geometry-check", "classical-delay", "quantum-delay", "proposition-check",
         "reversal-check", "translation-check")

TOP_KEYS = {"name", "kind", "checks", "criteria", "region", "potential", "trajectories",
            "integrator", "grid", "state", "propagation", "r_grid", "tolerances",
            "options", "output", "seed", "description", "engine"}

# default thresholds, echoed into every report
DEFAULT_TOLERANCES: Dict[str, float] = {
    "geometry_abs": 1e-8,
    "loglog_slope": -1.0,
    "loglog_slope_band": 0.2,
    "limit_agreement": 1e-3,
    "final_gap": 1e-3,
    "slope_relative": 0.02,
    "classical_converge": 1e-4,
    "reversal_abs": 1e-6,
    "theorem_relative": 0.05,
    "tau_free_relative": 1e-2,
    "stationary_s_relative": 1e-2,
    "prop_asympt_relative": 0.03,
    "conjugation_abs": 1e-8,
    "s_symmetry_abs": 1e-6,
    "q_reversal_relative": 1e-3,
    "translation_relative": 0.05,
    "quantum_converge_relative": 1e-2,
    "cook_tol": 1e-8,
    "tail_tol": 1e-8,
    "unitarity_tol": 1e-8,
}


@dataclass
class ExperimentConfig:
    name: str
    kind: str
    checks: List[str]
    raw: Dict[str, Any]
    tolerances: Dict[str, float]
    seed: int = 0
    output: Optional[str] = None
    region: Optional[Region] = None
    potential: Optional[Potential] = None
    r_grid: Optional[np.ndarray] = None
    options: Dict[str, Any] = field(default_factory=dict)

    def block(self, key: str) -> dict:
        return dict(self.raw.get(key) or {})


def load_document(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc}") from exc
    try:
        doc = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ValidationError(f"cannot parse config {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ValidationError("config must be a mapping")
    return doc


def _default_checks(kind: str, doc: dict) -> List[str]:
    from .runner import DEFAULT_CHECKS
    if kind == "reversal-check":
        return list(DEFAULT_CHECKS[(kind, doc.get("engine", "quantum"))])
    return list(DEFAULT_CHECKS[kind])


def crossing_mode(cfg: "ExperimentConfig") -> str:
    """``convex`` (default) or the explicit ``first-last`` convention for non-convex regions."""
    mode = cfg.options.get("crossing", "convex")
    if mode not in ("convex", "first-last"):
        raise ValidationError(f"unknown crossing mode {mode!r}")
    if mode == "convex" and not getattr(cfg.region, "convex", False):
        raise ValidationError(
            "region is not declared convex; set options.crossing = first-last to use the "
            "first-entry/last-exit convention")
    return mode


def integrator_options(doc: dict) -> IntegratorOptions:
    block = dict(doc.get("integrator") or {})
    allowed = set(IntegratorOptions.__dataclass_fields__)
    extra = set(block) - allowed
    if extra:
        raise ValidationError(f"unknown integrator keys: {sorted(extra)}")
    try:
        opts = IntegratorOptions(**block)
    except TypeError as exc:
        raise ValidationError(f"malformed integrator block: {exc}") from exc
    if opts.method not in ("DOP853", "RK45", "verlet"):
        raise ValidationError(f"unknown integrator {opts.method!r}")
    return opts


def trajectory_specs(doc: dict) -> List[dict]:
    block = doc.get("trajectories")
    if not isinstance(block, dict):
        raise ValidationError("classical experiments need a 'trajectories' block")
    dim = int(block.get("dimension", 2))
    if "list" in block:
        specs = [dict(item) for item in block["list"]]
    else:
        bs = block.get("impact_parameters", [0.0])
        specs = [{"energy": block.get("energy", 1.0), "b": b,
                  "direction": block.get("direction", 0.0)} for b in bs]
    out = []
    for s in specs:
        try:
            e, b, d = float(s["energy"]), float(s.get("b", 0.0)), float(s.get("direction", 0.0))
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed trajectory entry: {exc}") from exc
        if not e > 0:
            raise ValidationError("trajectory energy must be positive")
        out.append({"energy": e, "b": b, "direction": d, "dimension": dim})
    if not out:
        raise ValidationError("no trajectories configured")
    return out


def validate(doc: dict, source: str = "<config>") -> ExperimentConfig:
    """Validate every block against its module's preconditions; builds no heavy state."""
    if not isinstance(doc, dict):
        raise ValidationError("config must be a mapping")
    doc = copy.deepcopy(doc)
    unknown = set(doc) - TOP_KEYS
    if unknown:
        raise ValidationError(f"unknown top-level keys: {sorted(unknown)}")
    kind = doc.get("kind")
    if kind not in KINDS:
        raise ValidationError(f"'kind' must be one of {KINDS}, got {kind!r}")
    name = str(doc.get("name", Path(source).stem))
    tol = dict(DEFAULT_TOLERANCES)
    for key, val in (doc.get("tolerances") or {}).items():
        if key not in DEFAULT_TOLERANCES:
            raise ValidationError(f"unknown tolerance {key!r}")
        try:
            tol[key] = float(val)
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"tolerance {key!r} must be a number") from exc
    try:
        seed = int(doc.get("seed", 0))
    except (TypeError, ValueError) as exc:
        raise ValidationError("seed must be an integer") from exc
    checks = doc.get("checks") or _default_checks(kind, doc)
    from .runner import CHECKS
    for c in checks:
        if c not in CHECKS:
            raise ValidationError(f"unknown check {c!r}")
        if CHECKS[c].kind != kind:
            raise ValidationError(f"check {c!r} does not belong to kind {kind!r}")
    cfg = ExperimentConfig(name=name, kind=kind, checks=list(checks), raw=doc,
                           tolerances=tol, seed=seed, output=doc.get("output"),
                           options=dict(doc.get("options") or {}))
    if "region" in doc:
        cfg.region = region_from_dict(doc["region"])
    if "potential" in doc:
        cfg.potential = potential_from_dict(doc["potential"])
    if "r_grid" in doc:
        cfg.r_grid = r_grid_from_dict(doc["r_grid"])
    _validate_kind(cfg)
    return cfg


def _need(cfg: ExperimentConfig, *keys: str) -> None:
    for key in keys:
        if getattr(cfg, key, None) is None and key not in cfg.raw:
            raise ValidationError(f"{cfg.kind} experiments need a '{key}' block")


def _validate_kind(cfg: ExperimentConfig) -> None:
    from .classical import check_radius

    kind = cfg.kind
    if kind == "geometry-check":
        return
    engine = cfg.raw.get("engine", "quantum") if kind == "reversal-check" else None
    if kind == "classical-delay" or engine == "classical":
        _need(cfg, "region", "potential", "r_grid")
        integrator_options(cfg.raw)
        specs = trajectory_specs(cfg.raw)
        if specs[0]["dimension"] != cfg.region.dimension:
            raise ValidationError("trajectory dimension does not match the region")
        check_radius(cfg.region, cfg.potential, float(cfg.r_grid[0]))
        crossing_mode(cfg)
        return
    if engine not in (None, "quantum"):
        raise ValidationError(f"unknown engine {engine!r}")
    quantum_setup(cfg, build=False)


def quantum_setup(cfg: ExperimentConfig, build: bool = True):
    """Grid, state and settings for quantum experiments (validated even when not built)."""
    from .quantum.delays import QuantumSettings
    from .quantum.grid import Grid, check_window, gaussian_state, prepare_state

    g = cfg.block("grid")
    try:
        grid = Grid(int(g.get("N", 16384)), float(g.get("L", 800.0)))
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"malformed grid block: {exc}") from exc
    st = cfg.block("state")
    kind = st.get("kind", "filtered")
    try:
        x0 = float(st.get("x0", 0.0))
        sigma = float(st.get("sigma", 10.0))
        k0 = float(st.get("k0", 4.975))
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"malformed state block: {exc}") from exc
    window = None
    if kind == "filtered":
        window = check_window(grid, st.get("J", [10.0, 15.0]))
    elif kind != "gaussian":
        raise ValidationError(f"unknown state kind {kind!r}")
    if abs(x0) + 10 * sigma >= 0.5 * grid.L:
        raise ValidationError("state does not fit inside the box")
    pr = cfg.block("propagation")
    try:
        settings = QuantumSettings(
            dt=float(pr.get("dt", 0.002)), stride=int(pr.get("stride", 25)),
            cook_tol=cfg.tolerances["cook_tol"], tail_tol=cfg.tolerances["tail_tol"],
            unitarity_tol=cfg.tolerances["unitarity_tol"],
            margin_sigmas=float(pr.get("margin_sigmas", 6.5)))
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"malformed propagation block: {exc}") from exc
    if settings.dt <= 0 or settings.stride < 1:
        raise ValidationError("dt must be positive and stride >= 1")
    if cfg.kind not in ("proposition-check",) or "conjugation" not in cfg.checks:
        if cfg.region is None:
            raise ValidationError(f"{cfg.kind} experiments need a 'region' block")
        if cfg.region.dimension != 1:
            raise ValidationError("quantum experiments need a 1-D region")
    if cfg.kind in ("quantum-delay", "reversal-check", "translation-check"):
        _need(cfg, "potential", "r_grid")
        inner = cfg.region.inner_radius
        if cfg.r_grid[0] * inner < cfg.potential.support_radius:
            raise ValidationError("smallest dilated region must contain the potential support")
    if cfg.kind == "proposition-check" and "prop-asympt" in cfg.checks:
        _need(cfg, "r_grid")
    if cfg.region is not None and cfg.r_grid is not None and cfg.region.dimension == 1:
        reach = float(cfg.r_grid[-1]) * cfg.region.bounding_radius
        shift = abs(float(cfg.options.get("a", 0.0)))
        if reach + shift >= 0.5 * grid.L:
            raise ValidationError("largest dilated region does not fit inside the box")
    if not build:
        return None
    if kind == "filtered":
        state = prepare_state(grid, x0, sigma, k0, window,
                              width_fraction=float(st.get("width_fraction", 0.05)))
    else:
        state = gaussian_state(grid, x0, sigma, k0)
    return grid, state, settings
