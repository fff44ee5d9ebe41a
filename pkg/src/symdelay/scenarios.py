"""Built-in experiment configs, one or more per acceptance criterion."""
from __future__ import annotations

import copy
from typing import Dict, List

from .errors import ValidationError

# classical: smooth bump centred off the origin so that a ball region still
# gives a nonzero, r-dependent tau_in - tau
_CL_POT = {"kind": "bump", "V0": 0.5, "rho": 1.0, "center": [0.5, 0.3]}
_CL_R = {"r_min": 20.0, "r_max": 320.0, "points": 9}
_Q_GRID = {"N": 16384, "L": 800.0}
_Q_STATE = {"kind": "filtered", "x0": 0.0, "sigma": 10.0, "k0": 4.975, "J": [10.0, 15.0],
            "width_fraction": 0.05}
_Q_POT = {"kind": "bump", "V0": 5.0, "rho": 2.0}
_Q_REGION = {"kind": "ball", "dimension": 1, "radius": 1.0}
_Q_R = {"r_min": 8.0, "r_max": 128.0, "points": 9}

_SCENARIOS: Dict[str, dict] = {
    "geometry-ball": {
        "description": "random star regions (exactness, homogeneity, evenness) and the unit disc",
        "kind": "geometry-check",
        "region": {"kind": "ball", "dimension": 2, "radius": 1.0},
        "checks": ["geometry-exactness", "g-homogeneity", "g-evenness", "region-g",
                   "region-symmetry"],
        "options": {"trials": 100},
        "seed": 20240601,
    },
    "ball-classical": {
        "description": "disc region: tau and tau_in share their limit, gap decays like 1/r",
        "kind": "classical-delay",
        "region": {"kind": "ball", "dimension": 2, "radius": 1.0},
        "potential": _CL_POT,
        "trajectories": {"dimension": 2, "energy": 1.0, "direction": 0.0,
                         "impact_parameters": [-0.3, 0.2, 0.6]},
        "r_grid": _CL_R,
        "checks": ["ball-equivalence"],
    },
    "ellipse-classical": {
        "description": "2:1 ellipse: tau converges while tau_in drifts linearly",
        "kind": "classical-delay",
        "region": {"kind": "ellipse", "semi_axes": [2.0, 1.0]},
        "potential": _CL_POT,
        "trajectories": {"dimension": 2, "energy": 1.0, "direction": 0.7,
                         "impact_parameters": [-0.3, 0.2, 0.6]},
        "r_grid": _CL_R,
        "checks": ["tau-converges", "tau-in-slope"],
    },
    "egg-classical": {
        "description": "asymmetric egg region: tau itself drifts with the geometric slope",
        "kind": "classical-delay",
        "region": {"kind": "egg", "epsilon": 0.3},
        "potential": _CL_POT,
        "trajectories": {"dimension": 2, "energy": 1.0, "direction": 1.0,
                         "impact_parameters": [-0.3, 0.2, 0.6]},
        "r_grid": _CL_R,
        "checks": ["tau-diverges"],
    },
    "classical-reversal": {
        "description": "classical full time reversal on the egg and the same trajectories",
        "kind": "reversal-check",
        "engine": "classical",
        "region": {"kind": "egg", "epsilon": 0.3},
        "potential": _CL_POT,
        "trajectories": {"dimension": 2, "energy": 1.0, "direction": 1.0,
                         "impact_parameters": [-0.3, 0.2, 0.6]},
        "r_grid": {"r_min": 20.0, "r_max": 320.0, "points": 5},
        "checks": ["classical-reversal"],
    },
    "qd-1d-symmetric": {
        "description": "1-D quantum delays for (-1, 1): tau_Sigma vs EW vs A0 commutator",
        "kind": "quantum-delay",
        "grid": _Q_GRID, "state": _Q_STATE, "potential": _Q_POT,
        "region": _Q_REGION, "r_grid": _Q_R,
        "checks": ["theorem", "tau-free", "stationary-s"],
    },
    "prop-asympt": {
        "description": "free-dynamics time integral against the G commutator, (-1, 1)",
        "kind": "proposition-check",
        "grid": _Q_GRID, "state": dict(_Q_STATE, x0=3.0),
        "region": _Q_REGION, "r_grid": _Q_R,
        "checks": ["prop-asympt"],
    },
    "prop-asympt-asymmetric": {
        "description": "(-1, 2) violates shape symmetry: documented linear drift",
        "kind": "proposition-check",
        "grid": _Q_GRID, "state": dict(_Q_STATE, x0=3.0),
        "region": {"kind": "polygon-support-table", "dimension": 1, "values": [2.0, 1.0]},
        "r_grid": {"r_min": 4.0, "r_max": 64.0, "points": 9},
        "checks": ["prop-asympt-drift"],
    },
    "conjugation": {
        "description": "chirp conjugation identity on a localized Gaussian",
        "kind": "proposition-check",
        "grid": {"N": 4096, "L": 80.0},
        "state": {"kind": "gaussian", "x0": 0.5, "sigma": 1.0, "k0": 2.0},
        "options": {"times": [0.3, -0.3, 0.7, -0.7], "F": {"center": 0.3, "width": 1.5}},
        "checks": ["conjugation"],
    },
    "reversal": {
        "description": "quantum full time reversal and S conj(phi) = conj(S^-1 phi)",
        "kind": "reversal-check",
        "engine": "quantum",
        "grid": _Q_GRID, "state": _Q_STATE, "potential": _Q_POT,
        "region": _Q_REGION, "r_grid": {"r_min": 8.0, "r_max": 64.0, "points": 4},
        "checks": ["s-symmetry", "quantum-reversal"],
    },
    "translation": {
        "description": "translation covariance for a = 2 with a strongly reflecting bump",
        "kind": "translation-check",
        "grid": _Q_GRID, "state": _Q_STATE,
        "potential": {"kind": "bump", "V0": 12.0, "rho": 1.0},
        "region": _Q_REGION, "r_grid": _Q_R,
        "options": {"a": 2.0},
        "checks": ["translation"],
    },
}


def list_builtin_scenarios() -> List[str]:
    return sorted(_SCENARIOS)


def scenario(name: str) -> dict:
    """A fresh copy of the named config document."""
    try:
        doc = copy.deepcopy(_SCENARIOS[name])
    except KeyError as exc:
        raise ValidationError(
            f"unknown scenario {name!r}; available: {', '.join(list_builtin_scenarios())}"
        ) from exc
    doc["name"] = name
    return doc


def scenario_criteria(name: str) -> List[int]:
    from .runner import CHECKS
    doc = scenario(name)
    return sorted({CHECKS[c].criterion for c in doc["checks"]
                   if CHECKS[c].criterion is not None})


def catalogue() -> List[tuple]:
    """``(name, kind, criteria, description)`` for every built-in scenario."""
    return [(n, _SCENARIOS[n]["kind"], scenario_criteria(n), _SCENARIOS[n]["description"])
            for n in list_builtin_scenarios()]
