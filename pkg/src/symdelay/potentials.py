"""Compactly supported real potentials shared by the classical and quantum engines."""
from __future__ import annotations

import math
from typing import Optional

import numpy as np

from .errors import ValidationError


class Potential:
    """Real potential with gradient and a radius outside which it vanishes.

    ``evaluate`` and ``gradient`` accept points of shape ``(..., d)``.
    """

    support_radius: float = 0.0

    def evaluate(self, x) -> np.ndarray:
        raise NotImplementedError

    def gradient(self, x) -> np.ndarray:
        raise NotImplementedError

    def is_zero(self) -> bool:
        return False


class ZeroPotential(Potential):
    support_radius = 0.0

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        return np.zeros(x.shape[:-1])

    def gradient(self, x):
        return np.zeros(np.shape(x), dtype=float)

    def is_zero(self) -> bool:
        return True


class BumpPotential(Potential):
    """``V0 * exp(1 - 1/(1 - s^2))`` with ``s = |x - center|/rho`` inside the bump.

    C-infinity with compact support; ``V0 > 0`` is repulsive, ``V0 < 0``
    attractive.  ``support_radius`` is measured from the origin.
    """

    def __init__(self, V0: float, rho: float, center=None):
        if not rho > 0:
            raise ValidationError("bump radius rho must be positive")
        self.V0 = float(V0)
        self.rho = float(rho)
        self.center = None if center is None else np.asarray(center, dtype=float)
        offset = 0.0 if self.center is None else float(np.linalg.norm(self.center))
        self.support_radius = self.rho + offset

    def _shifted(self, x):
        x = np.asarray(x, dtype=float)
        if self.center is not None:
            x = x - self.center
        return x

    def evaluate(self, x):
        y = self._shifted(x)
        s2 = np.sum(y * y, axis=-1) / self.rho ** 2
        out = np.zeros(s2.shape)
        inside = s2 < 1.0
        out[inside] = self.V0 * np.exp(1.0 - 1.0 / (1.0 - s2[inside]))
        return out

    def gradient(self, x):
        y = self._shifted(x)
        s2 = np.sum(y * y, axis=-1) / self.rho ** 2
        factor = np.zeros(s2.shape)
        inside = s2 < 1.0
        si = s2[inside]
        v = self.V0 * np.exp(1.0 - 1.0 / (1.0 - si))
        factor[inside] = -2.0 * v / (self.rho ** 2 * (1.0 - si) ** 2)
        return factor[..., None] * y

    def is_zero(self) -> bool:
        return self.V0 == 0.0


def check_support(potential: Potential, dimension: int, n: int = 256,
                  seed: int = 0) -> float:
    """Largest |V| + |grad V| on a shell just outside the support radius."""
    rng = np.random.default_rng(seed)
    u = rng.normal(size=(n, dimension))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    radius = max(potential.support_radius, 1e-12)
    worst = 0.0
    for scale in (1.0, 1.5, 4.0):
        pts = scale * radius * u
        worst = max(worst, float(np.max(np.abs(potential.evaluate(pts)))),
                    float(np.max(np.abs(potential.gradient(pts)))))
    return worst


def check_gradient(potential: Potential, dimension: int, n: int = 64,
                   seed: int = 0, h: float = 1e-6) -> float:
    """Worst relative mismatch between ``gradient`` and central differences."""
    rng = np.random.default_rng(seed)
    rad = max(potential.support_radius, 1.0)
    pts = rng.uniform(-rad, rad, size=(n, dimension))
    g = potential.gradient(pts)
    fd = np.empty_like(g)
    for k in range(dimension):
        e = np.zeros(dimension)
        e[k] = h
        fd[:, k] = (potential.evaluate(pts + e) - potential.evaluate(pts - e)) / (2 * h)
    scale = max(float(np.max(np.abs(g))), 1e-300)
    return float(np.max(np.abs(g - fd))) / scale


def potential_from_dict(doc: Optional[dict]) -> Potential:
    """Build a potential from a config block ``{V0, rho, sign, center}``.

    ``sign`` may be ``+1``/``-1`` or ``"repulsive"``/``"attractive"`` and
    multiplies ``|V0|``; without it the sign of ``V0`` is kept.
    """
    if doc is None:
        return ZeroPotential()
    if not isinstance(doc, dict):
        raise ValidationError("potential block must be a mapping")
    kind = doc.get("kind", "bump")
    if kind == "zero":
        return ZeroPotential()
    if kind != "bump":
        raise ValidationError(f"unknown potential kind {kind!r}")
    try:
        V0 = float(doc.get("V0", 1.0))
        rho = float(doc.get("rho", 2.0))
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"malformed potential block: {exc}") from exc
    sign = doc.get("sign")
    if sign is not None:
        if sign in ("repulsive", "+", 1, 1.0):
            V0 = abs(V0)
        elif sign in ("attractive", "-", -1, -1.0):
            V0 = -abs(V0)
        else:
            raise ValidationError(f"unknown potential sign {sign!r}")
    if not math.isfinite(V0):
        raise ValidationError("V0 must be finite")
    return BumpPotential(V0, rho, doc.get("center"))


def potential_to_dict(potential: Potential) -> dict:
    if isinstance(potential, ZeroPotential) or potential.is_zero():
        return {"kind": "zero"}
    out = {"kind": "bump", "V0": potential.V0, "rho": potential.rho}
    if potential.center is not None:
        out["center"] = potential.center.tolist()
    return out
