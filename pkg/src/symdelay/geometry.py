"""Bounded regions containing the origin and their dilation averages.

Two families of regions are provided.  :class:`StarRegion` is described by its
support function ``ell(omega) = sup{mu >= 0 | mu*omega in region}`` on the unit
sphere; :class:`IndicatorRegion` (and its subclasses) only exposes a boolean
membership test plus a bounding radius.

The renormalised dilation average

    R(x) = int_1^inf dmu/mu 1(mu x) + int_0^1 dmu/mu [1(mu x) - 1]

is evaluated along the ray ``mu -> mu x``.  For a fixed ray the integrand is
piecewise constant, so the quadrature reduces to locating the jumps of the
indicator, which is done on a logarithmic sample grid refined by bisection.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import QuadratureError, ValidationError

DEFAULT_TOL = 1e-9
DEFAULT_ANGLES = 4096
TWO_PI = 2.0 * math.pi


def as_points(x, dimension: int) -> np.ndarray:
    """Coerce ``x`` to an array of shape ``(..., dimension)``."""
    arr = np.asarray(x, dtype=float)
    if dimension == 1 and (arr.ndim == 0 or arr.shape[-1] != 1):
        arr = arr[..., None]
    if arr.shape[-1] != dimension:
        raise ValidationError(
            f"expected points of dimension {dimension}, got shape {arr.shape}")
    return arr


def _as_vector(x, dimension: int) -> np.ndarray:
    v = as_points(x, dimension)
    if v.ndim != 1:
        raise ValidationError("expected a single point")
    return v


class Region:
    """Common interface: membership, bounding radius, inner radius."""

    dimension: int
    bounding_radius: float
    inner_radius: float
    convex: bool = False
    spec: Optional[dict] = None

    def indicator(self, points) -> np.ndarray:
        raise NotImplementedError

    def contains(self, point) -> bool:
        return bool(self.indicator(_as_vector(point, self.dimension)))

    def dilated_indicator(self, points, r: float) -> np.ndarray:
        """Membership in the dilated region ``r * region``."""
        return self.indicator(as_points(points, self.dimension) / r)


class StarRegion(Region):
    """Open star-shaped region given by a strictly positive support function.

    ``dimension == 1``: ``values = (ell(+1), ell(-1))``.
    ``dimension == 2``: either an angle table (``angles``, ``values``) with
    periodic linear or spline interpolation, or an analytic ``function`` of the
    polar angle.
    ``dimension >= 3``: only balls, ``values = (radius,)``.
    """

    def __init__(self, dimension: int, values=None, *, angles=None,
                 function: Optional[Callable[[np.ndarray], np.ndarray]] = None,
                 interpolation: str = "linear", convex: Optional[bool] = None,
                 spec: Optional[dict] = None):
        if dimension < 1:
            raise ValidationError("dimension must be >= 1")
        self.dimension = int(dimension)
        self.interpolation = interpolation
        self._function = function
        self._angles = None
        self._values = None
        self._spline = None
        if function is not None:
            if dimension != 2:
                raise ValidationError("analytic support functions are 2-D only")
            probe = np.asarray(function(np.linspace(0.0, TWO_PI, 721)), float)
            _check_positive(probe)
            self._sample_min = float(probe.min())
            self._sample_max = float(probe.max())
        else:
            vals = np.array(values, dtype=float).ravel()
            _check_positive(vals)
            if dimension == 1:
                if vals.size != 2:
                    raise ValidationError(
                        "a 1-D star region needs support values at +1 and -1")
            elif dimension == 2:
                if angles is None:
                    angles = TWO_PI * np.arange(vals.size) / vals.size
                ang = np.mod(np.asarray(angles, dtype=float).ravel(), TWO_PI)
                if ang.size != vals.size:
                    raise ValidationError("angles and values differ in length")
                order = np.argsort(ang)
                ang, vals = ang[order], vals[order]
                if np.any(np.diff(ang) <= 0):
                    raise ValidationError("duplicate angles in support table")
                gaps = np.diff(np.concatenate([ang, [ang[0] + TWO_PI]]))
                if ang.size < 8 or gaps.max() > math.pi / 4:
                    raise ValidationError(
                        "support table does not cover the unit circle "
                        "(need >= 8 directions, largest gap <= pi/4)")
                self._angles = ang
                if interpolation == "spline":
                    self._spline = CubicSpline(
                        np.concatenate([ang, [ang[0] + TWO_PI]]),
                        np.concatenate([vals, [vals[0]]]), bc_type="periodic")
                elif interpolation != "linear":
                    raise ValidationError(f"unknown interpolation {interpolation!r}")
                slopes = np.abs(np.diff(np.concatenate([vals, [vals[0]]]))) / gaps
                if slopes.max() > 1e3 * vals.max():
                    warnings.warn("support table looks non-Lipschitz; "
                                  "averages are still computed", RuntimeWarning)
            else:
                if vals.size != 1:
                    raise ValidationError(
                        "only balls are supported in dimension >= 3")
            self._values = vals
            self._sample_min = float(vals.min())
            self._sample_max = float(vals.max())
        self.convex = bool(convex) if convex is not None else False
        self.spec = spec
        self.bounding_radius = self._sample_max * (1.0 + 1e-9)
        self.inner_radius = self._sample_min

    # -- support function -------------------------------------------------
    def support_angle(self, theta) -> np.ndarray:
        """Support function of a 2-D region at polar angles ``theta``."""
        theta = np.mod(np.asarray(theta, dtype=float), TWO_PI)
        if self._function is not None:
            return np.asarray(self._function(theta), dtype=float)
        if self._spline is not None:
            return self._spline(theta)
        return np.interp(theta, self._angles, self._values, period=TWO_PI)

    def support(self, directions) -> np.ndarray:
        """Support function at unit ``directions`` of shape ``(..., d)``."""
        u = as_points(directions, self.dimension)
        if self.dimension == 1:
            return np.where(u[..., 0] >= 0.0, self._values[0], self._values[1])
        if self.dimension == 2:
            return self.support_angle(np.arctan2(u[..., 1], u[..., 0]))
        return np.full(u.shape[:-1], self._values[0])

    @property
    def min_support(self) -> float:
        return self._sample_min

    @property
    def max_support(self) -> float:
        return self._sample_max

    def boundary_distance(self, theta) -> float:
        """Distance from the origin to the boundary along unit vector ``theta``."""
        u = _as_vector(theta, self.dimension)
        if abs(np.linalg.norm(u) - 1.0) > 1e-12:
            raise ValidationError("boundary_distance needs a unit vector")
        return float(self.support(u))

    # -- membership ------------------------------------------------------
    def residual(self, points, r: float = 1.0) -> np.ndarray:
        """``|x| - r*ell(x/|x|)``; negative exactly inside the dilated region."""
        x = as_points(points, self.dimension)
        norm = np.linalg.norm(x, axis=-1)
        safe = np.where(norm > 0, norm, 1.0)
        return norm - r * self.support(x / safe[..., None])

    def indicator(self, points) -> np.ndarray:
        return self.residual(points) < 0.0

    def dilate(self, r: float) -> "StarRegion":
        if r <= 0:
            raise ValidationError("dilation factor must be positive")
        if self._function is not None:
            f = self._function
            return StarRegion(2, function=lambda th: r * f(th), convex=self.convex)
        return StarRegion(self.dimension, r * self._values, angles=self._angles,
                          interpolation=self.interpolation, convex=self.convex)

    def table(self, n: int = DEFAULT_ANGLES):
        """Angles and support values on a uniform grid (2-D)."""
        if self.dimension != 2:
            raise ValidationError("support tables are 2-D")
        ang = TWO_PI * np.arange(n) / n
        return ang, self.support_angle(ang)

    def is_symmetric(self, tol: float = 1e-12) -> bool:
        if self.dimension == 1:
            return abs(self._values[0] - self._values[1]) <= tol * self._values.max()
        if self.dimension >= 3:
            return True
        ang = np.linspace(0.0, TWO_PI, 2048, endpoint=False)
        a = self.support_angle(ang)
        b = self.support_angle(ang + math.pi)
        return float(np.max(np.abs(a - b))) <= tol * float(a.max())


def _check_positive(values: np.ndarray) -> None:
    if values.size == 0 or not np.all(np.isfinite(values)) or np.any(values <= 0):
        raise ValidationError("support function must be strictly positive")


class IndicatorRegion(Region):
    """Region known only through a vectorised membership function."""

    def __init__(self, dimension: int, indicator: Callable[[np.ndarray], np.ndarray],
                 bounding_radius: float, inner_radius: Optional[float] = None,
                 *, convex: bool = False, spec: Optional[dict] = None):
        self.dimension = int(dimension)
        self._indicator = indicator
        if not bounding_radius > 0:
            raise ValidationError("bounding_radius must be positive")
        self.bounding_radius = float(bounding_radius)
        self.convex = convex
        self.spec = spec
        if not bool(np.asarray(self.indicator(np.zeros(self.dimension)))):
            raise ValidationError("region must contain the origin")
        self._check_bounded()
        if inner_radius is None:
            inner_radius = self._estimate_inner_radius()
        if not inner_radius > 0:
            raise ValidationError("inner_radius must be positive")
        self.inner_radius = float(inner_radius)

    def indicator(self, points) -> np.ndarray:
        x = as_points(points, self.dimension)
        return np.asarray(self._indicator(x), dtype=bool)

    def _shell(self, radius: float, n: int = 256) -> np.ndarray:
        if self.dimension == 1:
            return np.array([[radius], [-radius]])
        rng = np.random.default_rng(0)
        u = rng.normal(size=(n, self.dimension))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        return radius * u

    def _check_bounded(self) -> None:
        if np.any(self.indicator(self._shell(self.bounding_radius))):
            raise ValidationError("region extends beyond bounding_radius")

    def _estimate_inner_radius(self) -> float:
        rad = self.bounding_radius
        for _ in range(60):
            rad *= 0.5
            if np.all(self.indicator(self._shell(rad))):
                return 0.5 * rad
        raise ValidationError("could not find a ball around the origin inside the region")


class IntervalUnion(IndicatorRegion):
    """Finite union of open intervals in one dimension, one of which contains 0."""

    def __init__(self, intervals: Sequence[Sequence[float]], spec: Optional[dict] = None):
        ivs = sorted((float(a), float(b)) for a, b in intervals)
        for a, b in ivs:
            if not a < b:
                raise ValidationError(f"empty interval ({a}, {b})")
        merged = []
        for a, b in ivs:
            if merged and a <= merged[-1][1]:
                merged[-1] = (merged[-1][0], max(b, merged[-1][1]))
            else:
                merged.append((a, b))
        self.intervals = tuple(merged)
        core = [iv for iv in merged if iv[0] < 0.0 < iv[1]]
        if not core:
            raise ValidationError("region must contain the origin")
        lo = np.array([a for a, _ in merged])
        hi = np.array([b for _, b in merged])

        def member(x):
            x = x[..., 0, None]
            return np.any((x > lo) & (x < hi), axis=-1)

        bound = max(abs(lo).max(), abs(hi).max()) * (1.0 + 1e-12)
        inner = min(-core[0][0], core[0][1])
        if spec is None:
            spec = {"kind": "interval-union", "dimension": 1,
                    "intervals": [list(iv) for iv in merged]}
        super().__init__(1, member, bound, inner, convex=len(merged) == 1, spec=spec)


class IndicatorGrid(IndicatorRegion):
    """Boolean mask on a uniform cell grid covering ``[-extent, extent]^d``."""

    def __init__(self, mask, extent: float, spec: Optional[dict] = None):
        m = np.asarray(mask, dtype=bool)
        if m.ndim not in (1, 2):
            raise ValidationError("indicator grids are 1-D or 2-D")
        self.mask = m
        self.extent = float(extent)
        shape = np.array(m.shape)

        def member(x):
            idx = np.floor((x + self.extent) / (2 * self.extent) * shape).astype(int)
            ok = np.all((idx >= 0) & (idx < shape), axis=-1)
            idx = np.clip(idx, 0, shape - 1)
            return ok & m[tuple(np.moveaxis(idx, -1, 0))]

        if spec is None:
            spec = {"kind": "indicator-grid", "dimension": m.ndim,
                    "extent": self.extent, "mask": m.astype(int).tolist()}
        super().__init__(m.ndim, member, self.extent * math.sqrt(m.ndim) * 1.000001,
                         spec=spec)


# ---------------------------------------------------------------------------
# factories

def ball(dimension: int = 2, radius: float = 1.0) -> StarRegion:
    spec = {"kind": "ball", "dimension": dimension, "radius": radius}
    if dimension == 1:
        return StarRegion(1, [radius, radius], convex=True, spec=spec)
    if dimension == 2:
        return StarRegion(2, function=lambda th: np.full(np.shape(th), float(radius)),
                          convex=True, spec=spec)
    return StarRegion(dimension, [radius], convex=True, spec=spec)


def ellipse(a: float, b: float) -> StarRegion:
    """Centred ellipse with semi-axis ``a`` along x and ``b`` along y."""
    if not (a > 0 and b > 0):
        raise ValidationError("support function must be strictly positive")

    def ell(th):
        return 1.0 / np.sqrt((np.cos(th) / a) ** 2 + (np.sin(th) / b) ** 2)

    return StarRegion(2, function=ell, convex=True,
                      spec={"kind": "ellipse", "dimension": 2, "semi_axes": [a, b]})


def interval(lo: float, hi: float) -> StarRegion:
    """The 1-D star region ``(lo, hi)`` with ``lo < 0 < hi``."""
    return StarRegion(1, [hi, -lo], convex=True,
                      spec={"kind": "polygon-support-table", "dimension": 1,
                            "values": [hi, -lo]})


def egg(epsilon: float = 0.3, points: int = DEFAULT_ANGLES) -> StarRegion:
    """Asymmetric convex table ``ell = 1 + epsilon*cos(theta)`` (convex for eps <= 1/2)."""
    if not 0 <= epsilon < 1:
        raise ValidationError("egg epsilon must lie in [0, 1)")
    ang = TWO_PI * np.arange(points) / points
    return StarRegion(2, 1.0 + epsilon * np.cos(ang), angles=ang,
                      convex=epsilon <= 0.5,
                      spec={"kind": "egg", "dimension": 2, "epsilon": epsilon,
                            "points": points})


def translated_ball(center, radius: float = 1.0) -> IndicatorRegion:
    c = np.atleast_1d(np.asarray(center, dtype=float))
    if np.linalg.norm(c) >= radius:
        raise ValidationError("translated ball must still contain the origin")

    def member(x):
        return np.linalg.norm(x - c, axis=-1) < radius

    return IndicatorRegion(c.size, member, radius + np.linalg.norm(c) + 1e-9,
                           radius - np.linalg.norm(c), convex=True,
                           spec={"kind": "translated-ball", "dimension": int(c.size),
                                 "center": c.tolist(), "radius": radius})


def make_star_region(support_samples: Iterable, interpolation: str = "linear",
                     convex: bool = False) -> StarRegion:
    """Build a star region from ``(direction, value)`` pairs.

    Directions are ``+1``/``-1`` in one dimension and polar angles or unit
    vectors in two dimensions.
    """
    samples = list(support_samples)
    if not samples:
        raise ValidationError("no support samples given")
    dirs = [np.atleast_1d(np.asarray(d, dtype=float)) for d, _ in samples]
    vals = np.array([v for _, v in samples], dtype=float)
    _check_positive(vals)
    if all(d.size == 1 for d in dirs) and all(abs(abs(d[0]) - 1) < 1e-12 for d in dirs):
        signs = {int(np.sign(d[0])): v for d, v in zip(dirs, vals)}
        if set(signs) != {1, -1}:
            raise ValidationError("1-D support samples must cover both +1 and -1")
        return StarRegion(1, [signs[1], signs[-1]], convex=True,
                          spec={"kind": "polygon-support-table", "dimension": 1,
                                "values": [signs[1], signs[-1]]})
    angles = np.array([d[0] if d.size == 1 else math.atan2(d[1], d[0]) for d in dirs])
    region = StarRegion(2, vals, angles=angles, interpolation=interpolation,
                        convex=convex)
    region.spec = {"kind": "polygon-support-table", "dimension": 2,
                   "angles": np.mod(angles, TWO_PI).tolist(), "values": vals.tolist(),
                   "interpolation": interpolation, "convex": convex}
    return region


# ---------------------------------------------------------------------------
# ray integration

@dataclass(frozen=True)
class RayMembership:
    """Membership intervals ``(mu_a, mu_b)`` of ``mu -> mu*x`` for ``mu > 0``.

    The first interval always starts at ``mu = 0``.  ``error`` bounds the
    uncertainty of each located jump in ``log(mu)``.
    """

    intervals: tuple
    error: float


def ray_membership(region: Region, x, tolerance: float = DEFAULT_TOL,
                   samples: int = 2049, max_samples: int = 65537) -> RayMembership:
    """Locate the jumps of ``mu -> 1_region(mu*x)`` on ``(0, inf)``."""
    x = _as_vector(x, region.dimension)
    norm = float(np.linalg.norm(x))
    if norm == 0.0:
        raise ValidationError("R_sigma undefined at the origin")
    s_lo = math.log(0.5 * region.inner_radius / norm)
    s_hi = math.log(region.bounding_radius / norm)

    def inside(s):
        return region.indicator(np.exp(s)[..., None] * x)

    n = samples
    s = np.linspace(s_lo, s_hi, n)
    flags = inside(s)
    jumps = np.flatnonzero(flags[1:] != flags[:-1])
    while True:
        n2 = 2 * n - 1
        if n2 > max_samples:
            break
        s2 = np.linspace(s_lo, s_hi, n2)
        flags2 = np.empty(n2, dtype=bool)
        flags2[::2] = flags
        flags2[1::2] = inside(s2[1::2])
        jumps2 = np.flatnonzero(flags2[1:] != flags2[:-1])
        stable = jumps2.size == jumps.size
        s, flags, jumps, n = s2, flags2, jumps2, n2
        if stable:
            break
    if not flags[0] or flags[-1]:
        raise QuadratureError("ray sampling inconsistent with inner/bounding radius")
    s_tol = min(1e-13, tolerance / max(4, 4 * jumps.size))
    edges = []
    worst = 0.0
    for i in jumps:
        a, b = s[i], s[i + 1]
        fa = bool(flags[i])
        while b - a > s_tol:
            m = 0.5 * (a + b)
            if m <= a or m >= b:
                break
            if bool(inside(np.array([m]))[0]) == fa:
                a = m
            else:
                b = m
        edges.append(0.5 * (a + b))
        worst = max(worst, 0.5 * (b - a))
    if len(edges) % 2 == 0:
        raise QuadratureError("odd number of boundary crossings along ray")
    mus = np.exp(np.array(edges))
    intervals = [(0.0, float(mus[0]))]
    for j in range(1, len(mus), 2):
        intervals.append((float(mus[j]), float(mus[j + 1])))
    err = worst * len(edges)
    if err > tolerance:
        raise QuadratureError("ray quadrature did not reach tolerance", achieved=err)
    return RayMembership(tuple(intervals), err)


def R_sigma(region: Region, x, tolerance: float = DEFAULT_TOL,
            method: str = "auto") -> float:
    """Renormalised dilation average of the indicator along ``x``.

    ``method`` is ``"closed"`` (star regions: ``ln ell(x/|x|) - ln|x|``),
    ``"quadrature"`` (ray integration) or ``"auto"``.
    """
    x = _as_vector(x, region.dimension)
    norm = float(np.linalg.norm(x))
    if norm == 0.0:
        raise ValidationError("R_sigma undefined at the origin")
    if method == "auto":
        method = "closed" if isinstance(region, StarRegion) else "quadrature"
    if method == "closed":
        if not isinstance(region, StarRegion):
            raise ValidationError("closed form needs a star region")
        return math.log(float(region.support(x / norm))) - math.log(norm)
    if method != "quadrature":
        raise ValidationError(f"unknown method {method!r}")
    ray = ray_membership(region, x, tolerance)
    total = math.log(ray.intervals[0][1])
    for a, b in ray.intervals[1:]:
        total += math.log(b) - math.log(a)
    return total


def G_sigma(region: Region, x, tolerance: float = DEFAULT_TOL,
            method: str = "auto") -> float:
    """Even part ``(R(x) + R(-x))/2`` of the dilation average."""
    x = _as_vector(x, region.dimension)
    return 0.5 * (R_sigma(region, x, tolerance, method)
                  + R_sigma(region, -x, tolerance, method))


def asymmetry_defect(region: Region, x, tolerance: float = DEFAULT_TOL,
                     method: str = "auto") -> float:
    """``M(x) = |x| * int_0^inf dmu [1(mu x) - 1(-mu x)]`` (odd, degree-0 homogeneous)."""
    x = _as_vector(x, region.dimension)
    norm = float(np.linalg.norm(x))
    if norm == 0.0:
        raise ValidationError("R_sigma undefined at the origin")
    if method == "auto":
        method = "closed" if isinstance(region, StarRegion) else "quadrature"
    if method == "closed":
        u = x / norm
        return float(region.support(u)) - float(region.support(-u))

    def length(v):
        ray = ray_membership(region, v, tolerance)
        return sum(b - a for a, b in ray.intervals)

    return norm * (length(x) - length(-x))


class ShapeAverages:
    """Cached evaluations of ``R_sigma`` and ``G_sigma`` for one region."""

    def __init__(self, region: Region, tolerance: float = DEFAULT_TOL,
                 method: str = "auto"):
        self.region = region
        self.tolerance = tolerance
        self.method = method
        self._R: dict = {}

    def R(self, x) -> float:
        key = tuple(_as_vector(x, self.region.dimension).tolist())
        if key not in self._R:
            self._R[key] = R_sigma(self.region, key, self.tolerance, self.method)
        return self._R[key]

    def G(self, x) -> float:
        v = _as_vector(x, self.region.dimension)
        return 0.5 * (self.R(v) + self.R(-v))

    def G_on_sphere_1d(self) -> float:
        """``G(+1) = G(-1)`` for a 1-D region."""
        return self.G([1.0])


@dataclass(frozen=True)
class AssumptionICheck:
    holds: bool
    worst_defect: float
    worst_direction: tuple


def direction_grid(dimension: int, n: int = 64) -> np.ndarray:
    if dimension == 1:
        return np.array([[1.0], [-1.0]])
    if dimension == 2:
        th = TWO_PI * np.arange(n) / n
        return np.stack([np.cos(th), np.sin(th)], axis=1)
    raise ValidationError("direction grids are provided for d <= 2")


def check_assumption_I(region: Region, directions=None, tol: float = 1e-9,
                       quad_tol: float = DEFAULT_TOL) -> AssumptionICheck:
    """Test ``M = 0`` on a grid of unit directions."""
    if directions is None:
        directions = direction_grid(region.dimension)
    dirs = as_points(directions, region.dimension).reshape(-1, region.dimension)
    if dirs.shape[0] == 0:
        raise ValidationError("direction grid is empty")
    defects = np.array([asymmetry_defect(region, u, quad_tol) for u in dirs])
    i = int(np.argmax(np.abs(defects)))
    worst = float(abs(defects[i]))
    return AssumptionICheck(worst <= tol, worst, tuple(dirs[i].tolist()))


def symmetrize(region: Region, n_angles: int = DEFAULT_ANGLES,
               tolerance: float = DEFAULT_TOL) -> StarRegion:
    """Symmetric star region with support ``exp(G_sigma(omega))``."""
    if region.dimension == 1:
        g = G_sigma(region, [1.0], tolerance)
        val = math.exp(g)
        return StarRegion(1, [val, val], convex=True,
                          spec={"kind": "polygon-support-table", "dimension": 1,
                                "values": [val, val]})
    if region.dimension != 2:
        if isinstance(region, StarRegion):
            return region
        raise ValidationError("symmetrize supports d <= 2 (balls in higher d)")
    half = n_angles // 2
    if 2 * half != n_angles:
        raise ValidationError("n_angles must be even")
    th = TWO_PI * np.arange(n_angles) / n_angles
    if isinstance(region, StarRegion):
        ell = region.support_angle(th)
        g = 0.5 * (np.log(ell) + np.log(np.roll(ell, -half)))
    else:
        g = np.empty(half)
        for j in range(half):
            u = np.array([math.cos(th[j]), math.sin(th[j])])
            g[j] = G_sigma(region, u, tolerance)
        g = np.concatenate([g, g])
    vals = np.exp(g)
    out = StarRegion(2, vals, angles=th, convex=False)
    out.spec = {"kind": "polygon-support-table", "dimension": 2,
                "angles": th.tolist(), "values": vals.tolist()}
    return out


def intervals_1d(region: Region) -> list:
    """Membership intervals of a 1-D region as sorted ``(lo, hi)`` pairs."""
    if region.dimension != 1:
        raise ValidationError("intervals_1d needs a 1-D region")
    if isinstance(region, StarRegion):
        lp, lm = region.support([[1.0], [-1.0]])
        return [(-float(lm), float(lp))]
    if isinstance(region, IntervalUnion):
        return list(region.intervals)
    plus = ray_membership(region, [1.0]).intervals
    minus = ray_membership(region, [-1.0]).intervals
    out = [(-minus[0][1], plus[0][1])]
    out += [(a, b) for a, b in plus[1:]]
    out += [(-b, -a) for a, b in minus[1:]]
    return sorted(out)


# ---------------------------------------------------------------------------
# serialisation

REGION_KINDS = ("ball", "ellipse", "polygon-support-table", "interval-union",
                "indicator-grid", "egg", "translated-ball")


def region_from_dict(doc: dict) -> Region:
    if not isinstance(doc, dict) or "kind" not in doc:
        raise ValidationError("region block needs a 'kind'")
    kind = doc["kind"]
    dim = doc.get("dimension")
    try:
        if kind == "ball":
            reg = ball(int(dim if dim is not None else 2), float(doc.get("radius", 1.0)))
        elif kind == "ellipse":
            a, b = doc["semi_axes"]
            reg = ellipse(float(a), float(b))
        elif kind == "polygon-support-table":
            if dim is None:
                raise ValidationError("support table needs an explicit dimension")
            if int(dim) == 1:
                reg = StarRegion(1, doc["values"], convex=True)
            else:
                reg = StarRegion(2, doc["values"], angles=doc.get("angles"),
                                 interpolation=doc.get("interpolation", "linear"),
                                 convex=bool(doc.get("convex", False)))
        elif kind == "interval-union":
            reg = IntervalUnion(doc["intervals"])
        elif kind == "indicator-grid":
            reg = IndicatorGrid(doc["mask"], float(doc["extent"]))
        elif kind == "egg":
            reg = egg(float(doc.get("epsilon", 0.3)), int(doc.get("points", DEFAULT_ANGLES)))
        elif kind == "translated-ball":
            reg = translated_ball(doc["center"], float(doc.get("radius", 1.0)))
        else:
            raise ValidationError(f"unknown region kind {kind!r}")
    except ValidationError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed region block: {exc}") from exc
    if dim is not None and int(dim) != reg.dimension:
        raise ValidationError("declared dimension does not match region")
    reg.spec = dict(doc, dimension=reg.dimension)
    return reg


def region_to_dict(region: Region) -> dict:
    if region.spec is not None:
        return dict(region.spec, dimension=region.dimension)
    if isinstance(region, StarRegion):
        if region.dimension == 1:
            return {"kind": "polygon-support-table", "dimension": 1,
                    "values": region.support([[1.0], [-1.0]]).tolist()}
        ang, vals = region.table()
        return {"kind": "polygon-support-table", "dimension": 2,
                "angles": ang.tolist(), "values": vals.tolist()}
    raise ValidationError("indicator regions without a spec cannot be serialised")
