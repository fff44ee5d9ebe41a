import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from symdelay.errors import QuadratureError, ValidationError
from symdelay.geometry import (
    G_sigma, IndicatorGrid, IndicatorRegion, IntervalUnion, R_sigma, ShapeAverages,
    StarRegion, asymmetry_defect, ball, check_assumption_I, egg, ellipse, interval,
    intervals_1d, make_star_region, ray_membership, region_from_dict, region_to_dict,
    symmetrize, translated_ball,
)


def _indicator_copy(region):
    """The same set seen only through its indicator, to force ray quadrature."""
    return IndicatorRegion(region.dimension, region.indicator, region.bounding_radius * 1.01,
                           region.inner_radius)


# ---------------------------------------------------------------------------
# frozen oracles


def test_unit_disc_is_minus_log_norm():
    disc = ball(2)
    for x in ([0.3, 0.4], [2.0, -1.0], [0.0, 5.0]):
        assert R_sigma(disc, x) == pytest.approx(-math.log(np.linalg.norm(x)), abs=1e-14)
        assert G_sigma(disc, x) == pytest.approx(-math.log(np.linalg.norm(x)), abs=1e-14)


def test_ellipse_diagonal_value():
    # support of the 2:1 ellipse at 45 degrees is 1/sqrt(1/8 + 1/2) = sqrt(8/5)
    e = ellipse(2.0, 1.0)
    u = np.array([1.0, 1.0]) / math.sqrt(2.0)
    assert float(e.support(u)) == pytest.approx(math.sqrt(8.0 / 5.0), rel=1e-14)
    assert R_sigma(e, u) == pytest.approx(0.5 * math.log(8.0 / 5.0), abs=1e-14)
    assert R_sigma(_indicator_copy(e), u, method="quadrature") == pytest.approx(
        0.5 * math.log(8.0 / 5.0), abs=1e-9)


def test_interval_union_oracle():
    # (-1, 1.5) and (2, 3): R(+1) = ln 1.5 + ln(3/2), R(-1) = ln 1
    reg = IntervalUnion([(-1.0, 1.5), (2.0, 3.0)])
    assert R_sigma(reg, [1.0]) == pytest.approx(math.log(1.5) + math.log(1.5), abs=1e-10)
    assert R_sigma(reg, [-1.0]) == pytest.approx(0.0, abs=1e-10)
    assert R_sigma(reg, [0.5]) == pytest.approx(2 * math.log(1.5) + math.log(2.0), abs=1e-10)
    assert not reg.convex


def test_union_components_add_logs():
    a, b, c = 2.0, 5.0, 0.7
    reg = IntervalUnion([(-1.0, c), (a, b)])
    assert R_sigma(reg, [1.0]) == pytest.approx(math.log(c) + math.log(b / a), abs=1e-10)


def test_asymmetric_interval_defect():
    reg = interval(-1.0, 2.0)
    assert asymmetry_defect(reg, [1.0]) == pytest.approx(1.0)
    assert asymmetry_defect(reg, [-3.0]) == pytest.approx(-1.0)
    assert G_sigma(reg, [1.0]) == pytest.approx(0.5 * math.log(2.0))
    assert not check_assumption_I(reg).holds
    assert check_assumption_I(ball(1)).holds


def test_translated_ball_quadrature():
    # ray from the origin along +x through a disc centred at (c, 0): exit at 1 + c
    c = 0.4
    reg = translated_ball([c, 0.0])
    assert R_sigma(reg, [1.0, 0.0]) == pytest.approx(math.log(1 + c), abs=1e-10)
    assert R_sigma(reg, [-1.0, 0.0]) == pytest.approx(math.log(1 - c), abs=1e-10)
    assert asymmetry_defect(reg, [1.0, 0.0]) == pytest.approx(2 * c, abs=1e-9)


def test_symmetrize_egg():
    e = egg(0.3)
    s = symmetrize(e)
    assert s.is_symmetric(1e-12)
    th = np.linspace(0, 2 * math.pi, 17)
    ell = e.support_angle(th)
    ellm = e.support_angle(th + math.pi)
    assert np.allclose(s.support_angle(th), np.sqrt(ell * ellm), rtol=1e-10)
    for t in th[:5]:
        u = [math.cos(t), math.sin(t)]
        assert G_sigma(s, u) == pytest.approx(G_sigma(e, u), abs=1e-10)


def test_symmetrize_1d():
    s = symmetrize(interval(-1.0, 4.0))
    assert np.allclose(s.support([[1.0], [-1.0]]), [2.0, 2.0])


def test_quadrature_matches_closed_form_on_star_regions():
    rng = np.random.default_rng(7)
    for region in (ellipse(1.5, 0.6), egg(0.4)):
        quad = _indicator_copy(region)
        for _ in range(5):
            x = rng.normal(size=2)
            assert R_sigma(quad, x, method="quadrature") == pytest.approx(
                R_sigma(region, x, method="closed"), abs=1e-9)


def test_indicator_grid_annulus_gap():
    n = 200
    c = (np.arange(n) + 0.5) / n * 2 - 1
    X, Y = np.meshgrid(c, c, indexing="ij")
    rad = np.hypot(X, Y)
    mask = (rad < 0.5) | ((rad > 0.7) & (rad < 0.9))
    reg = IndicatorGrid(mask, 1.0)
    val = R_sigma(reg, [1.0, 0.0], tolerance=1e-6)
    assert val == pytest.approx(math.log(0.5) + math.log(0.9 / 0.7), abs=0.05)


def test_intervals_1d():
    assert intervals_1d(interval(-1.0, 2.0)) == [(-1.0, 2.0)]
    assert intervals_1d(IntervalUnion([(2, 3), (-1, 1)])) == [(-1.0, 1.0), (2.0, 3.0)]


def test_shape_averages_cache():
    sa = ShapeAverages(ellipse(2, 1))
    assert sa.G([1.0, 0.0]) == pytest.approx(math.log(2.0))
    assert sa.G([0.0, 2.0]) == pytest.approx(-math.log(2.0))
    assert ShapeAverages(interval(-1, 4)).G_on_sphere_1d() == pytest.approx(math.log(2.0))


# ---------------------------------------------------------------------------
# validation


def test_region_must_contain_origin():
    with pytest.raises(ValidationError):
        IntervalUnion([(0.5, 1.0)])
    with pytest.raises(ValidationError):
        translated_ball([1.5, 0.0])


def test_non_positive_support_rejected():
    with pytest.raises(ValidationError):
        make_star_region([(1, 1.0), (-1, 0.0)])
    with pytest.raises(ValidationError):
        ellipse(0.0, 1.0)


def test_origin_rejected():
    with pytest.raises(ValidationError):
        R_sigma(ball(2), [0.0, 0.0])


def test_ray_membership_intervals():
    ray = ray_membership(IntervalUnion([(-1, 1), (2, 3)]), [1.0])
    assert ray.intervals[0][0] == 0.0
    assert np.allclose(np.array(ray.intervals), [[0, 1], [2, 3]], atol=1e-10)


def test_understated_bounding_radius_rejected():
    with pytest.raises(ValidationError):
        IndicatorRegion(1, lambda x: np.abs(x[..., 0]) < 10.0, 1.0, 0.5)


def test_wrong_inner_radius_raises():
    # the claimed inner radius is wrong: (-0.1, 0.1) u (0.3, 1) is not a 0.5-ball
    reg = IndicatorRegion(1, lambda x: (np.abs(x[..., 0]) < 0.1)
                          | ((np.abs(x[..., 0]) > 0.3) & (np.abs(x[..., 0]) < 1.0)),
                          1.01, 0.5)
    with pytest.raises(QuadratureError):
        ray_membership(reg, [1.0])


def test_region_dict_round_trip():
    for doc in ({"kind": "ball", "dimension": 2, "radius": 2.0},
                {"kind": "ellipse", "semi_axes": [2.0, 1.0]},
                {"kind": "polygon-support-table", "dimension": 1, "values": [2.0, 1.0]},
                {"kind": "interval-union", "intervals": [[-1, 1], [2, 3]]},
                {"kind": "egg", "epsilon": 0.2}):
        reg = region_from_dict(doc)
        again = region_from_dict(region_to_dict(reg))
        x = [0.7] if reg.dimension == 1 else [0.3, -0.8]
        assert R_sigma(again, x) == pytest.approx(R_sigma(reg, x), abs=1e-10)
    with pytest.raises(ValidationError):
        region_from_dict({"kind": "hexagon"})
    with pytest.raises(ValidationError):
        region_from_dict({"kind": "ball", "dimension": 2, "radius": -1.0})


# ---------------------------------------------------------------------------
# properties

_pos = st.floats(0.2, 5.0)
_vec = st.tuples(st.floats(-3, 3), st.floats(-3, 3)).filter(
    lambda v: math.hypot(*v) > 1e-2)


def _star_from(values):
    n = len(values)
    ang = 2 * math.pi * np.arange(n) / n
    return StarRegion(2, np.array(values), angles=ang)


@settings(max_examples=60, deadline=None)
@given(st.lists(_pos, min_size=8, max_size=16), _vec, st.floats(0.05, 20.0))
def test_homogeneity(values, x, lam):
    reg = _star_from(values)
    x = np.array(x)
    assert R_sigma(reg, lam * x) == pytest.approx(R_sigma(reg, x) - math.log(lam), abs=1e-10)
    assert G_sigma(reg, lam * x) == pytest.approx(G_sigma(reg, x) - math.log(lam), abs=1e-10)


@settings(max_examples=60, deadline=None)
@given(st.lists(_pos, min_size=8, max_size=16), _vec)
def test_g_even_and_defect_odd(values, x):
    reg = _star_from(values)
    x = np.array(x)
    assert G_sigma(reg, -x) == pytest.approx(G_sigma(reg, x), abs=1e-12)
    assert asymmetry_defect(reg, -x) == pytest.approx(-asymmetry_defect(reg, x), abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(_pos, _pos, st.floats(0.1, 3.0))
def test_1d_star_r_closed_form(lp, lm, x):
    reg = make_star_region([(1, lp), (-1, lm)])
    assert R_sigma(reg, [x]) == pytest.approx(math.log(lp / x), abs=1e-12)
    assert R_sigma(reg, [-x]) == pytest.approx(math.log(lm / x), abs=1e-12)
    assert R_sigma(_indicator_copy(reg), [x], method="quadrature") == pytest.approx(
        math.log(lp / x), abs=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.lists(_pos, min_size=8, max_size=12), st.floats(0.1, 10.0))
def test_dilation_scales_support(values, r):
    reg = _star_from(values)
    th = np.linspace(0, 2 * math.pi, 11)
    assert np.allclose(reg.dilate(r).support_angle(th), r * reg.support_angle(th))
