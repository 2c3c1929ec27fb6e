import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from phaseless_fm.geometry import (
    CURVE_KINDS,
    BoundaryCurve,
    GeometryError,
    SamplingGrid,
    curve_derivatives,
    curve_point,
    grid_nodes,
    outward_normal,
    points_in_polygon,
    uniform_directions,
)


def test_table_values():
    np.testing.assert_allclose(curve_point(BoundaryCurve("circle"), 0.0), [1, 0], atol=1e-15)
    np.testing.assert_allclose(curve_point(BoundaryCurve("kite"), 0.0), [1, 0], atol=1e-15)
    np.testing.assert_allclose(curve_point(BoundaryCurve("peanut"), np.pi / 2), [0, 0.5], atol=1e-15)


def test_centre_translation():
    c = BoundaryCurve("rounded_triangle", center=(4.0, 2.0))
    np.testing.assert_allclose(c.point(0.0), [4.0 + 2.3, 2.0], atol=1e-14)


def test_circle_derivatives_exact():
    t = np.linspace(0, 2 * np.pi, 13)
    d1, d2 = curve_derivatives(BoundaryCurve("circle"), t)
    np.testing.assert_allclose(d1, np.stack([-np.sin(t), np.cos(t)], -1), atol=1e-15)
    np.testing.assert_allclose(d2, -np.stack([np.cos(t), np.sin(t)], -1), atol=1e-15)


@pytest.mark.parametrize("kind", CURVE_KINDS)
def test_derivatives_finite_difference(kind):
    curve = BoundaryCurve(kind, center=(0.3, -0.7))
    t = np.random.default_rng(5).uniform(0, 2 * np.pi, 40)
    h = 1e-5
    d1, d2 = curve.derivatives(t)
    fd1 = (curve.point(t + h) - curve.point(t - h)) / (2 * h)
    np.testing.assert_array_less(np.abs(d1 - fd1), 1e-6)
    d1p, _ = curve.derivatives(t + h)
    d1m, _ = curve.derivatives(t - h)
    np.testing.assert_array_less(np.abs(d2 - (d1p - d1m) / (2 * h)), 1e-6)


@pytest.mark.parametrize("kind", CURVE_KINDS)
def test_periodicity(kind):
    curve = BoundaryCurve(kind)
    t = np.linspace(0, 2 * np.pi, 7)
    a, _ = curve.derivatives(t)
    b, _ = curve.derivatives(t + 2 * np.pi)
    np.testing.assert_allclose(a, b, atol=1e-12)


@pytest.mark.parametrize("kind", CURVE_KINDS)
def test_regular_and_c2_at_nodes(kind):
    curve = BoundaryCurve(kind, quadrature_count=512)
    _, _, d1, d2 = curve.nodes()
    assert np.all(np.hypot(d1[:, 0], d1[:, 1]) > 0.1)
    assert np.all(np.isfinite(d2))


@pytest.mark.parametrize("kind", CURVE_KINDS)
def test_normals_unit_and_outward(kind):
    curve = BoundaryCurve(kind, center=(1.0, -2.0))
    t = np.linspace(0, 2 * np.pi, 97, endpoint=False)
    nu = outward_normal(curve, t)
    np.testing.assert_allclose(np.hypot(nu[:, 0], nu[:, 1]), 1.0, atol=1e-14)
    pts = curve.point(t)
    outside = pts + 1e-3 * nu
    inside = pts - 1e-3 * nu
    assert not curve.contains(outside, n=20000).any()
    assert curve.contains(inside, n=20000).all()


def test_circle_normal_radial():
    np.testing.assert_allclose(outward_normal(BoundaryCurve("circle"), 0.0), [1, 0], atol=1e-15)


@pytest.mark.parametrize("kind", CURVE_KINDS)
def test_curve_encloses_centre(kind):
    curve = BoundaryCurve(kind, center=(-3.0, 4.0))
    assert curve.contains([curve.center]).all()


def test_simple_curves_have_no_self_intersection():
    for kind in CURVE_KINDS:
        poly = BoundaryCurve(kind).polyline(400)
        a = poly
        b = np.roll(poly, -1, axis=0)
        n = len(poly)
        for i in range(n):
            # segment i vs all non-adjacent segments j
            j = np.arange(n)
            mask = (j != i) & (j != (i + 1) % n) & (j != (i - 1) % n)
            p, r = a[i], b[i] - a[i]
            q, s = a[mask], b[mask] - a[mask]
            denom = r[0] * s[:, 1] - r[1] * s[:, 0]
            qp = q - p
            with np.errstate(divide="ignore", invalid="ignore"):
                tt = (qp[:, 0] * s[:, 1] - qp[:, 1] * s[:, 0]) / denom
                uu = (qp[:, 0] * r[1] - qp[:, 1] * r[0]) / denom
            assert not np.any((tt > 0) & (tt < 1) & (uu > 0) & (uu < 1))


def test_unknown_kind_and_odd_quadrature():
    with pytest.raises(GeometryError):
        BoundaryCurve("ellipse")
    with pytest.raises(GeometryError):
        BoundaryCurve("circle", quadrature_count=31)


def test_area_and_perimeter_of_circle():
    c = BoundaryCurve("circle")
    assert c.area == pytest.approx(np.pi, rel=1e-5)
    assert c.perimeter == pytest.approx(2 * np.pi, rel=1e-12)


def test_uniform_directions_four():
    d = uniform_directions(4)
    np.testing.assert_allclose(d.angles, [0, np.pi / 2, np.pi, 3 * np.pi / 2])


@settings(max_examples=30, deadline=None)
@given(half=st.integers(1, 200))
def test_directions_properties(half):
    d = uniform_directions(2 * half)
    v = d.vectors
    np.testing.assert_allclose(v[d.antipode(np.arange(d.count))], -v, atol=1e-12)
    np.testing.assert_allclose(v.sum(axis=0), 0, atol=1e-12)
    assert np.all(np.diff(d.angles) > 0)
    assert d.angles[0] == 0 and d.angles[-1] < 2 * np.pi


@pytest.mark.parametrize("bad", [0, 3, -2, 7])
def test_directions_reject_odd(bad):
    with pytest.raises(GeometryError):
        uniform_directions(bad)


def test_grid_nodes_order():
    g = SamplingGrid(0, 1, 0, 1, 2, 2)
    np.testing.assert_array_equal(grid_nodes(g), [[0, 0], [1, 0], [0, 1], [1, 1]])


def test_grid_count_and_spacing():
    g = SamplingGrid(-6, 6, -2, 3, 13, 6)
    assert grid_nodes(g).shape == (13 * 6, 2)
    assert g.spacing == (12 / 12, 5 / 5)
    nodes = grid_nodes(g)
    assert nodes[1, 0] - nodes[0, 0] == pytest.approx(g.spacing[0])


def test_points_in_polygon_square():
    square = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], float)
    res = points_in_polygon([[0.5, 0.5], [1.5, 0.5], [-0.1, 0.2]], square)
    assert res.tolist() == [True, False, False]
