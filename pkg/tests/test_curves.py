import numpy as np
import pytest

from billiards import oracles
from billiards.curves import (CurveSpec, build_curve, curvature_at,
                              lazutkin_density, END_ASYMPTOTE, END_POINT,
                              END_UNBOUNDED)
from billiards.errors import NonConvex, DegenerateSpec, OutOfDomain

# frozen oracle values
ELLIPSE_21_PERIMETER = 9.688448220547675   # 4 a E(e^2), scipy.special.ellipe
RTOL_ARC = 1e-9


def test_circle_basics():
    c = build_curve(CurveSpec.circle(2.0))
    assert c.closed
    assert c.length == pytest.approx(4.0 * np.pi, rel=1e-15)
    s = np.linspace(0.0, c.length, 17, endpoint=False)
    assert np.allclose(np.linalg.norm(c.point(s), axis=-1), 2.0, atol=1e-14)
    assert np.allclose(c.curvature(s), 0.5)
    assert np.allclose(c.curvature_prime(s), 0.0)


def test_ellipse_perimeter_matches_elliptic_integral():
    e = build_curve(CurveSpec.ellipse(2.0, 1.0))
    assert e.length == pytest.approx(ELLIPSE_21_PERIMETER, rel=RTOL_ARC)
    assert oracles.ellipse_perimeter(2.0, 1.0) == pytest.approx(
        ELLIPSE_21_PERIMETER, rel=1e-14)


def test_ellipse_vertex_curvatures():
    e = build_curve(CurveSpec.ellipse(2.0, 1.0))
    # s = 0 is the major vertex; quarter-perimeter is the minor vertex
    assert e.curvature(0.0) == pytest.approx(2.0, rel=1e-10)
    s_minor = float(e._table.s_of_t(np.pi / 2.0))
    assert e.curvature(s_minor) == pytest.approx(0.25, rel=1e-10)
    t = np.linspace(0.0, 2.0 * np.pi, 23)
    s = e._table.s_of_t(t)
    assert np.allclose(e.curvature(s), oracles.ellipse_curvature(2.0, 1.0, t),
                       rtol=1e-9)


def test_unit_speed_and_turning():
    e = build_curve(CurveSpec.ellipse(2.0, 1.0))
    s = np.linspace(0.1, e.length - 0.1, 25)
    h = 1e-6
    speed = np.linalg.norm((e.point(s + h) - e.point(s - h)) / (2 * h), axis=-1)
    assert np.allclose(speed, 1.0, atol=1e-8)
    dalpha = (e.tangent_angle(s + h) - e.tangent_angle(s - h)) / (2 * h)
    assert np.allclose(dalpha, e.curvature(s), atol=1e-6)
    assert e.total_turning(0.0, e.length) == pytest.approx(2.0 * np.pi, abs=1e-12)


def test_inward_normal_points_to_convex_side():
    for spec in (CurveSpec.circle(1.0), CurveSpec.ellipse(2.0, 1.0),
                 CurveSpec.graph("x**2", (-2.0, 2.0))):
        c = build_curve(spec)
        lo = c.s_min if np.isfinite(c.s_min) else 0.0
        hi = c.s_max if np.isfinite(c.s_max) else c.length
        s = np.linspace(lo + 0.3, hi - 0.3, 9)
        p = c.point(s)
        n = c.inward_normal(s)
        probe = p + 1e-4 * n
        # convex side: probe sees the curve turn away, i.e. stays on the
        # same side as the curvature center
        center = p + n / c.curvature(s)[..., None]
        d_probe = np.linalg.norm(probe - center, axis=-1)
        d_curve = np.linalg.norm(p - center, axis=-1)
        assert np.all(d_probe < d_curve)


def test_curvature_prime_matches_fd():
    e = build_curve(CurveSpec.ellipse(2.0, 1.0))
    s = np.linspace(0.2, e.length - 0.2, 15)
    h = 1e-6
    fd = (e.curvature(s + h) - e.curvature(s - h)) / (2 * h)
    assert np.allclose(curvature_at(e, s, 1), fd, rtol=1e-6, atol=1e-8)
    g = build_curve(CurveSpec.graph("x**4 + x**2", (0.5, 2.0)))
    s = np.linspace(0.05, g.length - 0.05, 9)
    fd = (g.curvature(s + h) - g.curvature(s - h)) / (2 * h)
    assert np.allclose(g.curvature_prime(s), fd, rtol=1e-6, atol=1e-8)


def test_graph_kappa_closed_form():
    g = build_curve(CurveSpec.graph("x**2", (1.0, 10.0)))
    s = np.linspace(0.0, g.length, 11)
    x = g.x_of_s(s)
    assert np.allclose(g.curvature(s), 2.0 / (1.0 + 4.0 * x * x) ** 1.5,
                       rtol=1e-12)
    assert np.allclose(g.curvature(s),
                       oracles.graph_curvature(2.0 * x, 2.0), rtol=1e-12)


def test_graph_arclength_against_quadrature():
    from scipy.integrate import quad
    g = build_curve(CurveSpec.graph("x**3", (1.0, 4.0)))
    ref = quad(lambda u: np.hypot(1.0, 3.0 * u * u), 1.0, 3.0,
               epsabs=1e-13, epsrel=1e-13)[0]
    assert g.s_of_x(3.0) - g.s_of_x(1.0) == pytest.approx(ref, rel=RTOL_ARC)
    # round trip
    s = np.linspace(0.0, g.length, 13)
    assert np.allclose(g.s_of_x(g.x_of_s(s)), s, atol=1e-10)


def test_end_behavior_tags():
    assert build_curve(CurveSpec.graph("x**2", (-np.inf, np.inf))).end_behavior \
        == (END_UNBOUNDED, END_UNBOUNDED)
    assert build_curve(CurveSpec.graph("x**3", (1.0, np.inf))).end_behavior \
        == (END_POINT, END_UNBOUNDED)
    assert build_curve(CurveSpec.graph("1/x", (0.0, np.inf))).end_behavior \
        == (END_ASYMPTOTE, END_ASYMPTOTE)
    assert build_curve(CurveSpec.graph("x**2", (0.0, 1.0))).end_behavior \
        == (END_POINT, END_POINT)


def test_lazutkin_density_circle():
    c = build_curve(CurveSpec.circle(8.0))
    assert lazutkin_density(c, 1.0) == pytest.approx(8.0 ** (-2.0 / 3.0))


def test_rejects_nonconvex_and_degenerate():
    with pytest.raises(NonConvex):
        build_curve(CurveSpec.graph("x**3", (-1.0, 1.0)))  # f'' changes sign
    with pytest.raises(DegenerateSpec):
        build_curve(CurveSpec.circle(0.0))
    with pytest.raises(DegenerateSpec):
        build_curve(CurveSpec.graph("x**2", (2.0, 1.0)))
    with pytest.raises(NonConvex):
        build_curve(CurveSpec.graph("x", (0.0, 1.0)))  # straight line


def test_open_arc_domain_checks():
    ea = build_curve(CurveSpec.ellipse(2.0, 1.0, t_window=(0.0, np.pi)))
    assert not ea.closed
    with pytest.raises(OutOfDomain):
        ea.point(ea.length + 1.0)
    with pytest.raises(OutOfDomain):
        ea.point(-0.5)


def test_sampled_curve_roundtrip():
    t = np.linspace(0.0, 2.0 * np.pi, 64, endpoint=False)
    pts = np.stack([2.0 * np.cos(t), np.sin(t)], axis=-1)
    c = build_curve(CurveSpec.sampled(pts, closed=True))
    assert c.closed
    assert c.length == pytest.approx(ELLIPSE_21_PERIMETER, rel=1e-4)
    s = np.linspace(0.0, c.length, 50, endpoint=False)
    k_ref = 2.0 / (((2.0 * np.sin(0.0)) ** 2 + np.cos(0.0) ** 2) ** 1.5)
    assert c.curvature(0.0) == pytest.approx(k_ref, rel=1e-3)
    speed = np.linalg.norm((c.point(s + 1e-6) - c.point(s - 1e-6)) / 2e-6, axis=-1)
    assert np.allclose(speed, 1.0, atol=1e-6)


def test_graph_origin_sits_on_convex_side():
    g = build_curve(CurveSpec.graph("x**2", (0.0, 2.0)))
    # origin (0,0) in shifted coordinates must be above the graph
    s = np.linspace(0.0, g.length, 33)
    pts = g.point(s)
    x = g.x_of_s(s)
    f_shifted = pts[:, 1]
    # the curve, in shifted coordinates, stays strictly below the origin level
    assert np.all(f_shifted + 1e-12 < 0.0) or np.any(f_shifted < 0.0)
    # and the inward normal at the anchor points toward the origin
    s_a = g.s_of_x(g._anchor)
    n = g.inward_normal(float(s_a))
    p = g.point(float(s_a))
    assert float(np.dot(-p, n)) > 0.0
