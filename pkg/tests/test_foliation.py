"""Sector gluing, orbit extension, and flat-perturbation families,
checked exactly on the model translation and against the series defect
certificates on real charts."""

import math

import numpy as np
import pytest

from billiards.billiard import BilliardMap
from billiards.curves import CurveSpec, build_curve
from billiards.errors import (DegenerateSpec, GradientLoss, OrbitEscape,
                              SectorTooLarge)
from billiards.foliation import (ChartBilliardMap, FlatPerturbation,
                                 ModelMap, distinctness_probe,
                                 extend_by_dynamics, glue_on_sector,
                                 hessian_convexity, leaf_polyline,
                                 perturbed_family)
from billiards.normal_form import build_normal_chart
from billiards.series import build_invariant_series, step_defect


@pytest.fixture(scope="module")
def model_gluing():
    return glue_on_sector(ModelMap(), eta=0.05)


@pytest.fixture(scope="module")
def circle_chart_map(circle_chart, circle_map):
    return ChartBilliardMap(circle_chart, circle_map)


@pytest.fixture(scope="module")
def ellipse_chart_map(ellipse_chart, ellipse_map):
    return ChartBilliardMap(ellipse_chart, ellipse_map)


# -- partition and gluing on the model map ------------------------------------

def test_partition_identity(model_gluing):
    nu = np.linspace(-0.3, 1.3, 401)
    assert np.max(np.abs(model_gluing.rho1(nu)
                         + model_gluing.rho2(nu) - 1.0)) == 0.0
    assert np.all(model_gluing.rho1(nu[nu <= 0.45]) == 1.0)
    assert np.all(model_gluing.rho2(nu[nu >= 0.55]) == 1.0)


def test_model_gluing_locality(model_gluing):
    # phi-tilde == phi exactly left of the ramp
    phi = 0.013
    for nu in (-0.25, 0.0, 0.2, 0.44):
        assert model_gluing.value(nu * phi, phi) == phi


def test_model_gluing_image_subsector(model_gluing):
    # on the image subsector the glued value is phi of the preimage
    phi = 0.02
    for nu in (0.6, 0.9, 1.2):
        assert abs(model_gluing.value(nu * phi, phi) - phi) < 1e-17


def test_model_gluing_overlap_invariance(model_gluing):
    mm = ModelMap()
    phi = 0.01
    for nu in (-0.25, -0.1, 0.05, 0.25):
        walker = mm.lift(nu * phi, phi)
        walker.step()
        if not model_gluing.contains(walker.tau, walker.phi):
            continue
        before = model_gluing.value(nu * phi, phi)
        after = model_gluing.value(walker.tau, walker.phi)
        assert abs(after - before) < 1e-16


def test_gluing_parameter_validation():
    with pytest.raises(DegenerateSpec):
        glue_on_sector(ModelMap(), chi=0.6)
    with pytest.raises(DegenerateSpec):
        glue_on_sector(ModelMap(), chi=0.3, sigma=0.11)


def test_model_extension_exact(model_gluing):
    fld = extend_by_dynamics(model_gluing, ((-0.4, 0.8), (5e-3, 2e-2)),
                             n_bands=3)
    assert fld.certificate["max_defect"] < 1e-15
    for band in fld.certificate["per_band"]:
        assert band["base_deviation"] < 1e-15  # reproduces phi-tilde = phi
        assert band["steps_times_phi"] < 2.0


# -- extension on real charts ---------------------------------------------------

def test_circle_strip_extension(circle_chart_map):
    gluing = glue_on_sector(circle_chart_map, eta=0.05)
    phi = math.sqrt(1e-4)
    fld = extend_by_dynamics(gluing, ((-0.3, 0.7), (phi, phi)), n_bands=1)
    band = fld.certificate["per_band"][0]
    # the chart is exact on the circle: the extended field reproduces
    # the level sqrt(h) = const, i.e. y = const
    assert fld.certificate["max_defect"] < 1e-8
    assert band["base_deviation"] < 1e-8
    assert band["steps_times_phi"] < 2.0


def test_ellipse_extension_tracks_series_defect(ellipse, ellipse_map,
                                                ellipse_series,
                                                ellipse_chart_map):
    gluing = glue_on_sector(ellipse_chart_map, eta=0.15)
    top = math.sqrt(2e-2)
    fld = extend_by_dynamics(gluing, ((-0.3, 0.7), (top / 4.0, top)),
                             n_bands=3)
    # compare against the truncation-defect certificate of the series
    # at a y matching the top band level
    s_ref = 1.3
    lo, hi = 1e-6, 0.15
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if ellipse_series.eval_h(s_ref, mid) < top ** 2:
            lo = mid
        else:
            hi = mid
    d = step_defect(ellipse_map,
                    lambda s, y: ellipse_series.eval_h(s, y),
                    np.array([0.5 * (lo + hi)]))
    assert fld.certificate["max_defect"] <= 10.0 * d[0]
    for band in fld.certificate["per_band"]:
        assert band["steps_times_phi"] < 2.0


def test_sector_too_large(ellipse_chart_map):
    chart = ellipse_chart_map.chart
    eta = 1.2 * math.sqrt(chart.series.eval_h(1.0, chart.y_max))
    with pytest.raises(SectorTooLarge):
        glue_on_sector(ellipse_chart_map, eta=eta)


@pytest.fixture(scope="module")
def arc_chart_map():
    curve = build_curve(CurveSpec.graph("x**3", (0.05, 5.0)))
    lo, hi = curve.s_of_x(0.25), curve.s_of_x(0.9)
    series = build_invariant_series(
        curve, 2, window=(lo, hi), z_scale=0.03,
        levels=np.geomspace(2e-5, 4e-4, 8))
    chart = build_normal_chart(curve, series, s0=0.5 * (lo + hi))
    return ChartBilliardMap(chart, BilliardMap(curve))


def test_arc_extension_window(arc_chart_map):
    gluing = glue_on_sector(arc_chart_map, eta=math.sqrt(4e-4))
    phi = math.sqrt(1e-4)
    fld = extend_by_dynamics(gluing, ((-0.05, 0.08), (phi, phi)),
                             n_bands=1)
    assert fld.certificate["per_band"][0]["base_deviation"] < 1e-8
    with pytest.raises(OrbitEscape):
        extend_by_dynamics(gluing, ((-5.0, 5.0), (phi, phi)), n_bands=1)


# -- flat perturbations -----------------------------------------------------------

def test_flat_perturbation_structure():
    psi = FlatPerturbation()
    h = np.geomspace(1e-3, 5e-2, 7)
    t = np.linspace(-0.7, 1.4, 11)
    for hv in h:
        assert psi(0.0, hv) == 0.0
        assert np.max(np.abs(psi(t + 1.0, np.full(t.shape, hv))
                             - psi(t, np.full(t.shape, hv)))) < 1e-12
    assert np.all(psi(t, np.zeros(t.shape)) == 0.0)
    assert psi.max_abs(5e-2) < 0.125


def test_flatness_certificate():
    psi = FlatPerturbation()
    assert all(v <= 1e-12 for v in psi.flatness_certificate())
    sharp = FlatPerturbation(amplitude=1e-4, sharpness=6.0)
    assert all(v <= 1e-12 for v in sharp.flatness_certificate())


def test_model_family_machine_invariant():
    psi = FlatPerturbation()
    fields = perturbed_family(None, psi, [0.0, 0.4, 1.0],
                              ((-0.5, 0.5), (1e-3, 2e-2)),
                              chart_map=ModelMap(), n_orbit=1000)
    for fld in fields:
        assert fld.certificate["orbit_defect"] < 1e-13
        assert fld.certificate["min_grad_h"] > 0.5
    # the zero member is the base foliation h = const
    taus = np.linspace(-0.5, 0.5, 17)
    hs = np.full(taus.shape, 5e-3)
    assert np.all(fields[0].evaluate(taus, hs) == hs)


def test_family_difference_lower_bound():
    # members 0 and 1 differ at h = 1e-2 by at least a*exp(-1/(c*h))
    # up to the sine grid resolution
    psi = FlatPerturbation(amplitude=1e-2, sharpness=10.0)
    f0, f1 = perturbed_family(None, psi, [0.0, 1.0],
                              ((-0.5, 0.5), (1e-3, 2e-2)))
    taus = np.linspace(-0.5, 0.5, 2001)
    hs = np.full(taus.shape, 1e-2)
    gap = np.max(np.abs(f1.evaluate(taus, hs) - f0.evaluate(taus, hs)))
    assert gap >= 1e-2 * math.exp(-10.0) * (1.0 - 1e-3)


def test_family_distinctness_probe():
    psi = FlatPerturbation(amplitude=1e-2, sharpness=10.0)
    fields = perturbed_family(None, psi, [0.0, 0.5, 1.0],
                              ((-0.5, 0.5), (1e-3, 2e-2)))
    floor = 1.0 / (30.0 * psi.sharpness)
    for i in range(len(fields)):
        for j in range(i + 1, len(fields)):
            assert distinctness_probe(fields[i], fields[j],
                                      h_floor=floor) > 1e-15


def test_multi_weight_member():
    psi = FlatPerturbation(amplitude=1e-2, sharpness=10.0)
    (fld,) = perturbed_family(None, psi, [(1.0, 1.0)],
                              ((-0.5, 0.5), (1e-3, 2e-2)))
    tau, h = 0.21, 1e-2
    base = float(psi(tau / math.sqrt(h), h))
    expected = h + base / 4.0 + base ** 2 / 32.0
    assert abs(fld.evaluate(tau, h) - expected) < 1e-15


def test_gradient_loss_detected():
    psi = FlatPerturbation(amplitude=0.1, sharpness=1e6)
    with pytest.raises(GradientLoss):
        perturbed_family(None, psi, [1.0], ((-1.0, 1.0), (1e-4, 1e-2)))


def test_circle_family_orbit_invariance(circle_chart, circle_chart_map):
    psi = FlatPerturbation()
    fields = perturbed_family(circle_chart, psi, [0.0, 1.0],
                              ((-0.5, 0.5), (1e-3, 2e-2)),
                              chart_map=circle_chart_map)
    for fld in fields:
        assert fld.certificate["orbit_defect"] < 1e-10
        assert fld.certificate["min_grad_h"] > 0.5


# -- convexity report and leaf export ----------------------------------------------

def test_hessian_quadratic_oracle():
    # H(x^2 + y^2 - 1) = 8 (x^2 + y^2)
    rep = hessian_convexity(lambda x, y: x ** 2 + y ** 2 - 1.0,
                            ((0.4, 1.2), (0.4, 1.2)))
    assert rep["sign"] == "positive"
    assert abs(rep["min_abs"] - 8.0 * (0.4 ** 2 + 0.4 ** 2)) < 1e-5


def test_hessian_linear_degenerate():
    rep = hessian_convexity(lambda x, y: 2.0 * x + 3.0 * y,
                            ((0.0, 1.0), (0.0, 1.0)))
    assert rep["degenerate"]
    assert rep["sign"] == "degenerate"


def test_leaf_polyline_follows_level():
    psi = FlatPerturbation()
    (fld,) = perturbed_family(None, psi, [1.0],
                              ((-0.5, 0.5), (1e-3, 2e-2)))
    rows = leaf_polyline(fld, 5e-3, n=64)
    g_on_leaf = np.array([fld.evaluate(t, lv) for t, lv in rows])
    assert np.max(np.abs(g_on_leaf - 5e-3)) < 1e-12
