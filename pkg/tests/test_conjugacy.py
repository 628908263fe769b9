"""Lazutkin lengths, convergence verdicts, and conjugating boundary maps.

Oracle routes used here and nowhere in production code:

* circles: L = 2 pi R^(1/3) in closed form;
* ellipses: quadrature of kappa^(2/3) |gamma'| in the angle parameter,
  independent of the arc-length machinery;
* graph tails: quadrature of f''^(2/3) (1+f'^2)^(-1/2) dx with the
  infinite tail folded to a finite interval by u = 1/x.
"""

import numpy as np
import pytest
from scipy.integrate import quad

from billiards import oracles
from billiards.billiard import BilliardMap, phi_of_y
from billiards.conjugacy import (CONVERGENT, DIVERGENT, INCONCLUSIVE,
                                 METHOD_RULE, METHOD_TAIL, METHOD_WINDOW,
                                 boundary_conjugating_map, classify_conjugacy,
                                 lazutkin_integral, lazutkin_length)
from billiards.curves import CurveSpec, build_curve
from billiards.errors import (Inconclusive, InconclusiveInput, OutOfDomain,
                              QuadratureFailure, VerdictNegative)

LENGTH_RTOL = 1e-9
ADDITIVITY_TOL = 1e-9
AFFINE_FIT_TOL = 1e-6

# independent tail quadrature of the catalog graphs, frozen:
#   x^3 on [1,inf):  int (6x)^(2/3) (1+9x^4)^(-1/2) dx
#   1/x on [.5,inf): int 2^(2/3) x^(-2) (1+x^(-4))^(-1/2) dx
CUBIC_LENGTH = 3.288392262140077
RECIP_LENGTH = 2.154295484157765


@pytest.fixture(scope="module")
def circle1():
    return build_curve(CurveSpec.circle(1.0))


@pytest.fixture(scope="module")
def circle8():
    return build_curve(CurveSpec.circle(8.0))


@pytest.fixture(scope="module")
def ellipse():
    return build_curve(CurveSpec.ellipse(2.0, 1.0))


@pytest.fixture(scope="module")
def ellipse_arc():
    return build_curve(CurveSpec.ellipse(2.0, 1.0, t_window=(0.3, 2.2)))


@pytest.fixture(scope="module")
def parabola():
    return build_curve(CurveSpec.graph("x**2", (1.0, np.inf)))


@pytest.fixture(scope="module")
def full_parabola():
    return build_curve(CurveSpec.graph("x**2", (-np.inf, np.inf)))


@pytest.fixture(scope="module")
def cubic():
    return build_curve(CurveSpec.graph("x**3", (1.0, np.inf)))


@pytest.fixture(scope="module")
def reciprocal():
    return build_curve(CurveSpec.graph("1/x", (0.5, np.inf)))


def graph_tail_oracle(f_prime, f_second, x_lo, x_split=50.0):
    """Independent length of a convex graph arc reaching x -> infinity."""
    def g(x):
        return f_second(x) ** (2.0 / 3.0) / np.sqrt(1.0 + f_prime(x) ** 2)
    main, _ = quad(g, x_lo, x_split, epsabs=1e-13, epsrel=1e-13, limit=500)
    tail, _ = quad(lambda u: g(1.0 / u) / u ** 2, 1e-300, 1.0 / x_split,
                   epsabs=1e-13, epsrel=1e-13, limit=500)
    return main + tail


# ---------------------------------------------------------------------------
# lengths of the closed catalog curves

def test_circle_length_closed_form():
    for radius in (1.0, 8.0, 2.7):
        curve = build_curve(CurveSpec.circle(radius))
        rep = lazutkin_length(curve)
        want = oracles.circle_lazutkin_length(radius)
        assert rep.finite and rep.value > 0
        assert abs(rep.value - want) <= LENGTH_RTOL * want
        assert rep.backward.method == METHOD_WINDOW
        assert rep.forward.verdict == CONVERGENT


def test_ellipse_length_parameter_quadrature(ellipse):
    a, b = 2.0, 1.0

    def integrand(t):
        speed = np.sqrt(a * a * np.sin(t) ** 2 + b * b * np.cos(t) ** 2)
        return oracles.ellipse_curvature(a, b, t) ** (2.0 / 3.0) * speed

    want, _ = quad(integrand, 0.0, 2.0 * np.pi,
                   epsabs=1e-13, epsrel=1e-13, limit=500)
    rep = lazutkin_length(ellipse)
    assert abs(rep.value - want) <= 1e-10 * want
    assert abs(rep.value - 6.846510414853633) < 1e-9


def test_additivity_over_partitions(ellipse, cubic):
    rng = np.random.default_rng(5)
    for curve, lo, hi in ((ellipse, 0.0, ellipse.length), (cubic, 0.0, 5.0)):
        cuts = np.sort(rng.uniform(lo, hi, size=4))
        cuts = np.concatenate([[lo], cuts, [hi]])
        whole = lazutkin_integral(curve, lo, hi)
        parts = sum(lazutkin_integral(curve, p, q)
                    for p, q in zip(cuts, cuts[1:]))
        assert abs(whole - parts) < ADDITIVITY_TOL


def test_integral_window_validation(ellipse):
    with pytest.raises(OutOfDomain):
        lazutkin_integral(ellipse, 0.0, np.inf)
    with pytest.raises(OutOfDomain):
        lazutkin_integral(ellipse, 2.0, 1.0)
    assert lazutkin_integral(ellipse, 1.0, 1.0) == 0.0


# ---------------------------------------------------------------------------
# improper ends of graph arcs

def test_parabola_divergent_by_power_rule(parabola):
    rep = lazutkin_length(parabola)
    assert rep.backward.verdict == CONVERGENT
    assert rep.backward.method == METHOD_WINDOW
    assert rep.forward.verdict == DIVERGENT
    assert rep.forward.method == METHOD_RULE
    assert rep.forward.exponent == pytest.approx(2.0, abs=1e-12)
    assert rep.value is None and not rep.finite
    assert rep.describe() == "divergent (forward)"


def test_cubic_convergent_by_power_rule(cubic):
    rep = lazutkin_length(cubic)
    assert rep.finite
    assert rep.forward.method == METHOD_RULE
    assert rep.forward.exponent == pytest.approx(3.0, abs=1e-12)
    want = graph_tail_oracle(lambda x: 3.0 * x * x, lambda x: 6.0 * x, 1.0)
    assert abs(rep.value - want) < 1e-8
    assert abs(rep.value - CUBIC_LENGTH) < 1e-8


def test_reciprocal_convergent_by_asymptote_rule(reciprocal):
    rep = lazutkin_length(reciprocal)
    assert rep.finite
    assert rep.forward.method == METHOD_RULE
    assert rep.forward.exponent is None
    want = graph_tail_oracle(lambda x: -x ** -2.0, lambda x: 2.0 * x ** -3.0,
                             0.5)
    assert abs(rep.value - want) < 1e-8
    assert abs(rep.value - RECIP_LENGTH) < 1e-8


def test_full_parabola_divergent_both_ways(full_parabola):
    rep = lazutkin_length(full_parabola)
    assert rep.pattern == (True, True)
    assert rep.backward.method == METHOD_RULE
    assert rep.forward.exponent == pytest.approx(2.0, abs=1e-12)


def test_exponential_graph_needs_tail_fit():
    curve = build_curve(CurveSpec.graph("exp(x)", (0.0, np.inf)))
    rep = lazutkin_length(curve)
    # growth is not a power of x, so the verdict comes from the fitted
    # decay exponent of kappa^(2/3), which is -4/3 for this profile
    assert rep.forward.method == METHOD_TAIL
    assert rep.forward.verdict == CONVERGENT
    assert rep.forward.exponent == pytest.approx(-4.0 / 3.0, abs=0.05)
    assert rep.finite and rep.value > 0


def test_oscillating_growth_is_inconclusive():
    curve = build_curve(
        CurveSpec.graph("x**2*(2 + 0.1*sin(log(x)))", (1.0, np.inf)))
    with pytest.raises(Inconclusive):
        lazutkin_length(curve)
    rep = lazutkin_length(curve, strict=False)
    assert rep.forward.verdict == INCONCLUSIVE
    assert rep.forward.method == METHOD_TAIL


def test_direction_restriction(cubic):
    both = lazutkin_length(cubic)
    fwd = lazutkin_length(cubic, direction="forward")
    assert fwd.backward.value is None and fwd.value is None
    assert fwd.backward.verdict == CONVERGENT
    assert abs(both.backward.value + fwd.forward.value - both.value) < 1e-12
    with pytest.raises(OutOfDomain):
        lazutkin_length(cubic, direction="sideways")


# ---------------------------------------------------------------------------
# conjugacy verdicts

def test_catalog_truth_table(circle1, circle8, ellipse_arc, parabola,
                             full_parabola, cubic, reciprocal):
    curves = {"circle1": circle1, "circle8": circle8, "arc": ellipse_arc,
              "parabola": parabola, "full_par": full_parabola,
              "cubic": cubic, "recip": reciprocal}
    reports = {k: lazutkin_length(v, strict=False)
               for k, v in curves.items()}
    # hand-derived: finite lengths for circle1, circle8, arc, cubic, recip
    # (all pairwise distinct); parabola diverges forward only; the full
    # parabola diverges both ways.
    table = [
        ("circle1", "circle8", True, "i", False),
        ("circle1", "arc", True, "i", False),
        ("circle1", "cubic", True, "i", False),
        ("circle1", "recip", True, "i", False),
        ("arc", "cubic", True, "i", False),
        ("cubic", "recip", True, "i", False),
        ("circle1", "parabola", False, "neither", False),
        ("circle8", "parabola", False, "neither", False),
        ("parabola", "cubic", False, "neither", False),
        ("parabola", "recip", False, "neither", False),
        ("parabola", "full_par", False, "neither", False),
        ("full_par", "circle1", False, "neither", False),
        ("parabola", "parabola", True, "ii", True),
        ("full_par", "full_par", True, "ii", True),
    ]
    finite_vals = [reports[k].value for k in
                   ("circle1", "circle8", "arc", "cubic", "recip")]
    assert np.min(np.abs(np.diff(np.sort(finite_vals)))) > 1e-3
    for name1, name2, smooth, cond, symp in table:
        verdict = classify_conjugacy(curves[name1], curves[name2],
                                     reports[name1], reports[name2])
        assert verdict.smooth_conjugate is smooth, (name1, name2)
        assert verdict.condition == cond, (name1, name2)
        assert verdict.symplectic_conjugate is symp, (name1, name2)
        if smooth:
            assert verdict.symplectic_conjugate <= verdict.smooth_conjugate


def test_circle_pair_verdict_and_alpha(circle1, circle8):
    verdict = classify_conjugacy(circle1, circle8)
    assert verdict.smooth_conjugate and verdict.condition == "i"
    assert not verdict.symplectic_conjugate
    assert verdict.alpha == pytest.approx(2.0, abs=1e-12)
    back = classify_conjugacy(circle8, circle1)
    assert back.alpha == pytest.approx(0.5, abs=1e-12)


def test_symplectic_requires_equal_lengths(circle1, ellipse):
    same = classify_conjugacy(circle1, circle1)
    assert same.symplectic_conjugate and same.alpha == 1.0
    mixed = classify_conjugacy(ellipse, circle1)
    assert mixed.smooth_conjugate and not mixed.symplectic_conjugate


def test_inconclusive_report_rejected(circle1):
    curve = build_curve(
        CurveSpec.graph("x**2*(2 + 0.1*sin(log(x)))", (1.0, np.inf)))
    rep = lazutkin_length(curve, strict=False)
    with pytest.raises(InconclusiveInput):
        classify_conjugacy(curve, circle1, report1=rep)


# ---------------------------------------------------------------------------
# boundary conjugating maps

def test_circle_pair_map_is_pure_rescaling(circle1, circle8):
    bmap = boundary_conjugating_map(circle1, circle8)
    s = np.linspace(0.0, 2.0 * np.pi, 65, endpoint=False)
    assert np.max(np.abs(bmap(s) - 8.0 * s)) < 1e-10
    back = boundary_conjugating_map(circle8, circle1)
    s8 = np.linspace(0.0, 16.0 * np.pi, 65, endpoint=False)
    assert np.max(np.abs(back(s8) - s8 / 8.0)) < 1e-10


def test_identity_maps(circle1, parabola):
    bmap = boundary_conjugating_map(circle1, circle1)
    s = np.linspace(0.0, 2.0 * np.pi, 33, endpoint=False)
    assert np.max(np.abs(bmap(s) - s)) < 1e-12
    verdict = classify_conjugacy(parabola, parabola)
    window = (0.0, 10.0)
    hmap = boundary_conjugating_map(parabola, parabola, verdict,
                                    window1=window, window2=window)
    sw = np.linspace(*window, 21)
    assert np.max(np.abs(hmap(sw) - sw)) < 1e-10


def test_map_image_is_strictly_increasing(ellipse, circle1):
    bmap = boundary_conjugating_map(ellipse, circle1)
    s = np.linspace(0.0, ellipse.length, 257, endpoint=False)
    assert np.all(np.diff(bmap(s)) > 0)


def test_affine_rigidity_in_lazutkin_parameter(ellipse, circle1):
    verdict = classify_conjugacy(ellipse, circle1)
    bmap = boundary_conjugating_map(ellipse, circle1, verdict)
    t_hi = float(bmap.chart1.t(ellipse.length))
    t_grid = np.linspace(0.0, 0.999 * t_hi, 513)
    s_grid = bmap.chart1.t_inverse(t_grid)
    t2_vals = bmap.chart2.t(bmap(s_grid))
    coef = np.polyfit(t_grid, t2_vals, 1)
    assert np.max(np.abs(np.polyval(coef, t_grid) - t2_vals)) < AFFINE_FIT_TOL
    assert coef[0] == pytest.approx(verdict.alpha, rel=1e-9)


def test_orbit_transport_lands_on_translation(ellipse, circle1):
    verdict = classify_conjugacy(ellipse, circle1)
    bmap = boundary_conjugating_map(ellipse, circle1, verdict)
    y0 = 1e-3
    s_hist, phi_hist = BilliardMap(ellipse).orbit(0.4, phi_of_y(y0), 200)
    y_hist = 2.0 * np.sin(phi_hist / 2.0) ** 2
    t2 = bmap.chart2.t(bmap(np.mod(s_hist, ellipse.length)))
    t2 = np.unwrap(t2, period=float(bmap.chart2.t(circle1.length)))
    inc = np.diff(t2)
    spread = (inc.max() - inc.min()) / inc.mean()
    assert inc.min() > 0
    assert spread < 5.0 * np.sqrt(y_hist.max())


def test_map_error_paths(parabola, circle1):
    with pytest.raises(VerdictNegative):
        boundary_conjugating_map(parabola, circle1)
    verdict = classify_conjugacy(parabola, parabola)
    with pytest.raises(QuadratureFailure):
        boundary_conjugating_map(parabola, parabola, verdict)
    with pytest.raises(OutOfDomain):
        boundary_conjugating_map(parabola, parabola, verdict,
                                 window1=(0.0, 10.0), window2=(0.0, 3.0))
