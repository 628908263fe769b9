"""Lazutkin lengths and boundary conjugacy of convex billiards.

The Lazutkin length of an arc is the integral of kappa^(2/3) with
respect to arc length.  Finiteness of this improper integral at the open
ends decides whether the billiard maps of two tables are smoothly
conjugated near the boundary: either both lengths are finite
(condition i), or both are infinite and diverge in matching directions
(condition ii).  In the positive cases the conjugating map restricted to
the boundary is affine in the Lazutkin parameter,

    H1 = t2^{-1} o (alpha * t1 + beta),

with alpha = L2/L1 when both lengths are finite, and the symplectic
refinement additionally demands equal lengths (alpha = 1).

Convergence at an infinite end is decided, never guessed, by one of:

* end-behavior rule: an asymptotic tangent line implies convergence;
  a graph end growing like x^r converges exactly when r > 2, with the
  exponent taken from the symbolic limit of x f'(x)/f(x);
* tail power-law extrapolation: the decay exponent nu of kappa^(2/3)
  against arc length is fitted on geometrically spaced samples;
  nu >= -1 means divergent, and a fit too close to the threshold to
  separate from it is reported as inconclusive.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import sympy as sp
from scipy.integrate import quad

from .curves import END_ASYMPTOTE
from .errors import (Inconclusive, InconclusiveInput, NumericalError,
                     OutOfDomain, QuadratureFailure, VerdictNegative)
from .normal_form import LazutkinChart

CONVERGENT = "convergent"
DIVERGENT = "divergent"
INCONCLUSIVE = "inconclusive"

METHOD_WINDOW = "closed-window quadrature"
METHOD_TAIL = "tail power-law extrapolation"
METHOD_RULE = "end-behavior rule"

QUAD_EPS = 1e-12
# minimum separation of a fitted tail exponent from the critical value -1
TAIL_DECISION_MARGIN = 0.02
VALUE_RTOL = 1e-11            # expanding-window stop criterion
EQUAL_LENGTH_RTOL = 1e-8      # "equal finite lengths" for the symplectic verdict


# ---------------------------------------------------------------------------
# integrand plumbing

def _integrand_s(curve):
    def g(s):
        return float(np.asarray(curve.curvature(s), dtype=float)) ** (2.0 / 3.0)
    return g


def _graph_integrand_x(curve):
    # kappa^(2/3) ds expressed in the graph variable:
    # (f''/(1+f'^2)^{3/2})^{2/3} * sqrt(1+f'^2) dx = f''^{2/3} (1+f'^2)^{-1/2} dx
    def g(x):
        fp = float(np.asarray(curve.fp(x), dtype=float))
        fpp = float(np.asarray(curve.fpp(x), dtype=float))
        return fpp ** (2.0 / 3.0) / np.sqrt(1.0 + fp * fp)
    return g


def _is_graph(curve):
    return getattr(curve, "kind", None) == "graph"


def lazutkin_integral(curve, s_lo, s_hi):
    """Integral of curvature^(2/3) d(arc length) over a finite window."""
    s_lo, s_hi = float(s_lo), float(s_hi)
    if not (np.isfinite(s_lo) and np.isfinite(s_hi)):
        raise OutOfDomain("lazutkin_integral needs a finite window")
    if s_hi < s_lo:
        raise OutOfDomain("window must satisfy s_lo <= s_hi")
    if s_hi == s_lo:
        return 0.0
    if _is_graph(curve):
        x_lo = float(curve.x_of_s(s_lo))
        x_hi = float(curve.x_of_s(s_hi))
        val, _ = quad(_graph_integrand_x(curve), x_lo, x_hi,
                      epsabs=QUAD_EPS, epsrel=QUAD_EPS, limit=200)
    else:
        val, _ = quad(_integrand_s(curve), s_lo, s_hi,
                      epsabs=QUAD_EPS, epsrel=QUAD_EPS, limit=200)
    return float(val)


# ---------------------------------------------------------------------------
# improper-end analysis

def _growth_exponent(curve, backward):
    """Symbolic growth power r of a graph end (y ~ x^r), or None."""
    if not _is_graph(curve):
        return None
    x = curve.x_sym
    target = -sp.oo if backward else sp.oo
    try:
        r = sp.limit(x * curve.fp_expr / curve.f_expr, x, target)
    except (ValueError, NotImplementedError, ZeroDivisionError):
        return None
    if r.is_real and r.is_finite:
        try:
            return float(r)
        except TypeError:
            return None                # e.g. an oscillation interval
    return None


def _tail_samples(curve, s_ref, backward, n_probe=20):
    """kappa^(2/3) at geometrically spaced points marching toward the end."""
    sign = -1.0 if backward else 1.0
    radii, values = [], []
    with np.errstate(over="ignore", under="ignore", invalid="ignore"):
        for j in range(n_probe):
            step = 2.0 ** j
            try:
                if _is_graph(curve):
                    x_ref = float(curve.x_of_s(s_ref))
                    xj = x_ref + sign * step
                    if not (curve.x_lo < xj < curve.x_hi):
                        break
                    fj = float(np.asarray(curve.f(xj), dtype=float))
                    fpj = float(np.asarray(curve.fp(xj), dtype=float))
                    # keep fp^2 and the arc-length table representable
                    if not (np.isfinite(fj) and abs(fpj) < 1e150):
                        break
                    sj = float(curve.s_of_x(xj))
                    gj = float(curve.curvature_x(xj)) ** (2.0 / 3.0)
                else:
                    sj = s_ref + sign * step
                    gj = float(curve.curvature(sj)) ** (2.0 / 3.0)
            except (OverflowError, FloatingPointError, OutOfDomain):
                break
            rj = abs(sj - s_ref)
            if not (np.isfinite(rj) and np.isfinite(gj)) or gj <= 0.0 or rj <= 0.0:
                break
            radii.append(rj)
            values.append(gj)
    return np.asarray(radii), np.asarray(values)


def _tail_exponent(curve, s_ref, backward):
    """Fitted decay exponent nu of kappa^(2/3) ~ r^nu and its confidence."""
    radii, values = _tail_samples(curve, s_ref, backward)
    keep = radii >= 4.0
    radii, values = radii[keep], values[keep]
    if radii.size < 6:
        return None, np.inf
    m = min(8, radii.size)          # deepest samples carry the asymptotics
    lx = np.log(radii[-m:])
    ly = np.log(values[-m:])
    nu, icept = np.polyfit(lx, ly, 1)
    resid = ly - (nu * lx + icept)
    sxx = np.sum((lx - lx.mean()) ** 2)
    stderr = np.sqrt(np.sum(resid ** 2) / max(m - 2, 1) / sxx)
    half = m // 2
    nu_lo = np.polyfit(lx[:half], ly[:half], 1)[0]
    nu_hi = np.polyfit(lx[half:], ly[half:], 1)[0]
    drift = abs(nu_hi - nu_lo)
    return float(nu), float(max(drift, 4.0 * stderr))


def _end_value(curve, s_ref, backward):
    """Quadrature from s_ref toward an infinite end with tail extrapolation.

    Only called on ends already certified convergent; the tail beyond the
    last window is approximated by the local power law of the integrand.
    """
    if _is_graph(curve):
        g = _graph_integrand_x(curve)
        var_ref = float(curve.x_of_s(s_ref))
    else:
        g = _integrand_s(curve)
        var_ref = s_ref
    sign = -1.0 if backward else 1.0
    total = 0.0
    prev_var = var_ref
    g_prev, r_prev = None, None
    prev_estimate = None
    with np.errstate(over="ignore", under="ignore"):
        for k in range(64):
            nxt = var_ref + sign * 2.0 ** k
            lo, hi = (nxt, prev_var) if backward else (prev_var, nxt)
            piece, _ = quad(g, lo, hi, epsabs=QUAD_EPS, epsrel=QUAD_EPS,
                            limit=200)
            total += piece
            g_hi = g(nxt)
            r = abs(nxt - var_ref)
            if not np.isfinite(g_hi):
                raise QuadratureFailure("integrand overflow at the open end")
            if g_hi == 0.0:
                return float(total)       # integrand underflowed: tail gone
            estimate = None
            if g_prev is not None and g_prev > 0.0:
                nu = np.log(g_hi / g_prev) / np.log(r / r_prev)
                if nu < -1.0:
                    estimate = total + g_hi * r / (-1.0 - nu)
            if estimate is not None and prev_estimate is not None:
                if abs(estimate - prev_estimate) <= VALUE_RTOL * max(
                        1.0, abs(estimate)):
                    return float(estimate)
            prev_estimate = estimate
            prev_var, g_prev, r_prev = nxt, g_hi, r
    raise QuadratureFailure("expanding-window quadrature did not stabilize")


# ---------------------------------------------------------------------------
# reports

@dataclass(frozen=True)
class EndReport:
    """Verdict for one improper end of the Lazutkin length integral."""
    verdict: str                       # convergent | divergent | inconclusive
    method: str
    value: Optional[float]             # mass from the anchor to this end
    exponent: Optional[float]          # growth/decay exponent when one was used


@dataclass(frozen=True)
class LazutkinLengthReport:
    value: Optional[float]             # total length when finite
    backward: EndReport
    forward: EndReport

    @property
    def finite(self):
        return (self.backward.verdict == CONVERGENT
                and self.forward.verdict == CONVERGENT)

    @property
    def pattern(self):
        """Divergence flags (backward, forward), orientation-sensitive."""
        return (self.backward.verdict == DIVERGENT,
                self.forward.verdict == DIVERGENT)

    def describe(self):
        if self.finite:
            if self.value is None:
                return "finite"
            return f"finite, L = {self.value:.9g}"
        sides = [name for name, flag
                 in zip(("backward", "forward"), self.pattern) if flag]
        if sides:
            return "divergent (" + ", ".join(sides) + ")"
        return "inconclusive"


def _anchor_s(curve):
    lo, hi = curve.s_min, curve.s_max
    if np.isfinite(lo) and np.isfinite(hi):
        return 0.5 * (lo + hi)
    if np.isfinite(lo):
        return lo + 1.0
    if np.isfinite(hi):
        return hi - 1.0
    return 0.0


def _end_report(curve, s_ref, backward, want_value):
    tag = curve.end_behavior[0 if backward else 1]
    bound = curve.s_min if backward else curve.s_max
    if np.isfinite(bound):
        val = None
        if want_value:
            lo, hi = (bound, s_ref) if backward else (s_ref, bound)
            val = lazutkin_integral(curve, lo, hi)
        return EndReport(CONVERGENT, METHOD_WINDOW, val, None)
    if tag == END_ASYMPTOTE:
        val = _end_value(curve, s_ref, backward) if want_value else None
        return EndReport(CONVERGENT, METHOD_RULE, val, None)
    r = _growth_exponent(curve, backward)
    if r is not None:
        if r > 2.0:
            val = _end_value(curve, s_ref, backward) if want_value else None
            return EndReport(CONVERGENT, METHOD_RULE, val, r)
        return EndReport(DIVERGENT, METHOD_RULE, None, r)
    nu, conf = _tail_exponent(curve, s_ref, backward)
    margin = max(conf, TAIL_DECISION_MARGIN)
    if nu is None or abs(nu + 1.0) < margin:
        return EndReport(INCONCLUSIVE, METHOD_TAIL, None, nu)
    if nu > -1.0:
        return EndReport(DIVERGENT, METHOD_TAIL, None, nu)
    val = _end_value(curve, s_ref, backward) if want_value else None
    return EndReport(CONVERGENT, METHOD_TAIL, val, nu)


def _parse_direction(direction):
    if direction is None:
        return True, True
    if direction in ("forward", +1, 1):
        return False, True
    if direction in ("backward", -1):
        return True, False
    raise OutOfDomain("direction must be None, 'backward' or 'forward'")


def lazutkin_length(curve, direction=None, strict=True):
    """Lazutkin length report with per-end convergence verdicts.

    direction restricts the (possibly expensive) improper-integral value
    to one end; verdicts are still produced for both ends.  With strict
    an ambiguous tail fit raises Inconclusive instead of being returned.
    """
    if curve.closed:
        total = lazutkin_integral(curve, curve.s_min, curve.s_max)
        end = EndReport(CONVERGENT, METHOD_WINDOW, None, None)
        return LazutkinLengthReport(total, end, end)
    want_b, want_f = _parse_direction(direction)
    s_ref = _anchor_s(curve)
    backward = _end_report(curve, s_ref, True, want_b)
    forward = _end_report(curve, s_ref, False, want_f)
    if strict and INCONCLUSIVE in (backward.verdict, forward.verdict):
        raise Inconclusive("tail fit cannot separate the decay exponent "
                           "from the critical value -1")
    value = None
    if (backward.verdict == CONVERGENT and forward.verdict == CONVERGENT
            and backward.value is not None and forward.value is not None):
        value = backward.value + forward.value
    return LazutkinLengthReport(value, backward, forward)


# ---------------------------------------------------------------------------
# conjugacy verdicts

@dataclass(frozen=True)
class ConjugacyVerdict:
    smooth_conjugate: bool
    condition: str                     # "i" | "ii" | "neither"
    symplectic_conjugate: bool
    alpha: Optional[float]
    beta: Optional[float]
    report1: LazutkinLengthReport
    report2: LazutkinLengthReport

    def describe(self):
        if not self.smooth_conjugate:
            return "not conjugate"
        tail = "symplectic" if self.symplectic_conjugate else "smooth only"
        return (f"smooth via condition {self.condition} ({tail}), "
                f"alpha = {self.alpha:.9g}")


def classify_conjugacy(curve1, curve2, report1=None, report2=None):
    """Smooth/symplectic conjugacy verdict from the two length reports."""
    if report1 is None:
        report1 = lazutkin_length(curve1, strict=False)
    if report2 is None:
        report2 = lazutkin_length(curve2, strict=False)
    for rep in (report1, report2):
        if INCONCLUSIVE in (rep.backward.verdict, rep.forward.verdict):
            raise InconclusiveInput(
                "a length report is inconclusive; no conjugacy verdict")
    if report1.finite and report2.finite:
        if report1.value is None or report2.value is None:
            raise InconclusiveInput(
                "finite case needs both integral values; rerun the length "
                "reports without a direction restriction")
        length1, length2 = report1.value, report2.value
        equal = abs(length2 - length1) <= EQUAL_LENGTH_RTOL * max(
            length1, length2)
        alpha = 1.0 if equal else length2 / length1
        return ConjugacyVerdict(True, "i", equal, alpha, 0.0,
                                report1, report2)
    if ((not report1.finite) and (not report2.finite)
            and report1.pattern == report2.pattern):
        return ConjugacyVerdict(True, "ii", True, 1.0, 0.0,
                                report1, report2)
    return ConjugacyVerdict(False, "neither", False, None, None,
                            report1, report2)


# ---------------------------------------------------------------------------
# boundary conjugating map

@dataclass
class BoundaryMap:
    """Boundary restriction s -> H1(s) of the conjugating map.

    H1 = t2^{-1}(alpha * t1(s) + beta) built from the Lazutkin charts of
    the two curves; affine in the Lazutkin parameter by construction.
    """
    chart1: LazutkinChart
    chart2: LazutkinChart
    alpha: float
    beta: float

    def lazutkin_image(self, s):
        return self.alpha * self.chart1.t(s) + self.beta

    def __call__(self, s):
        return self.chart2.t_inverse(self.lazutkin_image(s))


def _boundary_chart(curve, window, n):
    if curve.closed:
        return LazutkinChart(curve, s0=0.0, n=n)
    if window is None:
        if not (np.isfinite(curve.s_min) and np.isfinite(curve.s_max)):
            raise QuadratureFailure(
                "an unbounded arc needs an explicit window")
        window = (curve.s_min, curve.s_max)
    return LazutkinChart(curve, s0=window[0], n=n, window=window)


def boundary_conjugating_map(curve1, curve2, verdict=None,
                             window1=None, window2=None, n=2048):
    """Explicit boundary map H1 for a positive conjugacy verdict.

    Unbounded arcs need explicit windows; condition-ii pairs are mapped
    window-to-window with alpha = 1 and the window starts aligned.
    """
    if verdict is None:
        verdict = classify_conjugacy(curve1, curve2)
    if not verdict.smooth_conjugate:
        raise VerdictNegative("the pair fails both conjugacy conditions")
    chart1 = _boundary_chart(curve1, window1, n)
    chart2 = _boundary_chart(curve2, window2, n)
    alpha = 1.0 if verdict.alpha is None else float(verdict.alpha)
    bmap = BoundaryMap(chart1, chart2, alpha, 0.0)
    _check_map(bmap)
    return bmap


def _check_map(bmap):
    c1, c2 = bmap.chart1, bmap.chart2
    if c1.curve.closed:
        grid = np.linspace(0.0, c1.curve.length, 257, endpoint=False)
    else:
        grid = np.linspace(c1.lo, c1.hi, 257)
    image = bmap.lazutkin_image(grid)
    if not c2.curve.closed:
        t2_lo, t2_hi = c2.t(c2.lo), c2.t(c2.hi)
        pad = 1e-9 * (abs(t2_hi - t2_lo) + 1.0)
        if image.min() < t2_lo - pad or image.max() > t2_hi + pad:
            raise OutOfDomain("the image of window1 leaves window2; "
                              "enlarge window2")
    h = bmap(grid)
    if np.any(np.diff(h) <= 0):
        raise NumericalError("boundary map is not strictly increasing")
