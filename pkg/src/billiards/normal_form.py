"""Charts in which the billiard step is a near-translation.

Two charts are built on top of the invariant series.  The Lazutkin chart
(t_L, z_L) rescales the boundary by t_L(s) = int w^{-2/3} ds and the
fiber by z_L = w^{2/3} y; in it the step advances t_L by sqrt(z_L) to
leading order.  The normal chart (tau, h) uses the renormalized
invariant h and its Hamiltonian time tau, making the step (tau, h) ->
(tau + sqrt(h), h) up to the series truncation defect.

tau(s, y) is the time coordinate along the level curve of h through
(s, y), measured from a marked section {s = s0}.  Its s-derivative along
a level is 1/(dh/dy), so the chart has unit Jacobian by construction;
the numerical determinant check below certifies the realization rather
than the formula.
"""

from __future__ import annotations

import math

import numpy as np

from ._gridfn import ChebFn, PeriodicFn
from .billiard import phi_of_y, y_of_phi
from .errors import (LevelCurveEscape, OrderTooHigh, OutsideValidity,
                     QuadratureFailure)
from .lines import jacobian2
from .series import LevelFlow

DET_TOL = 1e-3


class LazutkinChart:
    """Boundary parameter t_L(s) = int_{s0}^{s} w^{-2/3} du and fiber
    z_L = w^{2/3} y.

    Since w = 2 sqrt2 / kappa, the density is kappa^{2/3}/2; over a full
    closed curve t_L grows by half the curve's Lazutkin perimeter.
    """

    def __init__(self, curve, s0=0.0, n=2048, window=None):
        self.curve = curve
        self.s0 = float(s0)
        if curve.closed:
            s = np.linspace(0.0, curve.length, n, endpoint=False)
            dens = 0.5 * curve.curvature(s) ** (2.0 / 3.0)
            self._anti = PeriodicFn(0.0, curve.length, dens).antiderivative()
            self.lo, self.hi = -np.inf, np.inf
        else:
            if window is None:
                if not (np.isfinite(curve.s_min)
                        and np.isfinite(curve.s_max)):
                    raise QuadratureFailure(
                        "an unbounded arc needs an explicit window")
                window = (curve.s_min, curve.s_max)
            self.lo, self.hi = float(window[0]), float(window[1])
            fn = ChebFn.from_callable(
                lambda u: 0.5 * curve.curvature(u) ** (2.0 / 3.0),
                self.lo, self.hi, n=min(n, 1024))
            self._anti = fn.antiderivative()
        self._t0 = self._anti(self.s0)

    def t(self, s):
        s = np.asarray(s, dtype=float)
        if not self.curve.closed:
            if np.any(s < self.lo - 1e-12) or np.any(s > self.hi + 1e-12):
                raise OutsideValidity("s outside the chart window")
        return self._anti(s) - self._t0

    def t_inverse(self, t_val):
        """Invert the strictly increasing boundary parameter."""
        t_val = np.asarray(t_val, dtype=float)
        dens_floor = None
        if self.curve.closed:
            lo = np.full(t_val.shape, -2.0 * self.curve.length)
            hi = np.full(t_val.shape, 2.0 * self.curve.length)
        else:
            lo = np.full(t_val.shape, self.lo)
            hi = np.full(t_val.shape, self.hi)
        s = 0.5 * (lo + hi)
        for _ in range(80):
            f = self.t(s) - t_val
            lo = np.where(f < 0, s, lo)
            hi = np.where(f > 0, s, hi)
            dens = 0.5 * self.curve.curvature(s) ** (2.0 / 3.0)
            if dens_floor is None:
                dens_floor = 1e-6 * np.max(dens)
            step = f / np.maximum(dens, dens_floor)
            s_new = np.clip(s - step, lo, hi)
            if np.max(np.abs(s_new - s)) < 1e-13 * (1.0 + np.max(np.abs(s))):
                s = s_new
                break
            s = s_new
        return s

    def z(self, s, y):
        w = self.curve.half_width(np.asarray(s, dtype=float))
        return w ** (2.0 / 3.0) * np.asarray(y, dtype=float)

    def to_chart(self, s, y):
        return self.t(s), self.z(s, y)

    def from_chart(self, t_val, z_val):
        s = self.t_inverse(t_val)
        w = self.curve.half_width(s)
        return s, np.asarray(z_val, dtype=float) / w ** (2.0 / 3.0)


def lazutkin_parameter(curve, s, s0=0.0, window=None):
    """t_L(s) with t_L(s0) = 0; convenience wrapper over LazutkinChart."""
    return LazutkinChart(curve, s0=s0, window=window).t(s)


def lazutkin_increments(curve, bmap, s_start, y_start, n_steps, chart=None):
    """Increments of t_L along a billiard orbit at small y.

    Returns the array of t_L(s_{j+1}) - t_L(s_j); their relative spread
    is O(sqrt y) (near-translation property).
    """
    if chart is None:
        chart = LazutkinChart(curve)
    s_hist, phi_hist = bmap.orbit(s_start, phi_of_y(y_start), n_steps)
    s_hist = np.asarray(s_hist, dtype=float)
    if curve.closed:
        L = curve.length
        steps = np.mod(np.diff(s_hist), L)
        s_unwrapped = s_hist[0] + np.concatenate([[0.0], np.cumsum(steps)])
        t_vals = chart._anti(s_unwrapped) - chart._t0
    else:
        t_vals = chart.t(s_hist)
    return np.diff(t_vals)


class NormalChart:
    """The (tau, h) chart of a truncated invariant series.

    h comes from the series; tau is the Hamiltonian time of h along its
    level curves, zero on the section {s = s0}.  Valid for y in
    (0, y_max] over the series grid window.
    """

    def __init__(self, curve, series, s0=None, y_max=None):
        if series.order < 2:
            raise OrderTooHigh("normal chart needs a series of order >= 2")
        self.curve = curve
        self.series = series
        self.grid = series.grid
        if s0 is None:
            if curve.closed:
                s0 = 0.5 * curve.length
            else:
                s0 = 0.5 * (self.grid.lo + self.grid.hi)
        self.s0 = float(s0)
        self._rows = np.asarray(series.h_rows)
        self._flows = {}
        if y_max is None:
            y_max = self._find_validity()
        self.y_max = float(y_max)

    # -- evaluators -----------------------------------------------------

    def h(self, s, y):
        return self.series.eval_h(s, y)

    def h_y(self, s, y):
        s = np.asarray(s, dtype=float)
        y = np.asarray(y, dtype=float)
        out = np.zeros(np.broadcast_shapes(s.shape, y.shape))
        for k in range(self._rows.shape[0], 0, -1):
            out = out * y + k * self.grid.fn(self._rows[k - 1])(s)
        return out

    def _flow(self, level):
        key = float(level)
        flow = self._flows.get(key)
        if flow is None:
            try:
                flow = LevelFlow(self.grid, self._rows, key)
            except QuadratureFailure as exc:
                raise LevelCurveEscape(str(exc)) from exc
            if np.any(flow.y_values <= 0):
                raise LevelCurveEscape(
                    "level curve leaves the positive fiber range")
            if len(self._flows) > 512:
                self._flows.clear()
            self._flows[key] = flow
        return flow

    def tau(self, s, y):
        """Hamiltonian time from the marked section, along levels of h."""
        s = np.asarray(s, dtype=float)
        y = np.asarray(y, dtype=float)
        s_b, y_b = np.broadcast_arrays(s, y)
        flat_s = s_b.ravel()
        flat_y = y_b.ravel()
        out = np.empty(flat_s.shape)
        levels = self.series.eval_h(flat_s, flat_y)
        levels = np.atleast_1d(levels)
        for i in range(flat_s.size):
            flow = self._flow(levels[i])
            out[i] = flow.time(flat_s[i]) - flow.time(self.s0)
        return out.reshape(s_b.shape) if s_b.shape else float(out[0])

    def to_chart(self, s, y):
        y = np.asarray(y, dtype=float)
        if np.any(y > self.y_max + 1e-15) or np.any(y < 0):
            raise OutsideValidity(
                "fiber coordinate outside the chart validity window")
        return self.tau(s, y), self.h(s, y)

    def from_chart(self, tau_val, h_val):
        """Invert (tau, h) -> (s, y): pick the level curve of h, then walk
        the monotone time coordinate back to s."""
        tau_val = np.atleast_1d(np.asarray(tau_val, dtype=float))
        h_val = np.atleast_1d(np.asarray(h_val, dtype=float))
        tau_val, h_val = np.broadcast_arrays(tau_val, h_val)
        s_out = np.empty(tau_val.shape)
        y_out = np.empty(tau_val.shape)
        grid = self.grid
        for i, (tv, hv) in enumerate(zip(tau_val.ravel(), h_val.ravel())):
            flow = self._flow(hv)
            target = tv + flow.time(self.s0)
            if grid.closed:
                L = self.curve.length
                period = flow.time(grid.lo + L) - flow.time(grid.lo)
                base = flow.time(self.s0)
                wraps = math.floor((target - base) / period + 0.5)
                lo = self.s0 + (wraps - 0.75) * L
                hi = self.s0 + (wraps + 0.75) * L
            else:
                lo, hi = grid.lo, grid.hi
                if not (flow.time(lo) - 1e-12 <= target
                        <= flow.time(hi) + 1e-12):
                    raise OutsideValidity(
                        "time coordinate outside the chart window")
            s = 0.5 * (lo + hi)
            for _ in range(80):
                f = flow.time(s) - target
                if f < 0:
                    lo = s
                else:
                    hi = s
                rate = 1.0 / flow.dPdy_values[
                    np.argmin(np.abs(grid.s - (s % self.curve.length
                                               if grid.closed else s)))]
                s_new = s - f / rate
                if not (lo < s_new < hi):
                    s_new = 0.5 * (lo + hi)
                if abs(s_new - s) < 1e-13 * (1.0 + abs(s)):
                    s = s_new
                    break
                s = s_new
            s_out.ravel()[i] = s
            y_out.ravel()[i] = flow.y_on_level(
                s % self.curve.length if grid.closed else s)
        if s_out.size == 1:
            return float(s_out.ravel()[0]), float(y_out.ravel()[0])
        return s_out, y_out

    # -- certification ----------------------------------------------------

    def det_defect(self, s_values, y_values, fd_step=None):
        """max |det d(tau,h)/d(s,y) - 1| by finite differences."""
        worst = 0.0
        for y in np.atleast_1d(y_values):
            h = fd_step or max(1e-6, 1e-3 * y)
            for s in np.atleast_1d(s_values):
                J = jacobian2(
                    lambda a, b: (self.tau(a, b), self.series.eval_h(a, b)),
                    float(s), float(y), h=min(h, 0.49 * y))
                det = J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
                worst = max(worst, abs(det - 1.0))
        return worst

    def _find_validity(self):
        grid = self.grid
        if grid.closed:
            probes = grid.lo + np.array([0.13, 0.46, 0.79]) * (
                self.curve.length)
        else:
            span = grid.hi - grid.lo
            probes = grid.lo + np.array([0.3, 0.5, 0.7]) * span

        def ok(y):
            try:
                return self.det_defect(probes, [y]) < DET_TOL
            except (LevelCurveEscape, OutsideValidity, QuadratureFailure):
                return False

        y_hi = 0.5
        y_lo = 1e-5
        if not ok(y_lo):
            raise LevelCurveEscape(
                "chart invalid even at the bottom probe level")
        for _ in range(18):
            mid = math.sqrt(y_lo * y_hi)
            if ok(mid):
                y_lo = mid
            else:
                y_hi = mid
        return y_lo

    # -- export -----------------------------------------------------------

    def table(self, s_values, y_values, lazutkin=None):
        """Rows (s, y, tau, h, t_L) over the product of the sample sets."""
        if lazutkin is None:
            lazutkin = LazutkinChart(
                self.curve, s0=self.s0,
                window=None if self.curve.closed else (self.grid.lo,
                                                       self.grid.hi))
        rows = []
        for y in np.atleast_1d(y_values):
            for s in np.atleast_1d(s_values):
                rows.append((float(s), float(y), float(self.tau(s, y)),
                             float(self.h(s, y)), float(lazutkin.t(s))))
        return np.array(rows)


def build_normal_chart(curve, series, s0=None, y_max=None):
    """Construct the (tau, h) chart; validity certified by bisection on
    the finite-difference determinant when y_max is not given."""
    return NormalChart(curve, series, s0=s0, y_max=y_max)


def chart_step_residuals(chart, bmap, s_start, y_start, n_steps):
    """Orbit diagnostics in the normal chart.

    Returns (tau_residual_over_h, h_spread): the first is
    max |tau' - tau - sqrt(h)| / h over the orbit, the second
    max |h_j - h_0|.
    """
    s_hist, phi_hist = bmap.orbit(s_start, phi_of_y(y_start), n_steps)
    y_hist = y_of_phi(np.asarray(phi_hist))
    s_hist = np.asarray(s_hist)
    h_vals = chart.series.eval_h(s_hist, y_hist)
    if chart.curve.closed:
        L = chart.curve.length
        steps = np.mod(np.diff(s_hist), L)
        s_unwrapped = s_hist[0] + np.concatenate([[0.0], np.cumsum(steps)])
        # tau along the starting level; unwrapped time via the level flow
        flow = chart._flow(float(h_vals[0]))
        tau_vals = np.array([flow.time(sv) for sv in s_unwrapped])
        tau_vals -= flow.time(chart.s0)
    else:
        tau_vals = np.array([float(chart.tau(sv, yv))
                             for sv, yv in zip(s_hist, y_hist)])
    d_tau = np.diff(tau_vals)
    resid = np.abs(d_tau - np.sqrt(h_vals[:-1]))
    return float(np.max(resid / h_vals[:-1])), float(
        np.max(np.abs(h_vals - h_vals[0])))


def convert_point(coords, source, target, curve=None, normal_chart=None,
                  lazutkin_chart=None):
    """Move a phase point between charts.

    Chart names: 'sphi', 'sy', 'tauh', 'lazutkin'.  The boundary chart
    conversions need no auxiliary data; 'tauh' needs normal_chart and
    'lazutkin' needs lazutkin_chart (or curve to build one).
    """
    a, b = coords

    def to_sy(a, b, frm):
        if frm == "sy":
            return a, b
        if frm == "sphi":
            return a, y_of_phi(b)
        if frm == "tauh":
            if normal_chart is None:
                raise OutsideValidity("tauh chart data missing")
            return normal_chart.from_chart(a, b)
        if frm == "lazutkin":
            chart = lazutkin_chart or LazutkinChart(curve)
            return chart.from_chart(a, b)
        raise OutsideValidity(f"unknown chart {frm!r}")

    s, y = to_sy(a, b, source)
    if target == "sy":
        return s, y
    if target == "sphi":
        return s, phi_of_y(y)
    if target == "tauh":
        if normal_chart is None:
            raise OutsideValidity("tauh chart data missing")
        return normal_chart.to_chart(s, y)
    if target == "lazutkin":
        chart = lazutkin_chart or LazutkinChart(curve)
        return chart.to_chart(s, y)
    raise OutsideValidity(f"unknown chart {target!r}")
