"""Asymptotic invariant series of the billiard map near the boundary.

The construction runs in three steps on a coefficient grid along the
curve.  First a recursion solves linear ODEs for coefficients g_k(s) so
that G = sum g_k y^k is invariant to high order; the forcing term of each
ODE is read off a truncated z-jet of the lifted map.  Second the series
is symmetrized, t = g + g o beta, which makes it even in z and kills the
odd defect orders.  Third a Hamiltonian renormalization h = v(t), with v
built from the measured mean time advance along t-level curves, pins the
remaining freedom so that the billiard step becomes the time-1 map of
the flow of (2/3) h^{3/2} up to the truncation defect.

Jets are extracted by least-squares polynomial fits on symmetric z-nodes
(the backward samples come from the lifted map's inverse branch), with a
half-scale refit as the stability certificate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._gridfn import ChebFn, PeriodicFn
from .billiard import BilliardMap
from .errors import (IllConditioned, OrderTooHigh, ProfileNoise,
                     QuadratureFailure)

MAX_JET_ORDER = 12
MAX_SERIES_ORDER = 4
_FACT = [math.factorial(m) for m in range(32)]


# ---------------------------------------------------------------------------
# coefficient grids


class SGrid:
    """Grid along the curve carrying smooth-function fits.

    Closed curves use a uniform periodic grid (trigonometric fits); open
    sub-arcs use Chebyshev points of the window.
    """

    def __init__(self, curve, n=256, window=None):
        self.curve = curve
        if curve.closed and window is None:
            self.closed = True
            self.lo = 0.0
            self.hi = curve.length
            self.s = np.linspace(0.0, curve.length, n, endpoint=False)
        else:
            self.closed = False
            if window is None:
                if not (np.isfinite(curve.s_min) and np.isfinite(curve.s_max)):
                    raise QuadratureFailure(
                        "an unbounded arc needs an explicit window")
                window = (curve.s_min, curve.s_max)
            self.lo, self.hi = float(window[0]), float(window[1])
            x = np.polynomial.chebyshev.chebpts2(n)
            self.s = 0.5 * (self.hi - self.lo) * (x + 1.0) + self.lo

    @property
    def n(self):
        return self.s.size

    def fn(self, values):
        if self.closed:
            return PeriodicFn(self.lo, self.hi - self.lo, values)
        return ChebFn.from_values(self.lo, self.hi, values)

    def derivative_values(self, values, m=1):
        return self.fn(values).derivative(m)(self.s)


# ---------------------------------------------------------------------------
# truncated power series in z with grid-valued coefficients


def _series_mul(a, b, order):
    """Cauchy product of coefficient stacks, truncated at z^order."""
    out = np.zeros((order + 1,) + a.shape[1:])
    for i in range(min(a.shape[0], order + 1)):
        jmax = min(b.shape[0], order + 1 - i)
        for j in range(jmax):
            out[i + j] += a[i] * b[j]
    return out


def _compose_scalar(deriv_rows, delta, order):
    """Taylor-compose s -> f(s + delta(s, z)).

    deriv_rows[m] holds f^(m) on the grid; delta is a coefficient stack
    with zero constant term.  Returns the coefficient stack of the
    composition through z^order.
    """
    ns = delta.shape[1]
    out = np.zeros((order + 1, ns))
    out[0] = deriv_rows[0]
    power = np.zeros((order + 1, ns))
    power[0] = 1.0
    for m in range(1, len(deriv_rows)):
        power = _series_mul(power, delta, order)
        if not np.any(power):
            break
        out += deriv_rows[m][None, :] / _FACT[m] * power
    return out


# ---------------------------------------------------------------------------
# jets of the lifted map


@dataclass
class JetTable:
    """Taylor coefficients in z of the lifted billiard map on a grid.

    comp1[j] and comp2[j] are the z^j coefficients of the two components;
    comp1[0] = s, comp1[1] ~ w(s), comp2[0] = 0, comp2[1] ~ 1.  The
    time-reversal involution has the same first component and the negated
    second one.
    """

    s: np.ndarray
    comp1: np.ndarray
    comp2: np.ndarray
    order: int
    disagreement: np.ndarray
    order_error: np.ndarray
    chosen_scale: np.ndarray

    def beta_jets(self):
        return self.comp1, -self.comp2


def compute_jets(curve, s_grid, order, z_scale=0.33, strict=True):
    """Fit z-jets of the lifted billiard step at each grid point.

    Polynomials with a generous guard degree are fitted to lifted-map
    samples on symmetric z-nodes at three scales.  Coefficients of the
    map's z-series can grow geometrically (finite convergence radius), in
    which case small scales win, or decay (circle-like), in which case
    the noise amplification of small scales loses; each order therefore
    takes the scale whose cross-scale disagreement is smallest, and that
    disagreement is the certified error.  Raises IllConditioned (with the
    per-point mask attached) when no scale pair agrees, unless
    strict=False.  On an open arc the grid must leave enough margin that
    chords at the largest scale stay inside the domain.
    """
    if order > MAX_JET_ORDER:
        raise OrderTooHigh(f"jet order {order} above bound {MAX_JET_ORDER}")
    s_grid = np.asarray(s_grid, dtype=float)
    bmap = BilliardMap(curve)
    deg = order + 14
    scales = (z_scale, 0.6 * z_scale, 0.36 * z_scale)

    def fit(zmax):
        m_side = int(np.ceil(2.2 * (deg + 1)))
        z_nodes = zmax * np.arange(1, m_side + 1) / m_side
        z_nodes = np.concatenate([-z_nodes[::-1], z_nodes])
        S = np.repeat(s_grid, z_nodes.size)
        Z = np.tile(z_nodes, s_grid.size)
        s_out, z_out = bmap.lifted_step(S, Z)
        ds = (s_out - S).reshape(s_grid.size, z_nodes.size)
        dz = z_out.reshape(s_grid.size, z_nodes.size)
        if curve.closed:
            L = curve.length
            ds = (ds + 0.5 * L) % L - 0.5 * L
        # Vandermonde without constant column; one pseudo-inverse for all s
        V = np.vander(z_nodes / zmax, deg + 1, increasing=True)[:, 1:]
        pinv = np.linalg.pinv(V, rcond=1e-13)
        sc = (zmax ** np.arange(1, deg + 1))[:, None]
        return (pinv @ ds.T) / sc, (pinv @ dz.T) / sc

    fits = [fit(zm) for zm in scales]
    ns = s_grid.size
    comp1 = np.zeros((order + 1, ns))
    comp2 = np.zeros((order + 1, ns))
    comp1[0] = s_grid
    order_error = np.zeros(order)
    chosen_scale = np.zeros(order)
    # accumulated error of the series evaluated at a reference z, per point
    z_ref = scales[-1]
    contrib = np.zeros(ns)
    pairs = {0: (1, 2), 1: (0, 2), 2: (0, 1)}
    scale_all = max(float(np.max(np.abs(f[0][:order]))) for f in fits)
    for j in range(1, order + 1):
        rows = [np.stack([f[0][j - 1], f[1][j - 1]]) for f in fits]
        # per-scale certified error: best agreement with another scale
        best = None
        for i, (k1, k2) in pairs.items():
            d = np.minimum(np.max(np.abs(rows[i] - rows[k1]), axis=0),
                           np.max(np.abs(rows[i] - rows[k2]), axis=0))
            est = float(np.max(d))
            if best is None or est < best[0]:
                best = (est, i, d)
        est, i_win, d_point = best
        comp1[j] = fits[i_win][0][j - 1]
        comp2[j] = fits[i_win][1][j - 1]
        order_error[j - 1] = est
        chosen_scale[j - 1] = scales[i_win]
        if j <= 2:
            # low orders carry w and q: hold them to strict tolerance
            denom = np.maximum(np.max(np.abs(rows[i_win]), axis=0),
                               1e-4 * scale_all)
            contrib = np.maximum(contrib, d_point / denom / 1e-6)
        contrib = np.maximum(
            contrib, d_point * z_ref ** j / (scale_all * z_ref) / 1e-5)
    disagreement = contrib
    if strict and np.any(disagreement > 1.0):
        err = IllConditioned(
            f"jet fits disagree at {int(np.sum(disagreement > 1.0))} of "
            f"{ns} grid points")
        err.point_mask = disagreement > 1.0
        raise err
    return JetTable(s=s_grid, comp1=comp1, comp2=comp2, order=order,
                    disagreement=disagreement, order_error=order_error,
                    chosen_scale=chosen_scale)


# ---------------------------------------------------------------------------
# the coefficient recursion


def solve_coefficient_ode(k, grid, w_values, b_values, c_k, s_anchor=None):
    """Closed-form solution of g' w - (2k/3) w' g = -b on the grid.

    Returns (g_values, solvability_residue): the residue is the mean of
    the integrand over a closed curve, which the theory says vanishes; it
    is removed from the antiderivative and reported.
    """
    p = 2.0 * k / 3.0
    integrand = b_values * w_values ** (-p - 1.0)
    anchor = grid.s[0] if s_anchor is None else float(s_anchor)
    residue = 0.0
    fn = grid.fn(integrand)
    anti = fn.antiderivative()
    if grid.closed:
        residue = float(anti.mean_rate)
        integral = anti(grid.s) - anti(anchor) - residue * (grid.s - anchor)
    else:
        integral = anti(grid.s) - anti(anchor)
    g = w_values ** p * (c_k - integral)
    return g, residue


def _ode_residual(k, grid, w_values, b_values, g_values):
    p = 2.0 * k / 3.0
    gp = grid.derivative_values(g_values)
    wp = grid.derivative_values(w_values)
    return gp * w_values - p * wp * g_values + b_values


def _g_stack_to_z(g_rows, ns, order):
    """Coefficient stack of G(s,z) = sum_k g_k z^{2k} through z^order."""
    out = np.zeros((order + 1, ns))
    for k, g in enumerate(g_rows, start=1):
        if 2 * k <= order:
            out[2 * k] = g
    return out


def _compose_with_map(g_rows, grid, comp1, comp2, order):
    """Coefficient stack of G(map(s,z)) truncated at z^order.

    G(s,z) = sum_k g_k(s) z^{2k}; the map is given by jet stacks comp1
    (first component, constant row = s) and comp2 (second component).
    """
    ns = grid.n
    delta = comp1.copy()[:order + 1]
    if delta.shape[0] < order + 1:
        delta = np.vstack([delta, np.zeros((order + 1 - delta.shape[0], ns))])
    delta[0] = 0.0
    f2 = comp2[:order + 1]
    if f2.shape[0] < order + 1:
        f2 = np.vstack([f2, np.zeros((order + 1 - f2.shape[0], ns))])
    f2sq = _series_mul(f2, f2, order)
    out = np.zeros((order + 1, ns))
    fiber_pow = np.zeros((order + 1, ns))
    fiber_pow[0] = 1.0
    for k, g in enumerate(g_rows, start=1):
        fiber_pow = _series_mul(fiber_pow, f2sq, order)
        if 2 * k > order:
            break
        m_max = order - 2 * k
        derivs = [g] + [grid.derivative_values(g, m)
                        for m in range(1, m_max + 1)]
        g_of_f1 = _compose_scalar(derivs, delta, order)
        out += _series_mul(g_of_f1, fiber_pow, order)
    return out


def symmetrize(g_rows, grid, jets):
    """t := g + g o beta, with beta = flip o lifted map.

    Returns (t_rows, odd_leak): t_rows[k-1] holds t_k = z^{2k} coefficient
    (stored exactly even: odd coefficients are checked against odd_leak
    and dropped); odd_leak is the largest odd coefficient relative to the
    series scale.
    """
    n_ord = len(g_rows)
    order = 2 * n_ord + 1
    b1, b2 = jets.beta_jets()
    g_beta = _compose_with_map(g_rows, grid, b1, b2, order)
    total = g_beta + _g_stack_to_z(g_rows, grid.n, order)
    scale = max(float(np.max(np.abs(total))), 1e-30)
    odd_leak = float(np.max(np.abs(total[1::2]))) / scale
    t_rows = [total[2 * k] for k in range(1, n_ord + 1)]
    return t_rows, odd_leak


# ---------------------------------------------------------------------------
# level curves of a polynomial invariant and their Hamiltonian time


class LevelFlow:
    """One level curve {P(s,y) = value} of a y-polynomial invariant and
    the time coordinate of the Hamiltonian flow of P along it.

    The time rate is ds/dtheta = dP/dy, so theta(s) is the antiderivative
    of 1/(dP/dy) along the level.
    """

    def __init__(self, grid, coef_rows, value):
        self.grid = grid
        self.value = float(value)
        rows = np.asarray(coef_rows)

        def value_and_rate(y):
            inner = np.zeros(grid.n)
            fp = np.zeros(grid.n)
            for k in range(rows.shape[0], 0, -1):
                inner = inner * y + rows[k - 1]
                fp = fp * y + k * rows[k - 1]
            return inner * y, fp

        y = np.full(grid.n, value / np.maximum(rows[0], 1e-300))
        for _ in range(60):
            f, fp = value_and_rate(y)
            step = (f - value) / fp
            y = y - step
            if np.max(np.abs(step)) < 1e-15 * max(1.0, float(np.max(np.abs(y)))):
                break
        self.y_values = y
        _, self.dPdy_values = value_and_rate(y)
        if np.any(fp <= 0):
            raise QuadratureFailure("level curve has a nonpositive time rate")
        self._y_fn = grid.fn(y)
        self._theta = grid.fn(1.0 / fp).antiderivative()

    def y_on_level(self, s):
        return self._y_fn(s)

    def time(self, s):
        return self._theta(s)

    def advance(self, s_from, s_to):
        return self.time(s_to) - self.time(s_from)


# ---------------------------------------------------------------------------
# Hamiltonian renormalization


def measure_time_profile(bmap, grid, t_rows, levels, n_starts=16):
    """Mean Hamiltonian-time advance of one billiard step along t-levels.

    For each probe level the level curve of the symmetrized invariant is
    traced, a set of starting points is stepped once by the billiard map,
    and the advance of the level's time coordinate is averaged.  Returns
    (t_values, xi_values).
    """
    curve = bmap.curve
    t_values = []
    xi_values = []
    rows = np.asarray(t_rows)
    ref = grid.s[grid.n // 2]
    for y_ref in levels:
        t0 = 0.0
        for k in range(rows.shape[0], 0, -1):
            t0 = (t0 + float(grid.fn(rows[k - 1])(ref))) * y_ref
        flow = LevelFlow(grid, rows, t0)
        if grid.closed:
            starts = np.linspace(0.0, curve.length, n_starts, endpoint=False)
        else:
            # the arrival point of one step must stay inside the window
            w_max = float(np.max(curve.half_width(grid.s)))
            margin = 1.3 * w_max * math.sqrt(float(np.max(levels)))
            span = grid.hi - grid.lo
            if 2.0 * margin >= span:
                raise ProfileNoise(
                    "window too small for the requested probe levels")
            starts = np.linspace(grid.lo + 0.2 * margin, grid.hi - margin,
                                 n_starts)
        y_starts = flow.y_on_level(starts)
        s_next, _ = bmap.step_sy(starts, y_starts)
        if grid.closed:
            s_next = starts + np.mod(s_next - starts, curve.length)
        adv = flow.advance(starts, s_next)
        t_values.append(t0)
        xi_values.append(float(np.mean(adv)))
    return np.array(t_values), np.array(xi_values)


def renormalize_hamiltonian(bmap, grid, t_rows, levels=None, n_starts=16):
    """Compose the invariant with v so the step is a Hamiltonian time-1 map.

    The slope profile psi(t) = xi(t)/sqrt(t) is fitted by a polynomial of
    degree N-1 from the measured advances; then

        v(t) = ((3/2) * integral_0^t sqrt(p) psi(p) dp)^(2/3)
             = t * (sum_m (3/(2m+3)) psi_m t^m)^(2/3)

    and h = v(t).  Returns (h_rows, profile) where profile records the
    probe levels, xi, psi coefficients and fit residual.
    """
    n_ord = len(t_rows)
    if levels is None:
        levels = np.geomspace(1e-3, 5e-2, max(8, 2 * n_ord + 4))
    if len(levels) <= n_ord:
        raise ProfileNoise("not enough probe levels for the requested order")
    t_vals, xi_vals = measure_time_profile(bmap, grid, t_rows, levels,
                                           n_starts)
    if np.any(t_vals <= 0) or np.any(xi_vals <= 0):
        raise ProfileNoise("nonpositive level values in the time profile")
    psi_vals = xi_vals / np.sqrt(t_vals)
    # weighted fit in t: low levels carry the small-y asymptotics; two
    # guard degrees absorb curvature of psi beyond the orders kept
    deg = min(n_ord + 1, len(levels) - 2)
    V = np.vander(t_vals, deg + 1, increasing=True)
    wts = 1.0 / np.sqrt(t_vals)
    sol, *_ = np.linalg.lstsq(V * wts[:, None], psi_vals * wts, rcond=None)
    fit = V @ sol
    rel_resid = float(np.max(np.abs(fit - psi_vals)) / np.max(np.abs(psi_vals)))
    if rel_resid > 0.05:
        raise ProfileNoise(
            f"time profile deviates from polynomial by {rel_resid:.2e}")
    psi0 = float(sol[0])
    if psi0 <= 0:
        raise ProfileNoise("psi(0) must be positive")

    # u(t) = sum (3/(2m+3)) psi_m t^m; v = t u^{2/3}
    u = sol * 3.0 / (2.0 * np.arange(deg + 1) + 3.0)
    u0 = u[0]
    m_keep = min(deg, n_ord - 1)
    r = np.zeros(n_ord)  # r_m = u_m / u0 for m >= 1, index 0 unused
    r[1:m_keep + 1] = u[1:m_keep + 1] / u0
    # (1 + sum r_m t^m)^(2/3) truncated at t^{N-1}
    frac = np.zeros(n_ord)
    frac[0] = 1.0
    power = np.zeros(n_ord)
    power[0] = 1.0
    binom = 1.0
    a = 2.0 / 3.0
    for j in range(1, n_ord):
        binom *= (a - (j - 1)) / j
        # power series (sum_{m>=1} r_m t^m)^j
        power = _poly_mul_trunc(power, r, n_ord) if j > 1 else r.copy()
        frac += binom * power
    v_coef = u0 ** (2.0 / 3.0) * frac  # v = sum_j v_coef[j-1] t^j

    # compose v with t(s, y), truncated at y^N
    ns = grid.n
    rows = np.asarray(t_rows)
    t_stack = np.zeros((n_ord + 1, ns))
    t_stack[1:] = rows
    h_stack = np.zeros((n_ord + 1, ns))
    t_pow = np.zeros((n_ord + 1, ns))
    t_pow[0] = 1.0
    for j in range(1, n_ord + 1):
        t_pow = _series_mul(t_pow, t_stack, n_ord)
        h_stack += v_coef[j - 1] * t_pow
    h_rows = [h_stack[k] for k in range(1, n_ord + 1)]
    profile = {
        "levels": t_vals,
        "xi": xi_vals,
        "psi_coefficients": sol,
        "fit_residual": rel_resid,
    }
    return h_rows, profile


def _poly_mul_trunc(a, b, n):
    out = np.zeros(n)
    for i in range(n):
        if a[i] == 0.0:
            continue
        jmax = n - i
        out[i:i + jmax] += a[i] * b[:jmax]
    return out


# ---------------------------------------------------------------------------
# the assembled series


@dataclass
class InvariantSeries:
    """Grid data of the invariant series: raw g, symmetrized t, and
    renormalized h coefficients, with construction diagnostics."""

    order: int
    grid: SGrid
    g_rows: list
    t_rows: list
    h_rows: list
    constants: list
    jets: JetTable
    diagnostics: dict = field(default_factory=dict)

    def _eval(self, rows, s, y, upto=None):
        n = len(rows) if upto is None else min(upto, len(rows))
        s = np.asarray(s, dtype=float)
        y = np.asarray(y, dtype=float)
        out = np.zeros(np.broadcast_shapes(s.shape, y.shape))
        for k in range(n, 0, -1):
            out = (out + self.grid.fn(rows[k - 1])(s)) * y
        return out

    def eval_g(self, s, y, upto=None):
        return self._eval(self.g_rows, s, y, upto)

    def eval_t(self, s, y, upto=None):
        return self._eval(self.t_rows, s, y, upto)

    def eval_h(self, s, y, upto=None):
        return self._eval(self.h_rows, s, y, upto)

    def coefficient_fn(self, family, k):
        rows = {"g": self.g_rows, "t": self.t_rows, "h": self.h_rows}[family]
        return self.grid.fn(rows[k - 1])

    def export_rows(self):
        """Per-grid-point rows (s, g_1..g_N, t_1..t_N, h_1..h_N)."""
        cols = [self.grid.s]
        cols += list(self.g_rows) + list(self.t_rows) + list(self.h_rows)
        return np.stack(cols, axis=-1)


def build_invariant_series(curve, order, n_grid=None, window=None,
                           levels=None, z_scale=0.33, strict_jets=True):
    """Run the full construction on a curve.

    order is the number of y-coefficients (N <= 4 by default policy); the
    jets are computed through z^(2N+2).  On an open arc the curve domain
    must extend beyond the window by roughly max(w)*z_scale on both sides
    so that the jet-fit chords stay inside; probe levels must be passed
    small enough that one billiard step fits in the window.
    """
    if order < 1:
        raise OrderTooHigh("order must be at least 1")
    if order > MAX_SERIES_ORDER:
        raise OrderTooHigh(
            f"order {order} above the practical bound {MAX_SERIES_ORDER}")
    if n_grid is None:
        n_grid = 256 if curve.closed else 129
    grid = SGrid(curve, n=n_grid, window=window)
    bmap = BilliardMap(curve)
    jet_order = 2 * order + 2
    jets = compute_jets(curve, grid.s, jet_order, z_scale=z_scale,
                        strict=strict_jets)

    w = curve.half_width(grid.s)
    g_rows = [w ** (2.0 / 3.0)]
    constants = [1.0]
    residues = []
    b_scales = []
    even_leaks = []
    ode_residuals = []
    for n in range(2, order + 1):
        comp = _compose_with_map(g_rows, grid, jets.comp1, jets.comp2,
                                 2 * n + 2)
        comp -= _g_stack_to_z(g_rows, grid.n, 2 * n + 2)
        b = comp[2 * n + 1]
        scale = max(float(np.max(np.abs(comp[2 * n - 1:]))), 1e-30)
        even_leaks.append(float(np.max(np.abs(comp[2 * n]))) / scale)
        b_scales.append(float(np.max(np.abs(b))))
        g_n, residue = solve_coefficient_ode(n, grid, w, b, 0.0)
        residues.append(residue)
        ode_residuals.append(float(np.max(np.abs(
            _ode_residual(n, grid, w, b, g_n)))))
        g_rows.append(g_n)
        constants.append(0.0)

    t_rows, odd_leak = symmetrize(g_rows, grid, jets)
    h_rows, profile = renormalize_hamiltonian(bmap, grid, t_rows,
                                              levels=levels)
    diagnostics = {
        "solvability_residues": residues,
        "b_scales": b_scales,
        "even_defect_leaks": even_leaks,
        "ode_residuals": ode_residuals,
        "odd_symmetrized_leak": odd_leak,
        "jet_disagreement_max": float(np.max(jets.disagreement)),
        "time_profile": profile,
        "w_linear_mismatch": float(np.max(np.abs(
            (jets.comp1[1] - w) / w))),
    }
    return InvariantSeries(order=order, grid=grid, g_rows=g_rows,
                           t_rows=t_rows, h_rows=h_rows, constants=constants,
                           jets=jets, diagnostics=diagnostics)


# ---------------------------------------------------------------------------
# defect measurement


def step_defect(bmap, evaluator, y_values, n_samples=64, window=None):
    """max_s |E(step(s,y)) - E(s,y)| for each probe y.

    E is any evaluator(s, y); samples cover the window (default: the full
    closed curve, or the middle of an open arc).
    """
    curve = bmap.curve
    if window is None:
        if curve.closed:
            window = (0.0, curve.length)
        else:
            span = curve.s_max - curve.s_min
            window = (curve.s_min + 0.3 * span, curve.s_max - 0.3 * span)
    s = np.linspace(window[0], window[1], n_samples,
                    endpoint=not curve.closed)
    out = []
    for y in np.atleast_1d(y_values):
        s2, y2 = bmap.step_sy(s, np.full_like(s, float(y)))
        d = evaluator(s2, y2) - evaluator(s, np.full_like(s, float(y)))
        out.append(float(np.max(np.abs(d))))
    return np.array(out)


def fit_loglog_slope(x, d, floor=0.0):
    """Least-squares slope of log d against log x, ignoring floor values.

    Returns (slope, n_used); n_used = 0 means everything sat at the floor.
    """
    x = np.asarray(x, dtype=float)
    d = np.asarray(d, dtype=float)
    keep = d > floor
    if np.sum(keep) < 2:
        return float("nan"), int(np.sum(keep))
    lx = np.log(x[keep])
    ld = np.log(d[keep])
    slope = float(np.polyfit(lx, ld, 1)[0])
    return slope, int(np.sum(keep))
