"""Invariant foliations near the boundary.

Three constructions on top of the normal chart.  A partition-of-unity
gluing produces a map-invariant level function on a fundamental sector
of the (tau, phi) plane, phi = sqrt(h).  Extension by dynamics
transports it along orbits to a rectangle adjacent to the boundary,
carrying a per-point invariance-defect certificate.  Flat-perturbation
families deform the base foliation h = const by h-flat terms
psi(tau/sqrt(h), h), producing families whose members are pairwise
distinct near every boundary point while sharing all h-derivatives
at h = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (DegenerateSpec, EscapesDomain, GradientLoss,
                     LevelCurveEscape, OrbitEscape, OutsideValidity,
                     QuadratureFailure, SectorTooLarge)

CHI_DEFAULT = 0.3
SIGMA_DEFAULT = 0.05


def _bump(u):
    """exp(-1/u) for u > 0, identically 0 for u <= 0."""
    u = np.asarray(u, dtype=float)
    out = np.zeros(u.shape)
    pos = u > 0
    with np.errstate(over="ignore", divide="ignore", under="ignore"):
        out[pos] = np.exp(-1.0 / u[pos])
    return out


def smoothstep(u):
    """C-infinity ramp: 0 for u <= 0, 1 for u >= 1, strictly increasing
    between; built from the standard exp(-1/u) mollifier."""
    u = np.asarray(u, dtype=float)
    e1 = _bump(u)
    e2 = _bump(1.0 - u)
    return e1 / (e1 + e2)


# -- maps in the (tau, phi) chart ---------------------------------------------

class ModelMap:
    """The exact normal form (tau, phi) -> (tau + phi, phi)."""

    def lift(self, tau, phi):
        return _ModelWalker(float(tau), float(phi))


class _ModelWalker:
    def __init__(self, tau, phi):
        self.tau = tau
        self.phi = phi

    def step(self, direction=1):
        self.tau += direction * self.phi


class ChartBilliardMap:
    """The billiard map conjugated into the (tau, phi) half-plane of a
    normal chart, phi = sqrt(h), on the universal cover (tau unwrapped).

    Walkers track the boundary point (s, y) and accumulate tau by
    sqrt(h) per step, so a walk costs one chart inversion up front and
    one billiard step per move; the accumulated tau differs from the
    exact chart time by the per-step translation defect of the chart.
    """

    def __init__(self, chart, bmap):
        self.chart = chart
        self.bmap = bmap
        self.curve = chart.curve

    def lift(self, tau, phi):
        if phi <= 0:
            raise OutsideValidity("the lifted plane needs phi > 0")
        try:
            s, y = self.chart.from_chart(float(tau), float(phi) ** 2)
        except (LevelCurveEscape, QuadratureFailure, OutsideValidity):
            raise
        if self.curve.closed:
            s = float(np.mod(s, self.curve.length))
        return _BilliardWalker(self, float(tau), float(s), float(y))


class _BilliardWalker:
    def __init__(self, owner, tau, s, y):
        self._owner = owner
        self.tau = tau
        self.s = s
        self.y = y

    @property
    def phi(self):
        return math.sqrt(self._h(self.s, self.y))

    def _h(self, s, y):
        return float(self._owner.chart.series.eval_h(s, y))

    def step(self, direction=1):
        bmap = self._owner.bmap
        try:
            if direction >= 0:
                self.tau += math.sqrt(self._h(self.s, self.y))
                s2, y2 = bmap.step_sy(self.s, self.y)
            else:
                s2, y2 = bmap.backward_sy(self.s, self.y)
                self.tau -= math.sqrt(self._h(s2, y2))
        except EscapesDomain as exc:
            raise OrbitEscape(
                f"orbit leaves the arc while extending: {exc}") from exc
        self.s, self.y = float(s2), float(y2)


# -- sector gluing --------------------------------------------------------------

@dataclass
class SectorGluing:
    """Partition-of-unity gluing on the sector
    S = {-chi*phi < tau < (1+chi)*phi, 0 < phi < eta}.

    rho1 + rho2 = 1 with rho1 = 1 left of nu = 1/2 - sigma and
    rho2 = 1 right of nu = 1/2 + sigma, nu = tau/phi; the glued value is
    rho1(nu)*phi + rho2(nu)*(phi of the inverse image).
    """

    chi: float
    sigma: float
    eta: float
    map: object

    def nu(self, tau, phi):
        return tau / phi

    def rho2(self, nu):
        return smoothstep((np.asarray(nu, dtype=float)
                           - (0.5 - self.sigma)) / (2.0 * self.sigma))

    def rho1(self, nu):
        return 1.0 - self.rho2(nu)

    def contains(self, tau, phi, eta=None):
        eta = self.eta if eta is None else eta
        return (0.0 < phi < eta) and (-self.chi * phi < tau
                                      < (1.0 + self.chi) * phi)

    def value(self, tau, phi):
        """The glued level function phi-tilde at a sector point."""
        if not self.contains(tau, phi):
            raise OutsideValidity("point outside the gluing sector")
        r2 = float(self.rho2(tau / phi))
        if r2 == 0.0:
            return float(phi)
        walker = self.map.lift(tau, phi)
        walker.step(-1)
        return (1.0 - r2) * float(phi) + r2 * walker.phi


def glue_on_sector(chart_map, chi=CHI_DEFAULT, sigma=SIGMA_DEFAULT,
                   eta=0.05, n_check=7):
    """Build the sector gluing, verifying the disjointness precondition
    that the double image of S_{chi,2*eta} misses S_{chi,2*eta}."""
    if not 0.0 < chi < 0.5:
        raise DegenerateSpec("chi must lie in (0, 1/2)")
    if not 0.0 < sigma < 0.5 * (0.5 - chi):
        raise DegenerateSpec("sigma must lie in (0, (1/2 - chi)/2)")
    gluing = SectorGluing(chi=chi, sigma=sigma, eta=float(eta),
                          map=chart_map)
    nus = np.linspace(-chi, 1.0 + chi, n_check + 2)[1:-1]
    phis = 2.0 * eta * np.geomspace(1e-2, 1.0, n_check)
    for phi0 in phis:
        for nu0 in nus:
            try:
                walker = chart_map.lift(nu0 * phi0, phi0)
                walker.step()
                walker.step()
            except (OutsideValidity, LevelCurveEscape, QuadratureFailure,
                    OrbitEscape) as exc:
                raise SectorTooLarge(
                    f"map not defined on the doubled sector at phi={phi0:g};"
                    " shrink eta") from exc
            if gluing.contains(walker.tau, walker.phi, eta=2.0 * eta):
                raise SectorTooLarge(
                    f"double image meets the sector at phi={phi0:g};"
                    " shrink eta")
    return gluing


# -- invariant fields ------------------------------------------------------------

@dataclass
class FoliationField:
    """A level function whose level sets are the foliation leaves.

    kind 'phi' measures approximately sqrt(h) (sector extensions);
    kind 'h' measures approximately h (perturbation families).  The
    certificate records measured invariance defects; evaluate() is the
    user-facing interpolating (or closed-form) evaluator.
    """

    kind: str
    window: tuple
    certificate: dict = field(default_factory=dict)
    _evaluator: object = None
    bands: list = None
    label: object = None

    def evaluate(self, tau, level):
        (t_lo, t_hi), (l_lo, l_hi) = self.window
        tau = np.asarray(tau, dtype=float)
        level = np.asarray(level, dtype=float)
        if (np.any(tau < t_lo - 1e-12) or np.any(tau > t_hi + 1e-12)
                or np.any(level < l_lo * (1 - 1e-9))
                or np.any(level > l_hi * (1 + 1e-9))):
            raise OutsideValidity("query outside the field window")
        return self._evaluator(tau, level)

    __call__ = evaluate


def _band_interpolator(bands):
    """Piecewise-bilinear evaluator over per-band tau grids."""
    levels = np.array([b[0] for b in bands])

    def evaluate(tau, level):
        tau = np.atleast_1d(np.asarray(tau, dtype=float))
        level = np.atleast_1d(np.asarray(level, dtype=float))
        tau, level = np.broadcast_arrays(tau, level)
        out = np.empty(tau.shape)
        flat_t, flat_l, flat_o = tau.ravel(), level.ravel(), out.ravel()
        for i in range(flat_t.size):
            lv = flat_l[i]
            j = int(np.searchsorted(levels, lv))
            if j == 0:
                lo_b = hi_b = bands[0]
                wt = 0.0
            elif j >= len(bands):
                lo_b = hi_b = bands[-1]
                wt = 0.0
            else:
                lo_b, hi_b = bands[j - 1], bands[j]
                wt = (lv - lo_b[0]) / (hi_b[0] - lo_b[0])
            v_lo = np.interp(flat_t[i], lo_b[1], lo_b[2])
            v_hi = np.interp(flat_t[i], hi_b[1], hi_b[2])
            flat_o[i] = (1.0 - wt) * v_lo + wt * v_hi
        if out.size == 1:
            return float(flat_o[0])
        return out

    return evaluate


def extend_by_dynamics(gluing, window, n_bands=5, nodes_per_band=None):
    """Extend the glued level function along orbits over a rectangle
    window = ((tau_lo, tau_hi), (phi_lo, phi_hi)).

    Every grid point is walked to its orbit representative in the
    fundamental sector (first orbit point with tau >= 0) and assigned
    the glued value there; the certificate records per-band step
    counts, the N*phi bound, and the measured invariance defect of the
    interpolated field.
    """
    (t_lo, t_hi), (p_lo, p_hi) = window
    if p_hi > gluing.eta:
        raise OutsideValidity(
            "window levels exceed the gluing sector height eta")
    if p_lo <= 0 or p_lo > p_hi:
        raise OutsideValidity("level band must satisfy 0 < lo <= hi")
    chart_map = gluing.map
    if n_bands < 2 or p_lo == p_hi:
        band_levels = np.array([p_lo])
    else:
        band_levels = np.geomspace(p_lo, p_hi, n_bands)
    span = t_hi - t_lo
    bands = []
    per_band = []
    for phi_b in band_levels:
        n_tau = nodes_per_band or int(np.clip(
            math.ceil(span / (0.4 * phi_b)) + 1, 8, 4000))
        taus = np.linspace(t_lo, t_hi, n_tau)
        values = np.empty(n_tau)
        counts = np.empty(n_tau, dtype=int)
        guard = math.ceil((max(abs(t_lo), abs(t_hi)) + 2.0) / phi_b) + 16
        for i, t0 in enumerate(taus):
            try:
                walker = chart_map.lift(t0, phi_b)
            except (OutsideValidity, LevelCurveEscape,
                    QuadratureFailure) as exc:
                raise OrbitEscape(
                    "window exceeds the arc the orbit can traverse: "
                    f"{exc}") from exc
            n = 0
            while walker.tau < 0.0:
                walker.step(+1)
                n += 1
                if n > guard:
                    raise OrbitEscape("representative search exceeded "
                                      "the O(1/phi) budget")
            while walker.tau >= 0.0:
                walker.step(-1)
                n += 1
                if n > guard:
                    raise OrbitEscape("representative search exceeded "
                                      "the O(1/phi) budget")
            walker.step(+1)
            values[i] = gluing.value(walker.tau, walker.phi)
            counts[i] = n
        bands.append((float(phi_b), taus, values))
        per_band.append({"level": float(phi_b),
                         "max_steps": int(np.max(counts)),
                         "steps_times_phi": float(np.max(counts) * phi_b),
                         "base_deviation": float(
                             np.max(np.abs(values - phi_b)))})
    evaluator = _band_interpolator(bands)
    # invariance defect of the interpolated field: one map step per node
    worst = 0.0
    for (phi_b, taus, values), report in zip(bands, per_band):
        band_defect = 0.0
        stride = max(1, len(taus) // 64)
        for i in range(0, len(taus), stride):
            try:
                walker = chart_map.lift(taus[i], phi_b)
                walker.step(+1)
            except (OrbitEscape, OutsideValidity, LevelCurveEscape,
                    QuadratureFailure):
                continue
            t2, p2 = walker.tau, walker.phi
            if not (t_lo <= t2 <= t_hi and
                    band_levels[0] <= p2 <= band_levels[-1]):
                continue
            band_defect = max(band_defect,
                              abs(evaluator(t2, p2) - values[i]))
        report["invariance_defect"] = band_defect
        worst = max(worst, band_defect)
    certificate = {"per_band": per_band, "max_defect": worst,
                   "defect_note": "field(step(x)) - field(x) over grid"}
    return FoliationField(kind="phi", window=window, certificate=certificate,
                          _evaluator=evaluator, bands=bands,
                          label="extension")


# -- flat perturbations -----------------------------------------------------------

@dataclass
class FlatPerturbation:
    """h-flat cylinder function psi(t, h), 1-periodic in t, vanishing
    with all h-derivatives at h = 0; default a*exp(-1/(c*h))*sin(2*pi*t).
    """

    amplitude: float = 1e-2
    sharpness: float = 10.0
    shape: object = None

    def __call__(self, t, h):
        t = np.asarray(t, dtype=float)
        h = np.asarray(h, dtype=float)
        if self.shape is not None:
            return self.shape(t, h)
        return (self.amplitude * _bump(self.sharpness * h)
                * np.sin(2.0 * np.pi * t))

    def max_abs(self, h_max):
        """Largest |psi| on the working window h <= h_max (default
        shape is monotone in h, maximal at the top level)."""
        t = np.linspace(0.0, 1.0, 257)
        return float(np.max(np.abs(self(t, np.full(t.shape, h_max)))))

    def flatness_certificate(self, orders=6, t_probe=0.23):
        """Divided differences of psi(t_probe, .) on a ladder descending
        into the numerically dead zone of exp(-1/(c*h)); all orders up
        to `orders` must fall below 1e-12.

        Returns the list of |k-th divided difference| values.
        """
        c = self.sharpness
        results = []
        for k in range(1, orders + 1):
            delta = 1.0 / (1000.0 * c * k)
            nodes = delta * np.arange(k + 1)
            vals = self(np.full(k + 1, t_probe), nodes)
            # k-th divided difference via iterated first differences
            for m in range(1, k + 1):
                vals = np.diff(vals) / (m * delta)
            results.append(abs(float(vals[0])))
        return results


def _as_weight_vector(w):
    if np.ndim(w) == 0:
        return None, float(w)
    return np.asarray(w, dtype=float), None


def perturbed_family(chart, psi, eps, window, probe_levels=None,
                     chart_map=None, n_orbit=50):
    """Foliation fields g_eps(tau, h) = h + chi_eps(tau/sqrt h, h).

    A scalar weight eps gives chi = eps * psi; a weight vector
    (eps_1..eps_m) gives chi = sum_k eps_k / (k! 4^k) * psi^k.  Each
    member carries a gradient certificate (dg/dh > 1/2 on the window)
    and, when a chart map is supplied, a measured orbit-invariance
    defect.
    """
    (t_lo, t_hi), (h_lo, h_hi) = window
    if h_lo <= 0 or h_lo > h_hi:
        raise OutsideValidity("level band must satisfy 0 < lo <= hi")
    if psi.max_abs(h_hi) >= 0.125:
        raise DegenerateSpec("|psi| must stay below 1/8 on the window")
    fields = []
    for weight in eps:
        vec, scal = _as_weight_vector(weight)
        if vec is not None and (np.any(vec < 0) or np.any(vec > 1)):
            raise DegenerateSpec("weights must lie in [0, 1]")
        if scal is not None and not 0.0 <= scal <= 1.0:
            raise DegenerateSpec("weights must lie in [0, 1]")

        def evaluator(tau, h, vec=vec, scal=scal):
            tau = np.asarray(tau, dtype=float)
            h = np.asarray(h, dtype=float)
            t = tau / np.sqrt(h)
            base = psi(t, h)
            if scal is not None:
                chi = scal * base
            else:
                chi = np.zeros(np.broadcast(tau, h).shape)
                power = np.ones_like(chi)
                for k, ek in enumerate(vec, start=1):
                    power = power * base
                    chi = chi + ek / (math.factorial(k) * 4.0 ** k) * power
            out = h + chi
            if out.ndim == 0:
                return float(out)
            return out

        # gradient certificate: dg/dh > 1/2 over the window grid
        taus = np.linspace(t_lo, t_hi, 41)
        hs = np.geomspace(h_lo, h_hi, 17)
        min_grad = np.inf
        for hv in hs:
            d = 1e-4 * hv
            gp = evaluator(taus, np.full(taus.shape, hv + d))
            gm = evaluator(taus, np.full(taus.shape, hv - d))
            min_grad = min(min_grad, float(np.min((gp - gm) / (2.0 * d))))
        if min_grad <= 0.5:
            raise GradientLoss(
                f"dg/dh reaches {min_grad:.3g} <= 1/2 on the window;"
                " shrink the window or the amplitude")
        certificate = {"min_grad_h": min_grad}
        if chart_map is not None:
            levels = probe_levels or np.geomspace(h_lo, h_hi, 3)
            worst = 0.0
            for hv in levels:
                walker = chart_map.lift(0.5 * (t_lo + t_hi), math.sqrt(hv))
                prev = evaluator(walker.tau, walker.phi ** 2)
                for _ in range(n_orbit):
                    walker.step(+1)
                    cur = evaluator(walker.tau, walker.phi ** 2)
                    worst = max(worst, abs(cur - prev))
                    prev = cur
            certificate["orbit_defect"] = worst
        fields.append(FoliationField(
            kind="h", window=window, certificate=certificate,
            _evaluator=evaluator, label=weight))
    return fields


def distinctness_probe(field_a, field_b, tau_star=0.0, delta=0.05,
                       h_floor=None, n=64):
    """Largest |g_a - g_b| over a probe patch hugging the boundary
    point (tau_star, 0): tau within delta, h in the lowest usable band.

    h_floor defaults to the bottom of the shared window; pass
    1/(30*c) for the default flat shape so the difference sits above
    the 1e-15 resolution threshold.
    """
    (ta_lo, ta_hi), (ha_lo, ha_hi) = field_a.window
    (tb_lo, tb_hi), (hb_lo, hb_hi) = field_b.window
    t_lo = max(ta_lo, tb_lo, tau_star - delta)
    t_hi = min(ta_hi, tb_hi, tau_star + delta)
    h_lo = max(ha_lo, hb_lo, h_floor or 0.0)
    h_hi = min(ha_hi, hb_hi, h_lo * 4.0 if h_lo > 0 else ha_hi)
    if t_lo >= t_hi or h_lo > h_hi:
        raise OutsideValidity("fields share no probe patch near the point")
    taus = np.linspace(t_lo, t_hi, n)
    hs = np.geomspace(h_lo, h_hi, 9)
    worst = 0.0
    for hv in hs:
        col = np.full(taus.shape, hv)
        worst = max(worst, float(np.max(np.abs(
            field_a.evaluate(taus, col) - field_b.evaluate(taus, col)))))
    return worst


# -- convexity of leaves in the dual plane ---------------------------------------

def hessian_convexity(g, window, n=48, fd_step=None):
    """Sign and margin of H(g) = g_xx g_y^2 + g_yy g_x^2 - 2 g_xy g_x g_y
    over a rectangle of the dual plane; level curves of g are strictly
    convex where H is bounded away from zero.
    """
    (x_lo, x_hi), (y_lo, y_hi) = window
    xs = np.linspace(x_lo, x_hi, n)
    ys = np.linspace(y_lo, y_hi, n)
    dx = fd_step or 1e-4 * max(x_hi - x_lo, y_hi - y_lo, 1e-12)
    X, Y = np.meshgrid(xs, ys, indexing="ij")

    def ev(a, b):
        return np.asarray(g(a, b), dtype=float)

    gx = (ev(X + dx, Y) - ev(X - dx, Y)) / (2.0 * dx)
    gy = (ev(X, Y + dx) - ev(X, Y - dx)) / (2.0 * dx)
    g0 = ev(X, Y)
    gxx = (ev(X + dx, Y) - 2.0 * g0 + ev(X - dx, Y)) / dx ** 2
    gyy = (ev(X, Y + dx) - 2.0 * g0 + ev(X, Y - dx)) / dx ** 2
    gxy = (ev(X + dx, Y + dx) - ev(X + dx, Y - dx)
           - ev(X - dx, Y + dx) + ev(X - dx, Y - dx)) / (4.0 * dx ** 2)
    H = gxx * gy ** 2 + gyy * gx ** 2 - 2.0 * gxy * gx * gy
    max_abs = float(np.max(np.abs(H)))
    min_abs = float(np.min(np.abs(H)))
    degenerate = max_abs < 1e-10 or min_abs <= 1e-8 * max_abs
    if degenerate:
        sign = "degenerate"
    elif np.all(H > 0):
        sign = "positive"
    elif np.all(H < 0):
        sign = "negative"
    else:
        sign = "mixed"
    return {"min_abs": min_abs, "max_abs": max_abs, "sign": sign,
            "degenerate": degenerate, "n": n}


def leaf_polyline(field, value, n=200):
    """Sample the leaf {g = value} as a polyline (tau, level) across the
    field's tau window, solving the monotone level equation per tau."""
    (t_lo, t_hi), (l_lo, l_hi) = field.window
    taus = np.linspace(t_lo, t_hi, n)
    out = np.empty((n, 2))
    for i, tv in enumerate(taus):
        lo, hi = l_lo, l_hi
        f_lo = field.evaluate(tv, lo) - value
        f_hi = field.evaluate(tv, hi) - value
        if f_lo > 0 or f_hi < 0:
            raise OutsideValidity(
                f"leaf value {value:g} leaves the window at tau={tv:g}")
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if field.evaluate(tv, mid) - value < 0:
                lo = mid
            else:
                hi = mid
        out[i] = (tv, 0.5 * (lo + hi))
    return out
