"""The billiard ball map of a convex curve, in boundary charts.

Charts: (s, phi) with phi in (0, pi) the angle from the tangent to the
outgoing chord; (s, y) with y = 1 - cos(phi), in which the map preserves
the area ds ^ dy; (s, z) with z = sqrt(y), the lifted chart in which the
map extends smoothly through the tangency boundary z = 0.

The second intersection is a root of the signed offset from the chord
line.  A guarded vectorized Newton iteration is seeded with the
near-tangency asymptotics s' ~ s + 2 phi / kappa(s); below PHI_SMALL the
two-term expansion is used directly (its error is O(phi^3), far below
roundoff there).  Failures fall back to a certified bracket-and-bisect
march that also detects chords leaving an open arc.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import EscapesDomain, MapUndefined
from .lines import line_through, line_to_chord

PHI_SMALL = 1e-6      # below this, use the tangency expansion
_NEWTON_TOL = 5e-14


@dataclass(frozen=True)
class PhasePoint:
    """Boundary phase point in the (s, phi) chart."""
    s: float
    phi: float

    @property
    def y(self):
        return 2.0 * math.sin(0.5 * self.phi) ** 2

    @property
    def z(self):
        return math.sqrt(self.y)


def y_of_phi(phi):
    # half-angle form of 1 - cos(phi); keeps relative accuracy near phi = 0
    return 2.0 * np.sin(0.5 * np.asarray(phi, dtype=float)) ** 2


def phi_of_y(y):
    return 2.0 * np.arcsin(np.sqrt(0.5 * np.asarray(y, dtype=float)))


def phi_of_z(z):
    """Smooth odd inverse of z = sqrt(1 - cos phi): phi = 2 asin(z / sqrt 2)."""
    return 2.0 * np.arcsin(np.asarray(z, dtype=float) / math.sqrt(2.0))


def z_of_phi(phi):
    return math.sqrt(2.0) * np.sin(np.asarray(phi, dtype=float) / 2.0)


class BilliardMap:
    """Billiard dynamics on a fixed convex curve."""

    def __init__(self, curve):
        self.curve = curve
        self._kmax = None

    def _kappa_max(self):
        """Upper-ish bound on curvature over the represented window (cached)."""
        if self._kmax is None:
            c = self.curve
            lo = c.s_min if np.isfinite(c.s_min) else -100.0
            hi = c.s_max if np.isfinite(c.s_max) else 100.0
            grid = np.linspace(lo, hi, 2048, endpoint=not c.closed)
            self._kmax = 1.02 * float(np.max(c.curvature(grid)))
        return self._kmax

    # -- elementary expansion --------------------------------------------------

    def _tangency_expansion(self, s, phi, forward=True):
        k = self.curve.curvature(s)
        kp = self.curve.curvature_prime(s)
        sgn = 1.0 if forward else -1.0
        s2 = s + sgn * 2.0 * phi / k - (4.0 / 3.0) * kp / k ** 3 * phi * phi
        phi2 = phi + sgn * (2.0 / 3.0) * kp / k ** 2 * phi * phi
        return s2, phi2

    # -- chord solver ------------------------------------------------------------

    def _solve(self, s, phi, forward):
        """Vectorized second intersection; returns (s2, phi2, ok mask).

        Points whose chord leaves an open arc get ok = False and NaNs.
        """
        s = np.atleast_1d(np.asarray(s, dtype=float))
        phi = np.atleast_1d(np.asarray(phi, dtype=float))
        s, phi = np.broadcast_arrays(s, phi)
        s = np.ascontiguousarray(s, dtype=float)
        phi = np.ascontiguousarray(phi, dtype=float)
        if np.any(~np.isfinite(phi)) or np.any(phi <= 0.0) or np.any(phi >= np.pi):
            raise MapUndefined("phi must lie in (0, pi)")

        out_s = np.full(s.shape, np.nan)
        out_phi = np.full(s.shape, np.nan)
        ok = np.zeros(s.shape, dtype=bool)

        tiny = phi < PHI_SMALL
        if np.any(tiny):
            s2, p2 = self._tangency_expansion(s[tiny], phi[tiny], forward)
            inside = self._inside_domain(s2)
            out_s[tiny] = np.where(inside, s2, np.nan)
            out_phi[tiny] = np.where(inside, p2, np.nan)
            ok[tiny] = inside

        rest = ~tiny
        if np.any(rest):
            s2, p2, good = self._solve_newton(s[rest], phi[rest], forward)
            out_s[rest] = s2
            out_phi[rest] = p2
            ok[rest] = good
        return out_s, out_phi, ok

    def _inside_domain(self, s2):
        c = self.curve
        if c.closed:
            return np.ones(np.shape(s2), dtype=bool)
        return (s2 >= c.s_min) & (s2 <= c.s_max)

    def _windows(self, s, phi, forward, ell0):
        """Per-point search window [lo, hi] that contains the root whenever
        one exists on the arc and excludes the trivial root at sigma = s.

        The tangent turns by phi + phi' > phi along the chord, so the arc
        distance to the root is at least phi / kappa_max; near phi = pi the
        mirrored bound (pi - phi) / kappa_max keeps closed-curve windows
        short of the wrapped copy of s.
        """
        c = self.curve
        kmax = self._kappa_max()
        near = 0.5 * phi / kmax
        far_guard = 0.5 * (np.pi - phi) / kmax
        if c.closed:
            if forward:
                return s + near, s + c.length - far_guard
            return s - c.length + far_guard, s - near
        reach = 64.0 * ell0 + 8.0 * (1.0 + np.abs(s))
        if forward:
            hi = np.where(np.isfinite(c.s_max), c.s_max, s + reach)
            return s + near, hi
        lo = np.where(np.isfinite(c.s_min), c.s_min, s - reach)
        return lo, s - near

    def _solve_newton(self, s, phi, forward):
        curve = self.curve
        alpha = curve.tangent_angle(s)
        theta = alpha + phi if forward else alpha - phi
        n = np.stack([-np.sin(theta), np.cos(theta)], axis=-1)
        p0 = curve.point(s)
        k = curve.curvature(s)
        kp = curve.curvature_prime(s)
        ell0 = 2.0 * phi / k

        def g(sig):
            return np.sum((curve.point(sig) - p0) * n, axis=-1)

        lo, hi = self._windows(s, phi, forward, ell0)
        bad_window = lo >= hi
        lo = np.where(bad_window, s - 1.0, lo)
        hi = np.where(bad_window, s, hi)
        sgn = 1.0 if forward else -1.0
        sigma = np.clip(s + sgn * ell0
                        - (4.0 / 3.0) * kp / k ** 3 * phi * phi, lo, hi)

        # certified bracket: the offset is negative strictly between the
        # two intersections and positive on the far side of the second one,
        # so the window end nearest s brackets from the negative side and
        # the far end from the positive side; a non-positive offset at the
        # far end means the chord never returns inside the window
        a = lo.copy()
        b = hi.copy()
        far = b if forward else a
        escaped = bad_window | (g(far) <= 0.0)

        scale = np.maximum(1.0, np.linalg.norm(p0, axis=-1))
        # residuals below the roundoff floor of the offset cannot improve
        noise = 64.0 * np.finfo(float).eps * scale
        converged = np.zeros(s.shape, dtype=bool)
        active = np.flatnonzero(~escaped)
        for _ in range(90):
            if active.size == 0:
                break
            sig_a = sigma[active]
            val = np.sum((curve.point(sig_a) - p0[active]) * n[active], axis=-1)
            # a residual at the roundoff floor has a meaningless sign: the
            # point is accepted as-is and must not touch the bracket
            at_floor = np.abs(val) < noise[active]
            converged[active[at_floor]] = True
            active = active[~at_floor]
            if active.size == 0:
                break
            sig_a = sig_a[~at_floor]
            val = val[~at_floor]
            dv = np.sin(curve.tangent_angle(sig_a) - theta[active])
            # negative offset lies between the intersections: the root is
            # onward in the travel direction; positive lies beyond it
            toward_b = (val < 0.0) if forward else (val > 0.0)
            a[active] = np.where(toward_b, sig_a, a[active])
            b[active] = np.where(toward_b, b[active], sig_a)
            with np.errstate(divide="ignore", invalid="ignore"):
                newton = sig_a - val / dv
            inside = (newton > a[active]) & (newton < b[active]) & \
                np.isfinite(newton)
            new = np.where(inside, newton, 0.5 * (a[active] + b[active]))
            moved = np.abs(new - sig_a)
            sigma[active] = new
            done = (moved < _NEWTON_TOL * np.maximum(1.0, np.abs(new))) | \
                (b[active] - a[active] < _NEWTON_TOL)
            converged[active[done]] = True
            active = active[~done]
            if active.size == 0:
                break

        resid = np.abs(g(sigma))
        good = converged & (resid < 1e-9 * scale) & ~escaped
        bad = ~good & ~escaped
        if np.any(bad):
            for i in np.flatnonzero(bad):
                root = self._march_fallback(
                    float(s[i]), p0[i], n[i], float(lo[i]), float(hi[i]), forward)
                if root is not None:
                    sigma[i] = root
                    good[i] = True

        safe_sigma = np.where(good, sigma, s)
        alpha2 = curve.tangent_angle(safe_sigma)
        if forward:
            phi2 = np.mod(alpha2 - theta, 2.0 * np.pi)
        else:
            phi2 = np.mod(theta - alpha2, 2.0 * np.pi)
        s2 = np.where(good, sigma, np.nan)
        phi2 = np.where(good, phi2, np.nan)
        if curve.closed:
            s2 = np.where(good, curve.wrap(s2), np.nan)
        return s2, phi2, good

    def _march_fallback(self, s0, p0, n, lo, hi, forward):
        """March away from s0 until the offset changes sign, then brentq.

        The offset is strictly negative on the arc strictly between the two
        intersections, so the first sign change brackets the root.  Returns
        None when the offset never turns positive inside the window, which
        on an open arc means the chord leaves it.
        """
        curve = self.curve

        def g(sig):
            return float(np.dot(curve.point(sig) - p0, n))

        a, b = (lo, hi) if forward else (hi, lo)
        v_a = g(a)
        if v_a > 0.0:
            # window guard already past the root: walk back toward s0
            t_in = a
            step_in = (a - s0) / 64.0
            for _ in range(64):
                t_new = t_in - step_in
                if g(t_new) <= 0.0:
                    x, y = sorted((t_new, t_in))
                    return brentq(g, x, y, xtol=1e-14, rtol=8.9e-16, maxiter=200)
                t_in = t_new
            return None
        m = 1024
        prev_t = a
        span = b - a
        for j in range(1, m + 1):
            t = a + span * j / m
            if g(t) >= 0.0:
                x, y = sorted((prev_t, t))
                return brentq(g, x, y, xtol=1e-14, rtol=8.9e-16, maxiter=200)
            prev_t = t
        return None

    # -- public stepping -----------------------------------------------------------

    def step_sphi(self, s, phi, allow_escape=False):
        """One forward bounce in (s, phi)."""
        s2, phi2, ok = self._solve(s, phi, forward=True)
        return self._finish(s, s2, phi2, ok, allow_escape)

    def backward_sphi(self, s, phi, allow_escape=False):
        """One backward bounce in (s, phi): the inverse map."""
        s2, phi2, ok = self._solve(s, phi, forward=False)
        return self._finish(s, s2, phi2, ok, allow_escape)

    def _finish(self, s_in, s2, phi2, ok, allow_escape):
        if not allow_escape and not np.all(ok):
            raise EscapesDomain(
                f"{int(np.sum(~ok))} of {ok.size} chords leave the arc")
        if np.ndim(s_in) == 0:
            if allow_escape:
                return float(s2[0]), float(phi2[0]), bool(ok[0])
            return float(s2[0]), float(phi2[0])
        if allow_escape:
            return s2, phi2, ok
        return s2, phi2

    def step_sy(self, s, y, allow_escape=False):
        out = self.step_sphi(s, phi_of_y(y), allow_escape)
        if allow_escape:
            s2, phi2, ok = out
            return s2, y_of_phi(phi2), ok
        s2, phi2 = out
        return s2, y_of_phi(phi2)

    def backward_sy(self, s, y, allow_escape=False):
        out = self.backward_sphi(s, phi_of_y(y), allow_escape)
        if allow_escape:
            s2, phi2, ok = out
            return s2, y_of_phi(phi2), ok
        s2, phi2 = out
        return s2, y_of_phi(phi2)

    def lifted_step(self, s, z):
        """The lifted map in (s, z), smooth through z = 0.

        For z > 0 this is the billiard step; for z < 0 it continues the
        dynamics through tangency via the inverse branch, so that
        lifted(s, -z) mirrors the inverse of lifted(s, z).
        """
        s = np.atleast_1d(np.asarray(s, dtype=float))
        z = np.atleast_1d(np.asarray(z, dtype=float))
        s, z = np.broadcast_arrays(s, z)
        out_s = np.array(s, dtype=float, copy=True)
        out_z = np.zeros(s.shape)
        pos = z > 0.0
        neg = z < 0.0
        if np.any(pos):
            s2, phi2 = self.step_sphi(s[pos], phi_of_z(z[pos]))
            out_s[pos] = s2
            out_z[pos] = z_of_phi(phi2)
        if np.any(neg):
            s2, phi2 = self.backward_sphi(s[neg], phi_of_z(-z[neg]))
            out_s[neg] = s2
            out_z[neg] = -z_of_phi(phi2)
        return out_s, out_z

    def involution(self, s, phi):
        """The time-reversal involution beta with beta o beta = id; the
        billiard step factors through it as step = flip o beta with
        flip(s, phi) = (s, -phi).

        For phi > 0 it lands at (s', -phi'); for phi < 0 it returns along
        the inverse branch.
        """
        s_arr = np.atleast_1d(np.asarray(s, dtype=float))
        phi_arr = np.atleast_1d(np.asarray(phi, dtype=float))
        s_arr, phi_arr = np.broadcast_arrays(s_arr, phi_arr)
        out_s = np.empty(s_arr.shape)
        out_phi = np.empty(s_arr.shape)
        pos = phi_arr > 0
        if np.any(pos):
            s2, p2 = self.step_sphi(s_arr[pos], phi_arr[pos])
            out_s[pos] = s2
            out_phi[pos] = -p2
        if np.any(~pos):
            s2, p2 = self.backward_sphi(s_arr[~pos], -phi_arr[~pos])
            out_s[~pos] = s2
            out_phi[~pos] = p2
        if np.ndim(s) == 0 and np.ndim(phi) == 0:
            return float(out_s[0]), float(out_phi[0])
        return out_s, out_phi

    # -- orbits ------------------------------------------------------------------

    def orbit(self, s0, phi0, n_steps):
        """Forward orbit from (s0, phi0); on escape raises EscapesDomain
        whose ``prefix`` carries the completed (s, phi) history arrays."""
        s_hist = [float(s0)]
        phi_hist = [float(phi0)]
        s, phi = float(s0), float(phi0)
        for _ in range(n_steps):
            s2, phi2, ok = self._solve(s, phi, forward=True)
            if not ok[0]:
                raise EscapesDomain(
                    "orbit left the arc",
                    prefix=(np.array(s_hist), np.array(phi_hist)))
            s, phi = float(s2[0]), float(phi2[0])
            s_hist.append(s)
            phi_hist.append(phi)
        return np.array(s_hist), np.array(phi_hist)

    # -- the map on oriented lines --------------------------------------------------

    def chord_line(self, s, phi):
        """The oriented line carrying the chord launched at (s, phi)."""
        theta = float(self.curve.tangent_angle(s)) + phi
        return line_through(self.curve.point(s),
                            np.array([math.cos(theta), math.sin(theta)]))

    def line_map(self, line, hints=None):
        """Billiard map on oriented lines: reflect at the later intersection.

        Returns the outgoing oriented line and the chord it reflected from.
        The reflection keeps the tangential component of the direction and
        flips the normal one.
        """
        chord = line_to_chord(self.curve, line, hints=hints)
        u = line.direction
        t2 = self.curve.tangent(chord.s2)
        u_ref = 2.0 * float(np.dot(u, t2)) * t2 - u
        return line_through(self.curve.point(chord.s2), u_ref), chord
