"""Oriented lines in the plane and the chord chart over a convex curve.

Chart convention: a line is (phi_az, p) where phi_az is the azimuth of
its direction and p the signed distance to the origin, p > 0 iff the
line orients its tangent circle about the origin clockwise (p = 0 iff it
passes through the origin).  For any point q on the line with unit
direction u this gives p = q_y u_x - q_x u_y.  The area form is
d(phi_az) ^ dp.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import InvalidChord, MapUndefined, RootFindFailure


@dataclass(frozen=True)
class OrientedLine:
    phi_az: float
    p: float

    @property
    def direction(self):
        return np.array([math.cos(self.phi_az), math.sin(self.phi_az)])

    @property
    def normal(self):
        """Left unit normal; the line is {x . normal = p}."""
        return np.array([-math.sin(self.phi_az), math.cos(self.phi_az)])

    @property
    def foot(self):
        """Point of the line closest to the origin."""
        return self.p * self.normal

    def reversed(self):
        az = self.phi_az + math.pi
        az -= 2.0 * math.pi * math.floor((az + math.pi) / (2.0 * math.pi))
        return OrientedLine(az, -self.p)

    def support_form(self):
        """(psi, rho): normal angle and support value, {x cos psi + y sin psi = rho}."""
        return self.phi_az + 0.5 * math.pi, self.p

    def signed_offset(self, pts):
        """Perpendicular offset of plane points from the line."""
        n = self.normal
        return np.asarray(pts, dtype=float) @ n - self.p

    def along(self, pts):
        """Line parameter (arc length along the line) of projected points."""
        u = self.direction
        return (np.asarray(pts, dtype=float) - self.foot) @ u


@dataclass(frozen=True)
class ChordCoordinates:
    """A chord of a fixed curve, by the arc lengths of its endpoints."""
    s1: float
    s2: float


def line_through(point, direction):
    """Oriented line through ``point`` with (not necessarily unit) direction."""
    q = np.asarray(point, dtype=float)
    u = np.asarray(direction, dtype=float)
    nu = np.linalg.norm(u)
    if nu == 0.0:
        raise InvalidChord("zero direction vector")
    u = u / nu
    return OrientedLine(math.atan2(u[1], u[0]), float(q[1] * u[0] - q[0] * u[1]))


def chord_to_line(curve, s1, s2):
    """Oriented line through curve points s1 -> s2 (tangent line if equal)."""
    p1 = curve.point(s1)
    if np.isclose(s1, s2):
        return line_through(p1, curve.tangent(s1))
    p2 = curve.point(s2)
    if np.allclose(p1, p2, atol=1e-14):
        raise InvalidChord("chord endpoints coincide in the plane")
    return line_through(p1, p2 - p1)


def line_to_chord(curve, line, hints=None, n_scan=720):
    """Invert the chord chart: find the two curve intersections of a line.

    Returns ChordCoordinates ordered along the line's orientation (the
    second entry is the last intersection in the direction of travel).
    With ``hints`` (a nearby chord) a guarded Newton refines directly;
    otherwise a dense scan brackets the roots.
    """
    if hints is not None:
        roots = []
        for s0 in hints:
            s = float(s0)
            ok = False
            for _ in range(60):
                r = float(line.signed_offset(curve.point(s)))
                dr = float(np.dot(curve.tangent(s), line.normal))
                if dr == 0.0:
                    break
                step = r / dr
                s -= step
                if abs(step) < 1e-13 * max(1.0, abs(s)):
                    ok = True
                    break
            if not ok or abs(float(line.signed_offset(curve.point(s)))) > 1e-9:
                roots = None
                break
            roots.append(s)
        if roots is not None:
            return _order_chord(curve, line, roots)

    if not curve.closed and not (np.isfinite(curve.s_min) and np.isfinite(curve.s_max)):
        raise MapUndefined("dense line inversion needs a compact curve window")
    lo = curve.s_min if not curve.closed else 0.0
    hi = curve.s_max if not curve.closed else curve.length
    grid = np.linspace(lo, hi, n_scan)
    vals = line.signed_offset(curve.point(grid))
    roots = []
    for i in range(n_scan - 1):
        a, b = vals[i], vals[i + 1]
        if a == 0.0:
            roots.append(grid[i])
        elif a * b < 0.0:
            roots.append(brentq(
                lambda s: float(line.signed_offset(curve.point(s))),
                grid[i], grid[i + 1], xtol=1e-13, rtol=8.9e-16))
    if len(roots) < 2:
        raise MapUndefined("line meets the curve in fewer than two points")
    if len(roots) > 2:
        raise RootFindFailure("more than two intersections; curve not convex "
                              "on the window or scan too coarse")
    return _order_chord(curve, line, roots)


def _order_chord(curve, line, roots):
    t = [float(line.along(curve.point(s))) for s in roots]
    if abs(t[0] - t[1]) < 1e-14:
        raise InvalidChord("degenerate (tangent) intersection")
    s1, s2 = (roots[0], roots[1]) if t[0] < t[1] else (roots[1], roots[0])
    return ChordCoordinates(float(s1), float(s2))


def jacobian2(map2, x, y, h, richardson=True):
    """Jacobian of a plane map by central differences.

    ``map2`` takes two arrays and returns two arrays; one Richardson
    extrapolation step combines h and h/2 (error h^4).
    """

    def jac(step):
        x1p, y1p = map2(x + step, y)
        x1m, y1m = map2(x - step, y)
        x2p, y2p = map2(x, y + step)
        x2m, y2m = map2(x, y - step)
        return np.array([[(x1p - x1m), (x2p - x2m)],
                         [(y1p - y1m), (y2p - y2m)]]) / (2.0 * step)

    j = jac(h)
    if richardson:
        j = (4.0 * jac(h / 2.0) - j) / 3.0
    return j


def symplectic_area_defect(map2, xs, ys, h=None, scale=1.0):
    """max |det DJ - 1| over a sample grid, Jacobians by central differences."""
    if h is None:
        h = 1e-5 * scale
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    j = jacobian2(map2, xs, ys, h)
    det = j[0, 0] * j[1, 1] - j[0, 1] * j[1, 0]
    return float(np.max(np.abs(det - 1.0)))
