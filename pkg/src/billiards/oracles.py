"""Closed-form and brute-force oracles used by the test suite.

Everything here is derived independently of the production evaluators it
is used to check: circle formulas come from the inscribed-angle theorem,
the confocal parameter from the conic tangency discriminant, and the
invariance auditor applies a map directly to a grid.  Production modules
must not import this one.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import special

from .errors import NoRealTangency

TWO_SQRT2 = 2.0 * math.sqrt(2.0)


# -- circle ------------------------------------------------------------------

def circle_step_sphi(radius, s, phi):
    """Billiard step on a circle in (s, phi): a rigid rotation."""
    return s + 2.0 * radius * phi, phi


def circle_step_sy(radius, s, y):
    """Same step in (s, y = 1 - cos phi)."""
    return s + 2.0 * radius * np.arccos(1.0 - y), y


def circle_caustic_radius(radius, phi):
    """Chords at angle phi to the tangent envelope the concentric circle."""
    return radius * np.cos(phi)


def circle_lazutkin_param(radius, s):
    """Lazutkin parameter of the circle: s / (2 sqrt2 R)^(2/3)."""
    return s / (TWO_SQRT2 * radius) ** (2.0 / 3.0)


def circle_lazutkin_length(radius):
    return 2.0 * math.pi * radius ** (1.0 / 3.0)


def circle_line_map(radius, phi_az, p):
    """Billiard map on oriented lines hitting circle(R) centred at the origin.

    A chord at signed distance |p| < R meets the circle at tangent-chord
    angle phi = arccos(|p|/R); each reflection advances the azimuth by
    2*phi for counterclockwise chords (p < 0) and retreats by 2*phi for
    clockwise ones, while |p| is conserved.  Inscribed-angle theorem,
    independent of the production chord solver.
    """
    phi_az = np.asarray(phi_az, dtype=float)
    p = np.asarray(p, dtype=float)
    if np.any(np.abs(p) >= radius):
        raise ValueError("line misses the circle")
    phi = np.arccos(np.abs(p) / radius)
    return phi_az + np.where(p < 0, 2.0 * phi, -2.0 * phi), p


# -- ellipse -----------------------------------------------------------------

def ellipse_curvature(a, b, t):
    """kappa(t) = a b / (a^2 sin^2 t + b^2 cos^2 t)^(3/2)."""
    return a * b / ((a * np.sin(t)) ** 2 + (b * np.cos(t)) ** 2) ** 1.5


def ellipse_perimeter(a, b):
    """4 a E(e^2) via the complete elliptic integral."""
    a, b = max(a, b), min(a, b)
    return 4.0 * a * special.ellipe(1.0 - (b / a) ** 2)


def support_form(p1, p2):
    """Normal angle and signed support value of the line through p1, p2."""
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    u = p2 - p1
    nu = np.linalg.norm(u, axis=-1)
    if np.any(nu == 0.0):
        raise ValueError("coincident chord endpoints")
    u = u / nu[..., None] if u.ndim > 1 else u / nu
    n = np.stack([-u[..., 1], u[..., 0]], axis=-1)
    rho = np.sum(p1 * n, axis=-1)
    psi = np.arctan2(n[..., 1], n[..., 0])
    return psi, rho


def ellipse_conserved(a, b, p1, p2):
    """Confocal parameter of the chord through p1 and p2.

    The line {x cos psi + y sin psi = rho} is tangent to
    x^2/(a^2-l) + y^2/(b^2-l) = 1 exactly when
    (a^2-l) cos^2 psi + (b^2-l) sin^2 psi = rho^2, hence
    l = a^2 cos^2 psi + b^2 sin^2 psi - rho^2.  l < b^2 marks an ellipse
    caustic, b^2 < l < a^2 a hyperbola; l >= a^2 touches no real conic.
    """
    psi, rho = support_form(p1, p2)
    lam = (a * np.cos(psi)) ** 2 + (b * np.sin(psi)) ** 2 - rho ** 2
    if np.any(np.asarray(lam) >= a * a - 1e-15):
        raise NoRealTangency("chord tangent to no real confocal conic")
    return lam


# -- graphs ------------------------------------------------------------------

def graph_curvature(fp, fpp):
    """kappa = f'' / (1 + f'^2)^(3/2) from first and second derivatives."""
    return fpp / (1.0 + np.asarray(fp, dtype=float) ** 2) ** 1.5


def graph_lazutkin_integrand(fp, fpp):
    """kappa^(2/3) ds/dx = f''^(2/3) (1 + f'^2)^(-1/2)."""
    return np.asarray(fpp, dtype=float) ** (2.0 / 3.0) / \
        np.sqrt(1.0 + np.asarray(fp, dtype=float) ** 2)


# -- generic auditor ---------------------------------------------------------

def bruteforce_invariance(field, step, points):
    """Max |field(step(x)) - field(x)| over an iterable of phase points.

    ``field`` and ``step`` are plain callables on phase points; this
    audits certified defects from the foliation machinery within a
    factor of grid coverage.
    """
    worst = 0.0
    for x in points:
        fx = field(x)
        fsx = field(step(x))
        worst = max(worst, abs(fsx - fx))
    return worst
