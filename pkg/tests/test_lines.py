"""Oriented-line coordinates and line/chord conversions."""

import math

import numpy as np
import pytest

from billiards.curves import CurveSpec, build_curve
from billiards.errors import MapUndefined
from billiards.lines import (ChordCoordinates, OrientedLine, chord_to_line,
                             jacobian2, line_through, line_to_chord,
                             symplectic_area_defect)

TOL = 1e-12


def test_signed_distance_convention():
    # horizontal line through (0, 1) moving right: clockwise about origin
    line = line_through(np.array([0.0, 1.0]), np.array([1.0, 0.0]))
    assert abs(line.p - 1.0) < TOL
    assert abs(line.phi_az) < TOL
    # same line through (0, -1): counterclockwise about the origin
    line2 = line_through(np.array([0.0, -1.0]), np.array([1.0, 0.0]))
    assert abs(line2.p + 1.0) < TOL


def test_foot_and_offsets():
    line = line_through(np.array([3.0, 2.0]), np.array([0.0, 1.0]))
    # vertical line x = 3 moving up has normal (-1, 0) and p = -3
    assert abs(line.p + 3.0) < TOL
    assert np.allclose(line.foot, [3.0, 0.0], atol=TOL)
    pts = np.array([[3.0, 7.0], [4.0, 0.0]])
    off = line.signed_offset(pts)
    assert abs(off[0]) < TOL and abs(off[1] + 1.0) < TOL
    along = line.along(np.array([3.0, 7.0]))
    assert abs(along - 7.0) < TOL


def test_reversal_flips_p():
    line = OrientedLine(0.73, 0.41)
    rev = line.reversed()
    assert abs(rev.p + line.p) < TOL
    assert abs(math.cos(rev.phi_az - line.phi_az) + 1.0) < TOL
    again = rev.reversed()
    assert abs(again.p - line.p) < TOL
    assert abs(math.cos(again.phi_az - line.phi_az) - 1.0) < TOL


def test_support_form_of_vertical_line():
    # x = 2 oriented upward: support angle 0 points along +x, distance 2...
    # orientation makes p negative, so the support pair is (pi, 2) up to
    # the (psi, rho) ~ (psi + pi, -rho) identification
    line = line_through(np.array([2.0, 0.0]), np.array([0.0, 1.0]))
    psi, rho = line.support_form()
    foot = np.array([rho * math.cos(psi), rho * math.sin(psi)])
    assert np.allclose(foot, [2.0, 0.0], atol=TOL)


def test_chord_roundtrip_circle():
    curve = build_curve(CurveSpec.circle(1.0))
    s1, s2 = 0.3, 2.1
    line = chord_to_line(curve, s1, s2)
    chord = line_to_chord(curve, line)
    assert abs(chord.s1 - s1) < 1e-9
    assert abs(chord.s2 - s2) < 1e-9
    # endpoints ordered along the direction of travel
    d1 = line.along(curve.point(chord.s1))
    d2 = line.along(curve.point(chord.s2))
    assert d2 > d1


def test_chord_roundtrip_ellipse_with_hints():
    curve = build_curve(CurveSpec.ellipse(2.0, 1.0))
    s1, s2 = 1.0, 5.2
    line = chord_to_line(curve, s1, s2)
    chord = line_to_chord(curve, line, hints=(s1 + 0.05, s2 - 0.05))
    assert abs(chord.s1 - s1) < 1e-9
    assert abs(chord.s2 - s2) < 1e-9


def test_chord_of_ccw_circle_is_clockwise_about_center():
    # any chord of a counterclockwise unit circle keeps the center on its
    # left, so p = -cos(phi) < 0
    curve = build_curve(CurveSpec.circle(1.0))
    line = chord_to_line(curve, 0.0, 1.0)
    phi = 0.5  # half the arc
    assert abs(line.p + math.cos(phi)) < 1e-12


def test_missing_line_raises():
    curve = build_curve(CurveSpec.circle(1.0))
    line = OrientedLine(0.0, 2.0)  # distance 2 from the origin
    with pytest.raises(MapUndefined):
        line_to_chord(curve, line)


def test_jacobian_of_linear_map():
    def m(x, y):
        return 2.0 * x + 3.0 * y, 0.5 * x - 1.0 * y

    j = jacobian2(m, np.array([0.2]), np.array([-0.4]), h=1e-5)
    assert np.allclose(j[:, :, 0], [[2.0, 3.0], [0.5, -1.0]], atol=1e-9)


def test_area_defect_of_shear_is_zero():
    def shear(x, y):
        return x + np.sin(y), y

    xs = np.linspace(-1, 1, 7)
    ys = np.linspace(-1, 1, 7)
    assert symplectic_area_defect(shear, xs, ys, h=1e-5) < 1e-10
