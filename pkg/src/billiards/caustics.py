"""Caustics of invariant curves: polar duality, support-function
envelopes, tangency validation, and assembly of foliations by caustics.

An invariant curve of the billiard map is a one-parameter family of
chords; written in support form {x cos(psi) + y sin(psi) = rho(psi)}
about a marked origin, its envelope is
E(psi) = (rho cos psi - rho' sin psi, rho sin psi + rho' cos psi),
the caustic.  The radius of curvature of the envelope is rho'' + rho;
where it is not positive the envelope develops cusps and the caustic
window ends.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from .billiard import phi_of_y
from .errors import (CuspDetected, LeavesCross, NoRealTangency,
                     OutsideValidity, ThroughOrigin)
from .lines import OrientedLine

ENVELOPE_RESIDUAL_TOL = 1e-7
DUAL_P_FLOOR = 1e-9


# -- polar duality ---------------------------------------------------------------

@dataclass(frozen=True)
class DualChart:
    """Polar duality with respect to the unit circle at a marked origin.

    Lines not through the origin map to points and back; a point at
    distance r from the origin along direction n maps to the line
    {(x - O) . n = 1/r}.  Double duality fixes points exactly; a line
    returns to itself up to orientation (the canonical dual line has
    positive support).
    """

    origin: tuple = (0.0, 0.0)

    def line_to_point(self, line):
        psi, rho = line.support_form()
        o = np.asarray(self.origin, dtype=float)
        rho_rel = rho - (o[0] * math.cos(psi) + o[1] * math.sin(psi))
        if abs(rho_rel) <= DUAL_P_FLOOR:
            raise ThroughOrigin("line passes through the duality origin")
        return o + np.array([math.cos(psi), math.sin(psi)]) / rho_rel

    def point_to_line(self, point):
        o = np.asarray(self.origin, dtype=float)
        d = np.asarray(point, dtype=float) - o
        r = float(np.hypot(d[0], d[1]))
        if r <= DUAL_P_FLOOR:
            raise ThroughOrigin("point coincides with the duality origin")
        psi = math.atan2(d[1], d[0])
        rho_rel = 1.0 / r
        rho = rho_rel + o[0] * math.cos(psi) + o[1] * math.sin(psi)
        return OrientedLine(psi - 0.5 * math.pi, rho)


def polar_dual(obj, origin=(0.0, 0.0)):
    """Dualize a line to a point or a point to a line (unit circle at
    ``origin``)."""
    chart = DualChart(origin=tuple(origin))
    if isinstance(obj, OrientedLine):
        return chart.line_to_point(obj)
    return chart.point_to_line(obj)


# -- envelopes ------------------------------------------------------------------

@dataclass
class CausticCurve:
    """Envelope of a line family in support form about ``origin``."""

    psi: np.ndarray
    support: np.ndarray
    points: np.ndarray
    closed: bool
    origin: np.ndarray
    residuals: dict = field(default_factory=dict)
    _spline: object = None

    def support_at(self, psi):
        psi = np.asarray(psi, dtype=float)
        if self.closed:
            base = self.psi[0]
            psi = base + np.mod(psi - base, 2.0 * math.pi)
        else:
            if (np.any(psi < self.psi[0] - 1e-12)
                    or np.any(psi > self.psi[-1] + 1e-12)):
                raise OutsideValidity("azimuth outside the caustic arc")
        return self._spline(psi)

    def point_at(self, psi):
        psi = np.asarray(psi, dtype=float)
        rho = self.support_at(psi)
        base = self.psi[0]
        pw = base + np.mod(psi - base, 2.0 * math.pi) if self.closed else psi
        drho = self._spline(pw, 1)
        c, s = np.cos(psi), np.sin(psi)
        x = rho * c - drho * s + self.origin[0]
        y = rho * s + drho * c + self.origin[1]
        return np.stack([x, y], axis=-1)

    def line_at(self, psi):
        rho_rel = float(self.support_at(psi))
        o = self.origin
        rho = rho_rel + o[0] * math.cos(psi) + o[1] * math.sin(psi)
        return OrientedLine(psi - 0.5 * math.pi, rho)

    def curvature_radius_at(self, psi):
        psi = np.asarray(psi, dtype=float)
        base = self.psi[0]
        pw = base + np.mod(psi - base, 2.0 * math.pi) if self.closed else psi
        return self.support_at(psi) + self._spline(pw, 2)


def _support_data(lines, origin):
    o = np.asarray(origin, dtype=float)
    psis = np.empty(len(lines))
    rhos = np.empty(len(lines))
    for i, line in enumerate(lines):
        psi, rho = line.support_form()
        rho_rel = rho - (o[0] * math.cos(psi) + o[1] * math.sin(psi))
        if rho_rel < 0:
            # normalize the support pair so rho is measured toward the line
            psi += math.pi
            rho_rel = -rho_rel
        psis[i] = np.mod(psi, 2.0 * math.pi)
        rhos[i] = rho_rel
    order = np.argsort(psis)
    psis, rhos = psis[order], rhos[order]
    keep = np.concatenate([[True], np.diff(psis) > 1e-12])
    return psis[keep], rhos[keep]


def envelope_of_family(lines, origin=(0.0, 0.0), closed=None,
                       split_at_cusps=False):
    """Envelope of a family of oriented lines (one foliation leaf).

    The support function rho(psi) about ``origin`` is fitted by a cubic
    spline (periodic when the family covers the full circle of normals)
    and the envelope point comes from the support formula.  Segments
    where rho'' + rho <= 0 carry cusps: by default CuspDetected is
    raised; with split_at_cusps=True the longest clean segment is
    returned and the report lists the excluded fraction.
    """
    psis, rhos = _support_data(lines, origin)
    if len(psis) < 8:
        raise OutsideValidity("need at least 8 lines to envelope")
    span = psis[-1] - psis[0]
    if closed is None:
        closed = span > 1.9 * math.pi
    if closed:
        psi_grid = np.concatenate([psis, [psis[0] + 2.0 * math.pi]])
        rho_grid = np.concatenate([rhos, [rhos[0]]])
        spline = CubicSpline(psi_grid, rho_grid, bc_type="periodic")
    else:
        spline = CubicSpline(psis, rhos, bc_type="not-a-knot")

    radius = rhos + spline(psis, 2)
    good = radius > 0.0
    report = {"cusp_fraction": float(np.mean(~good))}
    if not np.all(good):
        if not split_at_cusps:
            exc = CuspDetected(
                f"envelope has {int(np.sum(~good))} cusp samples"
                f" ({100 * report['cusp_fraction']:.1f}%)")
            exc.cusp_mask = ~good
            raise exc
        # keep the longest contiguous clean run
        runs = []
        start = None
        for i, ok in enumerate(good):
            if ok and start is None:
                start = i
            if not ok and start is not None:
                runs.append((start, i))
                start = None
        if start is not None:
            runs.append((start, len(good)))
        if not runs:
            raise CuspDetected("no cusp-free segment in the family")
        a, b = max(runs, key=lambda r: r[1] - r[0])
        psis, rhos = psis[a:b], rhos[a:b]
        if len(psis) < 8:
            raise CuspDetected("cusp-free segment too short to envelope")
        closed = False
        spline = CubicSpline(psis, rhos, bc_type="not-a-knot")

    drho = spline(psis, 1)
    c, s = np.cos(psis), np.sin(psis)
    pts = np.stack([rhos * c - drho * s + origin[0],
                    rhos * s + drho * c + origin[1]], axis=-1)
    caustic = CausticCurve(psi=psis, support=rhos, points=pts,
                           closed=bool(closed),
                           origin=np.asarray(origin, dtype=float),
                           _spline=spline)
    caustic.residuals = _envelope_residuals(caustic)
    caustic.residuals.update(report)
    return caustic


def _envelope_residuals(caustic):
    """Point-on-line and tangency-direction defects of the envelope.

    Tangency is checked through an independent parametric spline of the
    envelope points: its derivative must stay parallel to the generating
    line directions.  Natural-spline ends are excluded (their derivative
    order drops); interior nodes are superconvergent.
    """
    psis = caustic.psi
    pts = caustic.points - caustic.origin
    scale = max(float(np.max(np.abs(pts))), 1e-30)
    on_line = np.abs(pts[:, 0] * np.cos(psis) + pts[:, 1] * np.sin(psis)
                     - caustic.support)
    if caustic.closed:
        psi_g = np.concatenate([psis, [psis[0] + 2.0 * math.pi]])
        pts_g = np.vstack([caustic.points, caustic.points[:1]])
        para = CubicSpline(psi_g, pts_g, bc_type="periodic", axis=0)
        probe = psis
    else:
        para = CubicSpline(psis, caustic.points, bc_type="not-a-knot", axis=0)
        probe = psis[2:-2] if len(psis) > 8 else psis
    dp = para(probe, 1)
    norm = np.hypot(dp[:, 0], dp[:, 1])
    t = np.stack([-np.sin(probe), np.cos(probe)], axis=-1)
    ok = norm > 1e-13 * scale
    cross = np.zeros(len(probe))
    cross[ok] = np.abs(dp[ok, 0] * t[ok, 1]
                       - dp[ok, 1] * t[ok, 0]) / norm[ok]
    return {"on_line": float(np.max(on_line) / scale),
            "tangency": float(np.max(cross)) if np.any(ok) else 0.0,
            "scale": scale}


# -- confocal oracle --------------------------------------------------------------

def confocal_parameter(a, b, line):
    """Caustic parameter of a chord of the ellipse x^2/a^2 + y^2/b^2 = 1
    (centered support form): lambda = a^2 cos^2 psi + b^2 sin^2 psi -
    rho^2; constant along billiard orbits, < b^2 on confocal-ellipse
    caustics."""
    psi, rho = line.support_form()
    return (a * a * math.cos(psi) ** 2 + b * b * math.sin(psi) ** 2
            - rho * rho)


def fit_confocal_lambda(points, a, b):
    """Single confocal parameter best matching plane points; returns
    (lambda, max residual of x^2/(a^2-l) + y^2/(b^2-l) - 1)."""
    pts = np.asarray(points, dtype=float)

    def resid(lam):
        return (pts[:, 0] ** 2 / (a * a - lam)
                + pts[:, 1] ** 2 / (b * b - lam) - 1.0)

    lo, hi = -a * a, b * b - 1e-12
    f = lambda lam: float(np.mean(resid(lam)))
    if f(lo) > 0 or f(hi) < 0:
        raise NoRealTangency("points do not match a confocal ellipse")
    lam = brentq(f, lo, hi, xtol=1e-14)
    return lam, float(np.max(np.abs(resid(lam))))


# -- tangency validation ----------------------------------------------------------

def _tangent_azimuths(caustic, point):
    """Normal angles psi of the caustic tangent lines through a plane
    point outside the caustic."""
    rel = np.asarray(point, dtype=float) - caustic.origin

    if caustic.closed:
        grid = np.linspace(caustic.psi[0], caustic.psi[0] + 2.0 * math.pi,
                           721)
    else:
        grid = np.linspace(caustic.psi[0], caustic.psi[-1], 721)

    def g(psi):
        return (rel[0] * np.cos(psi) + rel[1] * np.sin(psi)
                - caustic.support_at(psi))

    vals = g(grid)
    roots = []
    for i in range(len(grid) - 1):
        if vals[i] == 0.0:
            roots.append(grid[i])
        elif vals[i] * vals[i + 1] < 0:
            roots.append(brentq(g, grid[i], grid[i + 1], xtol=1e-13))
    # collapse near-duplicates (grid points hitting a root)
    out = []
    for r in roots:
        if not out or abs(r - out[-1]) > 1e-9:
            out.append(r)
    if caustic.closed and len(out) >= 2:
        if abs((out[0] + 2.0 * math.pi) - out[-1]) < 1e-9:
            out = out[:-1]
    return out


def reflection_symmetry_defect(curve, caustic, s_values):
    """Max over boundary samples of the reflection-asymmetry angle of
    the two caustic tangent lines through the boundary point.

    For a true caustic the two tangent directions are mirror images in
    the curve's tangent, so their angles to it sum to pi.
    """
    worst = 0.0
    for s in np.atleast_1d(s_values):
        x = curve.point(s)
        azs = _tangent_azimuths(caustic, x)
        if len(azs) != 2:
            raise NoRealTangency(
                f"{len(azs)} tangent lines through boundary point s={s:g}")
        t_angle = float(curve.tangent_angle(s))
        thetas = []
        for psi in azs:
            # direction of the tangent line: psi + pi/2 (mod pi)
            theta = (psi + 0.5 * math.pi - t_angle) % math.pi
            thetas.append(theta)
        worst = max(worst, abs(thetas[0] + thetas[1] - math.pi))
    return worst


def tangency_validate(curve, bmap, caustic, n_steps=1000, s_start=0.1,
                      n_symmetry=16, s_symmetry=None, tol=None):
    """Launch a chord tangent to the caustic and iterate the billiard.

    Reports the largest support drift (distance between orbit chords
    and the caustic's parallel tangent line) and the largest
    reflection-symmetry defect over boundary samples; PASS when both
    are below tolerance (support drift per unit scale).  For caustic
    arcs pass ``s_symmetry``: boundary points whose tangency azimuths
    stay inside the arc.
    """
    scale = float(np.mean(np.abs(caustic.support))) + float(
        np.hypot(*caustic.origin))
    tol = 1e-5 * scale if tol is None else tol
    x = curve.point(s_start)
    azs = _tangent_azimuths(caustic, x)
    if not azs:
        raise NoRealTangency("no caustic tangent line from the start point")
    t_angle = float(curve.tangent_angle(s_start))
    # choose the tangent line pointing forward along the curve
    phi0 = None
    for psi in azs:
        cand = (psi + 0.5 * math.pi - t_angle) % math.pi
        if phi0 is None or cand < phi0:
            phi0 = cand
    s_hist, phi_hist = bmap.orbit(s_start, phi0, n_steps)
    drift = 0.0
    for s, phi in zip(s_hist[:-1], phi_hist[:-1]):
        line = bmap.chord_line(s, phi)
        psi, rho = line.support_form()
        o = caustic.origin
        rho_rel = rho - (o[0] * math.cos(psi) + o[1] * math.sin(psi))
        if rho_rel < 0:
            psi, rho_rel = psi + math.pi, -rho_rel
        try:
            drift = max(drift, abs(rho_rel - float(
                caustic.support_at(np.mod(psi, 2.0 * math.pi)
                                   if caustic.closed else psi))))
        except OutsideValidity:
            continue
    if s_symmetry is not None:
        s_samples = np.atleast_1d(np.asarray(s_symmetry, dtype=float))
    elif curve.closed:
        s_samples = np.linspace(0.0, curve.length, n_symmetry,
                                endpoint=False)
    else:
        s_samples = np.linspace(s_hist.min(), s_hist.max(), n_symmetry)
    try:
        symmetry = reflection_symmetry_defect(curve, caustic, s_samples)
    except NoRealTangency:
        symmetry = math.inf
    return {"support_drift": drift,
            "symmetry_defect": symmetry,
            "scale": scale, "tol": tol,
            "pass": bool(drift < tol and symmetry < 1e-4)}


# -- assembly ---------------------------------------------------------------------

def caustic_from_level(chart, bmap, h_level, n=360, origin=None):
    """Caustic of a base-foliation level h = const of a closed curve:
    the full chord family along the level curve, enveloped."""
    curve = chart.curve
    if not curve.closed:
        raise OutsideValidity("full-level caustics need a closed curve")
    flow = chart._flow(float(h_level))
    s_grid = np.linspace(0.0, curve.length, n, endpoint=False)
    lines = []
    for s in s_grid:
        y = float(flow.y_on_level(s))
        lines.append(bmap.chord_line(float(s), float(phi_of_y(y))))
    if origin is None:
        feet = np.array([ln.foot for ln in lines])
        origin = np.mean(feet, axis=0)
    return envelope_of_family(lines, origin=origin, closed=True)


def _leaf_lines(fld, chart, bmap, value, n):
    from .foliation import leaf_polyline
    rows = leaf_polyline(fld, value, n=n)
    lines = []
    for tau, level in rows:
        h = level if fld.kind == "h" else level * level
        s, y = chart.from_chart(float(tau), float(h))
        if chart.curve.closed:
            s = float(np.mod(s, chart.curve.length))
        lines.append(bmap.chord_line(s, float(phi_of_y(y))))
    return lines


def assemble_caustic_foliation(fld, curve, window, chart=None, bmap=None,
                               levels=None, n_theta=240, n_rays=24,
                               origin=None):
    """Caustics of a ladder of foliation leaves, with nesting and
    coverage checks.

    window = (level_lo, level_hi) selects the leaf values (in the
    field's own level variable).  Checks per report: strict nesting
    along inward normal rays, monotone approach to the curve as the
    level decreases, and the two-tangent-line property at boundary
    samples.  On a nesting failure the top half of the ladder is
    dropped once before LeavesCross is raised.
    """
    if chart is None or bmap is None:
        raise OutsideValidity(
            "assembly needs the normal chart and billiard map")
    lo, hi = window
    if levels is None:
        levels = np.geomspace(lo, hi, 5)
    levels = np.sort(np.asarray(levels, dtype=float))

    def build(levels):
        caustics = []
        for v in levels:
            lines = _leaf_lines(fld, chart, bmap, float(v), n_theta)
            if origin is None:
                feet = np.array([ln.foot for ln in lines])
                o = np.mean(feet, axis=0)
            else:
                o = origin
            caustics.append(envelope_of_family(lines, origin=o,
                                               split_at_cusps=True))
        return caustics

    def dense_points(c, n_dense=4096):
        if c.closed:
            grid = np.linspace(c.psi[0], c.psi[0] + 2.0 * math.pi, n_dense)
        else:
            grid = np.linspace(c.psi[0], c.psi[-1], n_dense)
        return grid, c.point_at(grid)

    def ray_param(x, n_in, grid, pts):
        """First near-side crossing parameter of the ray x + t*n_in with
        a dense caustic polyline (linear interpolation within segments).
        Far-side hits, where the ray runs along the caustic normal, are
        ignored; they reverse the nesting order for caustic arcs.
        """
        rel = pts - x
        along = rel @ n_in
        across = rel[:, 0] * n_in[1] - rel[:, 1] * n_in[0]
        facing = n_in[0] * np.cos(grid) + n_in[1] * np.sin(grid) < 0.0
        best = math.inf
        sign = np.sign(across)
        hits = np.nonzero((sign[:-1] * sign[1:] < 0)
                          & facing[:-1] & facing[1:])[0]
        for k in hits:
            f = across[k] / (across[k] - across[k + 1])
            t = along[k] + f * (along[k + 1] - along[k])
            if 0.0 < t < best:
                best = t
        return best if math.isfinite(best) else math.nan

    def nesting(caustics):
        """Distance along inward rays must increase with the level."""
        if curve.closed:
            s_probe = np.linspace(0.0, curve.length, n_rays, endpoint=False)
        else:
            lo_s, hi_s = curve.s_min, curve.s_max
            s_probe = lo_s + np.linspace(0.15, 0.85, n_rays) * (hi_s - lo_s)
        dense = [dense_points(c) for c in caustics]
        gaps = np.empty((len(caustics), len(s_probe)))
        gaps.fill(np.nan)
        for j, s in enumerate(s_probe):
            x = curve.point(s)
            tx, ty = curve.tangent(s)
            n_in = np.array([-ty, tx])  # convex side
            for i, (grid, pts) in enumerate(dense):
                gaps[i, j] = ray_param(x, n_in, grid, pts)
        ok = True
        for j in range(gaps.shape[1]):
            col = gaps[:, j]
            col = col[~np.isnan(col)]
            if len(col) >= 2 and np.any(np.diff(col) <= 0):
                ok = False
        return ok, gaps

    caustics = build(levels)
    ok, gaps = nesting(caustics)
    shrunk = False
    if not ok:
        shrunk = True
        levels = levels[: max(2, len(levels) // 2)]
        caustics = build(levels)
        ok, gaps = nesting(caustics)
        if not ok:
            raise LeavesCross("caustic leaves cross inside the window")
    hausdorff = [float(np.nanmax(g)) if np.any(~np.isnan(g)) else math.nan
                 for g in gaps]
    monotone = all(hausdorff[i] < hausdorff[i + 1]
                   for i in range(len(hausdorff) - 1)
                   if not (math.isnan(hausdorff[i])
                           or math.isnan(hausdorff[i + 1])))
    # two-tangent-lines property at boundary samples
    tangent_ok = True
    if curve.closed:
        s_probe = np.linspace(0.0, curve.length, 8, endpoint=False)
        for c in caustics:
            for s in s_probe:
                if len(_tangent_azimuths(c, curve.point(s))) > 2:
                    tangent_ok = False
    report = {"levels": [float(v) for v in levels],
              "nested": bool(ok),
              "normal_gaps": gaps,
              "hausdorff": hausdorff,
              "monotone_approach": bool(monotone),
              "two_tangent_lines": bool(tangent_ok),
              "window_shrunk": shrunk}
    return caustics, report
