"""Convex plane curves with unit-speed parametrization.

Curves are oriented so the convex side lies to the left of the tangent
(counterclockwise for closed curves); the inward normal is the tangent
rotated by +pi/2.  All evaluators accept scalars or arrays in the
arc-length parameter s.

Supported kinds: circle, ellipse (optionally sub-arcs of either), graph
y = f(x) with f'' > 0 (finite or infinite x-ranges, f given as a sympy
expression string), and sampled point lists fitted by a quintic spline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import sympy as sp
from scipy.interpolate import make_interp_spline

from .errors import DegenerateSpec, NonConvex, OutOfDomain, QuadratureFailure

SQRT8 = 2.0 * math.sqrt(2.0)
KAPPA_FLOOR = 1e-12

# nodes/weights for per-interval Gauss-Legendre accumulation of arc length
_GL_X, _GL_W = np.polynomial.legendre.leggauss(12)

# end-behavior tags
END_CLOSED = "closed"
END_POINT = "endpoint"
END_ASYMPTOTE = "asymptotic-line"
END_UNBOUNDED = "unbounded-no-asymptote"
END_UNKNOWN = "unknown"


@dataclass
class CurveSpec:
    """Declarative curve description; build with :func:`build_curve`."""

    kind: str
    radius: float = 0.0
    a_axis: float = 0.0
    b_axis: float = 0.0
    expression: str = ""
    x_range: tuple = ()
    t_window: Optional[tuple] = None      # sub-arc of circle/ellipse, in parameter angle
    points: Optional[np.ndarray] = None   # sampled kind
    closed: bool = True                   # sampled kind only
    origin: Optional[tuple] = None        # line-space origin; default centroid/auto
    end_behavior: Optional[tuple] = None  # user declaration for sampled kind
    resolution: int = 0                   # 0 = automatic

    @classmethod
    def circle(cls, radius, t_window=None, origin=None, resolution=0):
        return cls(kind="circle", radius=float(radius), t_window=t_window,
                   origin=origin, resolution=resolution)

    @classmethod
    def ellipse(cls, a_axis, b_axis, t_window=None, origin=None, resolution=0):
        return cls(kind="ellipse", a_axis=float(a_axis), b_axis=float(b_axis),
                   t_window=t_window, origin=origin, resolution=resolution)

    @classmethod
    def graph(cls, expression, x_range, origin=None, resolution=0):
        return cls(kind="graph", expression=str(expression),
                   x_range=(float(x_range[0]), float(x_range[1])),
                   origin=origin, resolution=resolution, closed=False)

    @classmethod
    def sampled(cls, points, closed=True, end_behavior=None, origin=None):
        return cls(kind="sampled", points=np.asarray(points, dtype=float),
                   closed=closed, end_behavior=end_behavior, origin=origin)


class _ArcTable:
    """Monotone s <-> t correspondence on a node ladder.

    Cumulative arc length uses 12-point Gauss-Legendre per interval, so
    s(t) is machine-accurate for analytic speeds; t(s) is recovered by
    Newton on the tabulated values.
    """

    def __init__(self, speed, nodes):
        self.speed = speed
        self.t_nodes = np.asarray(nodes, dtype=float)
        self._build()

    def _build(self):
        t0, t1 = self.t_nodes[:-1], self.t_nodes[1:]
        mid, half = 0.5 * (t0 + t1), 0.5 * (t1 - t0)
        samples = self.speed(mid[:, None] + half[:, None] * _GL_X)
        seg = (samples @ _GL_W) * half
        self.s_nodes = np.concatenate([[0.0], np.cumsum(seg)])

    def s_of_t(self, t):
        t = np.asarray(t, dtype=float)
        idx = np.clip(np.searchsorted(self.t_nodes, t) - 1, 0, len(self.t_nodes) - 2)
        a = self.t_nodes[idx]
        mid, half = 0.5 * (a + t), 0.5 * (t - a)
        samples = self.speed(mid[..., None] + half[..., None] * _GL_X)
        return self.s_nodes[idx] + (samples @ _GL_W) * half

    def t_of_s(self, s):
        s = np.asarray(s, dtype=float)
        t = np.interp(s, self.s_nodes, self.t_nodes)
        for _ in range(6):
            resid = self.s_of_t(t) - s
            t = t - resid / self.speed(t)
            t = np.clip(t, self.t_nodes[0], self.t_nodes[-1])
        return t

    @property
    def total(self):
        return self.s_nodes[-1]


class ConvexCurve:
    """Unit-speed convex curve; construct through :func:`build_curve`."""

    def __init__(self, spec, kind, closed, s_min, s_max, origin, ends):
        self.spec = spec
        self.kind = kind
        self.closed = closed
        self.s_min = s_min
        self.s_max = s_max
        self.origin = np.asarray(origin, dtype=float)
        self.end_behavior = ends  # (backward tag, forward tag)

    # subclasses implement _point_t/_tangent_t/... in their native parameter
    # and the s <-> parameter conversion

    @property
    def length(self):
        return self.s_max - self.s_min

    def wrap(self, s):
        if self.closed:
            return self.s_min + np.mod(s - self.s_min, self.length)
        return s

    def _check_domain(self, s):
        if self.closed:
            return
        s = np.asarray(s)
        if np.any(s < self.s_min - 1e-9) or np.any(s > self.s_max + 1e-9):
            raise OutOfDomain(f"arc length outside [{self.s_min}, {self.s_max}]")

    def point(self, s):
        raise NotImplementedError

    def tangent(self, s):
        raise NotImplementedError

    def curvature(self, s):
        raise NotImplementedError

    def curvature_prime(self, s):
        """d(kappa)/ds, analytic for analytic kinds."""
        raise NotImplementedError

    def inward_normal(self, s):
        t = self.tangent(s)
        return np.stack([-t[..., 1], t[..., 0]], axis=-1)

    def tangent_angle(self, s):
        """Continuous tangent azimuth alpha(s); alpha' = kappa."""
        raise NotImplementedError

    def half_width(self, s):
        """w(s) = 2*sqrt(2)/kappa(s), the twist prefactor."""
        return SQRT8 / self.curvature(s)

    def half_width_prime(self, s):
        k = self.curvature(s)
        return -SQRT8 * self.curvature_prime(s) / (k * k)

    def total_turning(self, s_lo=None, s_hi=None):
        lo = self.s_min if s_lo is None else s_lo
        hi = self.s_max if s_hi is None else s_hi
        return self.tangent_angle(hi) - self.tangent_angle(lo)

    def export_polyline(self, n=512, window=None):
        lo, hi = window if window is not None else (self.s_min, self.s_max)
        if not np.isfinite(lo) or not np.isfinite(hi):
            raise OutOfDomain("polyline export needs a finite window")
        s = np.linspace(lo, hi, n, endpoint=not (self.closed and window is None))
        return s, self.point(s)


class _CircleCurve(ConvexCurve):
    def __init__(self, spec, radius, t_window, origin):
        self.radius = radius
        t0, t1 = t_window if t_window else (0.0, 2.0 * math.pi)
        closed = t_window is None
        s_max = radius * (t1 - t0)
        self._t0 = t0
        ends = (END_CLOSED, END_CLOSED) if closed else (END_POINT, END_POINT)
        super().__init__(spec, "circle", closed, 0.0, s_max, origin, ends)

    def _t(self, s):
        self._check_domain(s)
        return self._t0 + np.asarray(s, dtype=float) / self.radius

    def point(self, s):
        t = self._t(self.wrap(s))
        return np.stack([self.radius * np.cos(t), self.radius * np.sin(t)],
                        axis=-1) - self.origin

    def tangent(self, s):
        t = self._t(self.wrap(s))
        return np.stack([-np.sin(t), np.cos(t)], axis=-1)

    def curvature(self, s):
        return np.full(np.shape(np.asarray(s)), 1.0 / self.radius) \
            if np.ndim(s) else 1.0 / self.radius

    def curvature_prime(self, s):
        return np.zeros(np.shape(np.asarray(s))) if np.ndim(s) else 0.0

    def tangent_angle(self, s):
        self._check_domain(s)
        return self._t0 + np.asarray(s, dtype=float) / self.radius + 0.5 * np.pi


class _EllipseCurve(ConvexCurve):
    def __init__(self, spec, a, b, t_window, origin, resolution):
        self.a = a
        self.b = b
        t0, t1 = t_window if t_window else (0.0, 2.0 * math.pi)
        closed = t_window is None
        n = resolution if resolution else 4096
        self._table = _ArcTable(self._speed_t, np.linspace(t0, t1, n + 1))
        ends = (END_CLOSED, END_CLOSED) if closed else (END_POINT, END_POINT)
        super().__init__(spec, "ellipse", closed, 0.0, self._table.total,
                         origin, ends)

    def _speed_t(self, t):
        return np.sqrt((self.a * np.sin(t)) ** 2 + (self.b * np.cos(t)) ** 2)

    def _t(self, s):
        self._check_domain(s)
        return self._table.t_of_s(np.asarray(self.wrap(s), dtype=float))

    def point(self, s):
        t = self._t(s)
        return np.stack([self.a * np.cos(t), self.b * np.sin(t)],
                        axis=-1) - self.origin

    def tangent(self, s):
        t = self._t(s)
        v = np.stack([-self.a * np.sin(t), self.b * np.cos(t)], axis=-1)
        return v / self._speed_t(t)[..., None]

    def curvature(self, s):
        t = self._t(s)
        return self.a * self.b / self._speed_t(t) ** 3

    def curvature_prime(self, s):
        # d kappa / ds = (d kappa / dt) / speed
        t = self._t(s)
        sp2 = self._speed_t(t) ** 2
        dsp2 = (self.a ** 2 - self.b ** 2) * np.sin(2.0 * t)
        # kappa = ab * sp2^(-3/2)  =>  dkappa/dt = -3/2 ab sp2^(-5/2) dsp2
        return -1.5 * self.a * self.b * dsp2 / sp2 ** 2.5 / np.sqrt(sp2)

    def tangent_angle(self, s):
        s_arr = np.asarray(s, dtype=float)
        sw = self.wrap(s_arr)
        t = self._t(sw)
        winding = np.round((s_arr - sw) / self.length) if self.closed else 0.0
        wrapped = np.arctan2(np.sin(t), np.cos(t))
        delta = np.arctan2(self.a * np.sin(t), self.b * np.cos(t)) - wrapped
        return 0.5 * np.pi + t + 2.0 * np.pi * winding + delta


def _numfun(sym, expr):
    """Lambdify that always returns a float array of the input's shape."""
    raw = sp.lambdify(sym, expr, "numpy")

    def fn(v):
        out = np.asarray(raw(v), dtype=float)
        shape = np.shape(v)
        if out.shape != shape:
            out = np.broadcast_to(out, shape).copy() if shape else float(out)
        return out

    return fn


class _GraphCurve(ConvexCurve):
    """Graph y = f(x) with f'' > 0, oriented by increasing x."""

    def __init__(self, spec, expression, x_range, origin, resolution):
        x = sp.Symbol("x", real=True)
        self.x_sym = x
        self.f_expr = sp.sympify(expression, locals={"x": x})
        self.fp_expr = sp.diff(self.f_expr, x)
        self.fpp_expr = sp.diff(self.f_expr, x, 2)
        self.fppp_expr = sp.diff(self.f_expr, x, 3)
        self.f = _numfun(x, self.f_expr)
        self.fp = _numfun(x, self.fp_expr)
        self.fpp = _numfun(x, self.fpp_expr)
        self.fppp = _numfun(x, self.fppp_expr)
        self.x_lo, self.x_hi = x_range

        anchor = self._pick_anchor()
        self._anchor = anchor
        self._left_closed = np.isfinite(self.x_lo) and self._finite_at(self.x_lo)
        self._right_closed = np.isfinite(self.x_hi) and self._finite_at(self.x_hi)
        n = resolution if resolution else 2048
        lo0 = self.x_lo if self._left_closed else anchor
        hi0 = self.x_hi if self._right_closed else anchor + max(1.0, abs(anchor))
        nodes = np.linspace(min(lo0, anchor), max(hi0, anchor), n + 1)
        self._table = _ArcTable(self._speed_x, nodes)
        self._s_anchor = float(self._table.s_of_t(anchor))

        s_min = 0.0 if self._left_closed else -np.inf
        s_max = self._shift(self._table.total) if self._right_closed else np.inf
        ends = (self._end_tag(backward=True), self._end_tag(backward=False))
        super().__init__(spec, "graph", False, s_min, s_max, origin, ends)

    def _finite_at(self, xv):
        try:
            vals = (float(self.f(xv)), float(self.fp(xv)))
        except (OverflowError, ZeroDivisionError, FloatingPointError):
            return False
        return all(np.isfinite(v) for v in vals)

    def _pick_anchor(self):
        cands = []
        if np.isfinite(self.x_lo) and np.isfinite(self.x_hi):
            cands.append(0.5 * (self.x_lo + self.x_hi))
        if np.isfinite(self.x_lo):
            cands += [self.x_lo, self.x_lo + 1.0]
        if np.isfinite(self.x_hi):
            cands += [self.x_hi, self.x_hi - 1.0]
        cands += [1.0, 0.0, -1.0]
        for c in cands:
            if self.x_lo < c < self.x_hi or (np.isclose(c, self.x_lo) and self._finite_at(c)):
                if self._finite_at(c):
                    return float(c)
        raise DegenerateSpec("no finite anchor point inside the x-range")

    def _speed_x(self, x):
        return np.sqrt(1.0 + np.asarray(self.fp(x), dtype=float) ** 2)

    def _shift(self, s_table):
        """Table arc length -> public arc length."""
        return s_table if self._left_closed else s_table - self._s_anchor

    def _unshift(self, s):
        return s if self._left_closed else s + self._s_anchor

    def _ensure_cover(self, s):
        """Grow the node table geometrically toward open ends as needed."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        if s.size == 0:
            return
        for _ in range(60):
            top = self._shift(self._table.total)
            if np.max(s) <= top or self._table.t_nodes[-1] >= self.x_hi:
                break
            hi = self._table.t_nodes[-1]
            new_hi = min(self.x_hi, hi + max(1.0, abs(hi)))
            extra = np.linspace(hi, new_hi, 257)[1:]
            self._table = _ArcTable(self._speed_x,
                                    np.concatenate([self._table.t_nodes, extra]))
        for _ in range(120):
            if np.min(s) >= self._shift(0.0) or self._left_closed:
                break
            lo = self._table.t_nodes[0]
            if np.isfinite(self.x_lo):
                new_lo = self.x_lo + 0.25 * (lo - self.x_lo)
                if new_lo >= lo * (1.0 - 1e-15):
                    break  # table already hugs the open endpoint
            else:
                new_lo = lo - max(1.0, abs(lo))
            extra = np.linspace(new_lo, lo, 257)[:-1]
            self._table = _ArcTable(self._speed_x,
                                    np.concatenate([extra, self._table.t_nodes]))
            self._s_anchor = float(self._table.s_of_t(self._anchor))

    def x_of_s(self, s):
        self._check_domain(s)
        self._ensure_cover(s)
        return self._table.t_of_s(self._unshift(np.asarray(s, dtype=float)))

    def s_of_x(self, x):
        x = np.asarray(x, dtype=float)
        self._ensure_cover_x(x)
        return self._shift(self._table.s_of_t(x))

    def _ensure_cover_x(self, x):
        lo, hi = np.min(x), np.max(x)
        while hi > self._table.t_nodes[-1]:
            top = self._table.t_nodes[-1]
            self._ensure_cover(self._shift(self._table.total) + 1.0)
            if self._table.t_nodes[-1] <= top:
                break  # no progress (arc length overflowed); stop growing
        while lo < self._table.t_nodes[0]:
            bot = self._table.t_nodes[0]
            self._ensure_cover(self._shift(0.0) - 1.0)
            if self._table.t_nodes[0] >= bot:
                break

    def point(self, s):
        x = self.x_of_s(s)
        return np.stack([x, np.asarray(self.f(x), dtype=float)], axis=-1) - self.origin

    def tangent(self, s):
        x = self.x_of_s(s)
        fp = np.asarray(self.fp(x), dtype=float)
        sp_ = np.sqrt(1.0 + fp * fp)
        return np.stack([1.0 / sp_, fp / sp_], axis=-1)

    def curvature(self, s):
        x = self.x_of_s(s)
        return self.curvature_x(x)

    def curvature_x(self, x):
        fp = np.asarray(self.fp(x), dtype=float)
        fpp = np.asarray(self.fpp(x), dtype=float)
        return fpp / (1.0 + fp * fp) ** 1.5

    def curvature_prime(self, s):
        x = self.x_of_s(s)
        fp = np.asarray(self.fp(x), dtype=float)
        fpp = np.asarray(self.fpp(x), dtype=float)
        fppp = np.asarray(self.fppp(x), dtype=float)
        one = 1.0 + fp * fp
        dk_dx = fppp / one ** 1.5 - 3.0 * fp * fpp * fpp / one ** 2.5
        return dk_dx / np.sqrt(one)

    def tangent_angle(self, s):
        x = self.x_of_s(s)
        return np.arctan(np.asarray(self.fp(x), dtype=float))

    def _end_tag(self, backward):
        """Classify one end: endpoint, asymptotic line, or unbounded."""
        x_end = self.x_lo if backward else self.x_hi
        if np.isfinite(x_end) and self._finite_at(x_end):
            return END_POINT
        x = self.x_sym
        target = self.x_lo if backward else self.x_hi
        lim_pt = sp.Float(target) if np.isfinite(target) else \
            (-sp.oo if backward else sp.oo)
        direction = "+" if backward else "-"
        try:
            sup = (self.f_expr - x * self.fp_expr) / sp.sqrt(1 + self.fp_expr ** 2)
            rho = sp.limit(sup, x, lim_pt, dir=direction)
            ang = sp.limit(sp.atan(self.fp_expr), x, lim_pt, dir=direction)
            if rho.is_finite and ang.is_finite:
                return END_ASYMPTOTE
            if rho.is_infinite:
                return END_UNBOUNDED
        except (NotImplementedError, sp.PoleError, RecursionError, ValueError):
            pass
        return self._end_tag_numeric(backward)

    def _end_tag_numeric(self, backward):
        x_end = self.x_lo if backward else self.x_hi
        base = self._anchor
        if np.isfinite(x_end):
            ladder = x_end + (base - x_end) * 2.0 ** -np.arange(4, 24)
        else:
            step = -1.0 if backward else 1.0
            ladder = base + step * 2.0 ** np.arange(4, 40)
        fp = np.asarray(self.fp(ladder), dtype=float)
        fv = np.asarray(self.f(ladder), dtype=float)
        rho = (fv - ladder * fp) / np.sqrt(1.0 + fp * fp)
        ang = np.arctan(fp)
        rho_conv = np.all(np.abs(np.diff(rho[-6:])) < 1e-8 * (1.0 + np.abs(rho[-1])))
        ang_conv = np.all(np.abs(np.diff(ang[-6:])) < 1e-8)
        if rho_conv and ang_conv:
            return END_ASYMPTOTE
        if np.all(np.abs(rho[-6:]) > np.abs(rho[-7:-1])) and abs(rho[-1]) > 1e3:
            return END_UNBOUNDED
        return END_UNKNOWN


class _SampledCurve(ConvexCurve):
    """Quintic-spline fit through sampled points (chord-length parameter)."""

    def __init__(self, spec, points, closed, origin, end_behavior):
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 8:
            raise DegenerateSpec("sampled kind needs >= 8 plane points")
        if closed and not np.allclose(pts[0], pts[-1]):
            pts = np.vstack([pts, pts[0]])
        chords = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        if np.any(chords <= 0):
            raise DegenerateSpec("repeated consecutive sample points")
        u = np.concatenate([[0.0], np.cumsum(chords)])
        bc = "periodic" if closed else None
        self._spl = make_interp_spline(u, pts, k=5, bc_type=bc, axis=0)
        self._d1 = self._spl.derivative(1)
        self._d2 = self._spl.derivative(2)
        self._d3 = self._spl.derivative(3)
        self._u_hi = u[-1]
        self._table = _ArcTable(self._speed_u, np.linspace(0.0, u[-1], 4 * len(pts)))
        ends = end_behavior if end_behavior else (
            (END_CLOSED, END_CLOSED) if closed else (END_UNKNOWN, END_UNKNOWN))
        super().__init__(spec, "sampled", closed, 0.0, self._table.total,
                         origin, tuple(ends))

    def _speed_u(self, u):
        d = self._d1(np.asarray(u, dtype=float))
        return np.linalg.norm(d, axis=-1)

    def _u(self, s):
        self._check_domain(s)
        return self._table.t_of_s(np.asarray(self.wrap(s), dtype=float))

    def point(self, s):
        return self._spl(self._u(s)) - self.origin

    def tangent(self, s):
        d = self._d1(self._u(s))
        return d / np.linalg.norm(d, axis=-1, keepdims=True)

    def curvature(self, s):
        u = self._u(s)
        d1, d2 = self._d1(u), self._d2(u)
        num = d1[..., 0] * d2[..., 1] - d1[..., 1] * d2[..., 0]
        return num / np.linalg.norm(d1, axis=-1) ** 3

    def curvature_prime(self, s):
        u = self._u(s)
        d1, d2, d3 = self._d1(u), self._d2(u), self._d3(u)
        sp2 = np.sum(d1 * d1, axis=-1)
        num = d1[..., 0] * d2[..., 1] - d1[..., 1] * d2[..., 0]
        dnum = d1[..., 0] * d3[..., 1] - d1[..., 1] * d3[..., 0]
        dsp2 = 2.0 * np.sum(d1 * d2, axis=-1)
        dk_du = dnum / sp2 ** 1.5 - 1.5 * num * dsp2 / sp2 ** 2.5
        return dk_du / np.sqrt(sp2)

    def tangent_angle(self, s):
        u = np.atleast_1d(self._u(s))
        dense = np.linspace(0.0, np.max(u), max(64, int(np.max(u) / self._u_hi * 512) + 2))
        d = self._d1(dense)
        ang = np.unwrap(np.arctan2(d[:, 1], d[:, 0]))
        out = np.interp(u, dense, ang)
        return out if np.ndim(s) else float(out[0])


def build_curve(spec):
    """Validate a :class:`CurveSpec` and construct the curve.

    Raises NonConvex when curvature is not strictly positive (floor 1e-12
    on the validated window) and DegenerateSpec for empty or collapsed
    parameter ranges.
    """
    if spec.kind == "circle":
        if spec.radius <= 0:
            raise DegenerateSpec("circle needs radius > 0")
        origin = spec.origin if spec.origin is not None else (0.0, 0.0)
        curve = _CircleCurve(spec, spec.radius, spec.t_window, origin)
    elif spec.kind == "ellipse":
        if spec.a_axis <= 0 or spec.b_axis <= 0:
            raise DegenerateSpec("ellipse needs positive semi-axes")
        origin = spec.origin if spec.origin is not None else (0.0, 0.0)
        curve = _EllipseCurve(spec, spec.a_axis, spec.b_axis, spec.t_window,
                              origin, spec.resolution)
    elif spec.kind == "graph":
        if not spec.expression:
            raise DegenerateSpec("graph needs an expression in x")
        if spec.x_range[0] >= spec.x_range[1]:
            raise DegenerateSpec("graph needs x_min < x_max")
        curve = _GraphCurve(spec, spec.expression, spec.x_range, (0.0, 0.0),
                            spec.resolution)
        if spec.origin is not None:
            curve.origin = np.asarray(spec.origin, dtype=float)
        else:
            xa = curve._anchor
            curve.origin = np.array([xa, float(curve.f(xa)) + 1.0])
    elif spec.kind == "sampled":
        origin = spec.origin if spec.origin is not None else \
            tuple(np.mean(np.asarray(spec.points, dtype=float), axis=0))
        curve = _SampledCurve(spec, spec.points, spec.closed, origin,
                              spec.end_behavior)
    else:
        raise DegenerateSpec(f"unknown curve kind {spec.kind!r}")

    _validate_convexity(curve)
    return curve


def _validate_convexity(curve):
    if curve.kind == "circle":
        return
    if curve.kind == "graph":
        nodes = curve._table.t_nodes
        k = curve.curvature_x(0.5 * (nodes[:-1] + nodes[1:]))
    else:
        hi = curve.s_max if np.isfinite(curve.s_max) else curve.length
        s = np.linspace(curve.s_min, hi, 2048, endpoint=not curve.closed)
        k = curve.curvature(s)
    if np.any(~np.isfinite(k)):
        raise DegenerateSpec("curvature evaluation failed on the working window")
    if np.min(k) <= KAPPA_FLOOR:
        raise NonConvex(
            f"curvature must stay above {KAPPA_FLOOR}; min sampled {np.min(k):.3e}")


def curvature_at(curve, s, order=0):
    """Curvature or its first arc-length derivative at s."""
    if order == 0:
        return curve.curvature(s)
    if order == 1:
        return curve.curvature_prime(s)
    raise OutOfDomain("orders above 1 are served by the series module's "
                      "spectral grids")


def lazutkin_density(curve, s):
    """kappa^(2/3), the integrand of the Lazutkin length."""
    return curve.curvature(s) ** (2.0 / 3.0)
