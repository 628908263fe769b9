"""Command-line surface.

Subcommands: curve, orbit, series, foliate, caustics, conjugacy.  Every
command reads a config file, writes its artifacts under --out, prints a
report with one PASS/FAIL line per quantitative check, and exits with
0 on success, 2 on validation errors, 3 on numerical failures, and 4
when the conjugacy verdict is negative.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import __version__
from .billiard import BilliardMap, phi_of_y
from .caustics import caustic_from_level, fit_confocal_lambda, \
    assemble_caustic_foliation, tangency_validate
from .config import COMMANDS, load_config
from .conjugacy import (METHOD_RULE, METHOD_TAIL, METHOD_WINDOW,
                        boundary_conjugating_map, classify_conjugacy,
                        lazutkin_length)
from .curves import build_curve
from .errors import (BilliardsError, ConfigError, EscapesDomain,
                     IllConditioned, Inconclusive, NumericalError,
                     ValidationError, VerdictNegative)
from .foliation import FlatPerturbation, leaf_polyline, perturbed_family
from .normal_form import build_normal_chart
from .reporting import Report, write_report, write_svg, write_table
from .series import build_invariant_series, fit_loglog_slope, step_defect


def _boundary_points(curve, window=None, n=512):
    if curve.closed:
        s = np.linspace(0.0, curve.length, n, endpoint=False)
    else:
        if window is None:
            lo, hi = curve.s_min, curve.s_max
            if not (np.isfinite(lo) and np.isfinite(hi)):
                raise ConfigError(
                    "unbounded arc: add window_lo / window_hi to [curve]")
        else:
            lo, hi = window
        s = np.linspace(lo, hi, n)
    return s, curve.point(s)


def _new_report(cfg):
    return Report(command=cfg.command, echo=cfg.echo,
                  tolerances=cfg.tolerances)


# ---------------------------------------------------------------------------
# commands

def cmd_curve(cfg):
    curve = build_curve(cfg.spec)
    report = _new_report(cfg)
    s, pts = _boundary_points(curve, cfg.params["window"],
                              cfg.params["n_export"])
    kappa = curve.curvature(s)
    rows = [(si, xi, yi, ki)
            for si, (xi, yi), ki in zip(s, pts, kappa)]
    report.add_artifact(write_table(cfg.out_dir, "curve_points",
                                    ("s", "x", "y", "kappa"), rows, cfg.fmt))
    report.verdicts.update({
        "kind": curve.kind, "closed": bool(curve.closed),
        "length": float(curve.length) if np.isfinite(curve.length)
        else "unbounded",
        "end_behavior": list(curve.end_behavior),
        "kappa_range": [float(kappa.min()), float(kappa.max())],
    })
    if cfg.svg:
        path = os.path.join(cfg.out_dir, "curve.svg")
        report.add_artifact(write_svg(path, [
            {"points": pts, "closed": bool(curve.closed),
             "label": "boundary", "width": 1.8}]))
    return report, 0


def cmd_orbit(cfg):
    curve = build_curve(cfg.spec)
    bmap = BilliardMap(curve)
    p = cfg.params
    phi0 = p.get("phi0", None)
    if phi0 is None:
        phi0 = float(phi_of_y(p["y0"]))
    report = _new_report(cfg)
    try:
        s_hist, phi_hist = bmap.orbit(p["s0"], phi0, p["steps"])
        escaped = False
    except EscapesDomain as exc:
        s_hist, phi_hist = exc.prefix
        escaped = True
    y_hist = 2.0 * np.sin(phi_hist / 2.0) ** 2
    rows = [(k, sk, pk, yk) for k, (sk, pk, yk)
            in enumerate(zip(s_hist, phi_hist, y_hist))]
    report.add_artifact(write_table(cfg.out_dir, "orbit",
                                    ("step", "s", "phi", "y"),
                                    rows, cfg.fmt))
    report.verdicts.update({
        "escaped": bool(escaped),
        "completed_steps": int(len(s_hist) - 1),
        "y_min": float(y_hist.min()), "y_max": float(y_hist.max()),
    })
    if escaped:
        report.warnings.append(
            f"orbit left the arc after {len(s_hist) - 1} steps")
    if cfg.svg:
        s_mod = np.mod(s_hist, curve.length) if curve.closed else s_hist
        chord_pts = curve.point(s_mod)
        _, boundary = _boundary_points(
            curve, None if curve.closed else (s_hist.min(), s_hist.max()))
        path = os.path.join(cfg.out_dir, "orbit.svg")
        report.add_artifact(write_svg(path, [
            {"points": boundary, "closed": bool(curve.closed),
             "label": "boundary", "width": 1.8},
            {"points": chord_pts, "label": "chords", "width": 0.7},
        ]))
    return report, 0


def cmd_series(cfg):
    curve = build_curve(cfg.spec)
    p = cfg.params
    series = build_invariant_series(curve, p["order"], n_grid=p["n_grid"],
                                    window=p["window"], z_scale=p["z_scale"])
    report = _new_report(cfg)
    order = p["order"]
    header = (["s"] + [f"g_{k}" for k in range(1, order + 1)]
              + [f"t_{k}" for k in range(1, order + 1)]
              + [f"h_{k}" for k in range(1, order + 1)])
    rows = [tuple(row) for row in series.export_rows()]
    report.add_artifact(write_table(cfg.out_dir, "series_coefficients",
                                    header, rows, cfg.fmt))
    bmap = BilliardMap(curve)
    ys = np.asarray(p["defect_levels"], dtype=float)
    defects = step_defect(bmap, lambda s, y: series.eval_h(s, y),
                          ys, window=p["window"])
    slope, used = fit_loglog_slope(ys, defects, floor=1e-14)
    want = order + cfg.tolerances["defect_slope_margin"]
    if np.isinf(slope):
        report.add_check("defect_slope_or_floor", want + 1.0, want,
                         relation=">")
        report.verdicts["defect_at_floor"] = True
    else:
        report.add_check("defect_slope_or_floor", slope, want, relation=">")
    if curve.closed:
        t1_scale = float(np.max(np.abs(series.t_rows[0])))
        worst = 0.0
        for family, rows_k in (("t", series.t_rows), ("h", series.h_rows)):
            for k, row in enumerate(rows_k, start=1):
                scale = max(abs(float(np.mean(row))), t1_scale)
                worst = max(worst, float(np.ptp(row)) / scale)
        report.add_check("coefficient_constancy", worst,
                         cfg.tolerances["constancy_rel"])
    report.verdicts["order"] = order
    report.verdicts["defect_levels_used"] = int(used)
    for key, value in sorted(series.diagnostics.items()):
        if isinstance(value, (int, float, np.floating)):
            report.verdicts[f"diag_{key}"] = float(value)
    return report, 0


def _caustic_rows(level, caustic):
    return [(level, psi, rho, x, y) for psi, rho, (x, y)
            in zip(caustic.psi, caustic.support, caustic.points)]


def cmd_foliate(cfg):
    curve = build_curve(cfg.spec)
    p = cfg.params
    bmap = BilliardMap(curve)
    series = build_invariant_series(curve, p["order"])
    chart = build_normal_chart(curve, series)
    psi = FlatPerturbation(amplitude=p["amplitude"],
                           sharpness=p["sharpness"])
    fields = perturbed_family(chart, psi, p["eps"], p["window"])
    report = _new_report(cfg)
    rng = np.random.default_rng(cfg.seed)
    leaf_rows = []
    svg_layers = []
    for eps, fld in zip(p["eps"], fields):
        for level in p["levels"]:
            tau_h = leaf_polyline(fld, level)
            leaf_rows += [(eps, level, tau, lev) for tau, lev in tau_h]
        caustics, assembled = assemble_caustic_foliation(
            fld, curve, (min(p["levels"]), max(p["levels"])),
            chart=chart, bmap=bmap, levels=p["levels"],
            n_theta=p["n_theta"], n_rays=p["n_rays"])
        tag = f"eps={eps:g}"
        if assembled["window_shrunk"]:
            report.warnings.append(
                f"{tag}: level window auto-shrunk once to "
                f"{assembled['levels']}")
        report.add_check(f"nested_ladder[{tag}]",
                         float(assembled["nested"]), 0.5, relation=">")
        report.add_check(f"two_tangent_lines[{tag}]",
                         float(assembled["two_tangent_lines"]), 0.5,
                         relation=">")
        report.add_check(f"monotone_approach[{tag}]",
                         float(assembled["monotone_approach"]), 0.5,
                         relation=">")
        report.verdicts[f"hausdorff[{tag}]"] = [
            float(h) for h in assembled["hausdorff"]]
        if eps == p["eps"][0]:
            for level, caustic in zip(assembled["levels"], caustics):
                svg_layers.append({"points": caustic.points,
                                   "closed": bool(caustic.closed),
                                   "label": f"caustic-h={level:g}",
                                   "width": 1.0})
    report.add_artifact(write_table(cfg.out_dir, "foliation_leaves",
                                    ("eps", "level", "tau", "h"),
                                    leaf_rows, cfg.fmt))
    # pairwise distinctness at a seeded probe point near the boundary
    if len(fields) > 1:
        (t_lo, t_hi), (h_lo, h_hi) = p["window"]
        tau_star = float(rng.uniform(t_lo + 0.25 * (t_hi - t_lo),
                                     t_hi - 0.25 * (t_hi - t_lo)))
        floor = max(h_lo, 1.0 / (30.0 * p["sharpness"]))
        probe = float(np.sqrt(floor * min(4.0 * floor, h_hi)))
        worst = np.inf
        for i in range(len(fields)):
            for j in range(i + 1, len(fields)):
                diff = abs(fields[i].evaluate(tau_star, probe)
                           - fields[j].evaluate(tau_star, probe))
                worst = min(worst, float(diff))
        report.add_check("pairwise_distinctness", worst, 0.0, relation=">")
        report.verdicts["probe_point"] = [tau_star, probe]
    if cfg.svg:
        _, boundary = _boundary_points(curve)
        path = os.path.join(cfg.out_dir, "foliation.svg")
        report.add_artifact(write_svg(
            path, [{"points": boundary, "closed": bool(curve.closed),
                    "label": "boundary", "width": 1.8}] + svg_layers))
    return report, 0


def cmd_caustics(cfg):
    curve = build_curve(cfg.spec)
    p = cfg.params
    bmap = BilliardMap(curve)
    series = build_invariant_series(curve, p["order"])
    chart = build_normal_chart(curve, series)
    report = _new_report(cfg)
    rng = np.random.default_rng(cfg.seed)
    tol = cfg.tolerances
    rows = []
    layers = []
    is_full_ellipse = (cfg.spec.kind == "ellipse"
                       and cfg.spec.t_window is None)
    for level in p["levels"]:
        caustic = caustic_from_level(chart, bmap, level, n=p["n_theta"])
        rows += _caustic_rows(level, caustic)
        layers.append({"points": caustic.points,
                       "closed": bool(caustic.closed),
                       "label": f"caustic-h={level:g}", "width": 1.0})
        s_probe = np.sort(rng.uniform(0.0, curve.length, 12))
        check = tangency_validate(curve, bmap, caustic,
                                  s_start=float(s_probe[0]),
                                  s_symmetry=s_probe)
        tag = f"h={level:g}"
        report.add_check(f"support_drift[{tag}]",
                         check["support_drift"] / check["scale"],
                         tol["tangency_drift_rel"])
        report.add_check(f"tangent_symmetry[{tag}]",
                         check["symmetry_defect"], tol["symmetry_rad"])
        resid = max(caustic.residuals["on_line"],
                    caustic.residuals["tangency"])
        report.add_check(f"envelope_residual[{tag}]",
                         resid / check["scale"],
                         tol["envelope_residual_rel"])
        if is_full_ellipse:
            lam, lam_resid = fit_confocal_lambda(
                caustic.points, cfg.spec.a_axis, cfg.spec.b_axis)
            report.add_check(f"confocal_residual[{tag}]", lam_resid,
                             tol["confocal_residual"])
            report.verdicts[f"lambda[{tag}]"] = float(lam)
    report.add_artifact(write_table(cfg.out_dir, "caustics",
                                    ("level", "psi", "support", "x", "y"),
                                    rows, cfg.fmt))
    if cfg.svg:
        _, boundary = _boundary_points(curve)
        path = os.path.join(cfg.out_dir, "caustics.svg")
        report.add_artifact(write_svg(
            path, [{"points": boundary, "closed": bool(curve.closed),
                    "label": "boundary", "width": 1.8}] + layers))
    return report, 0


_RULE_TEXT = {
    METHOD_WINDOW: "finite arc end: closed-window quadrature",
    METHOD_RULE: "end-behavior rule",
    METHOD_TAIL: "tail power-law extrapolation",
}


def _end_payload(end):
    cited = _RULE_TEXT[end.method]
    if end.method == METHOD_RULE:
        if end.exponent is None:
            cited += " (asymptotic tangent line implies convergence)"
        else:
            cited += (f" (growth exponent r = {end.exponent:g}; "
                      "convergent iff r > 2)")
    elif end.method == METHOD_TAIL and end.exponent is not None:
        cited += (f" (fitted decay exponent nu = {end.exponent:.4g}; "
                  "divergent iff nu >= -1)")
    return {"verdict": end.verdict, "method": end.method,
            "cited_rule": cited,
            "value": None if end.value is None else float(end.value)}


def cmd_conjugacy(cfg):
    curve1 = build_curve(cfg.spec)
    curve2 = build_curve(cfg.spec2)
    report = _new_report(cfg)
    rep1 = lazutkin_length(curve1)
    rep2 = lazutkin_length(curve2)
    verdict = classify_conjugacy(curve1, curve2, rep1, rep2)
    for label, rep in (("curve1", rep1), ("curve2", rep2)):
        report.verdicts[label] = {
            "lazutkin_length": None if rep.value is None
            else float(rep.value),
            "summary": rep.describe(),
            "backward": _end_payload(rep.backward),
            "forward": _end_payload(rep.forward),
        }
    report.verdicts["smooth_conjugate"] = bool(verdict.smooth_conjugate)
    report.verdicts["condition"] = verdict.condition
    report.verdicts["symplectic_conjugate"] = bool(
        verdict.symplectic_conjugate)
    report.verdicts["alpha"] = verdict.alpha
    report.verdicts["beta"] = verdict.beta
    if verdict.smooth_conjugate:
        p = cfg.params
        bounded = all(
            np.isfinite(c.s_min) and np.isfinite(c.s_max) or w is not None
            for c, w in ((curve1, p["window1"]), (curve2, p["window2"])))
        if bounded:
            hmap = boundary_conjugating_map(curve1, curve2, verdict,
                                            window1=p["window1"],
                                            window2=p["window2"])
            c1 = hmap.chart1
            if curve1.closed:
                grid = np.linspace(0.0, curve1.length, p["map_samples"],
                                   endpoint=False)
            else:
                grid = np.linspace(c1.lo, c1.hi, p["map_samples"])
            image = hmap(grid)
            t_vals = hmap.lazutkin_image(grid)
            rows = [(s, h, t) for s, h, t in zip(grid, image, t_vals)]
            report.add_artifact(write_table(
                cfg.out_dir, "boundary_map", ("s", "H1", "alpha_t1_beta"),
                rows, cfg.fmt))
        else:
            report.warnings.append(
                "boundary map skipped: unbounded curve without an "
                "explicit window1/window2 in [conjugacy]")
    return report, (0 if verdict.smooth_conjugate else 4)


_HANDLERS = {"curve": cmd_curve, "orbit": cmd_orbit, "series": cmd_series,
             "foliate": cmd_foliate, "caustics": cmd_caustics,
             "conjugacy": cmd_conjugacy}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="billiards",
        description="Convex billiards near the boundary: orbits, "
                    "interpolating-Hamiltonian series, caustic foliations, "
                    "and conjugacy verdicts.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, help=f"run the {name} command")
        sp.add_argument("--config", required=True,
                        help="path to the INI config file")
        sp.add_argument("--out", default="out",
                        help="output directory (created if absent)")
        sp.add_argument("--format", choices=("csv", "json"), default="csv",
                        dest="fmt", help="tabular artifact format")
        sp.add_argument("--svg", action="store_true",
                        help="also emit SVG figures")
        sp.add_argument("--seed", type=int, default=0,
                        help="seed for sampled probe points")
        sp.add_argument("--tolerance-profile", default="default",
                        choices=("default", "strict"), dest="profile")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.command, out_dir=args.out,
                          fmt=args.fmt, svg=args.svg, seed=args.seed,
                          profile=args.profile)
        os.makedirs(cfg.out_dir, exist_ok=True)
        report, code = _HANDLERS[cfg.command](cfg)
        write_report(report, cfg.out_dir)
        print(report.render_text())
        if code == 0 and not report.all_passed:
            code = 3
        return code
    except VerdictNegative as exc:
        print(f"verdict negative: {exc}", file=sys.stderr)
        return 4
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 2
    except (Inconclusive, IllConditioned) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except (NumericalError, BilliardsError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
