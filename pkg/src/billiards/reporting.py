"""Deterministic result persistence: CSV tables, JSON reports, SVG plots.

Floats are rendered with repr-faithful %.17g everywhere, dictionaries are
emitted with sorted keys, and no timestamps or environment data enter the
outputs, so identical runs produce byte-identical artifacts.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

SCHEMA = "billiards-report/1"

SVG_PALETTE = ("#1f3a93", "#c0392b", "#1e8449", "#b7950b", "#6c3483",
               "#148f77", "#a04000", "#2e4053")


def fmt(value):
    """Canonical text for one CSV cell."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    return str(value)


def write_csv(path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(fmt(cell) for cell in row))
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        return value if np.isfinite(value) else repr(value)
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    return obj


def write_json(path, payload):
    text = json.dumps(_jsonable(payload), sort_keys=True, indent=2)
    with open(path, "w", encoding="ascii") as fh:
        fh.write(text + "\n")
    return path


@dataclass
class Report:
    """Command outcome: echo, measured checks, verdicts, artifact list."""

    command: str
    echo: dict
    tolerances: dict
    checks: list = field(default_factory=list)
    verdicts: dict = field(default_factory=dict)
    artifacts: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    def add_check(self, name, value, threshold, passed=None, relation="<"):
        if passed is None:
            passed = bool(value < threshold) if relation == "<" else \
                bool(value > threshold)
        self.checks.append({"name": name, "value": float(value),
                            "threshold": float(threshold),
                            "relation": relation, "passed": bool(passed)})
        return passed

    def add_artifact(self, path):
        self.artifacts.append(str(path))
        return path

    @property
    def all_passed(self):
        return all(c["passed"] for c in self.checks)

    def to_dict(self):
        return {"schema": SCHEMA, "command": self.command,
                "echo": self.echo, "tolerances": self.tolerances,
                "checks": self.checks, "verdicts": self.verdicts,
                "artifacts": self.artifacts, "warnings": self.warnings}

    def render_text(self):
        lines = [f"command: {self.command}"]
        for warning in self.warnings:
            lines.append(f"warning: {warning}")
        for c in self.checks:
            status = "PASS" if c["passed"] else "FAIL"
            lines.append(
                f"{status} {c['name']}: {c['value']:.6g} "
                f"{c['relation']} {c['threshold']:.6g}")
        for key in sorted(self.verdicts):
            lines.append(f"{key}: {self.verdicts[key]}")
        for path in self.artifacts:
            lines.append(f"artifact: {path}")
        return "\n".join(lines)


def write_report(report, out_dir):
    path = os.path.join(out_dir, f"{report.command}_report.json")
    return report.add_artifact(write_json(path, report.to_dict()))


def write_table(out_dir, stem, header, rows, fmt_kind):
    """Write one tabular artifact as CSV or as a JSON column bundle."""
    if fmt_kind == "csv":
        path = os.path.join(out_dir, stem + ".csv")
        return write_csv(path, header, rows)
    path = os.path.join(out_dir, stem + ".json")
    columns = {name: [row[i] for row in rows]
               for i, name in enumerate(header)}
    return write_json(path, {"schema": SCHEMA, "columns": columns})


# ---------------------------------------------------------------------------
# SVG emission (static, layered, self-contained)

def _svg_transform(points_list, size, pad_frac=0.05):
    all_pts = np.concatenate([np.asarray(p, dtype=float)
                              for p in points_list if len(p)])
    lo = all_pts.min(axis=0)
    hi = all_pts.max(axis=0)
    span = np.maximum(hi - lo, 1e-12)
    pad = pad_frac * span.max()
    lo, hi = lo - pad, hi + pad
    scale = size / (hi - lo).max()

    def to_canvas(pts):
        pts = np.asarray(pts, dtype=float)
        x = (pts[:, 0] - lo[0]) * scale
        y = size - (pts[:, 1] - lo[1]) * scale   # flip: SVG y runs down
        return x, y

    return to_canvas


def write_svg(path, layers, size=720):
    """Layered polyline figure.

    layers: iterable of dicts with keys points (N x 2), and optionally
    label, closed (bool), width, dashed (bool).  Colors cycle through a
    fixed palette so identical inputs give identical bytes.
    """
    layers = [dict(layer) for layer in layers if len(layer["points"])]
    to_canvas = _svg_transform([l["points"] for l in layers], size)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" '
        f'height="{size}" viewBox="0 0 {size} {size}">',
        f'<rect width="{size}" height="{size}" fill="white"/>',
    ]
    for i, layer in enumerate(layers):
        color = SVG_PALETTE[i % len(SVG_PALETTE)]
        width = layer.get("width", 1.2)
        x, y = to_canvas(layer["points"])
        coords = " ".join(f"{xi:.2f},{yi:.2f}" for xi, yi in zip(x, y))
        tag = "polygon" if layer.get("closed") else "polyline"
        dash = ' stroke-dasharray="6 4"' if layer.get("dashed") else ""
        label = layer.get("label", f"layer{i}")
        parts.append(f'<g id="{label}">')
        parts.append(
            f'<{tag} points="{coords}" fill="none" stroke="{color}" '
            f'stroke-width="{width}"{dash}/>')
        parts.append('</g>')
    parts.append("</svg>")
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(parts) + "\n")
    return path
