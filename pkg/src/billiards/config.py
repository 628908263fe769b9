"""Run configuration for the command line: flat INI files.

A config file holds one [curve] section describing the table (plus an
optional [curve2] for pair commands) and one section per command with
that command's parameters.  All values are plain key = value text, so
configs diff cleanly.  Validation failures raise ConfigError with the
offending key and the accepted range spelled out.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field

import numpy as np

from .curves import CurveSpec
from .errors import ConfigError

COMMANDS = ("curve", "orbit", "series", "foliate", "caustics", "conjugacy")

# documented safe ranges; everything else is rejected up front
MAX_ORBIT_STEPS = 1_000_000
MAX_EXPORT_POINTS = 100_000
LEVEL_RANGE = (0.0, 0.5)

TOLERANCE_PROFILES = {
    "default": {
        "tangency_drift_rel": 1e-5,     # chord support drift / caustic scale
        "symmetry_rad": 1e-4,           # tangent-pair asymmetry bound
        "confocal_residual": 1e-4,      # fitted-lambda residual on the ellipse
        "envelope_residual_rel": 1e-7,  # on-line + tangency residual / scale
        "defect_slope_margin": 0.7,     # required slope is order + margin
        "constancy_rel": 1e-6,          # coefficient constancy on the circle
    },
    "strict": {
        "tangency_drift_rel": 1e-6,
        "symmetry_rad": 1e-5,
        "confocal_residual": 1e-5,
        "envelope_residual_rel": 1e-8,
        "defect_slope_margin": 0.8,
        "constancy_rel": 1e-7,
    },
}


@dataclass
class RunConfig:
    command: str
    spec: CurveSpec
    spec2: CurveSpec | None
    params: dict
    out_dir: str = "out"
    fmt: str = "csv"
    svg: bool = False
    seed: int = 0
    profile: str = "default"
    echo: dict = field(default_factory=dict)

    @property
    def tolerances(self):
        return dict(TOLERANCE_PROFILES[self.profile])


def _fail(section, key, message):
    raise ConfigError(f"[{section}] {key}: {message}")


def _get_float(sec, name, key, default=None, lo=None, hi=None,
               allow_inf=False):
    raw = sec.get(key)
    if raw is None:
        if default is None:
            _fail(name, key, "required value is missing")
        return default
    try:
        value = float(raw)
    except ValueError:
        _fail(name, key, f"cannot parse {raw!r} as a number")
    if not allow_inf and not np.isfinite(value):
        _fail(name, key, "must be finite")
    if lo is not None:
        strict, bound = (lo if isinstance(lo, tuple) else (False, lo))
        if value < bound or (strict and value == bound):
            _fail(name, key, f"must be {'>' if strict else '>='} {bound}")
    if hi is not None:
        strict, bound = (hi if isinstance(hi, tuple) else (False, hi))
        if value > bound or (strict and value == bound):
            _fail(name, key, f"must be {'<' if strict else '<='} {bound}")
    return value


def _get_int(sec, name, key, default=None, lo=None, hi=None):
    raw = sec.get(key)
    if raw is None:
        if default is None:
            _fail(name, key, "required value is missing")
        return default
    try:
        value = int(raw)
    except ValueError:
        _fail(name, key, f"cannot parse {raw!r} as an integer")
    if lo is not None and value < lo:
        _fail(name, key, f"must be >= {lo}")
    if hi is not None and value > hi:
        _fail(name, key, f"must be <= {hi}")
    return value


def _get_floats(sec, name, key, default=None, n=None):
    raw = sec.get(key)
    if raw is None:
        if default is None:
            _fail(name, key, "required list is missing")
        return list(default)
    try:
        values = [float(tok) for tok in raw.replace(",", " ").split()]
    except ValueError:
        _fail(name, key, f"cannot parse {raw!r} as a list of numbers")
    if not values:
        _fail(name, key, "list is empty")
    if n is not None and len(values) != n:
        _fail(name, key, f"expected exactly {n} numbers")
    return values


def _parse_curve(cp, name):
    if name not in cp:
        raise ConfigError(
            f"missing [{name}] section; define the table there "
            "(kind = circle | ellipse | graph)")
    sec = cp[name]
    kind = sec.get("kind")
    origin = None
    if "origin_x" in sec or "origin_y" in sec:
        origin = (_get_float(sec, name, "origin_x", 0.0),
                  _get_float(sec, name, "origin_y", 0.0))
    t_window = None
    if "t_lo" in sec or "t_hi" in sec:
        t_window = (_get_float(sec, name, "t_lo"),
                    _get_float(sec, name, "t_hi"))
    if kind == "circle":
        radius = _get_float(sec, name, "radius", lo=(True, 0.0))
        return CurveSpec.circle(radius, t_window=t_window, origin=origin)
    if kind == "ellipse":
        a_axis = _get_float(sec, name, "a_axis", lo=(True, 0.0))
        b_axis = _get_float(sec, name, "b_axis", lo=(True, 0.0))
        return CurveSpec.ellipse(a_axis, b_axis, t_window=t_window,
                                 origin=origin)
    if kind == "graph":
        expression = sec.get("expression")
        if not expression:
            _fail(name, "expression", "required for kind = graph")
        x_lo = _get_float(sec, name, "x_lo", allow_inf=True, default=-np.inf)
        x_hi = _get_float(sec, name, "x_hi", allow_inf=True, default=np.inf)
        if not x_lo < x_hi:
            _fail(name, "x_hi", "x_lo < x_hi required")
        return CurveSpec.graph(expression, (x_lo, x_hi), origin=origin)
    _fail(name, "kind",
          f"unknown kind {kind!r}; use circle, ellipse, or graph")


def _parse_params(cp, command):
    sec = cp[command] if command in cp else {}
    name = command
    p = {}
    if command == "curve":
        # the curve command reads extra keys from the [curve] section
        sec = cp["curve"]
        p["n_export"] = _get_int(sec, name, "n_export", 512, 8,
                                 MAX_EXPORT_POINTS)
        if "window_lo" in sec or "window_hi" in sec:
            p["window"] = (_get_float(sec, name, "window_lo"),
                           _get_float(sec, name, "window_hi"))
        else:
            p["window"] = None
    elif command == "orbit":
        p["s0"] = _get_float(sec, name, "s0", 0.0)
        if "phi0" in sec:
            p["phi0"] = _get_float(sec, name, "phi0")
            if not 0.0 < p["phi0"] < np.pi:
                _fail(name, "phi0",
                      "launch angle must lie strictly inside (0, pi)")
        else:
            y0 = _get_float(sec, name, "y0", 0.02)
            if not 0.0 < y0 < 2.0:
                _fail(name, "y0", "must lie strictly inside (0, 2)")
            p["y0"] = y0
        p["steps"] = _get_int(sec, name, "steps", 100, 1, MAX_ORBIT_STEPS)
    elif command == "series":
        p["order"] = _get_int(sec, name, "order", 3, 1)
        p["n_grid"] = _get_int(sec, name, "n_grid", 0, 0, 4096) or None
        p["z_scale"] = _get_float(sec, name, "z_scale", 0.33,
                                  lo=(True, 0.0), hi=1.0)
        if "window_lo" in sec or "window_hi" in sec:
            p["window"] = (_get_float(sec, name, "window_lo"),
                           _get_float(sec, name, "window_hi"))
        else:
            p["window"] = None
        p["defect_levels"] = _get_floats(
            sec, name, "defect_levels", np.geomspace(1e-4, 1e-2, 9))
    elif command in ("foliate", "caustics"):
        p["levels"] = sorted(_get_floats(
            sec, name, "levels", (1e-4, 1e-3, 1e-2)))
        for level in p["levels"]:
            if not LEVEL_RANGE[0] < level <= LEVEL_RANGE[1]:
                _fail(name, "levels",
                      f"every level must lie in ({LEVEL_RANGE[0]}, "
                      f"{LEVEL_RANGE[1]}]")
        p["order"] = _get_int(sec, name, "order", 3, 1)
        p["n_theta"] = _get_int(sec, name, "n_theta", 720, 64, 4096)
        if command == "foliate":
            p["eps"] = _get_floats(sec, name, "eps", (0.0, 0.5, 1.0))
            for eps in p["eps"]:
                if not 0.0 <= eps <= 1.0:
                    _fail(name, "eps", "weights must lie in [0, 1]")
            p["amplitude"] = _get_float(sec, name, "amplitude", 1e-2,
                                        lo=(True, 0.0), hi=0.1)
            p["sharpness"] = _get_float(sec, name, "sharpness", 10.0,
                                        lo=(True, 0.0), hi=100.0)
            p["n_rays"] = _get_int(sec, name, "n_rays", 24, 4, 512)
            window = _get_floats(sec, name, "window", None, n=4)
            p["window"] = ((window[0], window[1]), (window[2], window[3]))
            if not (window[0] < window[1] and 0.0 < window[2] < window[3]):
                _fail(name, "window",
                      "expected tau_lo tau_hi h_lo h_hi with tau_lo < "
                      "tau_hi and 0 < h_lo < h_hi")
    elif command == "conjugacy":
        for key in ("window1", "window2"):
            if key in sec:
                w = _get_floats(sec, name, key, n=2)
                if not w[0] < w[1]:
                    _fail(name, key, "expected lo < hi")
                p[key] = (w[0], w[1])
            else:
                p[key] = None
        p["map_samples"] = _get_int(sec, name, "map_samples", 65, 2, 100_000)
    return p


def load_config(path, command, out_dir="out", fmt="csv", svg=False,
                seed=0, profile="default"):
    """Parse and validate a config file for the given command."""
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}")
    if fmt not in ("csv", "json"):
        raise ConfigError("format must be csv or json")
    if profile not in TOLERANCE_PROFILES:
        raise ConfigError("tolerance profile must be default or strict")
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    read = cp.read(path)
    if not read:
        raise ConfigError(f"config file {path!r} not found or unreadable")
    spec = _parse_curve(cp, "curve")
    spec2 = None
    if command == "conjugacy":
        section2 = "curve2" if "curve2" in cp else "curve"
        spec2 = _parse_curve(cp, section2)
    params = _parse_params(cp, command)
    echo = {section: dict(cp[section]) for section in cp.sections()}
    return RunConfig(command=command, spec=spec, spec2=spec2, params=params,
                     out_dir=str(out_dir), fmt=fmt, svg=bool(svg),
                     seed=int(seed), profile=profile, echo=echo)
