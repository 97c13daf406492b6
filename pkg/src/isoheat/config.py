"""Line-oriented ``key = value`` configuration with ``[section]`` headers.

Values are parsed as int, float, bool or comma-separated lists of those;
anything else stays a string.  ``#`` starts a comment.  The resolved
configuration is a nested dict that reports embed verbatim.
"""

from __future__ import annotations

import copy
import os
import re

from .errors import IsoheatError


class ConfigError(IsoheatError, ValueError):
    pass


DEFAULTS = {
    "problem": {"n": 2, "alpha": 1.0},
    "profile": {"v_min": 1e-18, "v_max": 1e5, "points": 200},
    "constants": {},
    "check-func-ineq": {"trials": 1000, "bumps": None, "decomposition_trials": None, "seed": 0},
    "check-combined": {"trials": 100, "circle_trials": 100, "seed": 2},
    "check-sets": {"r_min": 0.01, "r_max": 100.0, "count": 100},
    "bounds": {"t_min": 1e-6, "t_max": 1e4, "points": 31},
    "spectral": {"radii": [0.05, 0.07, 0.1, 0.14, 0.2, 8.0, 16.0, 32.0, 64.0], "grid_size": 2000,
                 "kappa_r_min": 0.05, "kappa_r_max": 50.0, "kappa_points": 20},
    "heat-oracle": {"t_min": 3e-3, "t_max": 0.3, "points": 16, "grid_size": 2000, "n_modes": None,
                    "r_min": None, "r_max": 20.0},
}

_SECTION = re.compile(r"^\[([A-Za-z0-9_\-]+)\]$")
_INT = re.compile(r"^[+-]?\d+$")


def parse_scalar(text: str):
    s = text.strip()
    low = s.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    if low in ("none", "null", ""):
        return None
    if _INT.match(s):
        return int(s)
    try:
        return float(s)
    except ValueError:
        return s


def parse_value(text: str):
    if "," in text:
        return [parse_scalar(p) for p in text.split(",") if p.strip()]
    return parse_scalar(text)


def parse_config_text(text: str) -> dict:
    out: dict = {}
    section = "problem"
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _SECTION.match(line)
        if m:
            section = m.group(1).replace("_", "-")
            out.setdefault(section, {})
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, val = line.split("=", 1)
        key = key.strip().replace("-", "_")
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        out.setdefault(section, {})[key] = parse_value(val)
    return out


def load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_config_text(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc.strerror}") from exc


def resolve(file_cfg: dict, overrides: dict) -> dict:
    """Defaults, then the file, then command-line overrides (section -> key -> value)."""
    cfg = copy.deepcopy(DEFAULTS)
    for layer in (file_cfg, overrides):
        for sec, vals in layer.items():
            if sec not in cfg:
                raise ConfigError(f"unknown config section [{sec}]")
            for k, v in vals.items():
                if k not in cfg[sec]:
                    raise ConfigError(f"unknown key {k!r} in [{sec}]")
                cfg[sec][k] = v
    validate(cfg)
    return cfg


def _positive(name, v):
    if not isinstance(v, (int, float)) or isinstance(v, bool) or not v > 0:
        raise ConfigError(f"{name} must be a positive number, got {v!r}")


def _count(name, v, minimum=0):
    if not isinstance(v, int) or isinstance(v, bool) or v < minimum:
        raise ConfigError(f"{name} must be an integer >= {minimum}, got {v!r}")


def validate(cfg: dict) -> None:
    p = cfg["problem"]
    _count("n", p["n"], 1)
    _positive("alpha", p["alpha"])
    p["alpha"] = float(p["alpha"])
    for sec in ("check-func-ineq", "check-combined"):
        seed = cfg[sec]["seed"]
        if not isinstance(seed, int) or isinstance(seed, bool) or not 0 <= seed < 2**64:
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {seed!r}")
    f = cfg["check-func-ineq"]
    _count("trials", f["trials"])
    for k in ("bumps", "decomposition_trials"):
        if f[k] is not None:
            _count(k, f[k])
    c = cfg["check-combined"]
    _count("trials", c["trials"])
    _count("circle_trials", c["circle_trials"])
    for sec, lo, hi in (("profile", "v_min", "v_max"), ("check-sets", "r_min", "r_max"),
                        ("bounds", "t_min", "t_max"), ("heat-oracle", "t_min", "t_max"),
                        ("spectral", "kappa_r_min", "kappa_r_max")):
        _positive(lo, cfg[sec][lo])
        _positive(hi, cfg[sec][hi])
        if not cfg[sec][lo] < cfg[sec][hi]:
            raise ConfigError(f"[{sec}] needs {lo} < {hi}")
    for sec, k in (("profile", "points"), ("check-sets", "count"), ("bounds", "points"),
                   ("heat-oracle", "points"), ("spectral", "kappa_points")):
        _count(k, cfg[sec][k], 1)
    radii = cfg["spectral"]["radii"]
    if not isinstance(radii, list):
        radii = cfg["spectral"]["radii"] = [radii]
    if not radii or any(not isinstance(r, (int, float)) or r <= 0 for r in radii) or radii != sorted(radii):
        raise ConfigError("spectral radii must be a non-empty sorted list of positive numbers")
    cfg["spectral"]["radii"] = [float(r) for r in radii]
    _count("grid_size", cfg["spectral"]["grid_size"], 100)
    h = cfg["heat-oracle"]
    _count("grid_size", h["grid_size"], 100)
    if h["n_modes"] is not None:
        _count("n_modes", h["n_modes"], 1)
    if h["r_min"] is not None:
        _positive("r_min", h["r_min"])
    _positive("r_max", h["r_max"])


def thread_cap() -> int:
    """``ISOHEAT_THREADS`` (0 or unset = one worker per CPU)."""
    raw = os.environ.get("ISOHEAT_THREADS", "0").strip() or "0"
    if not _INT.match(raw) or int(raw) < 0:
        raise ConfigError(f"ISOHEAT_THREADS must be a non-negative integer, got {raw!r}")
    n = int(raw)
    return n if n > 0 else (os.cpu_count() or 1)
