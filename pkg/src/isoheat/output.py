"""Deterministic CSV and JSON writers.

Floats use Python's shortest round-trip ``repr``.  Values carried as logs
(bound curves) are written in scientific notation computed from the log, so
numbers far outside the double range still come out as ordinary decimals.
"""

from __future__ import annotations

import json
import math
import os

import numpy as np

LN10 = math.log(10.0)


def fmt_float(x) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def fmt_from_log(log_value: float, digits: int = 16) -> str:
    """``exp(log_value)`` in scientific notation, valid beyond the double range."""
    lv = float(log_value)
    if not math.isfinite(lv):
        return "0.0" if lv == -math.inf else fmt_float(lv)
    if abs(lv) < 700:
        return f"{math.exp(lv):.{digits}e}"
    e10 = lv / LN10
    E = math.floor(e10)
    m = 10.0 ** (e10 - E)
    if m >= 10.0:
        m, E = m / 10.0, E + 1
    return f"{m:.{digits}f}e{E:+03d}"


def to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else fmt_float(x)
    return obj


def dumps_json(obj) -> str:
    return json.dumps(to_jsonable(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json(path: str, obj) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps_json(obj))


def write_csv(path: str, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(c if isinstance(c, str) else fmt_float(c) if isinstance(c, float) else str(c)
                              for c in row) + "\n")


def bound_curve_rows(curve):
    n, a = curve.params.get("n"), curve.params.get("alpha")
    for t, lv in zip(curve.t_values, curve.log_values):
        yield [f"{t:.16e}", fmt_from_log(lv), curve.kind, str(n), fmt_float(a)]


BOUND_HEADER = ("t", "value", "kind", "n", "alpha")


def write_bound_curve(path: str, curve) -> None:
    write_csv(path, BOUND_HEADER, bound_curve_rows(curve))


def ensure_dir(path: str) -> None:
    os.makedirs(path, exist_ok=True)
    if not os.access(path, os.W_OK):
        raise PermissionError(f"output directory {path!r} is not writable")
