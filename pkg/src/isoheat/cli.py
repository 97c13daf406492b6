"""Batch front-end: ``isoheat <command> [--config FILE] [--out-dir DIR] [flags]``.

Exit status is 0 when every asserted check passes, 2 when a check fails (or
a computation breaks down), and 1 for usage, configuration and I/O errors.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .config import DEFAULTS, ConfigError, load_config, parse_value, resolve, thread_cap
from .errors import DomainError, IsoheatError
from .measure import RadialWeight
from .output import ensure_dir, write_bound_curve, write_csv, write_json

COMMANDS = ("profile", "constants", "check-func-ineq", "check-combined", "check-sets", "bounds", "spectral",
            "heat-oracle")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="key = value file with [section] headers")
    common.add_argument("--out-dir", default="./out", help="directory for all outputs (default ./out)")
    common.add_argument("--n", type=int, help="dimension")
    common.add_argument("--alpha", type=float, help="singularity exponent")
    parser = _Parser(prog="isoheat", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    sub.required = True
    for cmd in COMMANDS:
        p = sub.add_parser(cmd, parents=[common], help=f"run {cmd}")
        for key in DEFAULTS[cmd]:
            p.add_argument("--" + key.replace("_", "-"), dest=key, type=parse_value, default=None)
    return parser


def _weight(cfg):
    return RadialWeight(cfg["problem"]["n"], cfg["problem"]["alpha"])


def _status(checks: dict) -> int:
    return 0 if all(bool(v) for v in checks.values()) else 2


def cmd_profile(cfg, out):
    from .profiles import build_global_profile, exact_profile, solve_glued_J

    w = _weight(cfg)
    c = cfg["profile"]
    J = solve_glued_J(w)
    tI = build_global_profile(w)
    v = np.geomspace(c["v_min"], c["v_max"], c["points"])
    ex = np.array([exact_profile(w, x) for x in v])
    Jv = np.asarray(J(v))
    Iv = np.asarray(tI(v))
    write_csv(os.path.join(out, "profile.csv"), ("v", "exact", "J", "tilde_I"),
              ([float(a), float(b), float(d), float(e)] for a, b, d, e in zip(v, ex, Jv, Iv)))
    checks = {"J_below_exact": bool(np.all(Jv <= ex)), "tilde_I_below_exact": bool(np.all(Iv <= ex))}
    return {"J": J.to_json(), "tilde_I": tI.to_json(), "checks": checks}, _status(checks)


def constants_report(w: RadialWeight) -> dict:
    from .profiles import build_global_profile, constant_CJ, constant_CL, plateau_profile, solve_glued_J

    J = solve_glued_J(w)
    CJ = constant_CJ(J)
    CL = constant_CL(plateau_profile(w, J.c))
    tI = build_global_profile(w)
    k = tI.constants
    return {"v0": J.v0, "c": J.c, "c_prime": J.c_prime, "c1": J.c_prime / J.c, "C_J": CJ, "C_L": CL,
            "tau": tI.tau, "C": tI.C, "R": k["R"], "C0": k["C0"], "C1": k["C1"], "C2": k["C2"],
            "C_a": k["C_a"], "C_b": k["C_b"], "C_c": k["C_c"]}


def cmd_constants(cfg, out):
    w = _weight(cfg)
    rep = constants_report(w)
    checks = {"v0_closed_form": rep["v0"] == math.exp(-w.n * w.beta), "C_positive": rep["C"] > 0}
    rep["checks"] = checks
    write_json(os.path.join(out, "constants.json"), {**rep, "config": cfg})
    return rep, _status(checks)


def cmd_func(cfg, out):
    from .suites import run_decomposition_suite, run_functional_suite

    w = _weight(cfg)
    c = cfg["check-func-ineq"]
    trials = c["trials"]
    bumps = trials // 10 if c["bumps"] is None else c["bumps"]
    dec = trials // 2 if c["decomposition_trials"] is None else c["decomposition_trials"]
    rep = {"functional": run_functional_suite(w, trials, bumps, c["seed"])}
    if dec:
        rep["decomposition"] = run_decomposition_suite(w, dec, c["seed"] + 1)
    checks = {k: v["passed"] for k, v in rep.items()}
    rep["checks"] = checks
    return rep, _status(checks)


def cmd_combined(cfg, out):
    from .suites import run_combined_suite

    c = cfg["check-combined"]
    rep = run_combined_suite(_weight(cfg), c["trials"], c["circle_trials"], c["seed"])
    checks = {"combined": rep["passed"]}
    return {"combined": rep, "checks": checks}, _status(checks)


def cmd_sets(cfg, out):
    from .suites import run_set_suite

    c = cfg["check-sets"]
    rep = run_set_suite(_weight(cfg), np.geomspace(c["r_min"], c["r_max"], c["count"]))
    checks = {"sets": rep["passed"]}
    return {"sets": rep, "checks": checks}, _status(checks)


def cmd_bounds(cfg, out):
    from .heat_bounds import FaberKrahnFunction, lower_bound_curve, upper_bound_curve
    from .profiles import build_global_profile

    w = _weight(cfg)
    c = cfg["bounds"]
    t = np.geomspace(c["t_min"], c["t_max"], c["points"])
    upper = upper_bound_curve(FaberKrahnFunction(build_global_profile(w)), t)
    lower = lower_bound_curve(w, t)
    write_bound_curve(os.path.join(out, "upper.csv"), upper)
    write_bound_curve(os.path.join(out, "lower.csv"), lower)
    checks = {"upper_non_increasing": bool(np.all(np.diff(upper.log_values) <= 0)),
              "lower_below_upper": bool(np.all(lower.log_values <= upper.log_values)),
              "c_gamma_positive": all(x > 0 for x in lower.params["c_gamma"])}
    return {"upper": upper.params, "lower": lower.params, "checks": checks}, _status(checks)


def _lambda1_task(args):
    from .spectral import lambda1_ball

    n, alpha, R, size = args
    return lambda1_ball(RadialWeight(n, alpha), R, size)


def _slope(R, lam):
    if len(R) < 2:
        return None
    return float(np.polyfit(np.log(R), np.log(lam), 1)[0])


def cmd_spectral(cfg, out):
    from .heat_bounds import F_of_r
    from .spectral import certify_kappa

    w = _weight(cfg)
    c = cfg["spectral"]
    size = c["grid_size"]
    tasks = [(w.n, w.alpha, R, size) for R in c["radii"]]
    jobs = min(thread_cap(), len(tasks))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            lam = list(ex.map(_lambda1_task, tasks))
    else:
        lam = [_lambda1_task(tk) for tk in tasks]
    write_csv(os.path.join(out, "spectral.csv"), ("R", "lambda1", "grid_size", "n", "alpha"),
              ([R, float(x), size, w.n, w.alpha] for R, x in zip(c["radii"], lam)))
    r_grid = np.geomspace(c["kappa_r_min"], c["kappa_r_max"], c["kappa_points"])
    cert = certify_kappa(w, r_grid, size, F=lambda r: F_of_r(w, r))
    R = np.array(c["radii"])
    lam = np.array(lam)
    small, large = R < 1, R >= 1
    slopes = {"small_R": _slope(R[small], lam[small]), "large_R": _slope(R[large], lam[large])}
    checks = {"lambda1_positive": bool(np.all(lam > 0)),
              "kappa_spread": cert["kappa_high"] / cert["kappa_low"] <= 50}
    return {"slopes": slopes, "kappa": cert, "checks": checks}, _status(checks)


def exponent_tolerance(alpha: float) -> float:
    return 0.05 if alpha <= 1 else 0.07


def cmd_heat_oracle(cfg, out):
    from .heat_oracle import (
        build_model,
        chapman_kolmogorov_residual,
        extract_exponent,
        extract_exponent_with_prefactor,
        sup_diagonal_curve,
    )

    w = _weight(cfg)
    c = cfg["heat-oracle"]
    m = build_model(w, r_min=c["r_min"], R_max=c["r_max"], grid_size=c["grid_size"], n_modes=c["n_modes"])
    t = np.geomspace(c["t_min"], c["t_max"], c["points"])
    curve = sup_diagonal_curve(m, t)
    write_csv(os.path.join(out, "heat_oracle.csv"), ("t", "sup_diag", "argmax_r", "n_modes", "n", "alpha"),
              ([float(x), float(v), float(a), m.n_modes, w.n, w.alpha]
               for x, v, a in zip(curve.t_values, curve.values, curve.params["argmax_r"])))
    fit = extract_exponent(curve)
    diag = extract_exponent_with_prefactor(curve)
    target = w.alpha / (w.alpha + 2)
    ck = chapman_kolmogorov_residual(m, 0.01, np.linspace(0, m.nodes.size - 1, 5).astype(int).tolist())
    checks = {"beta_star": abs(fit["beta_star"] - target) <= exponent_tolerance(w.alpha),
              "r_squared": fit["r_squared"] >= 0.99,
              "chapman_kolmogorov": max(ck) <= 1e-6}
    rep = {"beta_star": fit["beta_star"], "r_squared": fit["r_squared"], "slope": fit["slope"],
           "target_beta": target, "prefactor_fit": diag, "chapman_kolmogorov": ck,
           "argmax_r": curve.params["argmax_r"], "domain": list(m.domain), "n_modes": m.n_modes,
           "sector": "radial", "checks": checks}
    return rep, _status(checks)


HANDLERS = {
    "profile": cmd_profile,
    "constants": cmd_constants,
    "check-func-ineq": cmd_func,
    "check-combined": cmd_combined,
    "check-sets": cmd_sets,
    "bounds": cmd_bounds,
    "spectral": cmd_spectral,
    "heat-oracle": cmd_heat_oracle,
}

def _overrides(ns) -> dict:
    over = {"problem": {}}
    if ns.n is not None:
        over["problem"]["n"] = ns.n
    if ns.alpha is not None:
        over["problem"]["alpha"] = ns.alpha
    over[ns.command] = {k: getattr(ns, k) for k in DEFAULTS[ns.command] if getattr(ns, k) is not None}
    return over


def run(command: str, cfg: dict, out_dir: str) -> int:
    ensure_dir(out_dir)
    rep, status = HANDLERS[command](cfg, out_dir)
    if command != "constants":
        name = command.replace("-", "_") + ".json"
        write_json(os.path.join(out_dir, name),
                   {"command": command, "status": status, **rep, "config": cfg})
    return status


def main(argv=None) -> int:
    try:
        ns = build_parser().parse_args(argv)
        cfg = resolve(load_config(ns.config), _overrides(ns))
        thread_cap()
    except (UsageError, ConfigError) as exc:
        print(f"isoheat: {exc}", file=sys.stderr)
        return 1
    try:
        return run(ns.command, cfg, ns.out_dir)
    except (OSError, PermissionError) as exc:
        print(f"isoheat: cannot write output: {exc}", file=sys.stderr)
        return 1
    except DomainError as exc:
        print(f"isoheat: {exc}", file=sys.stderr)
        return 1
    except IsoheatError as exc:
        print(f"isoheat: computation failed: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
