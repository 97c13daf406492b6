"""End-to-end acceptance criteria.

Each test prints one ``PASS``/``FAIL`` line for its criterion, then asserts it
at the stated tolerance and runtime budget.
"""

import math
import time

import numpy as np
import pytest

from isoheat.heat_bounds import FaberKrahnFunction, lower_bound_curve, upper_bound_curve
from isoheat.heat_oracle import (
    build_model,
    chapman_kolmogorov_residual,
    doubling_changes,
    extract_exponent,
    sup_diagonal_curve,
)
from isoheat.measure import RadialWeight
from isoheat.profiles import build_global_profile, constant_CJ, exact_profile, product_ratio, solve_glued_J
from isoheat.spectral import certify_kappa, lambda1_ball
from isoheat.suites import run_combined_suite, run_decomposition_suite, run_functional_suite, run_set_suite

CASES = ((2, 1.0), (3, 2.0))
SMALL_R = (0.05, 0.07, 0.1, 0.14, 0.2)
LARGE_R = (8.0, 16.0, 32.0, 64.0)
WINDOW = np.geomspace(3e-3, 0.3, 16)


def _report(capsys, k, ok, detail):
    with capsys.disabled():
        print(f"\n{'PASS' if ok else 'FAIL'} criterion {k}: {detail}")
    assert ok, detail


def _spread(x):
    x = np.asarray(x)
    return float(x.max() / x.min())


def test_criterion_1_profile_asymptotics(capsys):
    t0 = time.perf_counter()
    parts = []
    for n, a in CASES:
        w = RadialWeight(n, a)
        beta = 1 + 1 / a
        v0 = math.exp(-n * beta)
        small = np.geomspace(1e-18, v0, 60)
        large = np.geomspace(1e3, 1e5, 20)
        s = _spread([exact_profile(w, v) / (v * math.log(1 / v) ** beta) for v in small])
        g = _spread([exact_profile(w, v) / v ** ((n - 1) / n) for v in large])
        parts.append((n, a, s, g))
    dt = time.perf_counter() - t0
    ok = all(s <= 3 and g <= 3 for _, _, s, g in parts) and dt < 10
    detail = "; ".join(f"(n={n},a={a:g}) small band {s:.3f}, large band {g:.3f}" for n, a, s, g in parts)
    _report(capsys, 1, ok, f"{detail}; {dt:.1f}s")


def test_criterion_2_constants(capsys):
    t0 = time.perf_counter()
    ok, bits = True, []
    for n, a in CASES:
        w = RadialWeight(n, a)
        J = solve_glued_J(w)
        beta = 1 + 1 / a
        exact_v0 = J.v0 == math.exp(-n * beta)
        lv, rv = J.left_right_values()
        ld, rd = J.left_right_derivatives()
        glue = max(abs(lv - rv) / rv, abs(ld - rd) / rd)
        CJ = constant_CJ(J)
        formula = min(2.0 ** -beta, 2 * float(J.ratio(1.0)) / float(J.ratio(J.v0**2)))
        g = np.geomspace(1e-30, 1.0, 300)
        A, B = np.meshgrid(g, g)
        grid_min = float(np.min(product_ratio(J, A.ravel(), B.ravel())))
        ok = ok and exact_v0 and glue <= 1e-8 and grid_min >= CJ and CJ == pytest.approx(formula, rel=1e-12)
        if (n, a) == (2, 1.0):
            ok = ok and abs(CJ / (math.exp(-2) / 2) - 1) <= 1e-10
        bits.append(f"(n={n},a={a:g}) gluing {glue:.1e}, grid min {grid_min:.4f} >= C_J {CJ:.6f}")
    dt = time.perf_counter() - t0
    ok = ok and dt < 30
    _report(capsys, 2, ok, "; ".join(bits) + f"; {dt:.1f}s")


def test_criterion_3_functional_suite(capsys, w21):
    t0 = time.perf_counter()
    f = run_functional_suite(w21, 1000, 100)
    d = run_decomposition_suite(w21, 500)
    dt = time.perf_counter() - t0
    ok = f["passed"] and f["trials"] == 1100 and d["passed"] and d["trials"] == 500 and dt < 120
    _report(capsys, 3, ok, f"{f['trials']} trials, worst margin {f['worst_margin']:.3e}; decomposition "
                           f"residuals {max(d['residuals'].values()):.1e} on {d['trials']} trials; {dt:.1f}s")


def test_criterion_4_combined_suite(capsys, w21):
    t0 = time.perf_counter()
    c = run_combined_suite(w21, 100, 100)
    dt = time.perf_counter() - t0
    ok = c["passed"] and c["trials"] == 200 and c["reduction_gap"] <= 1e-8 and dt < 120
    _report(capsys, 4, ok, f"product worst {c['worst_product_margin']:.3e}, circle worst "
                           f"{c['worst_circle_margin']:.3e}, reduction gap {c['reduction_gap']:.1e}; {dt:.1f}s")


def test_criterion_5_set_isoperimetry(capsys, w21):
    t0 = time.perf_counter()
    s = run_set_suite(w21, np.geomspace(1e-2, 1e2, 100))
    dt = time.perf_counter() - t0
    ok = s["passed"] and s["trials"] >= 200 and s["worst_margin"] >= 0 and s["perimeter_fd_gap"] <= 1e-3 and dt < 60
    _report(capsys, 5, ok, f"{s['trials']} sets, worst margin {s['worst_margin']:.3e}, "
                           f"FD gap {s['perimeter_fd_gap']:.1e}; {dt:.1f}s")


def _slope(R, lam):
    return float(np.polyfit(np.log(R), np.log(lam), 1)[0])


def test_criterion_6_eigenvalue_scaling(capsys):
    t0 = time.perf_counter()
    ok, bits = True, []
    for a in (1.0, 2.0):
        w = RadialWeight(2, a)
        small = _slope(SMALL_R, [lambda1_ball(w, R) for R in SMALL_R])
        large = _slope(LARGE_R, [lambda1_ball(w, R) for R in LARGE_R])
        target = -2 * (1 + a)
        cert = certify_kappa(w, np.geomspace(0.05, 50.0, 20))
        spread = cert["kappa_high"] / cert["kappa_low"]
        good = (abs(small - target) <= 0.1 * abs(target) and abs(large + 2) <= 0.15 * 2 and spread <= 50)
        ok = ok and good
        bits.append(f"a={a:g} small slope {small:.3f} (target {target:g}), large slope {large:.3f}, "
                    f"kappa spread {spread:.2f}")
    dt = time.perf_counter() - t0
    ok = ok and dt < 180
    _report(capsys, 6, ok, "; ".join(bits) + f"; {dt:.1f}s")


def test_criterion_7_heat_exponent(capsys):
    t0 = time.perf_counter()
    ok, bits = True, []
    for a, tol in ((1.0, 0.05), (2.0, 0.07)):
        w = RadialWeight(2, a)
        oracle = sup_diagonal_curve(build_model(w), WINDOW)
        fit = extract_exponent(oracle)
        target = a / (a + 2)
        up = upper_bound_curve(FaberKrahnFunction(build_global_profile(w)), WINDOW)
        lo = lower_bound_curve(w, WINDOW)
        dominates = bool(np.all(up.log_values >= oracle.log_values) and np.all(oracle.log_values >= lo.log_values))
        good = abs(fit["beta_star"] - target) <= tol and fit["r_squared"] >= 0.99 and dominates
        ok = ok and good
        bits.append(f"a={a:g} beta* {fit['beta_star']:.4f} (target {target:.4f} +- {tol}), "
                    f"r2 {fit['r_squared']:.4f}, sandwich {'holds' if dominates else 'broken'}")
    dt = time.perf_counter() - t0
    ok = ok and dt < 300
    _report(capsys, 7, ok, "; ".join(bits) + f"; {dt:.1f}s")


def test_criterion_8_oracle_consistency(capsys, w21, oracle21):
    t0 = time.perf_counter()
    nodes = np.linspace(0, oracle21.nodes.size - 1, 5).astype(int).tolist()
    ck = max(chapman_kolmogorov_residual(oracle21, 0.01, nodes))
    ch = doubling_changes(w21, WINDOW)
    dt = time.perf_counter() - t0
    ok = ck <= 1e-6 and all(v < 0.01 for v in ch.values()) and dt < 180
    _report(capsys, 8, ok, f"CK residual {ck:.1e}; doubling grid {ch['grid']:.1e}, modes {ch['modes']:.1e}, "
                           f"domain {ch['domain']:.1e}; {dt:.1f}s")
