"""Seeded randomized verification suites shared by the CLI and the acceptance tests.

Each suite returns a plain dict: per-family worst normalised margins, the
number of trials and a ``passed`` flag.  Trial ``i`` of a suite with root
seed ``s`` draws from ``default_rng(trial_seed(s, i))``, so results do not
depend on execution order.
"""

from __future__ import annotations

import math

import numpy as np

from .measure import DEFAULT_QUAD, QuadratureSpec, RadialWeight, nu_ball, radius_for_log_volume, radius_for_volume
from .profiles import build_global_profile, constant_CJ, constant_CL, plateau_profile, solve_glued_J
from .sets import (
    ANNULUS,
    BALL,
    Sampled,
    SymmetricSet,
    centred_family,
    mu_perimeter,
    perimeter_difference_quotient,
    radial_reduction_gap,
    random_angular_factor,
    random_circle_function,
    random_radial_bump,
    verify_circle_inequality,
    verify_combined_inequality_2d,
    verify_set_inequality,
)
from .steps import (
    SampledFunction,
    decompose,
    decomposition_residuals,
    radial_system,
    random_step_function,
    trial_seed,
    verify_ijkl_inequality,
)

MARGIN_TOL = 1e-9
# log nu-volume below which random breakpoints are not placed
STEP_FLOOR_LOG_VOLUME = -600.0


def _rng(seed, i):
    return np.random.default_rng(trial_seed(seed, i))


def _normalised(rep):
    return rep["margin"] / max(1.0, abs(rep["rhs"]))


def _summary(name, margins, **extra):
    worst = min(margins) if margins else None
    out = {"suite": name, "trials": len(margins), "worst_margin": worst,
           "passed": all(m >= -MARGIN_TOL for m in margins)}
    out.update(extra)
    return out


def functional_setup(w: RadialWeight, q: QuadratureSpec = DEFAULT_QUAD):
    """The radial system and its cap: support radius R with ``nu((0,R)) = v0``, values ``<= v0``."""
    J = solve_glued_J(w, q)
    CJ = constant_CJ(J)
    R = radius_for_volume(w, J.v0, q)
    cap = J.v0  # nu((0, R)) = v0, so the cap v0 / nu((0, R)) ^ v0 is v0
    floor = radius_for_log_volume(w, STEP_FLOOR_LOG_VOLUME, q)
    return J, CJ, R, cap, floor


def run_functional_suite(w: RadialWeight, trials: int = 1000, bumps: int = 100, seed: int = 0,
                         q: QuadratureSpec = DEFAULT_QUAD) -> dict:
    """Random step functions and smooth bumps against ``C_J J(int f) <= int J(f) + V(f)``."""
    if trials == 0 and bumps == 0:
        return _summary("functional", [], steps=0, bumps=0)
    J, CJ, R, cap, floor = functional_setup(w, q)
    system = radial_system(J, CJ)
    step_m = [_normalised(verify_ijkl_inequality(random_step_function(_rng(seed, i), R, cap, floor=floor),
                                                 system, w, q)) for i in range(trials)]
    bump_m = []
    for i in range(bumps):
        rng = _rng(seed, trials + i)
        b, _ = random_radial_bump(rng, R)
        amp = rng.uniform(0.0, cap)
        f = SampledFunction(b.x, amp * b.f, amp * b.df)
        bump_m.append(_normalised(verify_ijkl_inequality(f, system, w, q)))
    out = _summary("functional", step_m + bump_m)
    out["worst_step_margin"] = min(step_m) if step_m else None
    out["worst_bump_margin"] = min(bump_m) if bump_m else None
    return out


DECOMP_TOL = {"weight_sum": 1e-12, "reconstruction": 1e-10, "mass": 1e-9, "variation": 1e-9}


def run_decomposition_suite(w: RadialWeight, trials: int = 500, seed: int = 1,
                            q: QuadratureSpec = DEFAULT_QUAD) -> dict:
    """Decomposition identities, plus convex-combination stability of the inequality."""
    J, CJ, R, cap, floor = functional_setup(w, q)
    system = radial_system(J, CJ)
    worst = {k: 0.0 for k in DECOMP_TOL}
    min_weight = math.inf
    elementary = True
    premise, stable = 0, True
    for i in range(trials):
        f = random_step_function(_rng(seed, i), R, cap, floor=floor)
        res = decompose(f, w, q)
        r = decomposition_residuals(f, res, w, q)
        for k in DECOMP_TOL:
            worst[k] = max(worst[k], r[k])
        min_weight = min(min_weight, r["min_weight"])
        elementary = elementary and r["elementary"]
        if all(verify_ijkl_inequality(g, system, w, q)["margin"] >= 0 for g in res.parts):
            premise += 1
            stable = stable and _normalised(verify_ijkl_inequality(f, system, w, q)) >= -MARGIN_TOL
    passed = all(worst[k] <= DECOMP_TOL[k] for k in DECOMP_TOL) and min_weight >= 0 and elementary and stable
    return {"suite": "decomposition", "trials": trials, "residuals": worst, "tolerances": DECOMP_TOL,
            "min_weight": min_weight, "elementary": elementary, "convex_premise_trials": premise,
            "convex_stable": stable, "passed": passed}


def combined_setup(w: RadialWeight, q: QuadratureSpec = DEFAULT_QUAD):
    J = solve_glued_J(w, q)
    CJ = constant_CJ(J)
    L = plateau_profile(w, J.c)
    CL = constant_CL(L)
    return J, CJ, L, CL


def _product_trial(rng, w, J, R_range, n_theta=256):
    R = float(np.exp(rng.uniform(*np.log(R_range))))
    g, _ = random_radial_bump(rng, R)
    h = random_angular_factor(rng, n_theta)
    cap = min(J.v0 / nu_ball(w, R), J.v0)
    amp = rng.uniform(0.0, cap)
    return Sampled(g.x, amp * g.f, amp * g.df), h, R


def run_combined_suite(w: RadialWeight, trials: int = 100, circle_trials: int = 100, seed: int = 2,
                       R_range=(0.3, 3.0), q: QuadratureSpec = DEFAULT_QUAD) -> dict:
    """Product functions on R^2, smooth functions on the circle, and the constant-angle reduction."""
    J, CJ, L, CL = combined_setup(w, q)
    prod = []
    for i in range(trials):
        g, h, R = _product_trial(_rng(seed, i), w, J, R_range)
        rep = verify_combined_inequality_2d(g, h, w, J.c, CJ, CL, J.v0, support_radius=R, q=q)
        prod.append(_normalised(rep))
    circ = [_normalised(verify_circle_inequality(random_circle_function(_rng(seed, trials + i)), L, CL))
            for i in range(circle_trials)]
    g, _, _ = _product_trial(_rng(seed, trials + circle_trials), w, J, R_range)
    gap = radial_reduction_gap(g, 1.0, w)
    out = _summary("combined", prod + circ, reduction_gap=gap)
    out["worst_product_margin"] = min(prod) if prod else None
    out["worst_circle_margin"] = min(circ) if circ else None
    out["passed"] = out["passed"] and gap <= 1e-8
    out["constants"] = {"c": J.c, "C_J": CJ, "C_L": CL, "v0": J.v0}
    return out


SPOT_SETS = (
    SymmetricSet(BALL, (1.0,)),
    SymmetricSet(BALL, (0.3,)),
    SymmetricSet(ANNULUS, (0.5, 2.0)),
    SymmetricSet(ANNULUS, (2.0, 5.0)),
    SymmetricSet("finite_union_of_annuli", (0.4, 0.8, 1.5, 3.0)),
)


def run_set_suite(w: RadialWeight, radii=None, q: QuadratureSpec = DEFAULT_QUAD) -> dict:
    """Centred balls and annuli against ``mu^+ >= tilde I(mu)``; perimeter FD spot checks."""
    if radii is None:
        radii = np.geomspace(0.01, 100.0, 100)
    prof = build_global_profile(w, q=q)
    margins, rel = [], []
    for s in centred_family(BALL, radii) + centred_family(ANNULUS, radii):
        rep = verify_set_inequality(s, prof, w, q)
        margins.append(rep["margin"])
        rel.append(rep["margin"] / max(rep["perimeter"], 1e-300))
    fd = []
    for s in SPOT_SETS:
        exact = mu_perimeter(s, w)
        fd.append(abs(perimeter_difference_quotient(s, w, 1e-6, q) - exact) / exact)
    passed = all(m >= 0 for m in margins) and max(fd) <= 1e-3
    return {"suite": "sets", "trials": len(margins), "worst_margin": min(margins),
            "worst_relative_margin": min(rel), "perimeter_fd_gap": max(fd), "C": prof.C, "tau": prof.tau,
            "passed": passed}
