"""Isoperimetric profiles of the radial measure and their product constants.

Four families are built here:

* ``PureProfile``: ``I(v) = v (log 1/v)^beta`` on [0, 1].
* ``GluedProfileJ``: ``c I`` for small volumes, ``c' v^((n-1)/n)`` for large
  ones, glued C^1 at ``v0 = exp(-n beta)``.
* ``PlateauProfileL``: ``c I`` near both ends of [0, 1], constant in between.
* ``GlobalProfileTildeI``: the two-branch lower isoperimetric function of the
  n-dimensional measure, with every constant resolved.

The exact profile of the radial measure is ``phi(R(v))`` where ``R(v)`` solves
``nu((0, R)) = v``; calibration works on a radius grid and in log scale so it
never has to invert the volume map.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .errors import CalibrationError, DomainError
from .measure import (
    DEFAULT_QUAD,
    QuadratureSpec,
    RadialWeight,
    log_nu_ball,
    log_weight_at,
    radius_for_volume,
    weight_at,
)

# relative safety margin applied to grid infima that define scale constants
CALIBRATION_SAFETY = 1e-6


def _as_array(v):
    arr = np.asarray(v, dtype=float)
    return arr, arr.ndim == 0


def _out(arr, scalar):
    return float(arr) if scalar else arr


def pure_log_factor(v, beta):
    """``(log 1/v)^beta`` for 0 < v <= 1 (vectorised)."""
    return np.power(-np.log(v), beta)


@dataclass(frozen=True)
class PureProfile:
    """``I(v) = v (log 1/v)^beta`` on [0, 1], with ``I(0) = 0``."""

    beta: float

    def __post_init__(self):
        if not self.beta > 1:
            raise DomainError(f"beta must exceed 1, got {self.beta!r}")

    def _check(self, v):
        if np.any(v < 0) or np.any(v > 1):
            raise DomainError("pure profile is defined on [0, 1]")

    def __call__(self, v):
        v, scalar = _as_array(v)
        self._check(v)
        out = np.zeros_like(v)
        pos = v > 0
        out[pos] = v[pos] * pure_log_factor(v[pos], self.beta)
        return _out(out, scalar)

    def derivative(self, v):
        """``I'(v) = (log 1/v)^(beta-1) (log 1/v - beta)`` on (0, 1)."""
        v, scalar = _as_array(v)
        L = -np.log(v)
        return _out(L ** (self.beta - 1) * (L - self.beta), scalar)

    def second_derivative(self, v):
        v, scalar = _as_array(v)
        L = -np.log(v)
        b = self.beta
        return _out(-(L ** (b - 2)) * ((b - 1) * (L - b) + L) / v, scalar)

    def to_json(self):
        return {"kind": "pure", "n": None, "alpha": 1.0 / (self.beta - 1.0),
                "constants": {"beta": self.beta}}


def gluing_point(w: RadialWeight) -> float:
    """``v0 = exp(-n beta)``, where the two branches of J meet C^1."""
    return math.exp(-w.n * w.beta)


def gluing_ratio(w: RadialWeight) -> float:
    """``c'/c = v0^(1/n) (n beta)^beta``, forced by value matching at v0."""
    b = w.beta
    return math.exp(-b) * (w.n * b) ** b


@dataclass(frozen=True)
class GluedProfileJ:
    c: float
    c_prime: float
    v0: float
    n: int
    alpha: float

    def __post_init__(self):
        if not (self.c > 0 and self.c_prime > 0):
            raise DomainError("J coefficients must be positive")
        if not 0 < self.v0 < 1:
            raise DomainError("v0 must lie in (0, 1)")

    @property
    def beta(self):
        return 1.0 + 1.0 / self.alpha

    @property
    def exponent(self):
        return (self.n - 1) / self.n

    def __call__(self, v):
        v, scalar = _as_array(v)
        if np.any(v < 0):
            raise DomainError("J is defined for v >= 0")
        out = np.zeros_like(v)
        small = (v > 0) & (v <= self.v0)
        large = v > self.v0
        out[small] = self.c * v[small] * pure_log_factor(v[small], self.beta)
        out[large] = self.c_prime * v[large] ** self.exponent
        return _out(out, scalar)

    def derivative(self, v):
        v, scalar = _as_array(v)
        out = np.empty_like(v)
        small = v <= self.v0
        L = -np.log(v[small])
        out[small] = self.c * L ** (self.beta - 1) * (L - self.beta)
        out[~small] = self.c_prime * self.exponent * v[~small] ** (self.exponent - 1)
        return _out(out, scalar)

    def left_right_derivatives(self):
        """Analytic ``(J'(v0-), J'(v0+))`` from the two branch formulas."""
        L = -math.log(self.v0)
        left = self.c * L ** (self.beta - 1) * (L - self.beta)
        right = self.c_prime * self.exponent * self.v0 ** (self.exponent - 1)
        return left, right

    def left_right_values(self):
        L = -math.log(self.v0)
        return self.c * self.v0 * L**self.beta, self.c_prime * self.v0**self.exponent

    def ratio(self, v):
        """``F(v) = J(v)/v``."""
        v, scalar = _as_array(v)
        return _out(self(v) / v, scalar)

    def log_value(self, log_v):
        """``log J`` as a function of ``log v`` (usable far below float range)."""
        log_v = float(log_v)
        if log_v <= math.log(self.v0):
            return math.log(self.c) + log_v + self.beta * math.log(-log_v)
        return math.log(self.c_prime) + self.exponent * log_v

    def with_scale(self, c):
        return GluedProfileJ(c, c * self.c_prime / self.c, self.v0, self.n, self.alpha)

    def to_json(self):
        return {"kind": "J", "n": self.n, "alpha": self.alpha,
                "constants": {"c": self.c, "c_prime": self.c_prime, "v0": self.v0}}


@dataclass(frozen=True)
class PlateauProfileL:
    c: float
    beta: float
    v0: float

    def __post_init__(self):
        if not self.c > 0:
            raise DomainError("L coefficient must be positive")
        if not self.beta > 1:
            raise DomainError("beta must exceed 1")
        if not 0 < self.v0 < 0.5:
            raise DomainError("plateau start must lie in (0, 1/2)")

    def _eval(self, v, vc):
        # v and its complement 1 - v are passed separately so that values
        # next to 1 keep full relative precision
        m = np.minimum(v, vc)
        m = np.minimum(m, self.v0)
        out = np.zeros_like(m)
        pos = m > 0
        out[pos] = self.c * m[pos] * pure_log_factor(m[pos], self.beta)
        return out

    def __call__(self, v):
        v, scalar = _as_array(v)
        if np.any(v < 0) or np.any(v > 1):
            raise DomainError("L is defined on [0, 1]")
        return _out(self._eval(v, 1.0 - v), scalar)

    def value_with_complement(self, v, vc):
        v, scalar = _as_array(v)
        return _out(self._eval(v, np.asarray(vc, dtype=float)), scalar)

    def to_json(self):
        return {"kind": "L", "n": None, "alpha": 1.0 / (self.beta - 1.0),
                "constants": {"c": self.c, "beta": self.beta, "v0": self.v0}}


@dataclass(frozen=True)
class GlobalProfileTildeI:
    """``C v (log 1/v)^beta`` up to ``tau``, ``C v^((n-1)/n)`` beyond."""

    C: float
    tau: float
    n: int
    alpha: float
    constants: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not self.C > 0:
            raise DomainError("C must be positive")
        if not 0 < self.tau < 1:
            raise DomainError("tau must lie in (0, 1)")

    @property
    def beta(self):
        return 1.0 + 1.0 / self.alpha

    def __call__(self, v):
        v, scalar = _as_array(v)
        if np.any(v < 0):
            raise DomainError("tilde I is defined for v >= 0")
        out = np.zeros_like(v)
        small = (v > 0) & (v <= self.tau)
        large = v > self.tau
        out[small] = self.C * v[small] * pure_log_factor(v[small], self.beta)
        out[large] = self.C * v[large] ** ((self.n - 1) / self.n)
        return _out(out, scalar)

    def log_ratio(self, log_v):
        """``log(tilde I(v)/v)`` from ``log v``."""
        if log_v <= math.log(self.tau):
            return math.log(self.C) + self.beta * math.log(-log_v)
        return math.log(self.C) - log_v / self.n

    def jump_ratio(self):
        """``tilde I(tau-) / tilde I(tau+)``."""
        L = -math.log(self.tau)
        return self.tau ** (1.0 / self.n) * L**self.beta

    def to_json(self):
        return {"kind": "tildeI", "n": self.n, "alpha": self.alpha,
                "constants": {"C": self.C, "tau": self.tau, **self.constants}}


def exact_profile(w: RadialWeight, v: float, q: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Isoperimetric function of nu: ``phi(R)`` with ``nu((0, R)) = v``."""
    return weight_at(w, radius_for_volume(w, v, q))


def _radius_grid(w: RadialWeight, size: int = 3000, log_v_min: float = -1e4, v_max: float = 1e12):
    lo = (-log_v_min) ** (-1.0 / w.alpha)
    hi = (w.n * v_max) ** (1.0 / w.n)
    return np.geomspace(lo, hi, size)


def _log_ratio_exact_over_shape(w, shape: GluedProfileJ, R, q):
    lv = log_nu_ball(w, float(R), q)
    return log_weight_at(w, float(R)) - shape.log_value(lv)


def _shape_J(w: RadialWeight) -> GluedProfileJ:
    return GluedProfileJ(1.0, gluing_ratio(w), gluing_point(w), w.n, w.alpha)


def calibrate_profile_scale(w: RadialWeight, shape: GluedProfileJ, grid, q: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Largest ``c <= 1`` with ``c shape(v) <= exact_profile(v)`` on ``grid``."""
    grid = [float(v) for v in grid]
    if not grid:
        raise DomainError("calibration grid is empty")
    if any(v <= 0 for v in grid):
        raise DomainError("calibration volumes must be positive")
    ratios = [exact_profile(w, v, q) / float(shape(v)) for v in grid]
    return min(1.0, min(ratios))


def profile_ratio_infimum(w: RadialWeight, q: QuadratureSpec = DEFAULT_QUAD) -> dict:
    """Infimum over all v > 0 of ``exact_profile(v) / J_shape(v)`` (shape with c = 1).

    The ratio tends to ``alpha`` as v -> 0 and to ``n^((n-1)/n) / c1`` as
    v -> inf; interior minima are located on a radius grid and polished with
    a bounded scalar minimisation.
    """
    shape = _shape_J(w)
    R = _radius_grid(w)
    vals = np.array([_log_ratio_exact_over_shape(w, shape, r, q) for r in R])
    i = int(np.argmin(vals))
    lo, hi = math.log(R[max(i - 1, 0)]), math.log(R[min(i + 1, R.size - 1)])
    res = optimize.minimize_scalar(lambda x: _log_ratio_exact_over_shape(w, shape, math.exp(x), q),
                                   bounds=(lo, hi), method="bounded", options={"xatol": 1e-10})
    interior = min(float(vals[i]), float(res.fun))
    lim_small = math.log(w.alpha)
    lim_large = ((w.n - 1) / w.n) * math.log(w.n) - math.log(shape.c_prime)
    inf = min(interior, lim_small, lim_large)
    return {"infimum": math.exp(inf), "argmin_radius": math.exp(res.x),
            "limit_small": math.exp(lim_small), "limit_large": math.exp(lim_large)}


def sphere_coefficient(n: int) -> float:
    """``c_n`` with ``c_n v^((n-2)/(n-1))`` a lower isoperimetric function of
    the normalised sphere S^(n-1), for v <= 1/2.

    n = 2: the circle, where every proper arc set has normalised perimeter at
    least ``2/(2 pi)``.  n = 3: caps have profile ``sqrt(v (1-v)) >= v^(1/2)/sqrt 2``.
    """
    if n == 2:
        return 1.0 / math.pi
    if n == 3:
        return 1.0 / math.sqrt(2.0)
    raise DomainError(f"sphere profile constant only available for n in {{2, 3}}, got {n}")


def sphere_scale_bound(n: int, beta: float) -> float:
    """Largest c with ``c I(v) <= c_n v^((n-2)/(n-1))`` on (0, 1/2).

    ``I(v) / v^((n-2)/(n-1)) = v^(1/(n-1)) (log 1/v)^beta`` peaks at
    ``log 1/v = (n-1) beta`` with value ``e^-beta ((n-1) beta)^beta``.
    """
    cn = sphere_coefficient(n)
    peak = math.exp(-beta) * ((n - 1) * beta) ** beta
    return cn / peak


def solve_glued_J(w: RadialWeight, q: QuadratureSpec = DEFAULT_QUAD, include_sphere: bool = True) -> GluedProfileJ:
    """C^1-glued J with its scale calibrated against the exact profile.

    With ``include_sphere`` (and n in {2, 3}) the scale is also capped so that
    the plateau profile with the same ``c`` stays below the sphere profile;
    J and L then share one coefficient.
    """
    info = profile_ratio_infimum(w, q)
    c = min(1.0, info["infimum"]) * (1.0 - CALIBRATION_SAFETY)
    if include_sphere and w.n in (2, 3):
        c = min(c, sphere_scale_bound(w.n, w.beta))
    J = _shape_J(w).with_scale(c)
    # spot check the calibration at the located minimiser
    R = info["argmin_radius"]
    lv = log_nu_ball(w, R, q)
    if J.log_value(lv) > log_weight_at(w, R):
        raise CalibrationError("calibrated J exceeds the exact profile", violating_volume=math.exp(lv))
    return J


def plateau_profile(w: RadialWeight, c: float) -> PlateauProfileL:
    return PlateauProfileL(c, w.beta, gluing_point(w))


def constant_CJ(p: GluedProfileJ) -> float:
    """``min(2^-beta, 2 F(1) / F(v0^2))`` with ``F = J/v``."""
    F1 = float(p.ratio(1.0))
    Fv = float(p.ratio(p.v0**2))
    return min(2.0 ** (-p.beta), 2.0 * F1 / Fv)


def product_ratio(profile, a, b):
    """``(b P(a) + a P(b)) / P(ab)``, vectorised."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return (b * profile(a) + a * profile(b)) / profile(a * b)


def _L_product_ratio(p: PlateauProfileL, x, y):
    # x, y are logit coordinates: a = 1/(1+e^-x), 1-a = 1/(1+e^x)
    a, ac = 1.0 / (1.0 + np.exp(-x)), 1.0 / (1.0 + np.exp(x))
    b, bc = 1.0 / (1.0 + np.exp(-y)), 1.0 / (1.0 + np.exp(y))
    ab = a * b
    abc = ac + bc - ac * bc
    num = b * p.value_with_complement(a, ac) + a * p.value_with_complement(b, bc)
    return num / p.value_with_complement(ab, abc)


def constant_CL(p: PlateauProfileL, grid_size: int = 100, logit_span: float = 40.0,
                safety: float = 0.99) -> float:
    """Certified lower bound for ``inf (b L(a) + a L(b)) / L(ab)`` over (0, 1)^2.

    A coarse grid in logit coordinates (covering both ends of (0, 1)) is
    scanned, the three lowest cells are polished with Nelder-Mead, and the
    refined minimum is multiplied by ``safety``.
    """
    if p.v0 >= 0.5:
        raise DomainError("degenerate plateau profile (v0 >= 1/2)")
    xs = np.linspace(-logit_span, logit_span, grid_size)
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    vals = _L_product_ratio(p, X, Y)
    flat = np.argsort(vals, axis=None)[:3]
    best = float(vals.flat[flat[0]])
    h = xs[1] - xs[0]

    def f(z):
        x, y = np.clip(z, -logit_span - h, logit_span + h)
        return float(_L_product_ratio(p, np.array(x), np.array(y)))

    for k in flat:
        i, j = np.unravel_index(k, vals.shape)
        res = optimize.minimize(f, [xs[i], xs[j]], method="Nelder-Mead",
                                options={"xatol": 1e-8, "fatol": 1e-12, "initial_simplex":
                                         [[xs[i], xs[j]], [xs[i] + h, xs[j]], [xs[i], xs[j] + h]]})
        best = min(best, float(res.fun))
    return best * safety


def _case_constants(w: RadialWeight, c: float, CJ: float, CL: float, R: float, q: QuadratureSpec):
    n, b = w.n, w.beta
    e = (n - 1) / n
    tau = w.omega * math.exp(log_nu_ball(w, R, q))
    I = PureProfile(b)
    C0 = c * CJ * CL / (2.0 * (1.0 + CJ * R))
    # exterior of B_R: density >= exp(-R^-alpha) times the Euclidean constant
    C1 = math.exp(-(R ** (-w.alpha))) * n**e * w.omega ** (1.0 / n)
    vm = min(tau, gluing_point(w))
    C2 = vm ** (-1.0 / n) * (-math.log(vm)) ** (-b)
    Ca = min(C0, C1 * C2) / 6.0
    Cb = (C1 / 3.0) * 2.0 ** (-e)
    Cc = min(C0 * float(I(tau / 2)), C1 * (tau / 2) ** e) / (3.0 * (2 * tau) ** e)
    return {"R": R, "tau": tau, "C0": C0, "C1": C1, "C2": C2, "C_a": Ca, "C_b": Cb, "C_c": Cc}


def build_global_profile(w: RadialWeight, small_C: float | None = None, R: float | None = None,
                         q: QuadratureSpec = DEFAULT_QUAD) -> GlobalProfileTildeI:
    """Assemble tilde I from the small-ball constant and the exterior constant.

    Args:
        w: weight with n in {2, 3} (the sphere profile is needed for C_L).
        small_C: the calibrated common J/L scale ``c``; computed if None.
        R: small-ball radius; defaults to set_isoperimetry.find_small_ball_radius.
    """
    from .sets import find_small_ball_radius

    J = solve_glued_J(w, q)
    c = J.c if small_C is None else float(small_C)
    if not c > 0:
        raise DomainError("small_C must be positive")
    J = J.with_scale(c)
    L = plateau_profile(w, c)
    CJ, CL = constant_CJ(J), constant_CL(L)
    if R is None:
        R = find_small_ball_radius(w, (J, L), q=q, CJ=CJ, CL=CL)
    consts = _case_constants(w, c, CJ, CL, R, q)
    C = min(consts["C_a"], consts["C_b"], consts["C_c"])
    consts.update({"c": c, "C_J": CJ, "C_L": CL})
    return GlobalProfileTildeI(C, consts["tau"], w.n, w.alpha, consts)


def profile_from_json(obj: dict):
    kind = obj.get("kind")
    k = obj.get("constants", {})
    if kind == "J":
        return GluedProfileJ(k["c"], k["c_prime"], k["v0"], int(obj["n"]), float(obj["alpha"]))
    if kind == "L":
        return PlateauProfileL(k["c"], k["beta"], k["v0"])
    if kind == "tildeI":
        extra = {key: val for key, val in k.items() if key not in ("C", "tau")}
        return GlobalProfileTildeI(k["C"], k["tau"], int(obj["n"]), float(obj["alpha"]), extra)
    if kind == "pure":
        return PureProfile(k["beta"])
    raise DomainError(f"unknown profile kind {kind!r}")
