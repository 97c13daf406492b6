"""Faber-Krahn and anti-Faber-Krahn functions and the heat-kernel bounds they give.

Upper bound: ``sup p_t <= 4 / V(t/2)`` with ``t = int_0^V dv / (v Lambda(v))``
and ``Lambda = (tilde I(v) / v)^2 / 4``.

Lower bound: ``sup_x p_t(x, x) >= 1 / gamma(2 t / c_gamma)`` where gamma solves
the same implicit equation for the ball function ``Lambda_hat(v) = kappa / F(r)``
(``mu(B_r) = v``), kappa is the certified spread of ``lambda_1(B_r) F(r)``, and
``c_gamma`` is the doubling constant of ``gamma'/gamma``.

The profile constants are tiny, so V and gamma are far below the float range
already at moderate t.  Everything is carried as ``log V``, ``log gamma`` and
``log p``; curves store log-values.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import interpolate, optimize

from .errors import ConvergenceError, DomainError, NumericalConsistencyError, UnderflowError
from .measure import (
    DEFAULT_QUAD,
    QuadratureSpec,
    RadialWeight,
    _quad,
    log_nu_ball,
    log_weight_at,
    weight_at,
)
from .profiles import GlobalProfileTildeI


def solve_monotone(log_T, log_t: float, x0: float, what: str = "implicit equation") -> float:
    """Solve ``log_T(x) = log_t`` for an increasing ``log_T``.

    The bracket grows geometrically from ``x0`` in both directions; the root
    is polished by Brent's method to full double precision.
    """
    def g(x):
        return log_T(x) - log_t

    lo = hi = x0
    step = max(1.0, abs(x0)) * 0.25
    for _ in range(2000):
        if g(lo) <= 0:
            break
        lo -= step
        step *= 2
    else:
        raise UnderflowError(f"{what}: no lower bracket")
    step = max(1.0, abs(x0)) * 0.25
    for _ in range(2000):
        if g(hi) >= 0:
            break
        hi += step
        step *= 2
    else:
        raise ConvergenceError(f"{what}: no upper bracket", estimate=hi)
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise UnderflowError(f"{what}: bracket left the float range")
    if g(lo) == 0:
        return lo
    if g(hi) == 0:
        return hi
    x, res = optimize.brentq(g, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=400,
                             full_output=True)
    if not res.converged:
        raise ConvergenceError(f"{what}: Brent iteration did not converge", estimate=x)
    return x


@dataclass(frozen=True)
class FaberKrahnFunction:
    """``Lambda(v) = (F(v))^2 / 4`` with F a strictly decreasing minorant of ``tilde I(v)/v``.

    ``tilde I(v)/v`` is decreasing on each branch but jumps up at tau (the
    large-volume branch starts higher).  Past tau the small-branch value
    ``C (log 1/tau)^beta`` is continued with a slight decay ``(tau/v)^slope``
    until ``C v^(-1/n)`` drops below it at ``v1``.  A smaller Lambda is
    still a valid Faber-Krahn function, and this one stays within a factor
    ``(v/tau)^(2 slope)`` of the largest decreasing minorant.
    """

    tildeI: GlobalProfileTildeI
    slope: float = 1e-3

    def __post_init__(self):
        if not 0 < self.slope < 1.0 / self.tildeI.n:
            raise DomainError("plateau slope must lie in (0, 1/n)")

    @property
    def tau(self):
        return self.tildeI.tau

    @property
    def _A(self):
        return 0.25 * self.tildeI.C**2

    @property
    def _p(self):
        # exponent of (log 1/v) in T: 2 beta - 1 = 1 + 2/alpha
        return 2.0 * self.tildeI.beta - 1.0

    @property
    def log_v1(self):
        n, b, d = self.tildeI.n, self.tildeI.beta, self.slope
        lt = math.log(self.tau)
        return (-b * math.log(-lt) - d * lt) / (1.0 / n - d)

    def log_ratio(self, log_v: float) -> float:
        """log of the minorant of ``tilde I(v)/v``."""
        P = self.tildeI
        lt = math.log(self.tau)
        if log_v <= lt:
            return math.log(P.C) + P.beta * math.log(-log_v)
        if log_v <= self.log_v1:
            return math.log(P.C) + P.beta * math.log(-lt) - self.slope * (log_v - lt)
        return math.log(P.C) - log_v / P.n

    def log_Lambda(self, log_v: float) -> float:
        return 2.0 * self.log_ratio(log_v) - math.log(4.0)

    def __call__(self, v):
        v = np.asarray(v, dtype=float)
        out = np.array([math.exp(self.log_Lambda(math.log(x))) for x in v.ravel()]).reshape(v.shape)
        return float(out) if out.ndim == 0 else out

    def raw_Lambda(self, v):
        """The unmodified ``(tilde I(v)/v)^2 / 4`` (not monotone across tau)."""
        v = np.asarray(v, dtype=float)
        return 0.25 * (self.tildeI(v) / v) ** 2

    def _plateau(self):
        A, p, lt = self._A, self._p, math.log(self.tau)
        return (-lt) ** (-p) / (A * p), A * (-lt) ** (p + 1), 2.0 * self.slope

    def integral_T(self, log_v: float) -> float:
        """``int_0^v du / (u Lambda(u))`` in closed form, as a float."""
        A, p, lt = self._A, self._p, math.log(self.tau)
        n = self.tildeI.n
        if log_v <= lt:
            return (-log_v) ** (-p) / (A * p)
        T_tau, Lam_tau, k = self._plateau()
        if log_v <= self.log_v1:
            return T_tau + math.expm1(k * (log_v - lt)) / (k * Lam_tau)
        T1 = T_tau + math.expm1(k * (self.log_v1 - lt)) / (k * Lam_tau)
        return T1 + 0.5 * n * (math.exp(2.0 * log_v / n) - math.exp(2.0 * self.log_v1 / n)) / A

    def log_T(self, log_v: float) -> float:
        T = self.integral_T(log_v)
        return math.log(T) if T > 0 else -math.inf

    def log_V_closed_form(self, t: float) -> float:
        """Exact inverse of ``integral_T`` on each branch (test oracle)."""
        A, p, lt = self._A, self._p, math.log(self.tau)
        n = self.tildeI.n
        T_tau, Lam_tau, k = self._plateau()
        if t <= T_tau:
            return -((A * p * t) ** (-1.0 / p))
        T1 = self.integral_T(self.log_v1)
        if t <= T1:
            return lt + math.log1p(k * Lam_tau * (t - T_tau)) / k
        return 0.5 * n * math.log(math.exp(2.0 * self.log_v1 / n) + 2.0 * A * (t - T1) / n)

    def crossover_times(self):
        """(T(tau), T(v1)): ends of the small-volume and plateau regimes."""
        return self.integral_T(math.log(self.tau)), self.integral_T(self.log_v1)


def solve_log_V(fk: FaberKrahnFunction, t: float) -> float:
    """``log V(t)`` from ``t = int_0^V dv / (v Lambda(v))`` by monotone root finding."""
    if not t > 0:
        raise DomainError("t must be positive")
    guess = fk.log_V_closed_form(t)
    x0 = guess if math.isfinite(guess) else -1.0
    return solve_monotone(fk.log_T, math.log(t), x0, "V(t)")


def solve_V(fk: FaberKrahnFunction, t: float, q: QuadratureSpec = DEFAULT_QUAD) -> float:
    """``V(t)``; raises UnderflowError (with the log-value attached) when V is not representable."""
    lv = solve_log_V(fk, t)
    if lv < math.log(np.finfo(float).tiny):
        A, p = fk._A, fk._p
        raise UnderflowError(f"V({t!r}) = exp({lv!r}) is below the float range",
                             asymptotic={"log_V": lv, "formula": "log V = -(A p t)^(-1/p)",
                                         "A": A, "p": p})
    return math.exp(lv)


def tail_shells(fk: FaberKrahnFunction, log_v_start: float | None = None, shells: int = 12):
    """Contributions of ``int dv/(v Lambda)`` over dyadic shells of ``log 1/v``.

    The k-th shell is ``log 1/v in [2^k L0, 2^(k+1) L0]``; the integral near
    0 converges iff these contributions are summable.  For the envelope they
    shrink by ``2^-p`` per shell.  Halving v itself would not do: each
    factor-2 shell contributes about ``log 2 / Lambda(v)``, and Lambda grows
    only logarithmically.
    """
    if log_v_start is None:
        log_v_start = math.log(fk.tau)
    L0 = -log_v_start
    out = []
    for k in range(shells):
        a, b = -(2 ** (k + 1)) * L0, -(2**k) * L0
        out.append(fk.integral_T(b) - fk.integral_T(a))
    return out


@dataclass
class BoundCurve:
    """Sampled ``t -> value`` with values stored as natural logs."""

    t_values: np.ndarray
    log_values: np.ndarray
    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        self.t_values = np.asarray(self.t_values, dtype=float)
        self.log_values = np.asarray(self.log_values, dtype=float)
        if self.t_values.shape != self.log_values.shape:
            raise DomainError("t_values and values must have the same length")
        if self.t_values.size and not np.all(np.diff(self.t_values) > 0):
            raise DomainError("t_values must be strictly increasing")
        if np.any(self.t_values <= 0):
            raise DomainError("t_values must be positive")

    @property
    def values(self):
        with np.errstate(over="ignore"):
            return np.exp(self.log_values)

    @property
    def meta(self):
        return {"kind": self.kind, "params": self.params}

    def __len__(self):
        return int(self.t_values.size)


def _t_grid(t_grid):
    t = np.asarray(sorted(float(x) for x in t_grid), dtype=float)
    if t.size == 0 or np.any(t <= 0):
        raise DomainError("t_grid must be non-empty and positive")
    return t


def upper_bound_curve(fk: FaberKrahnFunction, t_grid) -> BoundCurve:
    """``4 / V(t/2)`` on the grid (log-values)."""
    t = _t_grid(t_grid)
    lv = np.array([math.log(4.0) - solve_log_V(fk, x / 2.0) for x in t])
    P = fk.tildeI
    return BoundCurve(t, lv, "upper", {"n": P.n, "alpha": P.alpha, "C": P.C, "tau": P.tau})


# ---------------------------------------------------------------- F(r), test function


def _log_inner_integral(w: RadialWeight, xi: float, r: float, q: QuadratureSpec) -> float:
    """``log int_xi^r dt / phi(t)``, scaled by ``exp(-xi^-alpha)`` inside the quadrature."""
    a, n1 = w.alpha, w.n - 1
    shift = xi ** (-a)

    def f(t):
        return math.exp(t ** (-a) - shift - n1 * math.log(t))

    # 1/phi decays from xi on the length scale xi^(1+alpha)/alpha
    h = xi ** (1.0 + a) / a
    edges = [xi]
    k = 1.0
    while xi + k * h < r:
        edges.append(xi + k * h)
        k *= 10.0
    edges.append(r)
    total = 0.0
    for lo, hi in zip(edges, edges[1:]):
        total += _quad(f, lo, hi, q, "F(r) inner integral")
    return shift + math.log(total)


def log_F_candidate(w: RadialWeight, xi: float, r: float, q: QuadratureSpec = DEFAULT_QUAD) -> float:
    """``log(V(xi) int_xi^r dt / S(t))``; omega_n cancels between V and S."""
    if not 0 < xi < r:
        raise DomainError("need 0 < xi < r")
    return log_nu_ball(w, xi, q) + _log_inner_integral(w, xi, r, q)


def _xi_grid(w: RadialWeight, r: float, grid: int):
    """Grid in ``log(xi / r)``.

    Where ``xi^-alpha >> r^-alpha`` the candidate behaves like ``xi^(2 alpha + 2)``
    and is increasing, so the search can stop at ``xi^-alpha = r^-alpha + 1e6``.
    """
    xi_min = max(1e-6 * r, (r ** (-w.alpha) + 1e6) ** (-1.0 / w.alpha))
    return np.linspace(math.log(xi_min / r), math.log1p(-1e-9), grid)


@functools.lru_cache(maxsize=4096)
def log_F_of_r(w: RadialWeight, r: float, q: QuadratureSpec = DEFAULT_QUAD, grid: int = 40) -> float:
    """``log sup_{0<xi<r} V(xi) int_xi^r dt/S(t)``: log grid in xi/r, then golden section."""
    if not r > 0:
        raise DomainError("r must be positive")
    s_grid = _xi_grid(w, r, grid)

    def h(s):
        return -log_F_candidate(w, r * math.exp(s), r, q)

    vals = [h(s) for s in s_grid]
    i = int(np.argmin(vals))
    if 0 < i < grid - 1:
        res = optimize.minimize_scalar(h, bracket=(s_grid[i - 1], s_grid[i], s_grid[i + 1]),
                                       method="golden", tol=1e-10)
        best = min(vals[i], float(res.fun))
    else:
        best = vals[i]
    return -best


def F_of_r(w: RadialWeight, r: float, q: QuadratureSpec = DEFAULT_QUAD) -> float:
    return math.exp(log_F_of_r(w, float(r), q))


def argsup_F(w: RadialWeight, r: float, q: QuadratureSpec = DEFAULT_QUAD, grid: int = 40) -> float:
    """The maximising xi found by the same search as ``log_F_of_r``."""
    s_grid = _xi_grid(w, r, grid)
    vals = [log_F_candidate(w, r * math.exp(s), r, q) for s in s_grid]
    i = int(np.argmax(vals))
    if 0 < i < grid - 1:
        res = optimize.minimize_scalar(lambda s: -log_F_candidate(w, r * math.exp(s), r, q),
                                       bracket=(s_grid[i - 1], s_grid[i], s_grid[i + 1]),
                                       method="golden", tol=1e-10)
        return r * math.exp(res.x)
    return r * math.exp(s_grid[i])


def trapezoid_test_function(r: float):
    """Radial profile ``(x - r/4)_+`` up to r/2, ``r/4`` on (r/2, 3r/4), ``(r - x)_+`` beyond."""
    def f(x):
        x = np.asarray(x, dtype=float)
        return np.where(x <= r / 2, np.maximum(x - r / 4, 0.0),
                        np.where(x < 3 * r / 4, r / 4, np.maximum(r - x, 0.0)))

    return f


def lambda1_upper_testfn(w: RadialWeight, r: float, q: QuadratureSpec = DEFAULT_QUAD,
                         weight_scale: float = 1.0) -> float:
    """Rayleigh quotient of the trapezoidal test function on B_r (radial quadrature)."""
    if r < 1:
        raise DomainError("the trapezoidal test function is used for r >= 1")

    def phi(x):
        return weight_scale * weight_at(w, x)

    def num_piece(a, b):
        return _quad(phi, a, b, q, "test function gradient")

    grad = num_piece(r / 4, r / 2) + num_piece(3 * r / 4, r)
    mass = (_quad(lambda x: (x - r / 4) ** 2 * phi(x), r / 4, r / 2, q, "test function mass")
            + (r / 4) ** 2 * num_piece(r / 2, 3 * r / 4)
            + _quad(lambda x: (r - x) ** 2 * phi(x), 3 * r / 4, r, q, "test function mass"))
    return grad / mass


# ---------------------------------------------------------------- anti-Faber-Krahn route


class AntiFaberKrahn:
    """``Lambda_hat(v) = kappa / F(r)`` with ``omega_n nu((0, r)) = v``.

    ``T(r) = int_0^{v(r)} du / (u Lambda_hat(u)) = (1/kappa) int_0^r F(s) phi(s) / nu((0,s)) ds``
    is tabulated on a log grid of r: the log-integrand is a cubic spline in
    log s, each cell is integrated by Gauss-Legendre, and the part below the
    first node uses the local power law of the integrand.
    """

    def __init__(self, w: RadialWeight, kappa: float, r_lo: float | None = None, r_hi: float = 1e4,
                 nodes: int = 160, q: QuadratureSpec = DEFAULT_QUAD):
        if not kappa > 0:
            raise DomainError("kappa must be positive")
        self.w, self.kappa, self.q = w, float(kappa), q
        if r_lo is None:
            r_lo = 2000.0 ** (-1.0 / w.alpha)
        self.r_lo, self.r_hi = float(r_lo), float(r_hi)
        self.log_r = np.linspace(math.log(r_lo), math.log(r_hi), nodes)
        self.log_F = np.array([log_F_of_r(w, float(math.exp(x)), q) for x in self.log_r])
        self._logF_spline = interpolate.CubicSpline(self.log_r, self.log_F)
        self._g_spline = interpolate.CubicSpline(self.log_r, self._log_integrand(self.log_r))
        gx, gw = np.polynomial.legendre.leggauss(12)
        self._gx, self._gw = gx, gw
        cells = np.array([self._cell(a, b) for a, b in zip(self.log_r, self.log_r[1:])])
        slope = float(self._g_spline(self.log_r[0], 1))
        if slope <= 0:
            raise NumericalConsistencyError("integrand of T is not increasing near the origin")
        head = math.exp(float(self._g_spline(self.log_r[0]))) / slope
        self._slope0 = slope
        self._cum = np.concatenate([[head], head + np.cumsum(cells)])

    def _log_integrand(self, log_r):
        # in d(log s): F(s) phi(s) s / nu((0, s)), divided by kappa
        w, q = self.w, self.q
        out = []
        for x, lf in zip(np.atleast_1d(log_r), self.log_F):
            s = math.exp(x)
            out.append(lf + log_weight_at(w, s) + x - log_nu_ball(w, s, q) - math.log(self.kappa))
        return np.array(out)

    def _cell(self, a, b):
        xs = 0.5 * (b - a) * self._gx + 0.5 * (a + b)
        return 0.5 * (b - a) * float(np.dot(self._gw, np.exp(self._g_spline(xs))))

    def log_F_at(self, log_r):
        return float(self._logF_spline(log_r))

    def T_of_log_r(self, x: float) -> float:
        if x < self.log_r[0]:
            return math.exp(float(self._g_spline(self.log_r[0])) + self._slope0 * (x - self.log_r[0])) / self._slope0
        if x > self.log_r[-1]:
            raise DomainError("radius beyond the tabulated range; raise r_hi")
        i = min(int(np.searchsorted(self.log_r, x, side="right")) - 1, self.log_r.size - 2)
        return float(self._cum[i] + self._cell(self.log_r[i], x))

    def log_T(self, x: float) -> float:
        return math.log(self.T_of_log_r(x))

    def log_Lambda_at_log_r(self, x: float) -> float:
        return math.log(self.kappa) - self.log_F_at(x)

    def solve_log_r(self, t: float) -> float:
        if not t > 0:
            raise DomainError("t must be positive")
        x0 = math.log(min(max((1.0 / max(-math.log(min(t, 0.5)), 1e-3)) ** (1.0 / self.w.alpha),
                              self.r_lo), self.r_hi))
        return solve_monotone(self.log_T, math.log(t), x0, "gamma(t)")

    def log_gamma(self, t: float) -> float:
        """``log gamma(t)`` via the same monotone solver as V(t)."""
        x = self.solve_log_r(t)
        return math.log(self.w.omega) + log_nu_ball(self.w, math.exp(x), self.q)

    def dlog_gamma_analytic(self, t: float) -> float:
        """``gamma'/gamma = Lambda_hat(gamma(t))``."""
        return math.exp(self.log_Lambda_at_log_r(self.solve_log_r(t)))

    def dlog_gamma(self, t: float, rel_step: float = 1e-4) -> float:
        """Centred difference of log gamma with one Richardson step."""
        def cd(h):
            return (self.log_gamma(t + h) - self.log_gamma(t - h)) / (2 * h)

        h = rel_step * t
        return (4.0 * cd(h / 2) - cd(h)) / 3.0


def c_gamma(afk: AntiFaberKrahn, t: float, points: int = 21, analytic: bool = False) -> float:
    """``inf_{s in [t, 2t]} (gamma'/gamma)(s) / (gamma'/gamma)(t)`` on a uniform grid."""
    d = afk.dlog_gamma_analytic if analytic else afk.dlog_gamma
    base = d(t)
    ratios = [d(s) / base for s in np.linspace(t, 2 * t, points)]
    c = min(ratios)
    if not c > 0:
        raise NumericalConsistencyError(f"c_gamma estimate {c!r} <= 0; differencing step too coarse")
    return c


def pure_c_gamma(alpha: float) -> float:
    """Doubling constant of ``exp(-C0 t^-(alpha/(alpha+2)))``: ``2^(-(2 alpha + 2)/(alpha + 2))``."""
    return 2.0 ** (-(2 * alpha + 2) / (alpha + 2))


def certified_kappa(w: RadialWeight, r_grid=None, grid_size: int = 2000, q: QuadratureSpec = DEFAULT_QUAD) -> dict:
    from .spectral import certify_kappa

    if r_grid is None:
        r_grid = np.geomspace(0.05, 50.0, 20)
    return certify_kappa(w, r_grid, grid_size, q)


def lower_bound_curve(w: RadialWeight, t_grid, q: QuadratureSpec = DEFAULT_QUAD, kappa: float | None = None,
                      afk: AntiFaberKrahn | None = None) -> BoundCurve:
    """``1 / gamma(2 t / c_gamma(t))`` on the grid (log-values).

    Args:
        kappa: comparability constant; defaults to ``kappa_high`` from the
            spectral certificate so that ``lambda_1(B_r) <= Lambda_hat(mu(B_r))``
            holds on the certification grid.
    """
    t = _t_grid(t_grid)
    params = {"n": w.n, "alpha": w.alpha}
    if afk is None:
        if kappa is None:
            cert = certified_kappa(w, q=q)
            kappa = cert["kappa_high"]
            params["kappa_low"] = cert["kappa_low"]
        afk = AntiFaberKrahn(w, kappa, q=q)
    params["kappa"] = afk.kappa
    cg = [c_gamma(afk, x) for x in t]
    lv = np.array([-afk.log_gamma(2.0 * x / c) for x, c in zip(t, cg)])
    params["c_gamma"] = [float(c) for c in cg]
    return BoundCurve(t, lv, "lower", params)
