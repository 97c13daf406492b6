"""Radial weight r^(n-1) exp(-r^-alpha) and the measures it induces.

The radial measure is ``dnu(r) = phi(r) dr`` on ``(0, inf)`` and the measure on
``R^n \\ {0}`` is ``mu = omega_n * nu`` in polar coordinates, where ``omega_n``
is the (n-1)-area of the unit sphere.

``phi`` vanishes to all orders at the origin, so small-radius quantities are
computed in log scale.  Below the crossover radius the ball volume uses
``x = 1/r`` followed by ``s = x^alpha - r^-alpha``, which turns the integral
into ``(1/alpha) u^-m e^-u * int_0^inf (1 + s/u)^-m e^-s ds`` with
``u = R^-alpha`` and ``m = n/alpha + 1``; the remaining integral is O(1) and
never underflows.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize

from .errors import ConvergenceError, DomainError, UnderflowError


@dataclass(frozen=True)
class RadialWeight:
    """The pair (n, alpha) defining ``phi(r) = r^(n-1) exp(-r^-alpha)``.

    ``crossover`` is the radius below which ball volumes are computed through
    the substitution branch; it is configuration, not part of the model.
    """

    n: int
    alpha: float
    crossover: float = 1.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise DomainError(f"n must be an integer >= 1, got {self.n!r}")
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise DomainError(f"alpha must be positive, got {self.alpha!r}")
        if not self.crossover > 0:
            raise DomainError("crossover radius must be positive")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "alpha", float(self.alpha))

    @property
    def beta(self) -> float:
        """Exponent 1 + 1/alpha of the small-volume profile."""
        return 1.0 + 1.0 / self.alpha

    @property
    def omega(self) -> float:
        """(n-1)-area of the unit sphere, 2 pi^(n/2) / Gamma(n/2)."""
        return sphere_area(self.n)


@dataclass(frozen=True)
class QuadratureSpec:
    abs_tol: float = 1e-12
    rel_tol: float = 1e-10
    max_subdivisions: int = 60

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise DomainError("quadrature tolerances must be positive")
        if self.max_subdivisions < 1:
            raise DomainError("max_subdivisions must be >= 1")


DEFAULT_QUAD = QuadratureSpec()


def sphere_area(n: int) -> float:
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


def _check_radius(r):
    if not r > 0:
        raise DomainError(f"radius must be positive, got {r!r}")


def log_weight_at(w: RadialWeight, r: float) -> float:
    _check_radius(r)
    return (w.n - 1) * math.log(r) - r ** (-w.alpha)


def weight_at(w: RadialWeight, r: float) -> float:
    """``phi(r)``; underflows to exactly 0.0 for radii close to the origin."""
    return math.exp(log_weight_at(w, r))


def weight_array(w: RadialWeight, r) -> np.ndarray:
    """Vectorised ``phi`` for non-negative radii, with ``phi(0) = 0``."""
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    pos = r > 0
    rp = r[pos]
    out[pos] = np.exp((w.n - 1) * np.log(rp) - rp ** (-w.alpha))
    return out


def surface_measure(w: RadialWeight, R: float) -> float:
    """mu-area of the sphere of radius R, ``omega_n * phi(R)``."""
    return w.omega * weight_at(w, R)


def _quad(func, a, b, q: QuadratureSpec, what: str, points=None):
    out = integrate.quad(
        func, a, b, epsabs=q.abs_tol, epsrel=q.rel_tol, limit=q.max_subdivisions,
        points=points, full_output=1,
    )
    val, err = out[0], out[1]
    # a fourth element is QUADPACK's warning message (ier > 0)
    if len(out) > 3 or not math.isfinite(val):
        raise ConvergenceError(f"{what}: tolerance not reached on [{a}, {b}]", estimate=val, error=err)
    return val


@functools.lru_cache(maxsize=1 << 16)
def _scaled_tail(m: float, u: float, q: QuadratureSpec) -> float:
    # int_0^inf (1 + s/u)^-m e^-s ds, a number in (0, 1]; the infinite-range rule
    # alone underestimates its error here, so the bulk gets a finite interval
    def f(s):
        return math.exp(-s - m * math.log1p(s / u))

    return (_quad(f, 0.0, 40.0, q, "nu_ball tail") + _quad(f, 40.0, math.inf, q, "nu_ball tail"))


def _log_nu_small(w: RadialWeight, R: float, q: QuadratureSpec) -> float:
    u = R ** (-w.alpha)
    m = w.n / w.alpha + 1.0
    return -u - m * math.log(u) + math.log(_scaled_tail(m, u, q) / w.alpha)


def _direct_integral(w: RadialWeight, a: float, b: float, q: QuadratureSpec) -> float:
    """``int_a^b phi`` by quadrature on decade panels."""
    total = 0.0
    lo = a
    while lo < b:
        hi = min(b, lo * 10.0) if lo > 0 else b
        total += _quad(lambda r: weight_at(w, r) if r > 0 else 0.0, lo, hi, q, "nu_ball panel")
        lo = hi
    return total


@functools.lru_cache(maxsize=1 << 16)
def log_nu_ball(w: RadialWeight, R: float, q: QuadratureSpec = DEFAULT_QUAD) -> float:
    """``log nu((0, R))``, finite for every representable R > 0."""
    _check_radius(R)
    if R <= w.crossover:
        return _log_nu_small(w, R, q)
    base = math.exp(_log_nu_small(w, w.crossover, q))
    return math.log(base + _direct_integral(w, w.crossover, R, q))


def nu_ball(w: RadialWeight, R: float, q: QuadratureSpec = DEFAULT_QUAD) -> float:
    """``nu((0, R)) = int_0^R phi``; returns 0.0 for R = 0 and on underflow."""
    if R == 0:
        return 0.0
    return math.exp(log_nu_ball(w, R, q))


def nu_ball_direct(w: RadialWeight, R: float, q: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Plain quadrature of phi over (0, R), used to cross-check the branches."""
    _check_radius(R)
    # phi is negligible below the radius where exp(-r^-alpha) < 1e-300
    r0 = min(R, 690.0 ** (-1.0 / w.alpha))
    head = _quad(lambda r: weight_at(w, r), r0 / 2, r0, q, "nu_ball direct head")
    return head + (_direct_integral(w, r0, R, q) if R > r0 else 0.0)


def nu_ball_asymptotic(w: RadialWeight, R: float):
    """Leading-order small-R volume ``R^n e^-u / (n + 1 + alpha u)``, u = R^-alpha.

    This is ``1/F'(1/R)`` for ``F(x) = x^(n+1) exp(x^alpha)``.

    Returns:
        tuple: (log of the approximation, estimated relative error).
    """
    _check_radius(R)
    u = R ** (-w.alpha)
    m = w.n / w.alpha + 1.0
    log_val = w.n * math.log(R) - u - math.log(w.n + 1.0 + w.alpha * u)
    rel_err = abs(1.0 / w.alpha - 1.0) / u + m * (m + 1.0) / u**2
    return log_val, rel_err


def log_nu_interval(w: RadialWeight, a: float, b: float, q: QuadratureSpec = DEFAULT_QUAD) -> float:
    """``log nu([a, b))`` without cancellation, for 0 <= a < b."""
    if not 0 <= a < b:
        raise DomainError(f"need 0 <= a < b, got [{a}, {b})")
    if a == 0:
        return log_nu_ball(w, b, q)
    la, lb = log_nu_ball(w, a, q), log_nu_ball(w, b, q)
    if la < lb - 0.7:
        return lb + math.log1p(-math.exp(la - lb))
    # close radii: integrate phi / phi(b) over [a, b] directly
    n1, al, binv = w.n - 1, w.alpha, b ** (-w.alpha)

    def f(r):
        return math.exp(n1 * math.log(r / b) + binv - r ** (-al))

    return log_weight_at(w, b) + math.log(_quad(f, a, b, q, "nu interval"))


def nu_interval(w: RadialWeight, a: float, b: float, q: QuadratureSpec = DEFAULT_QUAD) -> float:
    return math.exp(log_nu_interval(w, a, b, q))


def radius_for_log_volume(w: RadialWeight, log_v: float, q: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Radius R with ``log nu((0, R)) = log_v``."""
    if not math.isfinite(log_v):
        raise UnderflowError("volume is not representable", asymptotic="R ~ (log 1/v)^(-1/alpha)")

    def g(x):
        return log_nu_ball(w, math.exp(x), q) - log_v

    # the small-volume asymptotics log(1/v) ~ R^-alpha give a starting bracket
    if log_v < 0:
        guess = (-log_v) ** (-1.0 / w.alpha)
    else:
        guess = (w.n * math.exp(log_v)) ** (1.0 / w.n) + 1.0
    lo = hi = math.log(guess)
    step = 0.5
    while g(lo) > 0:
        lo -= step
        step *= 2
        if lo < -700:
            raise UnderflowError("radius underflows the representable bracket")
    step = 0.5
    while g(hi) < 0:
        hi += step
        step *= 2
        if hi > 700:
            raise ConvergenceError("radius bracket overflowed", estimate=math.exp(hi))
    x, res = optimize.brentq(g, lo, hi, xtol=1e-300, rtol=8.9e-16, maxiter=200, full_output=True)
    if not res.converged:
        raise ConvergenceError("radius_for_volume did not converge", estimate=math.exp(x))
    return math.exp(x)


def radius_for_volume(w: RadialWeight, v: float, q: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Unique R with ``nu((0, R)) = v``."""
    if not v > 0:
        raise DomainError(f"volume must be positive, got {v!r}")
    return radius_for_log_volume(w, math.log(v), q)
