"""Set-level and combined isoperimetric checks on computable families.

Sets are spherically symmetric (balls, annuli, unions of annuli, ball
complements), whose mu-volume and mu-perimeter reduce to radial integrals.
Functional inequalities are checked on R^2 for products ``g(r) h(theta)``
with a tensor rule: the radial scheme times the periodic trapezoid rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import DomainError
from .measure import (
    DEFAULT_QUAD,
    QuadratureSpec,
    RadialWeight,
    log_nu_ball,
    nu_ball,
    nu_interval,
    radius_for_log_volume,
    surface_measure,
    weight_array,
)
from .profiles import GlobalProfileTildeI, PlateauProfileL, PureProfile, constant_CJ, constant_CL

BALL = "ball"
ANNULUS = "annulus"
COMPLEMENT = "ball_complement"
UNION = "finite_union_of_annuli"
KINDS = (BALL, ANNULUS, COMPLEMENT, UNION)


@dataclass(frozen=True)
class SymmetricSet:
    """A centred set given by its radial cross-section.

    ``radii`` is ``(R,)`` for a ball or ball complement, ``(r1, r2)`` for an
    annulus and ``(r1, r2, r3, r4, ...)`` for a union of annuli
    ``[r1, r2) u [r3, r4) u ...``.
    """

    kind: str
    radii: tuple

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown set kind {self.kind!r}")
        r = tuple(float(x) for x in self.radii)
        object.__setattr__(self, "radii", r)
        if any(not x > 0 for x in r):
            raise DomainError("radii must be positive")
        if any(b <= a for a, b in zip(r, r[1:])):
            raise DomainError("radii must be strictly increasing")
        expected = {BALL: 1, COMPLEMENT: 1, ANNULUS: 2}
        if self.kind in expected and len(r) != expected[self.kind]:
            raise DomainError(f"{self.kind} takes {expected[self.kind]} radii")
        if self.kind == UNION and (len(r) < 2 or len(r) % 2):
            raise DomainError("a union of annuli needs an even number of radii")

    def pieces(self):
        """Radial intervals ``(a, b)`` making up the set (a = 0 for a ball)."""
        if self.kind == BALL:
            return [(0.0, self.radii[0])]
        if self.kind == COMPLEMENT:
            return [(self.radii[0], math.inf)]
        r = self.radii
        return [(r[i], r[i + 1]) for i in range(0, len(r), 2)]

    def neighbourhood(self, eps: float) -> "SymmetricSet":
        """The eps-neighbourhood, for pieces that stay disjoint."""
        if self.kind == BALL:
            return SymmetricSet(BALL, (self.radii[0] + eps,))
        if self.kind == COMPLEMENT:
            return SymmetricSet(COMPLEMENT, (self.radii[0] - eps,))
        r = list(self.radii)
        out = []
        for i in range(0, len(r), 2):
            out += [r[i] - eps, r[i + 1] + eps]
        if out[0] <= 0:
            raise DomainError("neighbourhood reaches the origin")
        return SymmetricSet(self.kind, tuple(out))

    def to_json(self):
        return {"kind": self.kind, "radii": list(self.radii)}


def mu_volume(s: SymmetricSet, w: RadialWeight, q: QuadratureSpec = DEFAULT_QUAD) -> float:
    if s.kind == COMPLEMENT:
        raise DomainError("a ball complement has infinite mu-volume")
    total = 0.0
    for a, b in s.pieces():
        total += nu_ball(w, b, q) if a == 0 else nu_interval(w, a, b, q)
    return w.omega * total


def mu_perimeter(s: SymmetricSet, w: RadialWeight) -> float:
    """Sum of the sphere areas ``omega_n phi(r)`` over every boundary radius."""
    return sum(surface_measure(w, r) for r in s.radii)


def perimeter_difference_quotient(s: SymmetricSet, w: RadialWeight, eps: float = 1e-6,
                                  q: QuadratureSpec = DEFAULT_QUAD) -> float:
    """``(mu(A^eps) - mu(A)) / eps`` computed piece by piece without cancellation."""
    grown = s.neighbourhood(eps)
    total = 0.0
    for (a, b), (a2, b2) in zip(s.pieces(), grown.pieces()):
        total += nu_interval(w, b, b2, q) if math.isfinite(b) else 0.0
        if a > 0:
            total += nu_interval(w, a2, a, q)
    return w.omega * total / eps


def find_small_ball_radius(w: RadialWeight, profiles, q: QuadratureSpec = DEFAULT_QUAD,
                           CJ: float | None = None, CL: float | None = None) -> float:
    """Largest R with ``nu((0,R)) <= v0`` and ``mu(B_R) <= omega_n (v0/2)^N``.

    ``N = (C_J C_L / 2)^(-1/beta) - 1``.  Both conditions are monotone in R,
    so the answer is the radius of the smaller of the two volume caps.
    """
    J, L = profiles
    CJ = constant_CJ(J) if CJ is None else CJ
    CL = constant_CL(L) if CL is None else CL
    N = small_ball_exponent(w, CJ, CL)
    v0 = J.v0
    log_cap = min(math.log(v0), N * math.log(v0 / 2.0))
    return radius_for_log_volume(w, log_cap, q)


def small_ball_exponent(w: RadialWeight, CJ: float, CL: float) -> float:
    return (0.5 * CJ * CL) ** (-1.0 / w.beta) - 1.0


def small_ball_conditions(w: RadialWeight, R: float, v0: float, N: float, q: QuadratureSpec = DEFAULT_QUAD):
    """Log-slack of both conditions at R (non-negative means satisfied)."""
    lv = log_nu_ball(w, R, q)
    return {"volume": math.log(v0) - lv, "exponent": N * math.log(v0 / 2.0) - lv}


def _report(lhs, rhs, family, params, **extra):
    out = {"lhs": float(lhs), "rhs": float(rhs), "margin": float(rhs - lhs), "family": family,
           "params": params}
    out.update(extra)
    return out


def verify_set_inequality(s: SymmetricSet, prof: GlobalProfileTildeI, w: RadialWeight,
                          q: QuadratureSpec = DEFAULT_QUAD) -> dict:
    """``mu^+(s) - tilde I(mu(s))``; tilde I already carries its coefficient."""
    vol = mu_volume(s, w, q)
    per = mu_perimeter(s, w)
    bound = float(prof(vol))
    rep = _report(bound, per, s.kind, s.to_json(), perimeter=per, bound=bound, volume=vol)
    return rep


@dataclass(frozen=True)
class Sampled:
    """A C^1 function sampled on nodes together with its derivative."""

    x: np.ndarray
    f: np.ndarray
    df: np.ndarray

    @classmethod
    def from_callables(cls, func, dfunc, x):
        x = np.asarray(x, dtype=float)
        return cls(x, np.asarray(func(x), dtype=float), np.asarray(dfunc(x), dtype=float))

    @classmethod
    def from_values(cls, x, f):
        """Derivative estimated by second-order finite differences."""
        x = np.asarray(x, dtype=float)
        f = np.asarray(f, dtype=float)
        return cls(x, f, np.gradient(f, x, edge_order=2))


def radial_integral(x, y, w: RadialWeight) -> float:
    """``int y phi dr`` by Simpson's rule on the sample nodes."""
    return float(integrate.simpson(np.asarray(y) * weight_array(w, x), x=x))


def _I_of(values, beta):
    return PureProfile(beta)(np.clip(values, 0.0, 1.0))


def combined_parts_2d(g: Sampled, h_theta: Sampled, w: RadialWeight):
    """Integrals ``int f dmu``, ``int I(f) dmu`` and ``int |grad f| dmu`` for f = g h."""
    r = g.x
    th = h_theta.x
    dth = 2 * math.pi / th.size
    F = g.f[:, None] * h_theta.f[None, :]
    grad = np.sqrt((g.df[:, None] * h_theta.f[None, :]) ** 2
                   + (g.f[:, None] * h_theta.df[None, :] / np.where(r > 0, r, np.inf)[:, None]) ** 2)
    IF = _I_of(F, w.beta)

    def total(a):
        # periodic trapezoid in theta (nodes exclude 2 pi), Simpson in r
        return radial_integral(r, a.sum(axis=1) * dth, w)

    return total(F), total(IF), total(grad)


def verify_combined_inequality_2d(g: Sampled, h_theta: Sampled, w: RadialWeight, c: float, CJ: float,
                                  CL: float, v0: float, support_radius: float | None = None,
                                  q: QuadratureSpec = DEFAULT_QUAD, family: str = "product") -> dict:
    """Check ``omega C_J C_L I(int f dmu / omega) <= int I(f) dmu + (1 + C_J R) int |grad f| dmu / c``."""
    if w.n != 2:
        raise DomainError("the combined check is implemented on R^2 only")
    R = float(g.x[np.nonzero(g.f)[0][-1]]) if support_radius is None else support_radius
    if np.any(g.f[g.x > R] != 0):
        raise DomainError("radial factor is not supported in the closed ball of radius R")
    cap = min(v0 / nu_ball(w, R, q), v0)
    fmax = float(np.max(g.f[:, None] * h_theta.f[None, :]))
    fmin = float(np.min(g.f[:, None] * h_theta.f[None, :]))
    if fmin < 0 or fmax > cap * (1 + 1e-12):
        raise DomainError(f"cap violated: max f = {fmax!r} exceeds {cap!r} (or f < 0)")
    om = w.omega
    mass, iint, grad = combined_parts_2d(g, h_theta, w)
    lhs = om * CJ * CL * float(PureProfile(w.beta)(min(mass / om, 1.0)))
    rhs = iint + (1.0 + CJ * R) * grad / c
    return _report(lhs, rhs, family, {"R": R, "cap": cap, "max_f": fmax},
                   mass=mass, integral_I=iint, gradient=grad)


def radial_parts(g: Sampled, w: RadialWeight):
    """``int g dnu``, ``int I(g) dnu``, ``int |g'| dnu`` on the sample nodes."""
    return (radial_integral(g.x, g.f, w), radial_integral(g.x, _I_of(g.f, w.beta), w),
            radial_integral(g.x, np.abs(g.df), w))


def radial_reduction_gap(g: Sampled, h_value: float, w: RadialWeight, n_theta: int = 64) -> float:
    """Largest relative gap between the 2-D parts for ``f = h_value g`` and the
    radial parts of ``h_value g`` scaled by omega."""
    th = np.arange(n_theta) * 2 * math.pi / n_theta
    h = Sampled(th, np.full(n_theta, h_value), np.zeros(n_theta))
    two_d = combined_parts_2d(g, h, w)
    scaled = Sampled(g.x, h_value * g.f, h_value * g.df)
    one_d = [w.omega * p for p in radial_parts(scaled, w)]
    return max(abs(a - b) / max(abs(b), 1e-300) for a, b in zip(two_d, one_d))


def verify_circle_inequality(f: Sampled, prof: PlateauProfileL, CL: float | None = None,
                             family: str = "circle") -> dict:
    """``2 pi C_L L(mean f) <= int L(f) dtheta + int |f'| dtheta`` on S^1."""
    if np.any(f.f < 0) or np.any(f.f > 1):
        raise DomainError("circle function must take values in [0, 1]")
    CL = constant_CL(prof) if CL is None else CL
    dth = 2 * math.pi / f.x.size
    mean = float(f.f.mean())
    lhs = 2 * math.pi * CL * float(prof(mean))
    rhs = float(prof(f.f).sum() * dth + np.abs(f.df).sum() * dth)
    return _report(lhs, rhs, family, {"n_theta": int(f.x.size)})


def theta_nodes(n_theta: int) -> np.ndarray:
    return np.arange(n_theta) * 2 * math.pi / n_theta


def radial_nodes(R: float, size: int = 4001) -> np.ndarray:
    return np.linspace(0.0, R, size)


def random_radial_bump(rng: np.random.Generator, R: float, size: int = 4001):
    """``A sin^2`` bump on a random subinterval of [0, R] (C^1, zero outside). Returns
    ``(nodes, amplitude-free Sampled)``."""
    a, b = np.sort(rng.uniform(0.0, R, 2))
    if b - a < 0.05 * R:
        b = min(R, a + 0.05 * R)
        a = b - 0.05 * R
    x = radial_nodes(R, size)
    k = math.pi / (b - a)
    inside = (x >= a) & (x <= b)
    s = np.where(inside, np.sin(k * (x - a)), 0.0)
    co = np.where(inside, np.cos(k * (x - a)), 0.0)
    return Sampled(x, s**2, 2 * k * s * co), (float(a), float(b))


def random_angular_factor(rng: np.random.Generator, n_theta: int = 256, max_freq: int = 3):
    """Positive trigonometric factor scaled into (0, 1]."""
    th = theta_nodes(n_theta)
    amps = rng.uniform(-1, 1, max_freq) / np.arange(1, max_freq + 1) / (2 * max_freq)
    phases = rng.uniform(0, 2 * math.pi, max_freq)
    k = np.arange(1, max_freq + 1)[:, None]
    val = 1.0 + (amps[:, None] * np.cos(k * th + phases[:, None])).sum(0)
    der = -(amps[:, None] * k * np.sin(k * th + phases[:, None])).sum(0)
    top = val.max()
    return Sampled(th, val / top, der / top)


def random_circle_function(rng: np.random.Generator, n_theta: int = 512, max_freq: int = 4):
    """Smooth periodic function with values in [0, 1]."""
    th = theta_nodes(n_theta)
    amps = rng.normal(size=(2, max_freq)) / np.arange(1, max_freq + 1)
    k = np.arange(1, max_freq + 1)[:, None]
    val = (amps[0][:, None] * np.cos(k * th) + amps[1][:, None] * np.sin(k * th)).sum(0)
    der = (-amps[0][:, None] * k * np.sin(k * th) + amps[1][:, None] * k * np.cos(k * th)).sum(0)
    lo, hi = val.min(), val.max()
    span = (hi - lo) or 1.0
    scale = rng.uniform(0.05, 1.0) / span
    shift = rng.uniform(0.0, 1.0 - scale * (hi - lo)) - scale * lo
    return Sampled(th, np.clip(scale * val + shift, 0.0, 1.0), scale * der)


def centred_family(kind: str, radii, ratio: float = 2.0):
    """Balls of radius r, or annuli [r, ratio r], for each r in ``radii``."""
    if kind == BALL:
        return [SymmetricSet(BALL, (r,)) for r in radii]
    if kind == ANNULUS:
        return [SymmetricSet(ANNULUS, (r, ratio * r)) for r in radii]
    raise DomainError(f"no sweep family for kind {kind!r}")
