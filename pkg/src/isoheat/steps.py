"""Step functions on the half-line, weighted variation and the convex decomposition.

A step function is ``sum_k b_k 1[x_{k-1}, x_k)`` with ``x_0 = 0``.  The
decomposition writes a non-negative step function as a convex combination of
elementary functions ``c_k 1[r_k, s_k)`` that all carry the same nu-mass and
whose weighted variations add up exactly.  It peels off the tallest piece one
level at a time, so it runs as a loop rather than a recursion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate as _integrate

from .errors import DomainError, NumericalConsistencyError
from .measure import DEFAULT_QUAD, QuadratureSpec, RadialWeight, nu_ball, nu_interval, weight_array, weight_at


@dataclass(frozen=True)
class StepFunction:
    """``values[k]`` is held on ``[breakpoints[k], breakpoints[k+1])``; zero beyond."""

    breakpoints: tuple
    values: tuple

    def __post_init__(self):
        x = tuple(float(v) for v in self.breakpoints)
        b = tuple(float(v) for v in self.values)
        if len(x) < 2 or len(b) != len(x) - 1:
            raise DomainError("need m+1 breakpoints for m values (m >= 1)")
        if x[0] != 0.0:
            raise DomainError("first breakpoint must be 0")
        if any(q <= p for p, q in zip(x, x[1:])):
            raise DomainError("breakpoints must be strictly increasing")
        if not all(math.isfinite(v) for v in b + x):
            raise DomainError("breakpoints and values must be finite")
        object.__setattr__(self, "breakpoints", x)
        object.__setattr__(self, "values", b)

    @classmethod
    def elementary(cls, b, r, s):
        """``b 1[r, s)``; a zero leading piece positions the support when r > 0."""
        if r == 0:
            return cls((0.0, s), (b,))
        return cls((0.0, r, s), (0.0, b))

    @property
    def pieces(self):
        return len(self.values)

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        x = np.asarray(self.breakpoints)
        b = np.append(np.asarray(self.values), 0.0)
        idx = np.searchsorted(x, r, side="right") - 1
        out = np.where(idx >= 0, b[np.clip(idx, 0, b.size - 1)], 0.0)
        return float(out) if out.ndim == 0 else out

    def normalize(self) -> "StepFunction":
        """Merge equal neighbours and drop trailing zero pieces.

        A leading zero piece is kept: with ``x_0 = 0`` fixed it is the only
        way to encode a support that starts away from the origin.
        """
        x = [self.breakpoints[0]]
        b = []
        for k, v in enumerate(self.values):
            if b and v == b[-1]:
                x[-1] = self.breakpoints[k + 1]
            else:
                b.append(v)
                x.append(self.breakpoints[k + 1])
        while len(b) > 1 and b[-1] == 0.0:
            b.pop()
            x.pop()
        return StepFunction(tuple(x), tuple(b))

    def is_elementary(self) -> bool:
        g = self.normalize()
        return sum(1 for v in g.values if v != 0) <= 1

    def scaled(self, s: float) -> "StepFunction":
        return StepFunction(self.breakpoints, tuple(s * v for v in self.values))

    def to_json(self):
        return {"breakpoints": list(self.breakpoints), "values": list(self.values)}

    @classmethod
    def from_json(cls, obj):
        return cls(tuple(obj["breakpoints"]), tuple(obj["values"]))


def piece_masses(f: StepFunction, w: RadialWeight, q: QuadratureSpec = DEFAULT_QUAD) -> np.ndarray:
    """``nu([x_{k-1}, x_k))`` for every piece."""
    x = f.breakpoints
    return np.array([nu_ball(w, x[1], q) if k == 0 else nu_interval(w, x[k], x[k + 1], q)
                     for k in range(f.pieces)])


def integrate(f: StepFunction, w: RadialWeight, q: QuadratureSpec = DEFAULT_QUAD) -> float:
    """``int f dnu = sum_k b_k nu([x_{k-1}, x_k))``."""
    b = np.asarray(f.values)
    if not np.any(b):
        return 0.0
    return float(np.dot(b, piece_masses(f, w, q)))


def total_variation(f: StepFunction, w: RadialWeight) -> float:
    """``sum_{k=1}^m |b_{k+1} - b_k| phi(x_k)`` with ``b_{m+1} = 0``.

    The jump at the origin is not counted.
    """
    b = np.append(np.asarray(f.values), 0.0)
    jumps = np.abs(np.diff(b))
    phi = weight_array(w, np.asarray(f.breakpoints[1:]))
    return float(np.dot(jumps, phi))


def partition_variation(f: StepFunction, w: RadialWeight, eps: float = 1e-9) -> float:
    """Partition sum ``sum |f(xi_k) - f(xi_{k-1})| phi(xi_{k-1})`` on points
    straddling every breakpoint at ``x_k -/+ eps``.

    This is the supremum-over-partitions definition sampled near its optimum;
    it tends to ``total_variation`` as eps -> 0 because phi is increasing and
    continuous.
    """
    pts = [0.0]
    for xk in f.breakpoints[1:]:
        pts += [max(xk - eps, 0.0), xk + eps]
    pts = np.array(sorted(set(pts)))
    vals = f(pts)
    return float(np.dot(np.abs(np.diff(vals)), weight_array(w, pts[:-1])))


@dataclass
class DecompositionResult:
    weights: list
    parts: list
    mass: float
    branches: list = field(default_factory=list)

    def __post_init__(self):
        if len(self.weights) != len(self.parts):
            raise DomainError("weights and parts must have equal length")

    def reconstruct(self, r):
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        for p, g in zip(self.weights, self.parts):
            out = out + p * g(r)
        return out

    def to_json(self):
        return {"weights": list(self.weights), "parts": [g.to_json() for g in self.parts],
                "mass": self.mass, "branches": list(self.branches)}


# p may leave (0, 1) by rounding only
P_SLACK = 1e-10


def decompose(f: StepFunction, w: RadialWeight, q: QuadratureSpec = DEFAULT_QUAD) -> DecompositionResult:
    """Write ``f = sum p_k f_k`` with elementary ``f_k`` of equal nu-mass.

    At each level the tallest piece (smallest index on ties) is lowered to
    its taller neighbour (sentinels 0 at both ends).  When the left neighbour
    is not taller than the right one the piece is lowered to the right
    neighbour, otherwise to the left one.  The removed slab defines
    ``g = c 1[x_{k0-1}, x_{k0})`` with ``c = int h dnu / nu(piece)`` for the
    current remainder ``h``, weighted by ``p = (b_k0 - b_nb) / c``.

    Raises:
        DomainError: f is negative somewhere or identically zero.
        NumericalConsistencyError: some p falls outside (0, 1).
    """
    f = f.normalize()
    b = np.asarray(f.values, dtype=float)
    if np.any(b < 0):
        raise DomainError("decompose needs a non-negative step function")
    if not np.any(b > 0):
        raise DomainError("decompose needs a step function that is not identically zero")
    x = list(f.breakpoints)
    masses = piece_masses(f, w, q)
    if np.any(masses[b > 0] <= 0):
        raise NumericalConsistencyError("a positive piece has zero nu-mass (underflow); raise its left end")
    vals = b.tolist()
    mass_list = masses.tolist()
    M = float(np.dot(b, masses))
    if not M > 0:
        raise NumericalConsistencyError("total mass underflows")

    slabs = []  # (p_j, left, right, nu-mass of the piece)
    branches = []
    while sum(1 for v in vals if v != 0) > 1:
        Mj = float(np.dot(vals, mass_list))
        k0 = int(np.argmax(vals))
        left = vals[k0 - 1] if k0 > 0 else 0.0
        right = vals[k0 + 1] if k0 + 1 < len(vals) else 0.0
        if left <= right:
            target, branch = right, "right"
        else:
            target, branch = left, "left"
        p = (vals[k0] - target) * mass_list[k0] / Mj
        if not 0 < p < 1 + P_SLACK:
            raise NumericalConsistencyError(f"decomposition weight p = {p!r} outside (0, 1)")
        vals[k0] = target
        # 1 - p from the lowered function itself: p rounds to 1 when the rest is tiny
        rest = float(np.dot(vals, mass_list)) / Mj
        if not rest > 0:
            raise NumericalConsistencyError("decomposition remainder has no mass")
        slabs.append((p, rest, x[k0], x[k0 + 1], mass_list[k0]))
        branches.append(branch)
        # merge the lowered piece with any neighbour it now equals
        for j in (k0, k0 - 1):
            if 0 <= j < len(vals) - 1 and vals[j] == vals[j + 1]:
                mass_list[j] += mass_list.pop(j + 1)
                vals.pop(j + 1)
                x.pop(j + 1)
        # a trailing zero piece carries nothing; drop it
        while len(vals) > 1 and vals[-1] == 0.0:
            vals.pop()
            mass_list.pop()
            x.pop()

    weights, parts = [], []
    remaining = 1.0
    # heights use the same piece masses as the weights, so reconstruction is exact up to rounding
    for p, rest, a, c_right, m in slabs:
        weights.append(p * remaining)
        parts.append(StepFunction.elementary(M / m, a, c_right))
        remaining *= rest
    # the last remainder is elementary
    k = next(i for i, v in enumerate(vals) if v != 0)
    a, c_right = x[k], x[k + 1]
    weights.append(remaining)
    parts.append(StepFunction.elementary(M / mass_list[k], a, c_right))
    branches.append("base")
    return DecompositionResult(weights, parts, M, branches)


def decomposition_residuals(f: StepFunction, res: DecompositionResult, w: RadialWeight,
                            q: QuadratureSpec = DEFAULT_QUAD, grid_size: int = 2000) -> dict:
    """Relative residuals of the four identities a decomposition must satisfy."""
    M = integrate(f, w, q)
    xs = np.linspace(0.0, f.breakpoints[-1] * 1.05, grid_size)
    # also probe just inside every breakpoint
    xs = np.unique(np.concatenate([xs, np.asarray(f.breakpoints), np.asarray(f.breakpoints[1:]) * (1 - 1e-12)]))
    fmax = max(abs(v) for v in f.values)
    recon = float(np.max(np.abs(res.reconstruct(xs) - f(xs)))) / fmax
    masses = [abs(integrate(g, w, q) - M) / M for g in res.parts]
    Vf = total_variation(f, w)
    Vsum = sum(p * total_variation(g, w) for p, g in zip(res.weights, res.parts))
    return {
        "weight_sum": abs(sum(res.weights) - 1.0),
        "min_weight": min(res.weights),
        "reconstruction": recon,
        "mass": max(masses),
        "variation": abs(Vf - Vsum) / Vf if Vf > 0 else abs(Vsum),
        "elementary": all(g.is_elementary() and min(g.values) >= 0 for g in res.parts),
    }


@dataclass(frozen=True)
class IJKLSystem:
    """Four profile evaluators I, J, K, L (volume -> value) with names for errors."""

    I: object
    J: object
    K: object
    L: object
    names: tuple = ("I", "J", "K", "L")

    def check_hypotheses(self, grid) -> dict:
        """Grid check that K is non-decreasing and concave and L is concave."""
        g = np.asarray(sorted(grid), dtype=float)
        K = np.asarray([self.K(v) for v in g])
        L = np.asarray([self.L(v) for v in g])

        def concave(y):
            s = np.diff(y) / np.diff(g)
            return bool(np.all(np.diff(s) <= 1e-12 * np.maximum(1.0, np.abs(s[:-1]))))

        return {"K_monotone": bool(np.all(np.diff(K) >= 0)), "K_concave": concave(K),
                "L_concave": concave(L)}


def identity(v):
    return v


def radial_system(J, CJ: float) -> IJKLSystem:
    """The radial system ``I = C_J J``, ``K = id``, ``L = J``."""
    return IJKLSystem(lambda v: CJ * J(v), J, identity, J, ("C_J J", "J", "id", "J"))


def _evaluate(sys: IJKLSystem, which: int, v):
    fn = (sys.I, sys.J, sys.K, sys.L)[which]
    try:
        return fn(v)
    except DomainError as exc:
        raise DomainError(f"profile {sys.names[which]} rejected its argument: {exc}") from exc


@dataclass(frozen=True)
class SampledFunction:
    """Samples of a C^1 function and its derivative on increasing nodes of [0, l]."""

    x: np.ndarray
    f: np.ndarray
    df: np.ndarray

    @classmethod
    def from_callables(cls, func, dfunc, x):
        x = np.asarray(x, dtype=float)
        return cls(x, np.asarray(func(x), dtype=float), np.asarray(dfunc(x), dtype=float))


def _radial_quad(x, y, w):
    return float(_integrate.simpson(np.asarray(y) * weight_array(w, x), x=x))


def verify_ijkl_inequality(f, sys: IJKLSystem, w: RadialWeight, q: QuadratureSpec = DEFAULT_QUAD) -> dict:
    """Report ``lhs = I(int f dnu)``, ``rhs = K(int L(f) dnu) + V(f)`` and their margin.

    Step functions use ``total_variation``; sampled functions use Simpson
    quadrature of ``|f'| phi`` and of ``f phi``, ``L(f) phi``.
    """
    if isinstance(f, StepFunction):
        b = np.asarray(f.values)
        if np.any(b < 0):
            raise DomainError("f must be non-negative")
        if not np.any(b):
            mass, Lint, V = 0.0, 0.0, 0.0  # L(0) = 0 for every profile used here
        else:
            m = piece_masses(f, w, q)
            mass = float(np.dot(b, m))
            Lv = np.array([_evaluate(sys, 3, v) for v in b])
            Lint = float(np.dot(Lv, m))
            V = total_variation(f, w)
    elif isinstance(f, SampledFunction):
        if np.any(f.f < 0):
            raise DomainError("f must be non-negative")
        mass = _radial_quad(f.x, f.f, w)
        Lint = _radial_quad(f.x, np.asarray(_evaluate(sys, 3, f.f), dtype=float), w)
        V = _radial_quad(f.x, np.abs(f.df), w)
    else:
        raise DomainError("f must be a StepFunction or a SampledFunction")
    lhs = float(_evaluate(sys, 0, mass))
    rhs = float(_evaluate(sys, 2, Lint)) + V
    return {"lhs": lhs, "rhs": rhs, "margin": rhs - lhs, "mass": mass, "integral_L": Lint, "variation": V}


def refine_to_steps(f, length: float, n_pieces: int) -> StepFunction:
    """Right-endpoint step approximation ``sum f(x_k) 1[x_{k-1}, x_k)``, ``x_k = k l / n``.

    Args:
        f: vectorised callable, non-negative with support in [0, length].
    """
    if n_pieces < 1:
        raise DomainError("n_pieces must be >= 1")
    if not length > 0:
        raise DomainError("support length must be positive")
    x = np.arange(n_pieces + 1) * (length / n_pieces)
    x[-1] = length
    vals = np.asarray(f(x[1:]), dtype=float)
    return StepFunction(tuple(x), tuple(vals))


def refinement_diagnostics(f, df, length: float, n_pieces: int, w: RadialWeight, oversample: int = 16) -> dict:
    """Variation of the step approximation against ``int |f'| phi`` and the sup error."""
    fn = refine_to_steps(f, length, n_pieces)
    V = total_variation(fn, w)
    xs = np.linspace(0.0, length, n_pieces * oversample + 1)
    fine = np.linspace(0.0, length, max(20001, 8 * n_pieces + 1))
    target = _radial_quad(fine, np.abs(df(fine)), w)
    sup_err = float(np.max(np.abs(fn(xs[:-1]) - f(xs[:-1]))))
    dmax = float(np.max(np.abs(df(fine))))
    mesh = dmax * (length / n_pieces) * (weight_at(w, length) - 0.0)
    return {"variation": V, "integral_abs_derivative": target,
            "relative_gap": abs(V - target) / target if target > 0 else abs(V),
            "sup_error": sup_err, "sup_bound": dmax * length / n_pieces, "mesh_term": mesh}


def trial_seed(root_seed: int, index: int) -> np.random.SeedSequence:
    """Per-trial seed from the root seed; independent of scheduling order."""
    return np.random.SeedSequence(entropy=int(root_seed), spawn_key=(int(index),))


def random_step_function(rng: np.random.Generator, R: float, cap: float, max_pieces: int = 12,
                         floor: float = 0.0) -> StepFunction:
    """Seeded random non-negative step function supported in [0, R].

    Piece count is uniform in [1, max_pieces], interior breakpoints are
    sorted uniforms on ``[floor, R]`` and values uniform on ``[0, cap]``.
    ``floor`` keeps every piece clear of the region where nu-masses underflow.
    """
    m = int(rng.integers(1, max_pieces + 1))
    inner = np.sort(rng.uniform(floor, R, m - 1)) if m > 1 else np.empty(0)
    inner = np.unique(inner[inner > 0])
    x = np.concatenate([[0.0], inner, [R]])
    vals = rng.uniform(0.0, cap, x.size - 1)
    if not np.any(vals > 0):
        vals[-1] = cap
    return StepFunction(tuple(x), tuple(vals))
