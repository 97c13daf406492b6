"""Sturm-Liouville oracle for the radial operator ``-(phi u')' = lambda phi u``.

Discretisation is node-centred finite volumes: two-point fluxes with
harmonic-mean face weights and a lumped mass ``phi(x_i) |cell_i|``.  The
pencil ``K u = lambda M u`` (K symmetric tridiagonal, M diagonal) is reduced to
the symmetric tridiagonal ``M^-1/2 K M^-1/2`` and handed to LAPACK.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import ConvergenceError, DomainError
from .measure import (
    DEFAULT_QUAD,
    QuadratureSpec,
    RadialWeight,
    log_nu_ball,
    radius_for_log_volume,
    weight_array,
)

DIRICHLET = "dirichlet"
NEUMANN = "neumann"

# nu-mass below the inner truncation radius, relative to nu((0, R))
DEFAULT_MASS_FRACTION = 1e-8


@dataclass(frozen=True)
class RadialGrid:
    nodes: np.ndarray
    grading: str = "log-uniform"

    def __post_init__(self):
        x = np.asarray(self.nodes, dtype=float)
        if x.ndim != 1 or x.size < 5:
            raise DomainError("grid needs at least 3 interior nodes")
        if not np.all(np.diff(x) > 0) or x[0] <= 0:
            raise DomainError("grid nodes must be positive and strictly increasing")
        object.__setattr__(self, "nodes", x)


@dataclass(frozen=True)
class TridiagonalPencil:
    """``K u = lambda M u`` restricted to the unknown (non-Dirichlet) nodes."""

    diag: np.ndarray
    offdiag: np.ndarray
    mass: np.ndarray
    nodes: np.ndarray
    boundary: tuple

    def stiffness_dense(self):
        return np.diag(self.diag) + np.diag(self.offdiag, 1) + np.diag(self.offdiag, -1)

    def rayleigh_quotient(self, u):
        u = np.asarray(u, dtype=float)
        ku = self.diag * u
        ku[:-1] += self.offdiag * u[1:]
        ku[1:] += self.offdiag * u[:-1]
        return float(u @ ku) / float(u @ (self.mass * u))


@dataclass(frozen=True)
class EigenSystem:
    """Lowest eigenpairs of a pencil; columns of ``eigenvectors`` satisfy
    ``v_i^T M v_j = delta_ij``."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    nodes: np.ndarray
    mass: np.ndarray


def default_r_min(w: RadialWeight, R: float, mass_fraction: float = DEFAULT_MASS_FRACTION,
                  q: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Radius below which nu carries ``mass_fraction`` of ``nu((0, R))``."""
    return radius_for_log_volume(w, log_nu_ball(w, R, q) + math.log(mass_fraction), q)


def make_grid(r_min: float, R: float, size: int) -> RadialGrid:
    """Half the nodes log-spaced on [r_min, R/2], half uniform on [R/2, R].

    When ``r_min >= R/2`` the whole grid is uniform on [r_min, R].
    """
    if not 0 < r_min < R:
        raise DomainError(f"need 0 < r_min < R, got {r_min}, {R}")
    if r_min >= R / 2:
        return RadialGrid(np.linspace(r_min, R, size), "uniform")
    half = size // 2
    inner = np.geomspace(r_min, R / 2, half + 1)[:-1]
    outer = np.linspace(R / 2, R, size - half)
    return RadialGrid(np.concatenate([inner, outer]), "log-uniform")


def _weight_values(weight, x):
    if isinstance(weight, RadialWeight):
        return weight_array(weight, x)
    return np.asarray(weight(x), dtype=float) * np.ones_like(x)


def assemble(weight, grid: RadialGrid, left: str = NEUMANN, right: str = DIRICHLET) -> TridiagonalPencil:
    """Finite-volume pencil for ``-(phi u')' = lambda phi u`` on the grid.

    Args:
        weight: a RadialWeight, or a callable mapping node arrays to phi.
        grid: nodes including both endpoints.
        left, right: ``"dirichlet"`` or ``"neumann"`` at each end.
    """
    for side in (left, right):
        if side not in (DIRICHLET, NEUMANN):
            raise DomainError(f"unknown boundary condition {side!r}")
    x = grid.nodes
    phi = _weight_values(weight, x)
    h = np.diff(x)
    denom = phi[:-1] + phi[1:]
    with np.errstate(invalid="ignore", divide="ignore"):
        face = np.where(denom > 0, 2.0 * phi[:-1] * (phi[1:] / denom), 0.0)
    g = face / h

    cell = np.empty_like(x)
    cell[1:-1] = 0.5 * (x[2:] - x[:-2])
    cell[0] = 0.5 * h[0]
    cell[-1] = 0.5 * h[-1]
    mass = phi * cell

    diag = np.zeros_like(x)
    diag[:-1] += g
    diag[1:] += g
    off = -g

    lo = 1 if left == DIRICHLET else 0
    hi = x.size - 1 if right == DIRICHLET else x.size
    if hi - lo < 3:
        raise DomainError("grid too coarse: fewer than 3 unknowns")
    m = mass[lo:hi]
    if np.any(m <= 0):
        raise DomainError("weight underflows on the grid; raise r_min")
    return TridiagonalPencil(diag[lo:hi].copy(), off[lo:hi - 1].copy(), m.copy(), x[lo:hi].copy(),
                             (left, right))


def solve_pencil(p: TridiagonalPencil, k: int | None = None) -> EigenSystem:
    """Lowest ``k`` eigenpairs (all if ``k`` is None), M-orthonormal."""
    s = 1.0 / np.sqrt(p.mass)
    d = p.diag * s * s
    e = p.offdiag * s[:-1] * s[1:]
    size = d.size
    try:
        if k is None or k >= size:
            lam, y = linalg.eigh_tridiagonal(d, e)
        else:
            lam, y = linalg.eigh_tridiagonal(d, e, select="i", select_range=(0, k - 1))
    except linalg.LinAlgError as exc:
        raise ConvergenceError(f"tridiagonal eigensolver failed: {exc}") from exc
    vec = y * s[:, None]
    # sign convention: first component of the ground state positive
    signs = np.where(vec[np.argmax(np.abs(vec), axis=0), np.arange(vec.shape[1])] < 0, -1.0, 1.0)
    vec = vec * signs
    return EigenSystem(lam, vec, p.nodes, p.mass)


def ball_pencil(w: RadialWeight, R: float, grid_size: int = 2000, r_min: float | None = None,
                q: QuadratureSpec = DEFAULT_QUAD) -> TridiagonalPencil:
    if r_min is None:
        r_min = default_r_min(w, R, q=q)
    return assemble(w, make_grid(r_min, R, grid_size), NEUMANN, DIRICHLET)


def lambda1_ball(w: RadialWeight, R: float, grid_size: int = 2000, r_min: float | None = None,
                 q: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Bottom of the Dirichlet spectrum of the ball B_R (radial ground state)."""
    if not R > 0:
        raise DomainError("R must be positive")
    if grid_size < 100:
        raise DomainError("grid_size must be >= 100")
    es = solve_pencil(ball_pencil(w, R, grid_size, r_min, q), k=1)
    return float(es.eigenvalues[0])


def certify_kappa(w: RadialWeight, r_grid, grid_size: int = 2000, q: QuadratureSpec = DEFAULT_QUAD,
                  F=None) -> dict:
    """Spread of ``lambda_1(B_r) * F(r)`` over ``r_grid``.

    Args:
        F: optional callable ``r -> F(r)``; defaults to heat_bounds.F_of_r.
    """
    r_grid = [float(r) for r in r_grid]
    if not r_grid:
        raise DomainError("r_grid must be non-empty")
    if F is None:
        from .heat_bounds import F_of_r

        def F(r):
            return F_of_r(w, r, q)

    products = [lambda1_ball(w, r, grid_size, q=q) * F(r) for r in r_grid]
    return {
        "kappa_low": float(min(products)),
        "kappa_high": float(max(products)),
        "r_grid": r_grid,
        "products": [float(p) for p in products],
    }
