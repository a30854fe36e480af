"""Eigenvalue problems on grids: Dirichlet/Neumann spectra, Poincare constants,
and the principal stability eigenvalue of linearizations around limit profiles.

The generalized problem  -A u + W q u = lambda W u  (A the flux matrix, W the
control-volume masses) is symmetrized by the similarity W^{1/2}, then the
lowest modes are found by shift-invert power iteration with deflation: one
sparse factorization below the spectrum, repeated inverse iterations, vectors
deflated in the Euclidean inner product of the symmetrized variable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .bistable import Bistable
from .errors import ConvergenceFailure, EmptyBoundary
from .evolve import LimitProfile
from .mesh import Grid, GridField


@dataclass(frozen=True, eq=False)
class SpectrumResult:
    """Ascending eigenvalues with w-orthonormal eigenfields and multiplet grouping."""

    eigenvalues: np.ndarray
    eigenfields: tuple
    problem: str
    h: float
    multiplets: tuple

    def multiplicity_of(self, k: int) -> int:
        for group in self.multiplets:
            if k in group:
                return len(group)
        return 1


def _symmetrized(grid: Grid, potential=None, free=None):
    """B = W^{-1/2} (-A) W^{-1/2} + diag(q) restricted to the free DOFs."""
    if free is None:
        free = np.arange(grid.n)
    free = np.asarray(free, dtype=int)
    d = 1.0 / np.sqrt(grid.w[free])
    A = grid.flux[np.ix_(free, free)]
    B = -sp.diags(d) @ A @ sp.diags(d)
    if potential is not None:
        q = np.asarray(potential, dtype=float)[free]
        B = B + sp.diags(q)
    return B.tocsc(), free


def smallest_eigs(grid: Grid, k: int, potential=None, dirichlet_dofs=(),
                  tol: float = 1e-10, max_iter: int = 20000, seed: int = 7):
    """Lowest k eigenpairs of -L + q with optional Dirichlet DOFs eliminated.

    Shift-invert power iteration with deflation; when progress stalls on a
    clustered spectrum the factorization is refreshed at a Rayleigh shift just
    below the current quotient, which restores fast one-sided convergence.
    Returns (values ascending, fields); fields vanish on the Dirichlet set and
    are orthonormal in the mass-weighted inner product.
    """
    mask = np.ones(grid.n, dtype=bool)
    mask[list(dirichlet_dofs)] = False
    free = np.nonzero(mask)[0]
    if len(free) <= k:
        raise ConvergenceFailure(f"only {len(free)} free DOFs for {k} modes")
    B, free = _symmetrized(grid, potential, free)
    n = B.shape[0]

    row_abs = np.abs(B) @ np.ones(n)
    sigma0 = float((B.diagonal() - (row_abs - np.abs(B.diagonal()))).min()) - 1.0
    ident = sp.identity(n, format="csc")
    base_lu = splu((B - sigma0 * ident).tocsc())

    rng = np.random.default_rng(seed)
    vectors, values = [], []
    refresh = 100
    for _ in range(k):
        lu = base_lu
        z = rng.standard_normal(n)
        for v in vectors:
            z -= (v @ z) * v
        z /= np.linalg.norm(z)
        theta_old, increment = np.inf, np.inf
        converged = False
        for it in range(max_iter):
            z = lu.solve(z)
            for v in vectors:
                z -= (v @ z) * v
            z /= np.linalg.norm(z)
            Bz = B @ z
            theta = float(z @ Bz)
            increment = abs(theta - theta_old)
            residual = float(np.linalg.norm(Bz - theta * z))
            if increment < tol * max(1.0, abs(theta)) and \
                    residual < 1e-10 * max(1.0, abs(theta)):
                converged = True
                break
            theta_old = theta
            if (it + 1) % refresh == 0:
                gap = max(100.0 * increment, 1e-10 * max(1.0, abs(theta)))
                lu = splu((B - (theta - gap) * ident).tocsc())
        if not converged:
            raise ConvergenceFailure(f"eigenvalue stalled at {theta:.6g}")
        vectors.append(z.copy())
        values.append(theta)

    order = np.argsort(values)
    vals = np.array([values[j] for j in order])
    fields = []
    for j in order:
        full = np.zeros(grid.n)
        full[free] = vectors[j] / np.sqrt(grid.w[free])
        fields.append(GridField(grid, full))
    return vals, tuple(fields)


def _group_multiplets(values: np.ndarray, tol: float):
    groups, current = [], [0]
    for k in range(1, len(values)):
        if values[k] - values[current[-1]] <= tol:
            current.append(k)
        else:
            groups.append(tuple(current))
            current = [k]
    groups.append(tuple(current))
    return tuple(groups)


def neumann_spectrum(grid: Grid, k: int) -> SpectrumResult:
    """First k eigenvalues of -L with no boundary conditions (Kirchhoff everywhere).

    The bottom eigenvalue is 0 with constant eigenfield; eigenvalues within
    10 h^2 of each other are reported as one multiplet.
    """
    vals, fields = smallest_eigs(grid, k)
    return SpectrumResult(eigenvalues=vals, eigenfields=fields, problem="neumann",
                          h=grid.h_target,
                          multiplets=_group_multiplets(vals, 10.0 * grid.h_target**2))


def poincare_constant(grid: Grid, boundary_dofs) -> float:
    """Optimal Poincare constant = smallest Dirichlet eigenvalue of -L."""
    boundary_dofs = list(boundary_dofs)
    if not boundary_dofs:
        raise EmptyBoundary("poincare_constant needs a boundary set")
    vals, _ = smallest_eigs(grid, 1, dirichlet_dofs=boundary_dofs)
    return float(vals[0])


def dirichlet_principal_eig(grid: Grid, potential, boundary_dofs):
    """Principal eigenpair of -L - diag(potential') style problems.

    ``potential`` enters with its own sign: pass -f'(v) for the stability
    operator.  The eigenfield is sign-normalized to be nonnegative.
    """
    boundary_dofs = list(boundary_dofs)
    if not boundary_dofs:
        raise EmptyBoundary("dirichlet principal eigenvalue needs a boundary set")
    vals, fields = smallest_eigs(grid, 1, potential=potential,
                                 dirichlet_dofs=boundary_dofs)
    phi = fields[0]
    peak = phi.values[np.argmax(np.abs(phi.values))]
    if peak < 0:
        phi = GridField(grid, -phi.values)
    return float(vals[0]), phi


def omega_r_boundary(grid: Grid, R: float):
    """Free mask and Dirichlet set for the truncation Omega^R of a full grid.

    Outer-path nodes beyond the nearest grid point to x = R are dropped; the
    node at R itself becomes the Dirichlet boundary P^R.
    """
    drop, boundary = [], []
    for p in grid.graph.outer_paths:
        x = grid.outer_coordinates(p.index)
        dofs = grid.outer_dofs(p.index)
        kb = int(np.argmin(np.abs(x - R)))
        if kb == 0:
            raise EmptyBoundary(f"R = {R} is below the first node of path {p.index}")
        boundary.append(int(dofs[kb]))
        drop.extend(int(d) for d in dofs[kb + 1:])
    return drop, boundary


def stability_eigenvalue(profile: LimitProfile, b: Bistable, R: float):
    """Principal Dirichlet eigenvalue of -L - f'(v) on Omega^R around a profile.

    Positive values certify linear stability against perturbations supported
    in the truncated core.
    """
    grid = profile.grid
    drop, boundary = omega_r_boundary(grid, R)
    potential = -np.asarray(b.fp(profile.field.values), dtype=float)
    vals, fields = smallest_eigs(grid, 1, potential=potential,
                                 dirichlet_dofs=drop + boundary)
    phi = fields[0]
    peak = phi.values[np.argmax(np.abs(phi.values))]
    if peak < 0:
        phi = GridField(grid, -phi.values)
    return float(vals[0]), phi


def rayleigh_quotient(grid: Grid, u: np.ndarray, potential=None) -> float:
    """(int |grad u|^2 + int q u^2) / int u^2 in the discrete inner products."""
    num = float(-u @ (grid.flux @ u))
    if potential is not None:
        num += float(np.sum(grid.w * np.asarray(potential) * u * u))
    den = float(np.sum(grid.w * u * u))
    return num / den
