"""Linear and stationary machinery: harmonic boundary-value problems on the
center graph, Gauss-Green consistency residuals, the closed-form star
criterion with its explicit blocking profile, and gradient bounds.

Harmonic problems are solved exactly on vertex potentials using edge
conductances thickness/length (a harmonic function is linear on each edge),
so they provide grid-independent cross-checks for the discrete operator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .bistable import Bistable
from .errors import (EmptyBoundary, IncompatibleFlux, NotBlocking, SingularSystem)
from .graph import MetricGraph
from .mesh import Grid, GridField
from .phaseplane import Orbit1D, pulse, stable_manifold

PROPAGATE = "propagate"
BLOCK = "block"
MARGINAL = "marginal"


@dataclass(frozen=True, eq=False)
class HarmonicSolution:
    """Exact harmonic function: vertex potentials plus per-edge linear data."""

    graph: MetricGraph
    potentials: dict
    boundary: tuple
    outer_derivatives: dict      # formal derivative b_i per boundary vertex
    boundary_thickness: dict

    def edge_line(self, edge_id: str) -> tuple[float, float]:
        """(value at 'from' endpoint, slope along the edge)."""
        e = self.graph.edge(edge_id)
        ua = self.potentials[e.ends[0]]
        ub = self.potentials[e.ends[1]]
        return ua, (ub - ua) / e.length

    def value_on_edge(self, edge_id: str, s) -> np.ndarray:
        ua, slope = self.edge_line(edge_id)
        return ua + slope * np.asarray(s)

    def max_weighted_slope(self) -> float:
        """max over edges of thickness * |slope| (the mass flux magnitude)."""
        out = 0.0
        for e in self.graph.edges:
            _, slope = self.edge_line(e.id)
            out = max(out, e.thickness * abs(slope))
        return out

    def flux_balance(self) -> float:
        """Total formal boundary flux sum(rho_i * b_i); zero for harmonic fields."""
        return sum(self.boundary_thickness[q] * self.outer_derivatives[q]
                   for q in self.boundary)


def _vertex_laplacian(g: MetricGraph):
    ids = list(g.vertex_ids())
    pos = {v: k for k, v in enumerate(ids)}
    K = np.zeros((len(ids), len(ids)))
    for e in g.edges:
        a, b = pos[e.ends[0]], pos[e.ends[1]]
        if a == b:
            continue  # a loop carries no net flux between distinct potentials
        c = e.thickness / e.length
        K[a, a] += c
        K[b, b] += c
        K[a, b] -= c
        K[b, a] -= c
    return ids, pos, K


def _formal_derivatives(g, pos, K, u, boundary, thickness):
    ders = {}
    for q in boundary:
        discrepancy = float(K[pos[q]] @ u)   # sum of rho_e (u_q - u_nb) / L_e
        ders[q] = discrepancy / thickness[q]
    return ders


def harmonic_dirichlet(g: MetricGraph, boundary_values: dict,
                       boundary_thickness: dict | None = None) -> HarmonicSolution:
    """Solve Laplace's equation on the center graph with pinned vertex values.

    The solution is linear on each edge and satisfies the thickness-weighted
    junction condition exactly at every interior vertex; extrema sit on the
    boundary.
    """
    if not boundary_values:
        raise EmptyBoundary("harmonic_dirichlet needs boundary values")
    ids, pos, K = _vertex_laplacian(g)
    thickness = dict(boundary_thickness or {})
    for q in boundary_values:
        thickness.setdefault(q, 1.0)
    fixed = [pos[q] for q in boundary_values]
    free = [k for k in range(len(ids)) if k not in set(fixed)]
    u = np.zeros(len(ids))
    for q, val in boundary_values.items():
        u[pos[q]] = val
    if free:
        Kff = K[np.ix_(free, free)]
        rhs = -K[np.ix_(free, fixed)] @ u[fixed]
        try:
            u[free] = np.linalg.solve(Kff, rhs)
        except np.linalg.LinAlgError as exc:
            raise SingularSystem(str(exc)) from exc
    ders = _formal_derivatives(g, pos, K, u, tuple(boundary_values), thickness)
    return HarmonicSolution(graph=g, potentials=dict(zip(ids, u)),
                            boundary=tuple(boundary_values),
                            outer_derivatives=ders, boundary_thickness=thickness)


def harmonic_neumann(g: MetricGraph, fluxes, thicknesses: dict | None = None,
                     normalize: tuple[str, float] | None = None) -> HarmonicSolution:
    """Solve Laplace's equation with prescribed formal outer derivatives b_i.

    ``fluxes`` is either a mapping vertex -> b or an iterable of
    (vertex, rho, b) triples when several symbolic edges meet at one vertex.
    Solvable iff sum(rho_i * b_i) = 0; the solution is unique up to the
    additive constant fixed by ``normalize``.
    """
    if isinstance(fluxes, dict):
        rho = thicknesses or {}
        triples = [(q, rho.get(q, 1.0), b) for q, b in fluxes.items()]
    else:
        triples = list(fluxes)
    if not triples:
        raise EmptyBoundary("harmonic_neumann needs flux data")
    total = sum(r * b for _, r, b in triples)
    scale = max(abs(r * b) for _, r, b in triples) or 1.0
    if abs(total) > 1e-12 * max(1.0, scale):
        raise IncompatibleFlux(total)

    ids, pos, K = _vertex_laplacian(g)
    rhs = np.zeros(len(ids))
    thickness, bsum = {}, {}
    for q, r, b in triples:
        rhs[pos[q]] += r * b
        thickness[q] = r
        bsum[q] = bsum.get(q, 0.0) + b
    if normalize is None:
        normalize = (ids[0], 0.0)
    qn, val = normalize
    Kp = K.copy()
    Kp[pos[qn], :] = 0.0
    Kp[pos[qn], pos[qn]] = 1.0
    rhs_p = rhs.copy()
    rhs_p[pos[qn]] = val
    try:
        u = np.linalg.solve(Kp, rhs_p)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(str(exc)) from exc
    boundary = tuple(dict.fromkeys(q for q, _, _ in triples))
    return HarmonicSolution(graph=g, potentials=dict(zip(ids, u)), boundary=boundary,
                            outer_derivatives=bsum, boundary_thickness=thickness)


# --- Gauss-Green residual ---------------------------------------------------------

def gauss_green_residual(u, subgraph_segments=None, boundary=None) -> float:
    """|interior integral of Laplacian - boundary flux sum| on a subgraph.

    For exact :class:`HarmonicSolution` inputs this is the analytic flux
    balance.  For grid fields the interior integral uses the control-volume
    sums plus one-sided half-cell corrections at the boundary, and fluxes use
    second-order one-sided slopes, so discretely exact fields leave residuals
    at round-off while a converged profile shows its O(h^2) consistency error.
    """
    if isinstance(u, HarmonicSolution):
        return abs(u.flux_balance())

    grid: Grid = u.grid
    vals = u.values
    if subgraph_segments is None:
        subgraph_segments = grid.segment_ids
    subgraph_segments = list(subgraph_segments)
    if boundary is None:
        boundary = []
    boundary_dofs = [grid.vertex_dof[q] if isinstance(q, str) else int(q)
                     for q in boundary]
    bset = set(boundary_dofs)

    sub_dofs = set()
    for seg in subgraph_segments:
        sub_dofs.update(grid.segment_dofs(seg).tolist())
    interior = sorted(sub_dofs - bset)

    Au = grid.flux @ vals
    total = float(np.sum(Au[interior]))

    def oneside(seg, at_dof):
        dofs = grid.segment_dofs(seg)
        he = grid.segment_h(seg)
        if dofs[0] == at_dof:
            chain = dofs[:3]
        elif dofs[-1] == at_dof:
            chain = dofs[::-1][:3]
        else:
            return None
        if len(chain) < 3:
            chain = dofs if dofs[0] == at_dof else dofs[::-1]
            return (vals[chain[1]] - vals[chain[0]]) / he
        u0, u1, u2 = vals[chain[0]], vals[chain[1]], vals[chain[2]]
        return (-3.0 * u0 + 4.0 * u1 - u2) / (2.0 * he)

    flux = 0.0
    for bd in boundary_dofs:
        outward = [seg for seg in grid.segment_ids
                   if seg not in subgraph_segments and
                   bd in (grid.segment_dofs(seg)[0], grid.segment_dofs(seg)[-1])]
        if outward:
            for seg in outward:
                flux += grid.segment_thickness(seg) * oneside(seg, bd)
        else:
            for seg in subgraph_segments:
                d = oneside(seg, bd)
                if d is not None:
                    # outward = opposite of the into-subgraph direction
                    flux -= grid.segment_thickness(seg) * d
        # half-cell correction: the boundary control volume still belongs to D0
        for seg in subgraph_segments:
            dofs = grid.segment_dofs(seg)
            he = grid.segment_h(seg)
            if dofs[0] == bd:
                chain = dofs[:3]
            elif dofs[-1] == bd:
                chain = dofs[::-1][:3]
            else:
                continue
            if len(chain) == 3:
                sec = (vals[chain[0]] - 2.0 * vals[chain[1]] + vals[chain[2]]) / he**2
                total += grid.segment_thickness(seg) * (he / 2.0) * sec
    return abs(total - flux)


# --- star criterion and blocking profile ------------------------------------------

@dataclass(frozen=True)
class CriterionResult:
    """Sign decision F(1) + (R_i^2 - 1) F(a) for a star graph."""

    source: int
    R: float
    margin: float
    verdict: str

    def sweep_verdict(self, band: float = 0.003) -> str:
        """Three-way verdict used by sweeps: too close to call inside the band."""
        if self.margin > band:
            return PROPAGATE
        if self.margin < -band:
            return BLOCK
        return MARGINAL


def star_criterion(b: Bistable, thicknesses, i: int) -> CriterionResult:
    """Closed-form propagation/blocking decision for a star graph.

    Strictly positive margin means propagation to every other path; margin
    <= 0 means blocking on every other path.
    """
    rho = np.asarray(thicknesses, dtype=float)
    if len(rho) < 2 or np.any(rho <= 0):
        raise ValueError("need N >= 2 positive thicknesses")
    if not 1 <= i <= len(rho):
        raise ValueError(f"source index {i} out of range")
    R = float((rho.sum() - rho[i - 1]) / rho[i - 1])
    margin = float(b.F(1.0) + (R * R - 1.0) * b.F(b.a))
    return CriterionResult(source=i, R=R, margin=margin,
                           verdict=PROPAGATE if margin > 0 else BLOCK)


@dataclass(frozen=True, eq=False)
class StationaryProfile:
    """Explicit blocking steady state on a star: junction value xi and branches."""

    xi: float
    xi_other: float
    source: int
    thicknesses: tuple
    branch_source: Orbit1D
    branch_tail: Orbit1D       # pulse orbit; tails are shifts of it
    tail_shift: float
    kirchhoff_residual: float

    def branch_value(self, j: int, x):
        if j == self.source:
            return self.branch_source.value(x)
        return self.branch_tail.value(np.asarray(x) + self.tail_shift)

    def evaluate(self, grid: Grid) -> GridField:
        """Sample the profile on a star grid (center vertex carries xi)."""
        values = np.zeros(grid.n)
        values[grid.exit_dof(self.source)] = self.xi
        for p in grid.graph.outer_paths:
            x = grid.outer_coordinates(p.index)
            values[grid.outer_dofs(p.index)] = self.branch_value(p.index, x)
        return GridField(grid, values)


def star_blocking_profile(b: Bistable, thicknesses, i: int,
                          xmax: float = 40.0) -> StationaryProfile:
    """The stationary profile blocking a strictly sub-critical star.

    The junction value solves F(1) + (R_i^2 - 1) F(xi) = 0; two roots exist in
    (0, beta) and the smaller one (the value the limit profile selects) is
    returned, with the other exposed as ``xi_other``.
    """
    crit = star_criterion(b, thicknesses, i)
    if crit.margin >= 0:
        raise NotBlocking(f"margin {crit.margin:.6g} is not strictly negative")
    R2m1 = crit.R * crit.R - 1.0
    F1 = float(b.F(1.0))

    def G(xi):
        return F1 + R2m1 * float(b.F(xi))

    xi_lo = brentq(G, 1e-14, b.a, xtol=1e-15)
    xi_hi = brentq(G, b.a, b.beta - 1e-14, xtol=1e-15)

    rho = np.asarray(thicknesses, dtype=float)
    rho_i = rho[i - 1]
    others = rho.sum() - rho_i
    Fxi = float(b.F(xi_lo))
    resid = abs(rho_i * math.sqrt(2.0 * (F1 - Fxi)) - others * math.sqrt(-2.0 * Fxi))

    branch_src = stable_manifold(b, xi_lo, xmax=xmax)
    V = pulse(b, xmax=xmax)
    half = V.x >= 0.0
    shift = float(np.interp(-xi_lo, -V.v[half], V.x[half]))  # V(shift) = xi
    return StationaryProfile(xi=float(xi_lo), xi_other=float(xi_hi), source=i,
                             thicknesses=tuple(float(r) for r in rho),
                             branch_source=branch_src, branch_tail=V,
                             tail_shift=shift, kirchhoff_residual=resid)


# --- barrier above a perturbed blocking star (harmonic construction) --------------

@dataclass(frozen=True, eq=False)
class StarReplacementBarrier:
    """Supersolution data for a star whose center was replaced by a small graph D."""

    harmonic: HarmonicSolution
    delta: float
    source: int
    xi: dict                 # h(P_j) for each non-source path
    bound_constant: float    # C with a - C|D| <= xi_j <= a
    b_values: dict

    def max_at_source_exit(self) -> bool:
        g = self.harmonic.graph
        src_exit = g.outer(self.source).exit_vertex
        top = max(self.harmonic.potentials.values())
        return abs(self.harmonic.potentials[src_exit] - top) <= 1e-12

    def evaluate(self, b: Bistable, grid: Grid) -> GridField:
        """Sample the barrier v+ on a grid of the replaced-center graph."""
        g = grid.graph
        values = np.zeros(grid.n)
        for v in g.vertices:
            values[grid.vertex_dof[v.id]] = self.harmonic.potentials[v.id]
        for e in g.edges:
            s = grid.segment_arclength(e.id)
            values[grid.segment_dofs(e.id)] = self.harmonic.value_on_edge(e.id, s)
        U = stable_manifold(b, b.a, xmax=max(p.truncation for p in g.outer_paths))
        V = pulse(b, xmax=max(p.truncation for p in g.outer_paths) + 20.0)
        half = V.x >= 0.0
        for p in g.outer_paths:
            x = grid.outer_coordinates(p.index)
            if p.index == self.source:
                values[grid.outer_dofs(p.index)] = U.value(x)
            else:
                xi_j = self.xi[p.index]
                shift = float(np.interp(-xi_j, -V.v[half], V.x[half]))
                values[grid.outer_dofs(p.index)] = V.value(x + shift)
        return GridField(grid, values)


def star_replacement_barrier(b: Bistable, g: MetricGraph, i: int) -> StarReplacementBarrier:
    """Harmonic barrier over the center graph of a perturbed blocking star.

    Solves the Neumann problem with outgoing data sqrt(2(F(1)-F(a))) on the
    source exit and -sqrt(-2 F(a)) + delta on the others, where delta restores
    the exact flux balance; requires the underlying star to block strictly.
    """
    rho = [p.thickness for p in g.outer_paths]
    crit = star_criterion(b, rho, i)
    if crit.margin >= 0:
        raise NotBlocking(f"margin {crit.margin:.6g}; the base star must block strictly")
    F1 = float(b.F(1.0))
    Fa = float(b.F(b.a))
    rho_i = g.outer(i).thickness
    others = sum(p.thickness for p in g.outer_paths if p.index != i)
    delta = math.sqrt(-2.0 * Fa) - rho_i * math.sqrt(2.0 * (F1 - Fa)) / others

    b_src = math.sqrt(2.0 * (F1 - Fa))
    b_oth = -math.sqrt(-2.0 * Fa) + delta
    triples, b_values = [], {}
    for p in g.outer_paths:
        bj = b_src if p.index == i else b_oth
        triples.append((p.exit_vertex, p.thickness, bj))
        b_values[p.index] = bj
    src_exit = g.outer(i).exit_vertex
    h = harmonic_neumann(g, triples, normalize=(src_exit, b.a))
    xi = {p.index: h.potentials[p.exit_vertex] for p in g.outer_paths if p.index != i}
    flux_budget = 0.5 * sum(p.thickness * abs(b_values[p.index]) for p in g.outer_paths)
    rho_min = min((e.thickness for e in g.edges), default=1.0)
    C = flux_budget / rho_min**2
    return StarReplacementBarrier(harmonic=h, delta=delta, source=i, xi=xi,
                                  bound_constant=C, b_values=b_values)


# --- gradient bound ---------------------------------------------------------------

@dataclass(frozen=True)
class GradientReport:
    max_weighted_slope: float
    bound: float
    slack: float
    passed: bool


def gradient_bound_check(v: GridField, b: Bistable, slack: float = 0.05) -> GradientReport:
    """Check max over center edges of rho |du/dx| against the a-priori bound.

    The bound is f_max |D| + N rho_max sqrt(2 (F(1) - F(a))); a star center is
    empty so only the flux term remains.
    """
    g = v.grid.graph
    worst = 0.0
    for e in g.edges:
        dofs = v.grid.segment_dofs(e.id)
        he = v.grid.segment_h(e.id)
        slopes = np.abs(np.diff(v.values[dofs])) / he
        if len(slopes):
            worst = max(worst, e.thickness * float(slopes.max()))
    rho_max = max(p.thickness for p in g.outer_paths)
    bound = b.f_max * g.total_length() + g.n_outer * rho_max * math.sqrt(
        2.0 * (float(b.F(1.0)) - float(b.F(b.a))))
    return GradientReport(max_weighted_slope=worst, bound=bound, slack=slack,
                          passed=worst <= bound * (1.0 + slack))
