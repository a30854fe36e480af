"""Time integration to steady state and extraction of limit profiles.

Diffusion is treated implicitly through a theta-scheme (default fully
implicit), reaction explicitly; with dt <= 0.5 / max|f'| the update map is
order preserving and keeps fields inside [0, 1] exactly, which makes the
comparison-principle and energy-decay checks sharp.  Steady state is detected
by the rate norm ||u(t+dt) - u(t)||_inf / dt, which keeps working when a
blocked profile creeps along the slow homoclinic direction.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .bistable import Bistable
from .errors import (BoundViolation, InvalidInitialClass, LinearSolveFailure,
                     NoSteadyState, OffsetOutOfRange, UnknownEdgeId)
from .graph import MetricGraph
from .mesh import Grid, GridField, discretize
from .phaseplane import WaveProfile, interval_bump, stable_manifold, traveling_wave

PROPAGATE = "propagate"
BLOCK = "block"
MARGINAL = "marginal"


@dataclass(frozen=True)
class SolverParams:
    """Numerical knobs for a limit-profile run."""

    h: float = 0.02
    dt: float | None = None          # default min(h, 0.5 / max|f'|)
    tol: float = 1e-8
    margin: float = 0.02
    x0_frac: float = 0.6
    max_steps: int = 10**6
    theta: float = 1.0               # 1 = backward Euler, 0.5 = trapezoidal
    probes: int = 16
    monotone_burn_in: float = 5.0    # time before the probe monotonicity check arms
    max_doublings: int = 2
    allow_coarse_edges: bool = False

    def resolve_dt(self, b: Bistable) -> float:
        if self.dt is not None:
            return self.dt
        s = np.linspace(0.0, 1.0, 2001)
        fp_max = float(np.max(np.abs(np.asarray(b.fp(s)))))
        return min(self.h, 0.5 / fp_max)


@dataclass(frozen=True, eq=False)
class LimitProfile:
    """Steady state of a front run plus per-path classification."""

    grid: Grid
    field: GridField
    source: int | None
    beta: float
    margin: float
    junction_values: dict
    far_values: dict
    classifications: dict
    residual: float
    steps: int
    monotone_violation: float
    doublings: int = 0

    @property
    def graph(self) -> MetricGraph:
        return self.grid.graph

    def trace(self, index: int):
        """(x, values) of the profile along one outer path."""
        dofs = self.grid.outer_dofs(index)
        return self.grid.outer_coordinates(index), self.field.values[dofs]

    def sup_deficit(self) -> float:
        return float(np.max(1.0 - self.field.values))


@dataclass(frozen=True)
class PropagationMatrix:
    """Entries PR(i, j) in {"1", "0", "?"}; the diagonal is undefined."""

    indices: tuple
    entries: dict
    transitivity_violations: tuple = ()

    def entry(self, i: int, j: int) -> str:
        return self.entries[(i, j)]

    def row(self, i: int) -> dict:
        return {j: self.entries[(i, j)] for j in self.indices if j != i}


def classify_value(value: float, beta: float, margin: float) -> str:
    if value > beta + margin:
        return PROPAGATE
    if value < beta - margin:
        return BLOCK
    return MARGINAL


class Stepper:
    """Prefactored theta-IMEX step for one (grid, nonlinearity, dt) triple."""

    def __init__(self, grid: Grid, b: Bistable, dt: float, theta: float = 1.0,
                 dirichlet: dict | None = None):
        self.grid = grid
        self.b = b
        self.dt = dt
        self.theta = theta
        self.dirichlet = dict(dirichlet) if dirichlet else {}
        W = sp.diags(grid.w)
        A = grid.flux
        M = (W - dt * theta * A).tocsr()
        if self.dirichlet:
            fixed = np.fromiter(self.dirichlet, dtype=int)
            free = np.ones(grid.n)
            free[fixed] = 0.0
            M = sp.diags(free) @ M + sp.diags(1.0 - free)
        try:
            self.lu = splu(M.tocsc())
        except RuntimeError as exc:  # pragma: no cover
            raise LinearSolveFailure(str(exc)) from exc
        self.B = (W + dt * (1.0 - theta) * A).tocsr() if theta < 1.0 else W.tocsr()

    def step_values(self, u: np.ndarray) -> np.ndarray:
        rhs = self.B @ u + self.dt * self.grid.w * np.asarray(self.b.f(u))
        for k, val in self.dirichlet.items():
            rhs[k] = val
        out = self.lu.solve(rhs)
        if not np.all(np.isfinite(out)):
            raise LinearSolveFailure("non-finite values after implicit solve")
        return out


def step(u: GridField, b: Bistable, dt: float, theta: float = 1.0,
         dirichlet: dict | None = None) -> GridField:
    """Single IMEX step; equilibria of f are preserved exactly."""
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    stepper = Stepper(u.grid, b, dt, theta, dirichlet)
    return GridField(u.grid, stepper.step_values(u.values))


@functools.lru_cache(maxsize=8)
def cached_wave(b: Bistable) -> WaveProfile:
    return traveling_wave(b)


def front_initial_data(grid: Grid, b_or_wave, i: int, x0: float) -> GridField:
    """Front placed on outer path i: 1 toward the far end, ~0 at the exit point.

    x0 is the interface position (value a there); it is snapped to the nearest
    grid node so the normalization is exact.
    """
    wave = b_or_wave if isinstance(b_or_wave, WaveProfile) else cached_wave(b_or_wave)
    trunc = grid.graph.outer(i).truncation
    if not 0.0 < x0 < trunc:
        raise OffsetOutOfRange(f"x0 = {x0} outside (0, {trunc})")
    x = grid.outer_coordinates(i)
    x0 = float(x[np.argmin(np.abs(x - x0))])
    values = np.zeros(grid.n)
    values[grid.outer_dofs(i)] = wave.value(x0 - x)
    return GridField(grid, values)


@dataclass
class _RunStats:
    steps: int = 0
    residual: float = np.inf
    monotone_violation: float = 0.0
    initial_dip: float = 0.0
    energy_trace: list = field(default_factory=list)


def run_to_steady(u0: GridField, b: Bistable, params: SolverParams,
                  dirichlet: dict | None = None, energy_segments=None) -> tuple[GridField, _RunStats]:
    """Iterate until the rate norm drops below tolerance; returns field + diagnostics."""
    grid = u0.grid
    dt = params.resolve_dt(b)
    stepper = Stepper(grid, b, dt, params.theta, dirichlet)
    u = u0.values.copy()
    probes = grid.probe_dofs(params.probes)
    stats = _RunStats()
    if energy_segments is not None:
        stats.energy_trace.append(local_energy(GridField(grid, u), b, energy_segments))
    burn_in_steps = int(np.ceil(params.monotone_burn_in / dt))
    for k in range(1, params.max_steps + 1):
        u_new = stepper.step_values(u)
        lo, hi = float(u_new.min()), float(u_new.max())
        if lo < -1e-8 or hi > 1.0 + 1e-8:
            raise BoundViolation(f"range [{lo:.3e}, {hi:.3e}] at step {k}; reduce dt")
        # the first few steps relax the projected front onto the discrete
        # profile; the entire-solution monotonicity check arms after burn-in
        dip = float(np.max(u[probes] - u_new[probes]))
        if k <= burn_in_steps:
            stats.initial_dip = max(stats.initial_dip, dip)
        elif dip > stats.monotone_violation:
            stats.monotone_violation = dip
        if energy_segments is not None:
            stats.energy_trace.append(local_energy(GridField(grid, u_new), b,
                                                   energy_segments))
        rate = float(np.max(np.abs(u_new - u))) / dt
        u = u_new
        stats.steps = k
        stats.residual = rate
        if rate < params.tol:
            return GridField(grid, u), stats
    raise NoSteadyState(f"rate {stats.residual:.3e} after {params.max_steps} steps")


def evolve_to_steady(u0: GridField, b: Bistable, params: SolverParams = SolverParams(),
                     source: int | None = None) -> LimitProfile:
    """Run to steady state and classify every junction against beta."""
    out, stats = run_to_steady(u0, b, params)
    return _profile_from_field(out, b, params, source, stats, doublings=0)


def _profile_from_field(out: GridField, b, params, source, stats, doublings) -> LimitProfile:
    grid = out.grid
    junction, far, verdicts = {}, {}, {}
    for p in grid.graph.outer_paths:
        val = float(out.values[grid.exit_dof(p.index)])
        junction[p.index] = val
        far[p.index] = float(out.values[grid.far_dof[p.index]])
        verdicts[p.index] = classify_value(val, b.beta, params.margin)
    return LimitProfile(grid=grid, field=out, source=source, beta=b.beta,
                        margin=params.margin, junction_values=junction,
                        far_values=far, classifications=verdicts,
                        residual=stats.residual, steps=stats.steps,
                        monotone_violation=stats.monotone_violation,
                        doublings=doublings)


def _interface_near_far_end(profile: LimitProfile, a: float, safety: float = 10.0):
    """Outer paths whose level-a crossing sits within `safety` of the far end."""
    flagged = []
    for p in profile.graph.outer_paths:
        x, vals = profile.trace(p.index)
        cross = np.nonzero(np.diff(np.sign(vals - a)) != 0)[0]
        if len(cross) and x[cross[-1]] > p.truncation - safety:
            flagged.append(p.index)
    return flagged


def limit_profile(g: MetricGraph, b: Bistable, i: int,
                  params: SolverParams = SolverParams()) -> LimitProfile:
    """Full pipeline: mesh, place the incoming front on path i, evolve, classify.

    If the steady interface ends up within 10 arclength units of a truncated
    far end, the offending truncations are doubled and the run repeats.
    """
    min_trunc = 10.0 * b.front_width()
    for p in g.outer_paths:
        if p.truncation < min_trunc - 1e-12:
            raise OffsetOutOfRange(
                f"truncation {p.truncation} on path {p.index} is below "
                f"10 front widths ({min_trunc:.3g})")
    doublings = 0
    graph = g
    while True:
        grid = discretize(graph, params.h, allow_coarse_edges=params.allow_coarse_edges)
        u0 = front_initial_data(grid, b, i, params.x0_frac * graph.outer(i).truncation)
        out, stats = run_to_steady(u0, b, params)
        profile = _profile_from_field(out, b, params, i, stats, doublings)
        flagged = [j for j in _interface_near_far_end(profile, b.a) if j != i]
        if not flagged or doublings >= params.max_doublings:
            return profile
        outers = tuple(replace(p, truncation=2 * p.truncation) if p.index in flagged
                       else p for p in graph.outer_paths)
        graph = replace(graph, outer_paths=outers)
        doublings += 1


def local_energy(u: GridField, b: Bistable, segments=None,
                 boundary_dofs=None) -> float:
    """Trapezoidal energy int (|grad u|^2 / 2 - F(u)) over the given segments.

    Matches the discrete Lyapunov functional of the theta-scheme exactly when
    the segments cover the whole grid.
    """
    grid = u.grid
    if segments is None:
        segments = grid.segment_ids
    total = 0.0
    for seg in segments:
        if seg not in grid.segment_ids:
            raise UnknownEdgeId(seg)
        dofs = grid.segment_dofs(seg)
        he = grid.segment_h(seg)
        rho = grid.segment_thickness(seg)
        vals = u.values[dofs]
        grad_part = float(np.sum(np.diff(vals) ** 2)) / (2.0 * he)
        Fv = np.asarray(b.F(vals))
        potential = float(np.trapezoid(Fv, dx=he))
        total += rho * (grad_part - potential)
    return total


# --- Cauchy-problem classes --------------------------------------------------

def bump_initial_data(grid: Grid, b: Bistable, i: int, R: float | None = None,
                      offset: float | None = None) -> GridField:
    """Compactly supported bump on path i (class (a) data)."""
    r_min_pad = 1.0
    if R is None:
        from .phaseplane import _bump_r_min
        R = _bump_r_min(b)[0] + r_min_pad
    if offset is None:
        offset = R + 1.0
    psi = interval_bump(b, R, b_offset=offset)
    values = np.zeros(grid.n)
    x = grid.outer_coordinates(i)
    values[grid.outer_dofs(i)] = psi.value(x)
    return GridField(grid, values)


def plateau_initial_data(grid: Grid, b: Bistable, i: int, height: float,
                         span: tuple[float, float], ramp: float = 2.0) -> GridField:
    """Smoothed plateau min(H, height * indicator(span)) on path i (class (b) data)."""
    H = stable_manifold(b, 0.0, xmax=grid.graph.outer(i).truncation)
    x = grid.outer_coordinates(i)
    lo, hi = span
    bump = np.clip(np.minimum((x - lo) / ramp, (hi - x) / ramp), 0.0, 1.0)
    smooth = 0.5 - 0.5 * np.cos(np.pi * bump)
    values = np.zeros(grid.n)
    values[grid.outer_dofs(i)] = np.minimum(H.value(x), height * smooth)
    return GridField(grid, values)


def validate_cauchy_class(u0: GridField, b: Bistable, i: int, kind: str,
                          sigma: float = 0.05, min_interval: float | None = None) -> None:
    """Check the sandwich conditions of Cauchy classes (a) and (b); raise on failure."""
    grid = u0.grid
    on_path = np.zeros(grid.n, dtype=bool)
    on_path[grid.outer_dofs(i)] = True
    off = u0.values.copy()
    off[on_path] = 0.0
    bad = np.nonzero(np.abs(off) > 1e-12)[0]
    if len(bad):
        raise InvalidInitialClass(f"support leaks off path {i} at dof {bad[0]}",
                                  dof=int(bad[0]))
    x = grid.outer_coordinates(i)
    vals = u0.values[grid.outer_dofs(i)]
    H = stable_manifold(b, 0.0, xmax=float(x[-1]))
    over = np.nonzero(vals > H.value(x) + 1e-9)[0]
    if len(over):
        raise InvalidInitialClass(
            f"u0 exceeds the stable-manifold cap at x = {x[over[0]]:.3g}",
            dof=int(grid.outer_dofs(i)[over[0]]))
    if kind == "bump":
        from .phaseplane import _bump_r_min
        r_min = _bump_r_min(b)[0]
        psi = interval_bump(b, r_min + 1.0, b_offset=r_min + 2.0)
        under = np.nonzero(vals < psi.value(x) - 1e-9)[0]
        if len(under):
            raise InvalidInitialClass(
                f"u0 drops below the bump subsolution at x = {x[under[0]]:.3g}",
                dof=int(grid.outer_dofs(i)[under[0]]))
    elif kind == "plateau":
        if min_interval is None:
            from .phaseplane import _bump_r_min
            min_interval = 2.0 * _bump_r_min(b)[0] + 2.0
        above = vals >= b.a + sigma
        best = run = 0.0
        for k in range(1, len(x)):
            if above[k] and above[k - 1]:
                run += x[k] - x[k - 1]
                best = max(best, run)
            else:
                run = 0.0
        if best < min_interval:
            raise InvalidInitialClass(
                f"no interval of length {min_interval:.3g} with u0 >= a + sigma "
                f"(longest: {best:.3g})")
    else:
        raise ValueError(f"unknown Cauchy class {kind!r}")


def cauchy_run(g: MetricGraph, b: Bistable, i: int, kind: str = "bump",
               params: SolverParams = SolverParams(), u0: GridField | None = None,
               sigma: float = 0.05, **data_kwargs) -> LimitProfile:
    """Evolve class (a)/(b) initial data supported on path i to its steady state."""
    grid = discretize(g, params.h, allow_coarse_edges=params.allow_coarse_edges)
    if u0 is None:
        if kind == "bump":
            u0 = bump_initial_data(grid, b, i, **data_kwargs)
        elif kind == "plateau":
            u0 = plateau_initial_data(grid, b, i, **data_kwargs)
        else:
            raise ValueError(f"unknown Cauchy class {kind!r}")
    validate_cauchy_class(u0, b, i, kind, sigma=sigma)
    out, stats = run_to_steady(u0, b, params)
    return _profile_from_field(out, b, params, i, stats, doublings=0)
