import numpy as np
import pytest

from graphfront.bistable import make_cubic
from graphfront.errors import (BoundViolation, InvalidInitialClass, NoSteadyState,
                               OffsetOutOfRange, UnknownEdgeId)
from graphfront.evolve import (SolverParams, Stepper, cached_wave, cauchy_run,
                               evolve_to_steady, front_initial_data, limit_profile,
                               local_energy, run_to_steady, step)
from graphfront.graph import star_graph
from graphfront.mesh import discretize

from conftest import star_profile


@pytest.fixture(scope="module")
def b():
    return make_cubic(0.25)


def small_grid(b, n=3, truncation=20.0, h=0.1):
    return discretize(star_graph(n, truncation=truncation), h)


def test_equilibria_preserved(b):
    grid = small_grid(b)
    for val in (0.0, 0.25, 1.0):
        out = step(grid.constant(val), b, dt=0.1)
        assert np.abs(out.values - val).max() < 1e-14


def test_mass_conservation_without_reaction(b):
    import types
    grid = small_grid(b)
    rng = np.random.default_rng(5)
    u = rng.random(grid.n)
    pure_diffusion = types.SimpleNamespace(f=lambda s: np.zeros_like(s))
    stepper = Stepper(grid, pure_diffusion, dt=0.1)
    mass0 = float(np.dot(grid.w, u))
    for _ in range(25):
        u = stepper.step_values(u)
        assert abs(float(np.dot(grid.w, u)) - mass0) < 1e-12 * max(1.0, abs(mass0))


def test_energy_decreases_under_dirichlet_evolution(b):
    # reservoir-style initial-boundary problem: pinned value 1 at one vertex
    grid = small_grid(b, truncation=10.0, h=0.1)
    pin = {grid.vertex_dof["P"]: 1.0}
    u = grid.constant(0.0).values
    u[grid.vertex_dof["P"]] = 1.0
    stepper = Stepper(grid, b, dt=0.1, dirichlet=pin)
    from graphfront.mesh import GridField
    J = local_energy(GridField(grid, u), b)
    for _ in range(300):
        u = stepper.step_values(u)
        J_new = local_energy(GridField(grid, u), b)
        assert J_new <= J + 1e-10
        J = J_new


def test_comparison_principle_ordered_pairs(b):
    grid = small_grid(b, truncation=10.0, h=0.1)
    params = SolverParams(h=0.1)
    stepper = Stepper(grid, b, params.resolve_dt(b))
    rng = np.random.default_rng(11)
    for _ in range(12):
        x, y = rng.random(grid.n), rng.random(grid.n)
        u, w = np.minimum(x, y), np.maximum(x, y)
        for _ in range(30):
            u = stepper.step_values(u)
            w = stepper.step_values(w)
            assert float(np.min(w - u)) >= -1e-9


def test_front_initial_data_normalization(b):
    grid = small_grid(b)
    wave = cached_wave(b)
    u0 = front_initial_data(grid, b, 1, 12.0)
    x = grid.outer_coordinates(1)
    k0 = int(np.argmin(np.abs(x - 12.0)))
    assert u0.values[grid.outer_dofs(1)][k0] == pytest.approx(b.a, abs=1e-12)
    # far end is deep on the 1 side, exit point is exponentially small
    assert u0.values[grid.far_dof[1]] > 0.95
    assert u0.values[grid.exit_dof(1)] <= wave.value(12.0)
    for j in (2, 3):
        assert np.all(u0.values[grid.outer_dofs(j)[1:]] == 0.0)
    with pytest.raises(OffsetOutOfRange):
        front_initial_data(grid, b, 1, 25.0)


def test_zero_initial_data_stays_zero(b):
    grid = small_grid(b)
    prof = evolve_to_steady(grid.constant(0.0), b, SolverParams(h=0.1))
    assert np.abs(prof.field.values).max() == 0.0
    assert all(v == "block" for v in prof.classifications.values())


def test_three_star_propagates(registry, b25, star3_fast):
    prof = star3_fast
    assert all(v == "propagate" for v in prof.classifications.values())
    assert prof.sup_deficit() < 1e-3  # complete invasion on the star
    assert prof.monotone_violation <= 1e-10


def test_six_star_blocks_at_exact_root(registry, b25, star6_fast):
    prof = star6_fast
    assert all(v == "block" for v in prof.classifications.values())
    # F(1) + 24 F(xi) = 0 has the exact solution xi = 1/6 at a = 1/4
    assert prof.junction_values[1] == pytest.approx(1.0 / 6.0, abs=2e-4)
    assert prof.monotone_violation <= 1e-10
    for j in range(2, 7):
        assert prof.far_values[j] < 1e-2


def test_two_star_thickness_cases(registry, b25):
    prof14 = star_profile(registry, b25, (1.0, 4.0))
    assert prof14.classifications[2] == "propagate"
    prof14b = star_profile(registry, b25, (1.0, 4.0), source=2)
    assert prof14b.classifications[1] == "propagate"  # R <= 1 always passes
    prof15 = star_profile(registry, b25, (1.0, 5.0))
    assert prof15.classifications[2] == "block"


def test_junction_value_refines_at_second_order(registry, b25):
    values = {}
    for h in (0.2, 0.1, 0.05):
        prof = star_profile(registry, b25, 6, h=h, truncation=20.0)
        values[h] = prof.junction_values[1]
    e1 = abs(values[0.2] - values[0.1])
    e2 = abs(values[0.1] - values[0.05])
    order = np.log2(e1 / e2)
    assert order >= 1.8


def test_truncation_validation(b):
    g = star_graph(3, truncation=5.0)  # below 10 front widths = 20
    with pytest.raises(OffsetOutOfRange):
        limit_profile(g, b, 1, SolverParams(h=0.1))


def test_no_steady_state_cap(b):
    grid = small_grid(b)
    u0 = front_initial_data(grid, b, 1, 12.0)
    with pytest.raises(NoSteadyState):
        run_to_steady(u0, b, SolverParams(h=0.1, max_steps=3))


def test_bound_violation_with_trapezoidal_big_dt(b):
    grid = small_grid(b, h=0.05)
    u = grid.constant(0.0).values
    u[::2] = 1.0
    from graphfront.mesh import GridField
    with pytest.raises(BoundViolation):
        run_to_steady(GridField(grid, u), b,
                      SolverParams(h=0.05, dt=1.0, theta=0.5, max_steps=10))


def test_local_energy_examples(b):
    grid = small_grid(b, truncation=10.0, h=0.1)
    assert local_energy(grid.constant(0.0), b) == pytest.approx(0.0)
    J1 = local_energy(grid.constant(1.0), b, segments=["outer1"])
    assert J1 == pytest.approx(-10.0 * float(b.F(1.0)))
    with pytest.raises(UnknownEdgeId):
        local_energy(grid.constant(1.0), b, segments=["ghost"])


def test_cauchy_classes_reach_front_limit(registry, b25):
    g = star_graph(3, truncation=30.0)
    front = registry.get("cauchy-front",
                         lambda: limit_profile(g, b25, 1, SolverParams(h=0.05)))
    bump = cauchy_run(g, b25, 1, kind="bump", params=SolverParams(h=0.05))
    assert np.max(np.abs(bump.field.values - front.field.values)) < 1e-3
    plateau = cauchy_run(g, b25, 1, kind="plateau", params=SolverParams(h=0.05),
                         sigma=0.1, height=0.35, span=(4.0, 26.0))
    assert np.max(np.abs(plateau.field.values - front.field.values)) < 1e-3


def test_cauchy_invalid_class(b):
    g = star_graph(3, truncation=30.0)
    grid = discretize(g, 0.1)
    with pytest.raises(InvalidInitialClass):
        cauchy_run(g, b, 1, kind="plateau", params=SolverParams(h=0.1),
                   u0=grid.constant(0.0), sigma=0.05)


def test_front_offset_insensitivity(registry, b25):
    # the finite-time initialization approximates an entire solution: moving
    # the initial interface barely moves the limit profile
    g = star_graph(6, truncation=20.0)
    near = registry.get("x0-near", lambda: limit_profile(
        g, b25, 1, SolverParams(h=0.05, x0_frac=0.5)))
    far = registry.get("x0-far", lambda: limit_profile(
        g, b25, 1, SolverParams(h=0.05, x0_frac=0.7)))
    assert np.max(np.abs(near.field.values - far.field.values)) < 1e-4


def test_classification_margin_band(b):
    from graphfront.evolve import classify_value
    beta = b.beta
    assert classify_value(beta + 0.05, beta, 0.02) == "propagate"
    assert classify_value(beta - 0.05, beta, 0.02) == "block"
    assert classify_value(beta + 0.01, beta, 0.02) == "marginal"
