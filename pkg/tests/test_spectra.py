import numpy as np
import pytest

from graphfront.errors import EmptyBoundary
from graphfront.evolve import SolverParams
from graphfront.graph import Edge, bounded_graph, melon_graph, star_graph
from graphfront.mesh import discretize
from graphfront.spectra import (dirichlet_principal_eig, neumann_spectrum,
                                omega_r_boundary, poincare_constant,
                                rayleigh_quotient, smallest_eigs,
                                stability_eigenvalue)

from conftest import star_profile


def path(length=1.0):
    return bounded_graph("path", ["A", "B"], [Edge("e", ("A", "B"), length, 1.0)])


def test_poincare_path_both_ends():
    grid = discretize(path(), 0.01)
    lam = poincare_constant(grid, [grid.vertex_dof["A"], grid.vertex_dof["B"]])
    assert lam == pytest.approx(np.pi**2, rel=1e-3)
    # the scheme is eigen-exact for trigonometric modes on uniform grids
    h = grid.segment_h("e")
    assert lam == pytest.approx(2.0 * (1.0 - np.cos(np.pi * h)) / h**2, rel=1e-10)


def test_poincare_path_one_end():
    grid = discretize(path(), 0.01)
    lam = poincare_constant(grid, [grid.vertex_dof["A"]])
    assert lam == pytest.approx((np.pi / 2) ** 2, rel=1e-3)
    with pytest.raises(EmptyBoundary):
        poincare_constant(grid, [])


def test_neumann_path_spectrum():
    grid = discretize(path(), 0.01)
    spec = neumann_spectrum(grid, 2)
    assert spec.eigenvalues[0] == pytest.approx(0.0, abs=1e-10)
    const = spec.eigenfields[0].values
    assert np.max(np.abs(const - const[0])) < 1e-10
    assert spec.eigenvalues[1] == pytest.approx(np.pi**2, rel=1e-3)


def test_melon_multiplet_and_value():
    grid = discretize(melon_graph(3, 1.0), 0.01)
    spec = neumann_spectrum(grid, 5)
    mu1 = spec.eigenvalues[1]
    assert abs(mu1 - np.pi**2) / np.pi**2 < 0.01
    assert spec.multiplicity_of(1) == 3
    assert spec.multiplets[1] == (1, 2, 3)


def test_melon_convergence_order():
    errors = []
    for h in (0.04, 0.02, 0.01):
        grid = discretize(melon_graph(3, 1.0), h)
        spec = neumann_spectrum(grid, 2)
        errors.append(abs(spec.eigenvalues[1] - np.pi**2))
    order1 = np.log2(errors[0] / errors[1])
    order2 = np.log2(errors[1] / errors[2])
    assert order1 >= 1.8 and order2 >= 1.8


def test_rayleigh_quotient_reproduces_eigenvalue():
    grid = discretize(melon_graph(3, 1.0), 0.02)
    vals, fields = smallest_eigs(grid, 3)
    for lam, phi in zip(vals, fields):
        rq = rayleigh_quotient(grid, phi.values)
        assert abs(rq - lam) < 1e-10 * max(1.0, abs(lam))
    # eigenfields are orthonormal in the mass-weighted inner product
    for i, pi in enumerate(fields):
        for j, pj in enumerate(fields):
            ip = float(np.sum(grid.w * pi.values * pj.values))
            assert ip == pytest.approx(1.0 if i == j else 0.0, abs=1e-8)


def test_random_fields_respect_poincare():
    grid = discretize(path(), 0.02)
    boundary = [grid.vertex_dof["A"], grid.vertex_dof["B"]]
    lam = poincare_constant(grid, boundary)
    rng = np.random.default_rng(9)
    for _ in range(100):
        w = rng.standard_normal(grid.n)
        w[boundary] = 0.0
        assert rayleigh_quotient(grid, w) >= lam - 1e-9


def test_dirichlet_principal_with_potential():
    # constant background v = 1: lambda = (pi / (2R))^2 + |f'(1)|
    grid = discretize(bounded_graph("seg", ["A", "B"],
                                    [Edge("e", ("A", "B"), 2.0, 1.0)]), 0.01)
    q = np.full(grid.n, 0.75)
    lam, phi = dirichlet_principal_eig(grid, q,
                                       [grid.vertex_dof["A"], grid.vertex_dof["B"]])
    assert lam == pytest.approx((np.pi / 2) ** 2 + 0.75, rel=1e-3)
    assert lam == pytest.approx(3.2174, abs=1e-3)
    assert phi.values.min() >= -1e-9  # principal eigenfield has one sign
    assert phi.values[grid.vertex_dof["A"]] == 0.0


def test_stability_positive_and_decreasing(registry, b25):
    prof = star_profile(registry, b25, 3)
    lam20, _ = stability_eigenvalue(prof, b25, R=20.0)
    lam10, _ = stability_eigenvalue(prof, b25, R=10.0)
    assert lam20 > -1e-6 and lam10 > -1e-6
    assert lam20 < lam10  # strictly decreasing in R
    prof6 = star_profile(registry, b25, 6)
    lam6, phi6 = stability_eigenvalue(prof6, b25, R=20.0)
    assert lam6 > -1e-6
    assert phi6.values.min() >= -1e-8


def test_omega_r_mask():
    grid = discretize(star_graph(3, truncation=20.0), 0.1)
    drop, boundary = omega_r_boundary(grid, 10.0)
    for dof in boundary:
        assert dof not in drop
    x1 = grid.outer_coordinates(1)
    dofs1 = grid.outer_dofs(1)
    kept = [d for d in dofs1 if d not in set(drop)]
    assert np.max(x1[: len(kept)]) <= 10.0 + 1e-9


def test_profile_slopes_have_single_sign_change(registry, b25):
    # stable profiles cannot oscillate along an edge (at most one interior
    # stationary point per edge)
    from graphfront.scenarios import double_branching
    from graphfront.evolve import limit_profile
    g = double_branching(8.0, truncation=20.0)
    prof = registry.get("double-branching",
                        lambda: limit_profile(g, b25, 1, SolverParams(h=0.05)))
    for seg in prof.grid.segment_ids:
        vals = prof.field.values[prof.grid.segment_dofs(seg)]
        if vals.max() - vals.min() < 1e-6:
            continue
        slopes = np.diff(vals)
        signs = np.sign(slopes[np.abs(slopes) > 1e-7 * np.abs(slopes).max()])
        changes = int(np.sum(np.abs(np.diff(signs)) > 0))
        assert changes <= 1
