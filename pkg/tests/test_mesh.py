import numpy as np
import pytest

from graphfront.errors import SpacingTooCoarse, UnknownEdgeId
from graphfront.graph import Edge, bounded_graph, melon_graph, star_graph, \
    two_star_bridge
from graphfront.mesh import assemble_operator, discretize


def single_edge(length=1.0, rho=1.0):
    return bounded_graph("seg", ["A", "B"], [Edge("e", ("A", "B"), length, rho)])


def test_single_edge_dof_layout():
    grid = discretize(single_edge(), 0.25)
    assert grid.n == 5
    wa = grid.w[grid.vertex_dof["A"]]
    wb = grid.w[grid.vertex_dof["B"]]
    assert wa == pytest.approx(0.25 / 2)
    assert wb == pytest.approx(0.25 / 2)
    interior = grid.segment_dofs("e")[1:-1]
    assert np.allclose(grid.w[interior], 0.25)


def test_star_center_mass():
    grid = discretize(star_graph(3, truncation=1.0), 0.25)
    assert grid.w[grid.vertex_dof["P"]] == pytest.approx(3 * 0.25 / 2)


def test_vertex_mass_is_half_cell_sum():
    g = two_star_bridge(2, 2.0, truncation=3.0)
    grid = discretize(g, 0.25)
    k = grid.vertex_dof["P1"]
    # bridge half-cell + two outer half-cells
    assert grid.w[k] == pytest.approx(3 * 0.25 / 2)


def test_total_mass_equals_weighted_length():
    g = two_star_bridge(2, 2.0, truncation=3.0)
    grid = discretize(g, 0.25)
    assert grid.weighted_total() == pytest.approx(2.0 + 4 * 3.0)
    gm = discretize(melon_graph(4, 0.5, thickness=2.0), 0.1)
    assert gm.weighted_total() == pytest.approx(4.0)


def test_constant_field_in_kernel():
    g = two_star_bridge(2, 2.0, truncation=3.0)
    op = assemble_operator(discretize(g, 0.25))
    u = np.full(op.grid.n, 0.37)
    assert np.abs(op.apply(u)).max() < 1e-14


def test_operator_symmetric_nonpositive():
    rng = np.random.default_rng(3)
    for g in (star_graph(4, truncation=2.0), melon_graph(3, 1.0),
              two_star_bridge(2, 1.5, truncation=2.0)):
        op = assemble_operator(discretize(g, 0.2))
        u, v = rng.random(op.grid.n), rng.random(op.grid.n)
        assert abs(op.inner(op.apply(u), v) - op.inner(u, op.apply(v))) < 1e-12
        assert op.inner(op.apply(u), u) <= 1e-14


def test_linear_field_exact_on_interior():
    grid = discretize(single_edge(), 0.1)
    op = assemble_operator(grid)
    s = grid.segment_arclength("e")
    u = np.zeros(grid.n)
    u[grid.segment_dofs("e")] = 2.0 * s + 1.0
    res = op.apply(u)
    interior = grid.segment_dofs("e")[1:-1]
    assert np.abs(res[interior]).max() < 1e-12


def test_spacing_too_coarse():
    with pytest.raises(SpacingTooCoarse):
        discretize(single_edge(length=0.5), 0.2)
    # explicit opt-in admits tiny edges at n=1 cells
    g = bounded_graph("tiny", ["A", "B"], [Edge("e", ("A", "B"), 0.01, 1.0)])
    grid = discretize(g, 0.2, allow_coarse_edges=True)
    assert grid.n == 2


def test_loops_get_interior_nodes():
    g = bounded_graph("loop", ["A"], [Edge("l", ("A", "A"), 1.0, 1.0)])
    grid = discretize(g, 0.25)
    assert len(grid.segment_dofs("l")) >= 3
    op = assemble_operator(grid)
    u = np.full(grid.n, 1.0)
    assert np.abs(op.apply(u)).max() == 0.0


def test_segment_queries():
    grid = discretize(star_graph(2, truncation=1.0), 0.25)
    with pytest.raises(UnknownEdgeId):
        grid.segment_dofs("ghost")
    x = grid.outer_coordinates(1)
    assert x[0] == 0.0 and x[-1] == 1.0
    assert grid.exit_dof(1) == grid.vertex_dof["P"]
    assert grid.far_dof[1] != grid.exit_dof(1)


def test_shared_vertex_values_consistent():
    g = two_star_bridge(2, 2.0, truncation=3.0)
    grid = discretize(g, 0.25)
    u = grid.constant(0.0).values
    u[grid.vertex_dof["P1"]] = 1.0
    for seg in ("bridge", "outer1", "outer2"):
        dofs = grid.segment_dofs(seg)
        assert u[dofs[0]] == 1.0  # all segments at P1 see the shared DOF
