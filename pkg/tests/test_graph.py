import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from graphfront.errors import (DanglingReference, DisconnectedCenter,
                               FewerThanTwoOuterPaths, IndexCollision,
                               InvalidSplicePoint, NonpositiveLength,
                               NonpositiveOffset, ReattachmentIncomplete,
                               UnknownEdgeId, UnknownKey)
from graphfront.graph import (Edge, OuterPath, ReplaceVertex, RescaleEdge,
                              SigmaGraph, SpliceGraph, build_graph, make_graph,
                              melon_graph, perturb, serialize, star_graph,
                              total_length, triangle_sigma, two_star_bridge,
                              unify_outer_paths)

THREE_STAR_DOC = """
[graph]
name = "three-star"

[[vertex]]
id = "P"

[[outer]]
index = 1
exit = "P"

[[outer]]
index = 2
exit = "P"

[[outer]]
index = 3
exit = "P"
"""


def test_build_three_star_document():
    g = build_graph(THREE_STAR_DOC)
    assert g.n_outer == 3
    assert g.total_length() == 0.0
    assert g.vertices[0].is_exit_point


def test_two_star_bridge_center_length():
    g = two_star_bridge(3, 2.0)
    assert g.n_outer == 6
    assert g.total_length() == pytest.approx(2.0)


def test_dangling_reference():
    doc = THREE_STAR_DOC + "\n[[outer]]\nindex = 4\nexit = \"Q\"\n"
    with pytest.raises(DanglingReference):
        build_graph(doc)


def test_strict_unknown_key():
    with pytest.raises(UnknownKey):
        build_graph(THREE_STAR_DOC + "\n[weird]\nx = 1\n")
    with pytest.raises(UnknownKey):
        build_graph(THREE_STAR_DOC.replace('exit = "P"', 'exit = "P"\ncolor = "red"', 1))


def test_too_few_outer_paths():
    with pytest.raises(FewerThanTwoOuterPaths):
        make_graph("g", ["P"], [], [OuterPath(1, "P")])


def test_nonpositive_length():
    with pytest.raises(NonpositiveLength):
        make_graph("g", ["A", "B"], [Edge("e", ("A", "B"), -1.0)],
                   [OuterPath(1, "A"), OuterPath(2, "B")])
    with pytest.raises(NonpositiveLength):
        make_graph("g", ["A"], [], [OuterPath(1, "A", thickness=0.0),
                                    OuterPath(2, "A")])


def test_disconnected_center():
    with pytest.raises(DisconnectedCenter):
        make_graph("g", ["A", "B"], [], [OuterPath(1, "A"), OuterPath(2, "B")])


def test_round_trip_exact():
    g = two_star_bridge(2, 2.0, truncation=37.5)
    assert build_graph(serialize(g)) == g


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 5), st.floats(0.1, 9.0), st.floats(0.25, 4.0),
       st.floats(10.0, 80.0))
def test_round_trip_random(k, length, rho, trunc):
    edges = [Edge("e", ("P1", "P2"), length, rho)]
    outers = [OuterPath(j + 1, "P1" if j % 2 else "P2", rho, trunc)
              for j in range(2 * k)]
    g = make_graph("rand", ["P1", "P2"], edges, outers)
    assert build_graph(serialize(g)) == g


def test_degree_counts_loops_twice():
    g = make_graph("loop", ["A"], [Edge("l", ("A", "A"), 1.0)],
                   [OuterPath(1, "A"), OuterPath(2, "A")])
    assert g.degree("A") == 4


def test_total_length_subset_and_errors():
    g = melon_graph(4, 0.5)
    assert total_length(g) == pytest.approx(2.0)
    assert g.total_length(["e1", "e2"]) == pytest.approx(1.0)
    with pytest.raises(UnknownEdgeId):
        g.total_length(["nope"])


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 6))
def test_total_length_additive_over_partition(split):
    g = melon_graph(6, 0.7, thickness=1.3)
    ids = [e.id for e in g.edges]
    part1, part2 = ids[:split], ids[split:]
    assert g.total_length(part1) + g.total_length(part2) == pytest.approx(
        g.total_length())


def test_rescale_edge():
    g = two_star_bridge(2, 1.0)
    out = perturb(g, RescaleEdge("bridge", 1.1))
    assert out.edge("bridge").length == pytest.approx(1.1)
    assert out.n_outer == g.n_outer
    assert [p.exit_vertex for p in out.outer_paths] == \
        [p.exit_vertex for p in g.outer_paths]
    with pytest.raises(NonpositiveLength):
        perturb(g, RescaleEdge("bridge", 0.0))


def test_splice_bookkeeping():
    g = two_star_bridge(2, 1.0)
    sigma = SigmaGraph(vertices=("m1", "m2", "m3"),
                       edges=(Edge("s1", ("m1", "m2"), 0.01),
                              Edge("s2", ("m2", "m3"), 0.01)),
                       entry="m1", exit="m3")
    out = perturb(g, SpliceGraph("bridge", 0.5, sigma))
    assert out.total_length() == pytest.approx(g.total_length() + 0.02)
    assert out.edge("bridge.1").length + out.edge("bridge.2").length == \
        pytest.approx(1.0)
    assert out.sigma_length == pytest.approx(0.02)
    assert out.n_outer == g.n_outer
    with pytest.raises(InvalidSplicePoint):
        perturb(g, SpliceGraph("bridge", 1.5, sigma))
    with pytest.raises(UnknownEdgeId):
        perturb(g, SpliceGraph("nope", 0.5, sigma))


def test_replace_vertex_by_triangle():
    g = star_graph(3)
    sigma = triangle_sigma(0.03)
    out = perturb(g, ReplaceVertex("P", sigma,
                                   outer_map={1: "t1", 2: "t2", 3: "t3"}))
    assert out.n_outer == 3
    assert out.total_length() == pytest.approx(0.03)
    assert out.sigma_length == pytest.approx(0.03)
    exits = {p.exit_vertex for p in out.outer_paths}
    assert exits == {"P~t1", "P~t2", "P~t3"}


def test_replace_vertex_incomplete_map():
    g = star_graph(3)
    with pytest.raises(ReattachmentIncomplete):
        perturb(g, ReplaceVertex("P", triangle_sigma(0.03), outer_map={1: "t1"}))


def test_unify_three_star():
    g = star_graph(3)
    out = unify_outer_paths(g, 1, [(2, 5.0), (3, 5.0)])
    assert out.n_outer == 2
    assert out.total_length() == pytest.approx(10.0)
    new = out.outer(2)
    assert new.truncation == pytest.approx(35.0)
    assert out.degree(new.exit_vertex) == 3  # two stubs + one new path


def test_unify_single_target_is_relabeling():
    g = star_graph(3)
    out = unify_outer_paths(g, 1, [(2, 5.0)])
    assert out.n_outer == 3
    # total metric content unchanged: stub + shortened path = original path
    stub = out.edge("stub2")
    assert stub.length + out.outer(2).truncation == pytest.approx(
        g.outer(2).truncation)


def test_unify_errors():
    g = star_graph(3)
    with pytest.raises(IndexCollision):
        unify_outer_paths(g, 1, [(2, 5.0), (2, 6.0)])
    with pytest.raises(IndexCollision):
        unify_outer_paths(g, 1, [(1, 5.0)])
    with pytest.raises(NonpositiveOffset):
        unify_outer_paths(g, 1, [(2, 0.0), (3, 5.0)])


def test_unify_double_branching_gives_one_way_shape():
    from graphfront.scenarios import double_branching
    g = double_branching(8.0)
    out = unify_outer_paths(g, 1, [(2, 8.0), (3, 8.0), (4, 8.0), (5, 8.0)])
    assert out.n_outer == 2
    new = out.outer(2)
    # the merge vertex carries four stubs plus the merged path
    assert out.degree(new.exit_vertex) == 5
    assert out.total_length() == pytest.approx(2 * 8.0 + 4 * 8.0)
