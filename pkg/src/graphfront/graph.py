"""Metric-graph domains: a bounded center graph plus semi-infinite outer paths.

A domain is a finite weighted graph D (vertices, edges with length and
thickness) together with N >= 2 outer paths attached at exit vertices.  Outer
paths are represented by a finite truncation length, which the solver treats
as a zero-flux far end.  Graphs are immutable; every transform returns a
fresh graph.

The on-disk format is a strict TOML document with ``[graph]``, repeated
``[[vertex]]`` / ``[[edge]]`` / ``[[outer]]`` blocks and optional
``[nonlinearity]`` / ``[solver]`` blocks.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

if sys.version_info >= (3, 11):
    import tomllib as _toml
else:
    import tomli as _toml

from .errors import (DanglingReference, DisconnectedCenter, FewerThanTwoOuterPaths,
                     GraphSpecError, IndexCollision, InvalidSplicePoint,
                     NonpositiveLength, NonpositiveOffset, ReattachmentIncomplete,
                     UnknownEdgeId, UnknownKey)

DEFAULT_TRUNCATION = 40.0


@dataclass(frozen=True)
class Vertex:
    id: str
    is_exit_point: bool = False


@dataclass(frozen=True)
class Edge:
    id: str
    ends: tuple[str, str]
    length: float
    thickness: float = 1.0


@dataclass(frozen=True)
class OuterPath:
    index: int
    exit_vertex: str
    thickness: float = 1.0
    truncation: float = DEFAULT_TRUNCATION


@dataclass(frozen=True)
class MetricGraph:
    """Center graph D plus outer paths; equality is structural on canonical order."""

    name: str
    vertices: tuple[Vertex, ...]
    edges: tuple[Edge, ...]
    outer_paths: tuple[OuterPath, ...]
    sigma_length: float | None = field(default=None, compare=False)

    # -- queries ------------------------------------------------------------

    @property
    def n_outer(self) -> int:
        return len(self.outer_paths)

    def vertex_ids(self) -> tuple[str, ...]:
        return tuple(v.id for v in self.vertices)

    def edge(self, edge_id: str) -> Edge:
        for e in self.edges:
            if e.id == edge_id:
                return e
        raise UnknownEdgeId(edge_id)

    def outer(self, index: int) -> OuterPath:
        for p in self.outer_paths:
            if p.index == index:
                return p
        raise UnknownEdgeId(f"outer path {index}")

    def degree(self, vertex_id: str) -> int:
        """Incident edge count (loops twice) plus incident outer paths."""
        d = 0
        for e in self.edges:
            d += (e.ends[0] == vertex_id) + (e.ends[1] == vertex_id)
        d += sum(1 for p in self.outer_paths if p.exit_vertex == vertex_id)
        return d

    def total_length(self, subset: Iterable[str] | None = None) -> float:
        """Thickness-weighted total length of the center edges (or a subset)."""
        if subset is None:
            return sum(e.length * e.thickness for e in self.edges)
        known = {e.id: e for e in self.edges}
        total = 0.0
        for eid in subset:
            if eid not in known:
                raise UnknownEdgeId(eid)
            total += known[eid].length * known[eid].thickness
        return total

    def serialize(self) -> str:
        return serialize(self)


def make_graph(name: str, vertices: Sequence[str | Vertex], edges: Sequence[Edge],
               outer_paths: Sequence[OuterPath], *, require_outer: bool = True,
               sigma_length: float | None = None) -> MetricGraph:
    """Validate and canonicalize a metric graph.

    ``require_outer=False`` admits bounded center-only graphs (N = 0), which
    the harmonic and spectral analyses operate on; simulation domains always
    go through the N >= 2 check.
    """
    ids = [v.id if isinstance(v, Vertex) else str(v) for v in vertices]
    if len(set(ids)) != len(ids):
        raise GraphSpecError(f"duplicate vertex ids in {name}")
    exit_ids = {p.exit_vertex for p in outer_paths}
    verts = tuple(sorted((Vertex(i, i in exit_ids) for i in ids), key=lambda v: v.id))
    known = set(ids)

    eids = [e.id for e in edges]
    if len(set(eids)) != len(eids):
        raise GraphSpecError(f"duplicate edge ids in {name}")
    for e in edges:
        if e.length <= 0 or e.thickness <= 0:
            raise NonpositiveLength(f"edge {e.id}: length={e.length}, thickness={e.thickness}")
        for end in e.ends:
            if end not in known:
                raise DanglingReference(f"edge {e.id} refers to unknown vertex {end!r}")

    idxs = [p.index for p in outer_paths]
    if len(set(idxs)) != len(idxs):
        raise GraphSpecError(f"duplicate outer path indices in {name}")
    for p in outer_paths:
        if p.thickness <= 0 or p.truncation <= 0:
            raise NonpositiveLength(f"outer {p.index}: thickness={p.thickness}, "
                                    f"truncation={p.truncation}")
        if p.exit_vertex not in known:
            raise DanglingReference(f"outer {p.index} exits at unknown vertex "
                                    f"{p.exit_vertex!r}")
    if require_outer and len(outer_paths) < 2:
        raise FewerThanTwoOuterPaths(f"{name}: N = {len(outer_paths)}")

    _check_connected(name, ids, edges)
    return MetricGraph(name=name,
                       vertices=verts,
                       edges=tuple(sorted(edges, key=lambda e: e.id)),
                       outer_paths=tuple(sorted(outer_paths, key=lambda p: p.index)),
                       sigma_length=sigma_length)


def _check_connected(name, ids, edges):
    if not ids:
        raise GraphSpecError(f"{name}: graph has no vertices")
    parent = {i: i for i in ids}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for e in edges:
        a, b = find(e.ends[0]), find(e.ends[1])
        if a != b:
            parent[a] = b
    roots = {find(i) for i in ids}
    if len(roots) > 1:
        raise DisconnectedCenter(f"{name}: center graph has {len(roots)} components")


# --- document parsing / serialization -------------------------------------------

_GRAPH_KEYS = {"name"}
_VERTEX_KEYS = {"id"}
_EDGE_KEYS = {"id", "from", "to", "length", "thickness"}
_OUTER_KEYS = {"index", "exit", "thickness", "truncation"}
_TOP_KEYS = {"graph", "vertex", "edge", "outer", "nonlinearity", "solver"}
_NONLIN_KEYS = {"type", "a", "s", "f"}
_SOLVER_KEYS = {"h", "dt", "truncation", "tol", "margin"}


def parse_document(text: str) -> dict:
    """Strict parse of a graph specification document; unknown keys are errors."""
    doc = _toml.loads(text)
    for key in doc:
        if key not in _TOP_KEYS:
            raise UnknownKey(f"unknown top-level block {key!r}")
    for block, allowed in (("graph", _GRAPH_KEYS), ("nonlinearity", _NONLIN_KEYS),
                           ("solver", _SOLVER_KEYS)):
        for key in doc.get(block, {}):
            if key not in allowed:
                raise UnknownKey(f"unknown key {key!r} in [{block}]")
    for block, allowed in (("vertex", _VERTEX_KEYS), ("edge", _EDGE_KEYS),
                           ("outer", _OUTER_KEYS)):
        for item in doc.get(block, []):
            for key in item:
                if key not in allowed:
                    raise UnknownKey(f"unknown key {key!r} in [[{block}]]")
    return doc


def build_graph(source: str | Mapping) -> MetricGraph:
    """Build a validated simulation domain from a document (text or parsed dict)."""
    doc = parse_document(source) if isinstance(source, str) else dict(source)
    name = doc.get("graph", {}).get("name", "unnamed")
    vertices = [item["id"] for item in doc.get("vertex", [])]
    edges = [Edge(id=item["id"], ends=(item["from"], item["to"]),
                  length=float(item["length"]),
                  thickness=float(item.get("thickness", 1.0)))
             for item in doc.get("edge", [])]
    outers = [OuterPath(index=int(item["index"]), exit_vertex=item["exit"],
                        thickness=float(item.get("thickness", 1.0)),
                        truncation=float(item.get("truncation", DEFAULT_TRUNCATION)))
              for item in doc.get("outer", [])]
    return make_graph(name, vertices, edges, outers)


def serialize(g: MetricGraph) -> str:
    """Emit the TOML document; floats keep full precision for exact round trips."""
    lines = ["[graph]", f'name = "{g.name}"', ""]
    for v in g.vertices:
        lines += ["[[vertex]]", f'id = "{v.id}"', ""]
    for e in g.edges:
        lines += ["[[edge]]", f'id = "{e.id}"', f'from = "{e.ends[0]}"',
                  f'to = "{e.ends[1]}"', f"length = {e.length!r}",
                  f"thickness = {e.thickness!r}", ""]
    for p in g.outer_paths:
        lines += ["[[outer]]", f"index = {p.index}", f'exit = "{p.exit_vertex}"',
                  f"thickness = {p.thickness!r}", f"truncation = {p.truncation!r}", ""]
    return "\n".join(lines)


# --- perturbation descriptors (Assumption-style graph surgery) -------------------

@dataclass(frozen=True)
class SigmaGraph:
    """A small finite graph spliced into a domain; entry/exit name attachment points."""

    vertices: tuple[str, ...]
    edges: tuple[Edge, ...]
    entry: str = ""
    exit: str = ""

    def total_length(self) -> float:
        return sum(e.length * e.thickness for e in self.edges)


def triangle_sigma(total_length: float, thickness: float = 1.0) -> SigmaGraph:
    """Equilateral triangle with |Sigma| = total_length; corners t1, t2, t3."""
    side = total_length / 3.0
    return SigmaGraph(
        vertices=("t1", "t2", "t3"),
        edges=(Edge("s12", ("t1", "t2"), side, thickness),
               Edge("s23", ("t2", "t3"), side, thickness),
               Edge("s31", ("t3", "t1"), side, thickness)),
        entry="t1", exit="t2")


@dataclass(frozen=True)
class RescaleEdge:
    edge_id: str
    factor: float


@dataclass(frozen=True)
class SpliceGraph:
    edge_id: str
    offset: float
    sigma: SigmaGraph


@dataclass(frozen=True)
class ReplaceVertex:
    vertex_id: str
    sigma: SigmaGraph
    edge_map: Mapping[str, str] = field(default_factory=dict)
    outer_map: Mapping[int, str] = field(default_factory=dict)


def perturb(g: MetricGraph, op) -> MetricGraph:
    """Apply one graph perturbation; returns a fresh graph.

    (a) rescale an edge length, (b) splice a small graph into an interior
    point of an edge, (c) replace a vertex by a small graph with an explicit
    reattachment map.  For (b)/(c) the result records |Sigma| so parameter
    sweeps can drive it to zero.
    """
    if isinstance(op, RescaleEdge):
        e = g.edge(op.edge_id)
        if op.factor <= 0:
            raise NonpositiveLength(f"rescale factor {op.factor}")
        edges = tuple(replace(x, length=x.length * op.factor) if x.id == e.id else x
                      for x in g.edges)
        return make_graph(g.name, g.vertex_ids(), edges, g.outer_paths,
                          require_outer=g.n_outer >= 2)

    if isinstance(op, SpliceGraph):
        e = g.edge(op.edge_id)
        if not 0.0 < op.offset < e.length:
            raise InvalidSplicePoint(f"offset {op.offset} outside (0, {e.length})")
        tag = lambda name: f"{op.edge_id}~{name}"
        new_vertices = list(g.vertex_ids()) + [tag(v) for v in op.sigma.vertices]
        new_edges = [x for x in g.edges if x.id != e.id]
        new_edges += [Edge(f"{e.id}.1", (e.ends[0], tag(op.sigma.entry)), op.offset,
                           e.thickness),
                      Edge(f"{e.id}.2", (tag(op.sigma.exit), e.ends[1]),
                           e.length - op.offset, e.thickness)]
        new_edges += [replace(se, id=tag(se.id),
                              ends=(tag(se.ends[0]), tag(se.ends[1])))
                      for se in op.sigma.edges]
        return make_graph(g.name, new_vertices, new_edges, g.outer_paths,
                          require_outer=g.n_outer >= 2,
                          sigma_length=op.sigma.total_length())

    if isinstance(op, ReplaceVertex):
        vid = op.vertex_id
        if vid not in g.vertex_ids():
            raise DanglingReference(vid)
        incident_edges = [e for e in g.edges if vid in e.ends]
        incident_outers = [p for p in g.outer_paths if p.exit_vertex == vid]
        for e in incident_edges:
            if e.id not in op.edge_map:
                raise ReattachmentIncomplete(f"edge {e.id} unmapped")
        for p in incident_outers:
            if p.index not in op.outer_map:
                raise ReattachmentIncomplete(f"outer path {p.index} unmapped")
        tag = lambda name: f"{vid}~{name}"
        new_vertices = [i for i in g.vertex_ids() if i != vid]
        new_vertices += [tag(v) for v in op.sigma.vertices]
        new_edges = []
        for e in g.edges:
            if vid in e.ends:
                target = tag(op.edge_map[e.id])
                ends = tuple(target if end == vid else end for end in e.ends)
                new_edges.append(replace(e, ends=ends))
            else:
                new_edges.append(e)
        new_edges += [replace(se, id=tag(se.id),
                              ends=(tag(se.ends[0]), tag(se.ends[1])))
                      for se in op.sigma.edges]
        new_outers = [replace(p, exit_vertex=tag(op.outer_map[p.index]))
                      if p.exit_vertex == vid else p for p in g.outer_paths]
        return make_graph(g.name, new_vertices, new_edges, new_outers,
                          require_outer=g.n_outer >= 2,
                          sigma_length=op.sigma.total_length())

    raise TypeError(f"unknown perturbation descriptor {op!r}")


def unify_outer_paths(g: MetricGraph, source: int,
                      targets: Sequence[tuple[int, float]]) -> MetricGraph:
    """Truncate target paths at their offsets and merge the tails into one path.

    The stubs from each exit point to its cut point become finite edges that
    meet at a new vertex, from which a single outer path emanates.  Path
    indices are renumbered consecutively afterwards; the merged path inherits
    the smallest target index.
    """
    idxs = [j for j, _ in targets]
    if len(set(idxs)) != len(idxs) or source in idxs:
        raise IndexCollision(f"source {source}, targets {idxs}")
    g.outer(source)
    paths = {j: g.outer(j) for j in idxs}
    for j, off in targets:
        if off <= 0:
            raise NonpositiveOffset(f"offset {off} on path {j}")
    rhos = {paths[j].thickness for j in idxs}
    if len(rhos) > 1:
        raise GraphSpecError("unification assumes equal thickness on the merged paths")
    rho = rhos.pop()

    j0 = min(idxs)
    qid = f"Q{j0}"
    while qid in g.vertex_ids():
        qid += "_"
    new_vertices = list(g.vertex_ids()) + [qid]
    new_edges = list(g.edges)
    for j, off in targets:
        new_edges.append(Edge(f"stub{j}", (paths[j].exit_vertex, qid), off, rho))
    tail = max(paths[j].truncation - off for j, off in targets)
    if tail <= 0:
        tail = DEFAULT_TRUNCATION
    keep = [p for p in g.outer_paths if p.index not in idxs]
    keep.append(OuterPath(index=j0, exit_vertex=qid, thickness=rho, truncation=tail))
    keep.sort(key=lambda p: p.index)
    renumbered = [replace(p, index=k + 1) for k, p in enumerate(keep)]
    return make_graph(g.name, new_vertices, new_edges, renumbered)


def total_length(g: MetricGraph, subset: Iterable[str] | None = None) -> float:
    return g.total_length(subset)


# --- common builders -------------------------------------------------------------

def star_graph(thicknesses: Sequence[float] | int, truncation: float = DEFAULT_TRUNCATION,
               name: str = "star") -> MetricGraph:
    """N outer paths meeting at a single center vertex P (|D| = 0)."""
    if isinstance(thicknesses, int):
        thicknesses = [1.0] * thicknesses
    outers = [OuterPath(index=i + 1, exit_vertex="P", thickness=float(r),
                        truncation=truncation)
              for i, r in enumerate(thicknesses)]
    return make_graph(name, ["P"], [], outers)


def melon_graph(m: int, length: float, thickness: float = 1.0,
                name: str = "melon") -> MetricGraph:
    """Bounded graph of m parallel edges of equal length between two vertices."""
    edges = [Edge(f"e{k + 1}", ("A", "B"), length, thickness) for k in range(m)]
    return make_graph(name, ["A", "B"], edges, [], require_outer=False)


def bounded_graph(name: str, vertices: Sequence[str], edges: Sequence[Edge]) -> MetricGraph:
    """A center-only graph (no outer paths) for boundary-value and spectral work."""
    return make_graph(name, vertices, edges, [], require_outer=False)


def two_star_bridge(k: int, bridge_length: float, truncation: float = DEFAULT_TRUNCATION,
                    name: str = "two-star-bridge") -> MetricGraph:
    """Two k-star centers joined by one edge; 2k outer paths."""
    edges = [Edge("bridge", ("P1", "P2"), bridge_length, 1.0)]
    outers = [OuterPath(index=i + 1, exit_vertex="P1", truncation=truncation)
              for i in range(k)]
    outers += [OuterPath(index=k + i + 1, exit_vertex="P2", truncation=truncation)
               for i in range(k)]
    return make_graph(name, ["P1", "P2"], edges, outers)
