"""Command-line interface.

Subcommands: simulate, classify, matrix, criterion, spectrum, energy, sweep,
wave, harmonic.  Tabular output is CSV with #-prefixed metadata lines.
Exit codes: 0 all assertions pass, 2 hypothesis-unmet warnings only,
1 assertion failure or error.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .bistable import make_cubic, make_table
from .errors import GraphfrontError
from .evolve import LimitProfile, SolverParams, limit_profile, local_energy
from .graph import build_graph, parse_document
from .mesh import discretize
from .phaseplane import traveling_wave
from .scenarios import propagation_matrix, sweep_blocking_sequence, \
    sweep_to_csv, sweep_two_star_ratio
from .spectra import neumann_spectrum, smallest_eigs
from .stationary import harmonic_dirichlet, star_criterion

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_HYPOTHESIS = 2


def _r(x) -> str:
    return repr(float(x))


def _load_doc(path):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_document(fh.read())


def _nonlinearity(doc, override_a=None):
    if override_a is not None:
        return make_cubic(override_a)
    block = doc.get("nonlinearity", {"type": "cubic", "a": 0.25})
    if block.get("type", "cubic") == "cubic":
        return make_cubic(float(block.get("a", 0.25)))
    return make_table(block["s"], block["f"])


def _solver_params(doc, args) -> SolverParams:
    block = dict(doc.get("solver", {}))
    kw = {}
    if "h" in block:
        kw["h"] = float(block["h"])
    if "dt" in block:
        kw["dt"] = float(block["dt"])
    if "tol" in block:
        kw["tol"] = float(block["tol"])
    if "margin" in block:
        kw["margin"] = float(block["margin"])
    for name in ("h", "dt", "tol", "margin"):
        val = getattr(args, name, None)
        if val is not None:
            kw[name] = val
    return SolverParams(**kw)


def _apply_truncation(g, doc):
    """The solver block may override the truncation of every outer path."""
    block = doc.get("solver", {})
    if "truncation" not in block:
        return g
    from dataclasses import replace
    outers = tuple(replace(p, truncation=float(block["truncation"]))
                   for p in g.outer_paths)
    return replace(g, outer_paths=outers)


def write_profile_csv(profile: LimitProfile, a: float, out) -> None:
    grid = profile.grid
    out.write(f"# graph={grid.graph.name}\n")
    out.write(f"# a={a!r}\n")
    out.write(f"# h={grid.h_target!r}\n")
    out.write(f"# source={profile.source}\n")
    out.write(f"# residual={_r(profile.residual)}\n")
    out.write("edge_id,s,value\n")
    for seg in grid.segment_ids:
        s = grid.segment_arclength(seg)
        vals = profile.field.values[grid.segment_dofs(seg)]
        for sk, vk in zip(s, vals):
            out.write(f"{seg},{_r(sk)},{_r(vk)}\n")


def read_profile_csv(path):
    """Returns (metadata dict, rows list of (edge_id, s, value))."""
    meta, rows = {}, []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition("=")
                meta[key.strip()] = val.strip()
            elif not line.startswith("edge_id"):
                seg, s, v = line.split(",")
                rows.append((seg, float(s), float(v)))
    return meta, rows


def field_from_rows(grid, rows):
    values = np.zeros(grid.n)
    by_seg = {}
    for seg, s, v in rows:
        by_seg.setdefault(seg, []).append((s, v))
    for seg, pairs in by_seg.items():
        pairs.sort()
        dofs = grid.segment_dofs(seg)
        if len(pairs) != len(dofs):
            raise GraphfrontError(f"profile rows for {seg} do not match the grid")
        values[dofs] = [v for _, v in pairs]
    return grid.field(values)


def _graph_matching_profile(doc, rows):
    """Rebuild the domain with the truncations the stored profile was run at.

    Solver overrides or automatic truncation doubling may have stretched the
    outer paths beyond the document defaults; the arclength columns of the
    profile rows carry the lengths that were actually meshed.
    """
    from dataclasses import replace
    g = build_graph(doc)
    spans = {}
    for seg, s, _ in rows:
        if seg.startswith("outer"):
            spans[int(seg[5:])] = max(spans.get(int(seg[5:]), 0.0), s)
    outers = tuple(replace(p, truncation=spans.get(p.index, p.truncation))
                   for p in g.outer_paths)
    return replace(g, outer_paths=outers)


# --- subcommands -------------------------------------------------------------------

def cmd_wave(args) -> int:
    b = make_cubic(args.a)
    w = traveling_wave(b)
    out = open(args.out, "w") if args.out else sys.stdout
    out.write(f"# c={_r(w.c)}\n")
    out.write("z,phi,dphi\n")
    for z, p, dp in zip(w.z, w.phi, w.dphi):
        out.write(f"{_r(z)},{_r(p)},{_r(dp)}\n")
    if args.out:
        out.close()
    return EXIT_OK


def cmd_criterion(args) -> int:
    b = make_cubic(args.a)
    rho = [float(t) for t in args.thicknesses.split(",")]
    crit = star_criterion(b, rho, args.source)
    print(f"# a={args.a} thicknesses={rho} source={args.source}")
    print(f"margin,{_r(crit.margin)}")
    print(f"verdict,{crit.verdict}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    doc = _load_doc(args.graph)
    g = _apply_truncation(build_graph(doc), doc)
    b = _nonlinearity(doc, args.a)
    params = _solver_params(doc, args)
    prof = limit_profile(g, b, args.source, params)
    if args.out:
        with open(args.out, "w") as fh:
            write_profile_csv(prof, b.a, fh)
    print(f"# graph={g.name} source={args.source} beta={_r(b.beta)}")
    print("path,junction_value,far_value,classification")
    for j in sorted(prof.junction_values):
        print(f"{j},{_r(prof.junction_values[j])},{_r(prof.far_values[j])},"
              f"{prof.classifications[j]}")
    return EXIT_OK


def cmd_classify(args) -> int:
    doc = _load_doc(args.graph)
    meta, rows = read_profile_csv(args.profile)
    g = _graph_matching_profile(doc, rows)
    a = args.a if args.a is not None else float(meta["a"])
    b = _nonlinearity(doc, a)
    grid = discretize(g, float(meta["h"]), allow_coarse_edges=True)
    u = field_from_rows(grid, rows)
    margin = args.margin if args.margin is not None else 0.02
    print("path,junction_value,classification")
    from .evolve import classify_value
    for p in g.outer_paths:
        val = float(u.values[grid.exit_dof(p.index)])
        print(f"{p.index},{_r(val)},{classify_value(val, b.beta, margin)}")
    return EXIT_OK


def cmd_matrix(args) -> int:
    doc = _load_doc(args.graph)
    g = _apply_truncation(build_graph(doc), doc)
    b = _nonlinearity(doc, args.a)
    params = _solver_params(doc, args)
    mat = propagation_matrix(g, b, params)
    print(f"# graph={g.name} a={_r(b.a)}")
    idx = mat.indices
    print("," + ",".join(str(j) for j in idx))
    for i in idx:
        cells = [mat.entries[(i, j)] if j != i else "-" for j in idx]
        print(f"{i}," + ",".join(cells))
    if mat.transitivity_violations:
        print(f"# transitivity_violations={list(mat.transitivity_violations)}")
        return EXIT_FAIL
    print("# transitivity_violations=[]")
    return EXIT_OK


def cmd_spectrum(args) -> int:
    doc = _load_doc(args.graph)
    g = build_graph(doc) if doc.get("outer") else None
    if g is None:
        from .graph import Edge, make_graph
        vertices = [item["id"] for item in doc.get("vertex", [])]
        edges = [Edge(id=item["id"], ends=(item["from"], item["to"]),
                      length=float(item["length"]),
                      thickness=float(item.get("thickness", 1.0)))
                 for item in doc.get("edge", [])]
        g = make_graph(doc.get("graph", {}).get("name", "doc"), vertices, edges, [],
                       require_outer=False)
    grid = discretize(g, args.h if args.h else 0.02)
    if args.dirichlet:
        dofs = [grid.vertex_dof[v] for v in args.dirichlet.split(",")]
        vals, _ = smallest_eigs(grid, args.k, dirichlet_dofs=dofs)
        print(f"# problem=dirichlet boundary={args.dirichlet}")
    else:
        spec = neumann_spectrum(grid, args.k)
        vals = spec.eigenvalues
        print(f"# problem=neumann multiplets={spec.multiplets}")
    print("index,eigenvalue")
    for k, lam in enumerate(vals):
        print(f"{k},{_r(lam)}")
    return EXIT_OK


def cmd_energy(args) -> int:
    doc = _load_doc(args.graph)
    meta, rows = read_profile_csv(args.profile)
    g = _graph_matching_profile(doc, rows)
    b = _nonlinearity(doc, args.a if args.a is not None else float(meta["a"]))
    grid = discretize(g, float(meta["h"]), allow_coarse_edges=True)
    u = field_from_rows(grid, rows)
    print(f"# graph={g.name}")
    print(f"energy,{_r(local_energy(u, b))}")
    return EXIT_OK


def _load_toml(path):
    if sys.version_info >= (3, 11):
        import tomllib as _toml
    else:
        import tomli as _toml
    with open(path, "rb") as fh:
        return _toml.load(fh)


def cmd_sweep(args) -> int:
    doc = _load_toml(args.scenario)
    block = doc.get("sweep", {})
    family = block.get("family")
    if family == "two_star_ratio":
        rows = sweep_two_star_ratio(float(block.get("a", 0.25)), block["ratios"],
                                    simulate=bool(block.get("simulate", False)))
    elif family == "blocking_sequence":
        rows = sweep_blocking_sequence(float(block.get("a", 0.25)),
                                       n=int(block.get("n", 6)),
                                       exponents=range(1, int(block.get("count", 5)) + 1))
    else:
        print(f"unknown sweep family {family!r}", file=sys.stderr)
        return EXIT_FAIL
    text = sweep_to_csv(rows, metadata={"family": family})
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_FAIL if any(r.error for r in rows) else EXIT_OK


def cmd_scenario(args) -> int:
    from .scenarios import (scenario_faraway, scenario_oneway, scenario_partial,
                            scenario_perturbed_star, scenario_reservoir)
    doc = _load_toml(args.scenario)
    block = dict(doc.get("scenario", {}))
    kind = block.pop("kind")
    params = _solver_params(doc, args)
    if kind == "partial":
        rep = scenario_partial(a=block.get("a"),
                               arm_length=float(block.get("arm_length", 30.0)),
                               params=params)
    elif kind == "one-way":
        rep = scenario_oneway(a=block.get("a"),
                              arm_length=float(block.get("arm_length", 30.0)),
                              params=params)
    elif kind == "reservoir":
        b = make_cubic(float(block.get("a", 0.25)))
        rep = scenario_reservoir(b, float(block.get("delta", b.a / 2)),
                                 m=block.get("m"),
                                 edge_length=block.get("edge_length"),
                                 stem_length=block.get("stem_length"),
                                 params=params)
    elif kind == "perturbed-star":
        b = make_cubic(float(block.get("a", 0.25)))
        rep = scenario_perturbed_star(b, int(block["n"]),
                                      sizes=tuple(block.get("sizes",
                                                            (0.2, 0.1, 0.05, 0.025))),
                                      params=params)
    elif kind == "faraway":
        b = make_cubic(float(block.get("a", 0.25)))
        rep = scenario_faraway(b, n_prime=int(block.get("n_prime", 6)),
                               config=block.get("config", "front"),
                               lengths=tuple(block.get("lengths", (30.0,))),
                               params=params)
    else:
        print(f"unknown scenario kind {kind!r}", file=sys.stderr)
        return EXIT_FAIL
    print(f"# scenario={rep.name} hypothesis_ok={rep.hypothesis_ok}")
    for key, val in rep.hypothesis.items():
        print(f"# {key}={val}")
    for claim, ok in rep.asserted.items():
        print(f"assert,{claim},{'pass' if ok else 'FAIL'}")
    for warning in rep.warnings:
        print(f"# warning: {warning}")
    if rep.asserted and not rep.passed:
        return EXIT_FAIL
    if not rep.hypothesis_ok:
        return EXIT_HYPOTHESIS
    return EXIT_OK


def cmd_harmonic(args) -> int:
    doc = _load_doc(args.graph)
    from .graph import Edge, make_graph
    vertices = [item["id"] for item in doc.get("vertex", [])]
    edges = [Edge(id=item["id"], ends=(item["from"], item["to"]),
                  length=float(item["length"]),
                  thickness=float(item.get("thickness", 1.0)))
             for item in doc.get("edge", [])]
    g = make_graph(doc.get("graph", {}).get("name", "doc"), vertices, edges, [],
                   require_outer=False)
    values = {}
    for item in args.boundary.split(","):
        key, _, val = item.partition("=")
        values[key.strip()] = float(val)
    sol = harmonic_dirichlet(g, values)
    print("vertex,potential")
    for vid, u in sorted(sol.potentials.items()):
        print(f"{vid},{_r(u)}")
    print("# boundary_vertex,formal_derivative")
    for q in sol.boundary:
        print(f"# {q},{_r(sol.outer_derivatives[q])}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="graphfront",
                                     description="bistable fronts on metric graphs")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("wave", help="traveling wave profile and speed")
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_wave)

    p = sub.add_parser("criterion", help="star-graph propagation criterion")
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--thicknesses", required=True)
    p.add_argument("--source", type=int, default=1)
    p.set_defaults(func=cmd_criterion)

    p = sub.add_parser("simulate", help="limit profile from one source path")
    p.add_argument("--graph", required=True)
    p.add_argument("--source", type=int, required=True)
    p.add_argument("--a", type=float)
    p.add_argument("--h", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--tol", type=float)
    p.add_argument("--margin", type=float)
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("classify", help="re-classify a stored profile")
    p.add_argument("--graph", required=True)
    p.add_argument("--profile", required=True)
    p.add_argument("--a", type=float)
    p.add_argument("--margin", type=float)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("matrix", help="full propagation matrix")
    p.add_argument("--graph", required=True)
    p.add_argument("--a", type=float)
    p.add_argument("--h", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--tol", type=float)
    p.add_argument("--margin", type=float)
    p.set_defaults(func=cmd_matrix)

    p = sub.add_parser("spectrum", help="graph Laplacian eigenvalues")
    p.add_argument("--graph", required=True)
    p.add_argument("--dirichlet")
    p.add_argument("-k", type=int, default=4)
    p.add_argument("--h", type=float)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("energy", help="local energy of a stored profile")
    p.add_argument("--graph", required=True)
    p.add_argument("--profile", required=True)
    p.add_argument("--a", type=float)
    p.set_defaults(func=cmd_energy)

    p = sub.add_parser("sweep", help="run a sweep scenario file")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("scenario", help="run a named experiment from a file")
    p.add_argument("--scenario", required=True)
    p.add_argument("--h", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--tol", type=float)
    p.add_argument("--margin", type=float)
    p.set_defaults(func=cmd_scenario)

    p = sub.add_parser("harmonic", help="harmonic Dirichlet solve on a center graph")
    p.add_argument("--graph", required=True)
    p.add_argument("--boundary", required=True, help='e.g. "A=0,B=1"')
    p.set_defaults(func=cmd_harmonic)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except GraphfrontError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
