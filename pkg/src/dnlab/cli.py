"""``dnlab`` command line: meshes, DN matrices, norms, oracles and experiments."""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from .conductivity import ConductivityError, field_from_config
from .dnmap import dn_matrix, op_norm, read_dn_csv, write_dn_csv
from .experiments import (
    SCENARIOS,
    ConfigError,
    ExperimentConfig,
    load_config,
    parse_config_text,
    run_experiment,
)
from .fem import QUADRATURES, SolverError, assemble, solve_dirichlet
from .mesh import MeshError, build_polar_mesh, read_mesh, refine, write_mesh
from .oracles import (
    RadialLayers,
    counterexample_bound,
    critical_mode,
    laminate_g_limit,
    layered_defect,
    layered_dn,
    m_k,
)


def _floats(text):
    """A JSON list or comma-separated numbers."""
    text = text.strip()
    if not text:
        return []
    if text.startswith("["):
        return [float(v) for v in json.loads(text)]
    return [float(v) for v in text.split(",")]


def _writer():
    return csv.writer(sys.stdout, lineterminator="\n")


def cmd_mesh(args):
    mesh = build_polar_mesh(args.rings, args.sectors, _floats(args.snap))
    for _ in range(args.refine):
        mesh = refine(mesh)
    write_mesh(mesh, args.out or sys.stdout)
    print(f"V={mesh.n_vertices} T={mesh.n_triangles} B={len(mesh.boundary)} "
          f"E={len(mesh.edges())} h={mesh.h:.6g} euler={mesh.euler_characteristic()}",
          file=sys.stderr)
    return 0


def _trace(spec, mesh):
    kind, _, k = spec.partition(":")
    if kind not in ("cos", "sin", "const"):
        raise ValueError(f"trace must be cos:<k>, sin:<k> or const, got {spec!r}")
    th = mesh.boundary_angles()
    k = int(k or 0)
    if kind == "const":
        return np.ones_like(th)
    return np.cos(k * th) if kind == "cos" else np.sin(k * th)


def cmd_dn(args):
    sigma = field_from_config(load_config(args.sigma))
    mesh = read_mesh(args.mesh)
    sys_ = assemble(mesh, sigma, args.quadrature)
    A = dn_matrix(sys_, args.kmax)
    write_dn_csv(A, args.out or sys.stdout)
    if args.dump_solution:
        sol = solve_dirichlet(sys_, _trace(args.trace, mesh))
        with open(args.dump_solution, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["vertex", "x", "y", "value"])
            for i, ((x, y), v) in enumerate(zip(mesh.vertices.tolist(), sol.values.tolist())):
                w.writerow([i, repr(x), repr(y), repr(v)])
    return 0


def cmd_norm(args):
    A = read_dn_csv(args.dn)
    if args.minus:
        A = A - read_dn_csv(args.minus)
    print(repr(op_norm(A, args.from_s, args.to_s)))
    return 0


def cmd_oracle(args):
    w = _writer()
    if args.which == "layered":
        layers = RadialLayers(tuple(_floats(args.radii)), tuple(_floats(args.values)))
        w.writerow(["k", "lambda_k", "defect"])
        for k in range(args.kmax + 1):
            w.writerow([k, repr(layered_dn(layers, k)), repr(layered_defect(layers, k))])
    elif args.which == "mk":
        w.writerow(["k", "t", "m_k"])
        for k in range(1, args.kmax + 1):
            w.writerow([k, repr(args.R ** (2 * k)), repr(m_k(args.alpha, args.R, k))])
    elif args.which == "kstar":
        ks = critical_mode(args.R)
        m = m_k(args.alpha, args.R, ks)
        b = counterexample_bound(args.alpha)
        w.writerow(["R", "k_star", "t_star", "m_k_star", "bound", "exceeds"])
        w.writerow([repr(args.R), ks, repr(args.R ** (2 * ks)), repr(m), repr(b), m > b])
    else:
        G = laminate_g_limit(args.a, args.b, _floats(args.direction))
        w.writerow(["i", "j", "value"])
        for i in range(2):
            for j in range(2):
                w.writerow([i, j, repr(float(G[i, j]))])
    return 0


def cmd_experiment(args):
    mapping = load_config(args.config) if args.config else {}
    for item in args.set or []:
        mapping.update(parse_config_text(item))
    cfg = ExperimentConfig.from_mapping(args.scenario, mapping, out=args.out)
    report = run_experiment(cfg)
    for line in report.summary_lines():
        print(line)
    print(f"{'PASS' if report.passed else 'FAIL'} {cfg.scenario} "
          f"({report.wall_clock:.1f} s) -> {args.out}")
    return 0 if report.passed else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dnlab", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mesh", help="write a structured polar disc mesh")
    p.add_argument("--rings", type=int, required=True)
    p.add_argument("--sectors", type=int, required=True)
    p.add_argument("--snap", default="", help="radii to hit exactly, e.g. 0.81,0.9")
    p.add_argument("--refine", type=int, default=0, help="uniform refinements to apply")
    p.add_argument("--out", help="output file (default stdout)")
    p.set_defaults(func=cmd_mesh)

    p = sub.add_parser("dn", help="DN matrix of a conductivity on a mesh, as CSV")
    p.add_argument("--sigma", required=True, help="conductivity config file")
    p.add_argument("--mesh", required=True, help="disc-mesh v1 file")
    p.add_argument("--kmax", type=int, required=True)
    p.add_argument("--quadrature", choices=QUADRATURES, default="centroid")
    p.add_argument("--out", help="DN CSV (default stdout)")
    p.add_argument("--dump-solution", metavar="CSV",
                   help="also write the discrete solution for --trace")
    p.add_argument("--trace", default="cos:1", help="boundary data: cos:<k>, sin:<k> or const")
    p.set_defaults(func=cmd_dn)

    p = sub.add_parser("norm", help="operator norm of a DN CSV (optionally a difference)")
    p.add_argument("--dn", required=True)
    p.add_argument("--minus", help="DN CSV to subtract first")
    p.add_argument("--from", dest="from_s", type=float, default=0.5)
    p.add_argument("--to", dest="to_s", type=float, default=-0.5)
    p.set_defaults(func=cmd_norm)

    p = sub.add_parser("oracle", help="closed-form references as CSV")
    p.add_argument("which", choices=["layered", "mk", "kstar", "laminate"])
    p.add_argument("--radii", default="")
    p.add_argument("--values", default="1")
    p.add_argument("--kmax", type=int, default=16)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--R", type=float, default=0.95)
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--b", type=float, default=2.0)
    p.add_argument("--direction", default="1,0")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("experiment", help="run a scenario and write its report")
    p.add_argument("scenario", choices=SCENARIOS)
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--out", required=True, help="report directory")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override a config entry (repeatable)")
    p.set_defaults(func=cmd_experiment)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ConductivityError, MeshError, SolverError, ValueError,
            OSError, KeyError) as exc:
        print(f"dnlab: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
