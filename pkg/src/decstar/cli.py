"""Command-line front end.

Subcommands cover mesh ingestion/generation, dual construction, Hodge star
assembly and export, condition-number experiments, mixed-system solving,
wave eigensystems, and field sampling.  Every subcommand prints one JSON
summary line per result on stdout; artifacts (Matrix Market matrices, CSV
tables, JSON meshes) are written to --out.  Identical inputs and flags
produce byte-identical artifacts.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.io
import scipy.sparse as sp

from . import hodge, mesh, systems, whitney
from .hodge import HodgeError
from .mesh import MeshError
from .sibson import DualInterpolation, SibsonError
from .systems import SystemError


class CliError(ValueError):
    pass


@dataclass
class RunConfig:
    """Resolved settings of one CLI invocation."""

    command: str
    mesh: str | None = None
    rule: str = "barycentric"
    kind: str = "diag"
    k: int = 1
    grid: int = 128
    P: list = field(default_factory=list)
    system: list = field(default_factory=list)
    tol: float | None = None
    out: Path = Path(".")

    def __post_init__(self):
        if self.grid < 16:
            raise CliError(f"--grid must be at least 16, got {self.grid}")
        for p in self.P:
            if p <= 0.5:
                raise CliError(f"--P values must exceed 1/2, got {p:g}")


# ---------------------------------------------------------------------------
# mesh ingestion: a file path or a builtin generator spec


BUILTIN_HELP = (
    "a JSON mesh file, or a builtin spec: two_triangle | fig8:P | "
    "grid:m[:skew] | equilateral:m | random:n:seed[:dim]"
)


def resolve_mesh(spec: str) -> mesh.SimplicialComplex:
    if Path(spec).exists():
        return mesh.load_mesh(spec)
    name, _, rest = spec.partition(":")
    args = rest.split(":") if rest else []
    try:
        if name == "two_triangle":
            return mesh.two_triangle_mesh()
        if name == "fig8":
            return mesh.generate_fig8(float(args[0]))
        if name == "grid":
            skew = float(args[1]) if len(args) > 1 else 0.0
            return mesh.structured_grid(int(args[0]), skew)
        if name == "equilateral":
            return mesh.equilateral_grid(int(args[0]))
        if name == "random":
            dim = int(args[2]) if len(args) > 2 else 2
            return mesh.random_delaunay(int(args[0]), int(args[1]), dim)
    except (IndexError, ValueError) as exc:
        raise CliError(f"bad mesh spec {spec!r}: {exc}") from exc
    raise CliError(f"mesh {spec!r} is neither a file nor a builtin spec "
                   f"({BUILTIN_HELP})")


# ---------------------------------------------------------------------------
# artifact writers


def write_matrix_market(matrix, path: Path) -> None:
    matrix = sp.coo_matrix(matrix)
    scipy.io.mmwrite(str(path), matrix, symmetry="general")


def write_cochain_csv(values, path: Path, header: str = "id,value") -> None:
    lines = [header]
    values = np.asarray(values)
    for i, v in enumerate(values):
        lines.append(f"{i},{v:.17g}")
    path.write_text("\n".join(lines) + "\n")


def read_cochain_csv(path, expected: int) -> np.ndarray:
    out = np.zeros(expected)
    with open(path) as fh:
        for row, line in enumerate(fh):
            line = line.strip()
            if not line or (row == 0 and not line[0].isdigit()):
                continue
            sid, val = line.split(",")[:2]
            sid = int(sid)
            if not 0 <= sid < expected:
                raise CliError(f"cochain id {sid} out of range 0..{expected - 1}")
            out[sid] = float(val)
    return out


def emit(obj) -> None:
    print(json.dumps(obj, sort_keys=True))


# ---------------------------------------------------------------------------
# subcommand implementations


def cmd_info(cfg: RunConfig, args) -> int:
    comp = resolve_mesh(cfg.mesh)
    dual = mesh.build_dual(comp, cfg.rule)
    report = mesh.quality_report(comp, dual)
    emit({
        "command": "info",
        "dimension": comp.dim,
        "counts": {str(k): len(comp.simplices[k]) for k in range(comp.dim + 1)},
        "rule": cfg.rule,
        "primal_range": report.primal_range,
        "dual_range": report.dual_range,
        "ratio_range": report.ratio_range,
        "primal_gradation": report.primal_gradation,
        "dual_gradation": report.dual_gradation,
        "worst_aspect_ratio": report.worst_aspect_ratio,
    })
    return 0


def cmd_dual(cfg: RunConfig, args) -> int:
    comp = resolve_mesh(cfg.mesh)
    dual = mesh.build_dual(comp, cfg.rule)
    paths = {}
    for k in range(comp.dim + 1):
        path = cfg.out / f"dual_measures_k{k}.csv"
        write_cochain_csv(dual.measures[k], path, header="simplex,measure")
        paths[str(k)] = str(path)
    emit({
        "command": "dual",
        "rule": cfg.rule,
        "measure_files": paths,
        "negative_cells": {
            str(k): [int(i) for i in dual.negative_cells(k)]
            for k in range(comp.dim + 1)
        },
    })
    return 0


def cmd_hodge(cfg: RunConfig, args) -> int:
    comp = resolve_mesh(cfg.mesh)
    dual = mesh.build_dual(comp, cfg.rule)
    if cfg.kind == "diag":
        op = hodge.assemble_diag(comp, dual, cfg.k)
    elif cfg.kind == "whitney":
        op = hodge.assemble_whitney(comp, cfg.k)
    elif cfg.kind == "dual_inverse":
        op = hodge.assemble_dual_inverse(comp, dual, cfg.k, cfg.grid)
    else:
        raise CliError(f"unknown Hodge kind {cfg.kind!r}")
    path = cfg.out / f"hodge_{cfg.kind}_k{cfg.k}.mtx"
    write_matrix_market(op.matrix, path)
    A = op.toarray()
    emit({
        "command": "hodge",
        "kind": cfg.kind,
        "k": cfg.k,
        "rule": cfg.rule,
        "shape": list(op.shape),
        "nnz": int(op.matrix.nnz),
        "symmetric": bool(np.allclose(A, A.T, atol=1e-12)),
        "file": str(path),
    })
    return 0


def cmd_cond(cfg: RunConfig, args) -> int:
    comp = resolve_mesh(cfg.mesh)
    dual = mesh.build_dual(comp, cfg.rule)
    if cfg.kind == "diag":
        op = hodge.assemble_diag(comp, dual, cfg.k)
    elif cfg.kind == "whitney":
        op = hodge.assemble_whitney(comp, cfg.k)
    elif cfg.kind == "dual_inverse":
        op = hodge.assemble_dual_inverse(comp, dual, cfg.k, cfg.grid)
    else:
        raise CliError(f"unknown Hodge kind {cfg.kind!r}")
    est = hodge.condition_estimate(op, args.method, args.block)
    emit({
        "command": "cond",
        "kind": cfg.kind,
        "k": cfg.k,
        "method": est.method,
        "lambda_max": est.lambda_max,
        "lambda_min": est.lambda_min,
        "condition": est.ratio,
    })
    return 0


def cmd_table1(cfg: RunConfig, args) -> int:
    rows = hodge.table1_experiment(cfg.P, cfg.grid)
    path = cfg.out / "table1.csv"
    path.write_text(hodge.table1_csv(rows))
    for r in rows:
        emit({
            "command": "table1",
            "P": r.P,
            "cond_diag": r.cond_diag,
            "cond_whitney": r.cond_whitney,
            "cond_dual_inverse": r.cond_dual_inverse,
            "seconds": r.seconds,
            "file": str(path),
        })
    return 0


def _default_load(comp, problem: str, group: int, seed: int) -> np.ndarray:
    """Deterministic compatible load for a solve subcommand."""
    rng = np.random.default_rng(seed)
    n = comp.dim
    if problem == "darcy":
        size = len(comp.simplices[n]) if group == 1 else len(comp.vertices)
        load = rng.standard_normal(size)
        if group == 2:
            load -= load.mean()
        return load
    if group == 1:  # current as a dual cochain on (n-2)-simplices
        load = rng.standard_normal(len(comp.simplices[n - 2]))
        return load - load.mean()
    return rng.standard_normal(len(comp.simplices[2]))


def cmd_solve(cfg: RunConfig, args) -> int:
    comp = resolve_mesh(cfg.mesh)
    dual = mesh.build_dual(comp, cfg.rule)
    ids = cfg.system
    groups = {1 if s in (1, 2) else 2 for s in ids}
    if len(groups) > 1:
        raise CliError(
            "systems 1-2 and 3-4 take loads on different spaces and cannot "
            "share one run; pick systems from a single pair"
        )
    group = groups.pop()
    degree = comp.dim - 1 if group == 1 else 1
    M, Minv = hodge.hodge_pair(comp, dual, degree, cfg.kind, cfg.grid)
    if args.load is not None:
        expected = {
            ("darcy", 1): len(comp.simplices[comp.dim]),
            ("darcy", 2): len(comp.vertices),
            ("magneto", 1): len(comp.simplices[comp.dim - 2]),
            ("magneto", 2): len(comp.simplices[2]),
        }[(args.problem, group)]
        load = read_cochain_csv(args.load, expected)
    else:
        load = _default_load(comp, args.problem, group, args.seed)
    assemble = (systems.assemble_darcy if args.problem == "darcy"
                else systems.assemble_magnetostatics)
    reports = []
    for sid in ids:
        system = assemble(comp, sid, load, M, Minv)
        report = systems.solve(system, args.gauge)
        reports.append(report)
        out = {
            "command": f"solve {args.problem}",
            "system": sid,
            "name": report.system,
            "residual": report.residual,
            "gauge": report.gauge_applied,
            "seconds": report.seconds,
            "kind": cfg.kind,
        }
        if cfg.out is not None and args.write:
            for name, vec in sorted(report.recovered.items()):
                path = cfg.out / f"{report.system}_{name}.csv"
                write_cochain_csv(vec, path)
                out[f"file_{name}"] = str(path)
        emit(out)
    if len(reports) > 1:
        align = ("p",) if args.problem == "darcy" else ()
        diffs = systems.cross_validate(reports, align)
        for (a, b), d in sorted(diffs.items()):
            line = {"command": "solve diff", "pair": [a, b], "diffs": d}
            if cfg.tol is not None:
                line["pass"] = bool(max(d.values()) <= cfg.tol)
            emit(line)
    return 0


def cmd_wave(cfg: RunConfig, args) -> int:
    comp = resolve_mesh(cfg.mesh)
    dual = mesh.build_dual(comp, cfg.rule)
    M1, M1inv = hodge.hodge_pair(comp, dual, 1, cfg.kind, cfg.grid)
    M2, M2inv = hodge.hodge_pair(comp, dual, 2, cfg.kind, cfg.grid)
    ws = systems.assemble_wave(comp, args.formulation, M1, M2, M1inv, M2inv)
    vals, _ = ws.eigenpairs(args.count)
    emit({
        "command": "wave",
        "formulation": args.formulation,
        "kind": cfg.kind,
        "omega_squared": [float(v) for v in vals],
    })
    return 0


def cmd_sample_field(cfg: RunConfig, args) -> int:
    comp = resolve_mesh(cfg.mesh)
    if args.cochain is not None:
        weights = read_cochain_csv(args.cochain, len(comp.simplices[cfg.k]))
    else:
        weights = np.ones(len(comp.simplices[cfg.k]))
    if args.space == "primal":
        fld = whitney.interpolate(comp, cfg.k, weights)
    else:
        dual = mesh.build_dual(comp, cfg.rule)
        di = DualInterpolation(comp, dual)
        fld = di.interpolate(comp.dim - cfg.k, weights)
    lo = comp.vertices.min(axis=0)
    hi = comp.vertices.max(axis=0)
    m = args.samples
    axes = [np.linspace(lo[d], hi[d], m, endpoint=False)
            + (hi[d] - lo[d]) / (2 * m) for d in range(comp.dim)]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    pts = pts.reshape(-1, comp.dim)
    rows = []
    for x in pts:
        try:
            val = fld(x)
        except (ValueError, SibsonError):
            continue
        val = np.atleast_1d(np.asarray(val, dtype=float))
        coords = ",".join(f"{c:.17g}" for c in x)
        comps = ",".join(f"{v:.17g}" for v in val)
        rows.append(f"{coords},{comps}")
    ncomp = len(rows[0].split(",")) - comp.dim if rows else 0
    header = (",".join("xyz"[:comp.dim])
              + "," + ",".join(f"value{i}" for i in range(ncomp)))
    path = cfg.out / "field_samples.csv"
    path.write_text(header + "\n" + "\n".join(rows) + "\n")
    emit({
        "command": "sample-field",
        "space": args.space,
        "k": cfg.k,
        "samples": len(rows),
        "file": str(path),
    })
    return 0


def cmd_fig8(cfg: RunConfig, args) -> int:
    if len(cfg.P) != 1:
        raise CliError("fig8 takes exactly one --P value")
    comp = mesh.generate_fig8(cfg.P[0])
    path = cfg.out / f"fig8_P{cfg.P[0]:g}.json"
    mesh.save_mesh(comp, path)
    emit({
        "command": "fig8",
        "P": cfg.P[0],
        "counts": {str(k): len(comp.simplices[k]) for k in range(3)},
        "file": str(path),
    })
    return 0


def cmd_convert(cfg: RunConfig, args) -> int:
    """Convert a simple OFF-style text mesh to the JSON mesh format."""
    tokens = []
    with open(args.input) as fh:
        for line in fh:
            line = line.split("#")[0].strip()
            if line and line != "OFF":
                tokens.extend(line.split())
    try:
        nv, nc = int(tokens[0]), int(tokens[1])
        pos = 3  # counts line is "nv nc ne"
        first = pos + 2
        dim = 2
        # peek: a vertex line has `dim` floats; detect 3D by the first cell
        # record position assuming 2D, falling back to 3D on mismatch.
        for trial_dim in (2, 3):
            cell_start = pos + nv * trial_dim
            if (cell_start < len(tokens)
                    and float(tokens[cell_start]) == int(float(tokens[cell_start]))
                    and int(float(tokens[cell_start])) == trial_dim + 1):
                dim = trial_dim
                break
        verts = np.array(tokens[pos:pos + nv * dim], dtype=float)
        verts = verts.reshape(nv, dim)
        pos += nv * dim
        cells = []
        for _ in range(nc):
            cnt = int(tokens[pos])
            cells.append([int(t) for t in tokens[pos + 1:pos + 1 + cnt]])
            pos += 1 + cnt
    except (IndexError, ValueError) as exc:
        raise CliError(f"cannot parse OFF-style mesh {args.input}: {exc}") from exc
    comp = mesh.build_complex(verts, cells)
    path = cfg.out / (Path(args.input).stem + ".json")
    mesh.save_mesh(comp, path)
    emit({
        "command": "convert",
        "dimension": comp.dim,
        "counts": {str(k): len(comp.simplices[k]) for k in range(comp.dim + 1)},
        "file": str(path),
    })
    return 0


# ---------------------------------------------------------------------------
# argument parsing


def _float_list(text: str):
    return [float(t) for t in text.split(",") if t]


def _int_list(text: str):
    return [int(t) for t in text.split(",") if t]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="decstar",
        description="Discrete exterior calculus meshes, Hodge stars, and "
                    "mixed solvers.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, *, needs_mesh=True):
        if needs_mesh:
            p.add_argument("--mesh", required=True, help=BUILTIN_HELP)
        p.add_argument("--rule", default="barycentric",
                       choices=["barycentric", "circumcentric"],
                       help="dual mesh center rule")
        p.add_argument("--out", default=".", help="output directory")

    p = sub.add_parser("info", help="mesh counts and quality report")
    add_common(p)

    p = sub.add_parser("dual", help="dual mesh measures and diagnostics")
    add_common(p)

    for name, help_ in [("hodge", "assemble a Hodge star and export it"),
                        ("cond", "condition number of a Hodge star")]:
        p = sub.add_parser(name, help=help_)
        add_common(p)
        p.add_argument("--k", type=int, default=1, help="form degree")
        p.add_argument("--kind", default="diag",
                       choices=["diag", "whitney", "dual_inverse"])
        p.add_argument("--grid", type=int, default=128,
                       help="quadrature grid resolution")
        if name == "cond":
            p.add_argument("--method", default="full",
                           choices=["full", "leading-block"])
            p.add_argument("--block", type=int, default=5)

    p = sub.add_parser("table1",
                       help="condition-number study on the two-fan family")
    p.add_argument("--P", type=_float_list, default=[2.0, 5.0, 10.0],
                   help="comma-separated P values (> 1/2)")
    p.add_argument("--grid", type=int, default=512)
    p.add_argument("--out", default=".")

    p = sub.add_parser("solve", help="assemble and solve a mixed system")
    p.add_argument("problem", choices=["darcy", "magneto"])
    add_common(p)
    p.add_argument("--system", type=_int_list, required=True,
                   help="comma-separated formulation ids from one pair "
                        "(1,2 or 3,4)")
    p.add_argument("--kind", default="diag",
                   choices=["diag", "whitney", "dual_inverse"])
    p.add_argument("--grid", type=int, default=128)
    p.add_argument("--gauge", default="pin", choices=["pin", "augment"])
    p.add_argument("--load", default=None,
                   help="CSV cochain (id,value) for the source term")
    p.add_argument("--seed", type=int, default=0,
                   help="seed for the default random load")
    p.add_argument("--tol", type=float, default=None,
                   help="pass/fail threshold for cross-formulation diffs")
    p.add_argument("--write", action="store_true",
                   help="write recovered cochains as CSV")

    p = sub.add_parser("wave", help="wave eigensystem spectrum")
    add_common(p)
    p.add_argument("--formulation", default="primal",
                   choices=["primal", "dual"])
    p.add_argument("--kind", default="diag",
                   choices=["diag", "whitney", "dual_inverse"])
    p.add_argument("--grid", type=int, default=128)
    p.add_argument("--count", type=int, default=6,
                   help="number of smallest eigenvalues to report")

    p = sub.add_parser("sample-field",
                       help="sample a cochain interpolant on a uniform grid")
    add_common(p)
    p.add_argument("--k", type=int, default=1, help="primal form degree")
    p.add_argument("--space", default="primal", choices=["primal", "dual"])
    p.add_argument("--cochain", default=None,
                   help="CSV cochain (id,value); defaults to all ones")
    p.add_argument("--samples", type=int, default=16,
                   help="samples per axis")

    p = sub.add_parser("fig8", help="generate a two-fan mesh as JSON")
    p.add_argument("--P", type=_float_list, required=True)
    p.add_argument("--out", default=".")

    p = sub.add_parser("convert",
                       help="convert an OFF-style text mesh to JSON")
    p.add_argument("input", help="OFF-style mesh file")
    p.add_argument("--out", default=".")

    return parser


COMMANDS = {
    "info": cmd_info,
    "dual": cmd_dual,
    "hodge": cmd_hodge,
    "cond": cmd_cond,
    "table1": cmd_table1,
    "solve": cmd_solve,
    "wave": cmd_wave,
    "sample-field": cmd_sample_field,
    "fig8": cmd_fig8,
    "convert": cmd_convert,
}


def make_config(args) -> RunConfig:
    out = Path(getattr(args, "out", "."))
    if not out.is_dir():
        raise CliError(f"output directory {out} does not exist")
    return RunConfig(
        command=args.command,
        mesh=getattr(args, "mesh", None),
        rule=getattr(args, "rule", "barycentric"),
        kind=getattr(args, "kind", "diag"),
        k=getattr(args, "k", 1),
        grid=getattr(args, "grid", 128),
        P=getattr(args, "P", []) or [],
        system=getattr(args, "system", []) or [],
        tol=getattr(args, "tol", None),
        out=out,
    )


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = make_config(args)
        return COMMANDS[args.command](cfg, args)
    except (CliError, MeshError, HodgeError, SibsonError, SystemError,
            whitney.DegreeError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
