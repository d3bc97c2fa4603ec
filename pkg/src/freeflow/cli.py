"""Command-line front end.

Exit codes: 0 success, 1 error (with a JSON error envelope on stdout),
2 experiment criterion failed. All outputs are deterministic for a fixed
config and seed; reports carry no timestamps.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import io as ffio
from .currents import betti1, classify
from .calculus import (
    divergence,
    gradient,
    l1_norm,
    linf_norm,
    lip_constant,
)
from .errors import FreeflowError, ParseError
from .experiments import (
    cutoff_decay,
    divergence_free_field,
    extension_experiment,
    refinement_study,
    weakstar_probe,
)
from .freenorm import FieldSolveParams, free_norm
from .mesh import geodesic_distances
from .primitives import KINDS, generate_primitive

_PRIMITIVE_FLAGS = {
    "level": int,
    "nx": int,
    "ny": int,
    "width": float,
    "height": float,
    "r_inner": float,
    "r_outer": float,
    "n_angular": int,
    "n_radial": int,
    "radius": float,
    "n": int,
    "total_length": float,
}


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help()
        return 1
    try:
        return args.func(args)
    except FreeflowError as exc:
        envelope = {"error": {"type": type(exc).__name__, "message": str(exc)}}
        print(json.dumps(envelope, indent=2))
        return 1


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="freeflow",
        description="Free-space norms and discrete calculus on metric meshes.",
    )
    sub = parser.add_subparsers(dest="command")
    parser.set_defaults(command=None)

    p = sub.add_parser("gen-mesh", help="generate a primitive mesh")
    p.add_argument("--kind", required=True, choices=KINDS)
    p.add_argument("--out", required=True)
    p.add_argument("--base-vertex", type=int, default=0)
    for flag, typ in _PRIMITIVE_FLAGS.items():
        p.add_argument(f"--{flag.replace('_', '-')}", type=typ, default=None)
    p.set_defaults(func=cmd_gen_mesh)

    p = sub.add_parser("validate-mesh", help="validate a mesh file")
    p.add_argument("mesh")
    p.set_defaults(func=cmd_validate_mesh)

    p = sub.add_parser("calc", help="gradient, divergence or norms of a field")
    p.add_argument("op", choices=("grad", "div", "norms"))
    p.add_argument("--mesh", required=True)
    p.add_argument("--field", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_calc)

    p = sub.add_parser("check-currents", help="classify an edge form")
    p.add_argument("--mesh", required=True)
    p.add_argument("--form", required=True)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_check_currents)

    p = sub.add_parser("free-norm", help="free norm of a molecule")
    p.add_argument("--mesh", required=True)
    p.add_argument("--molecule", required=True)
    p.add_argument("--method", default="all", choices=("dual", "graph", "field", "all"))
    p.add_argument("--out", default=None)
    p.add_argument("--field-max-iter", type=int, default=5000)
    p.add_argument("--field-tol", type=float, default=1e-6)
    p.add_argument("--field-step", type=float, default=1.0)
    p.set_defaults(func=cmd_free_norm)

    p = sub.add_parser("experiment", help="run a scripted experiment")
    p.add_argument("kind", choices=("cutoff", "extension", "weakstar", "refine"))
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--csv", default=None)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("batch", help="run a manifest of jobs")
    p.add_argument("manifest")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_batch)

    return parser


def _emit(obj, out):
    if out:
        ffio.write_json(out, obj)
    else:
        print(json.dumps(obj, indent=2))


def cmd_gen_mesh(args):
    params = {}
    for flag in _PRIMITIVE_FLAGS:
        value = getattr(args, flag)
        if value is not None:
            params[flag] = value
    mesh = generate_primitive(args.kind, base_vertex=args.base_vertex, **params)
    ffio.write_json(args.out, ffio.mesh_to_dict(mesh))
    return 0


def cmd_validate_mesh(args):
    mesh = ffio.mesh_from_dict(ffio.read_json(args.mesh))
    summary = {
        "dimension": mesh.dimension,
        "vertices": mesh.vertex_count,
        "edges": len(mesh.edges),
        "faces": len(mesh.triangles),
        "boundary_edges": len(mesh.boundary_edges),
        "base_vertex": mesh.base_vertex,
        "mesh_hash": ffio.mesh_hash(mesh),
    }
    print(json.dumps(summary, indent=2))
    return 0


def cmd_calc(args):
    mesh = ffio.mesh_from_dict(ffio.read_json(args.mesh))
    kind, values = ffio.field_from_dict(mesh, ffio.read_json(args.field))
    if args.op == "grad":
        if kind != "scalar":
            raise ParseError("grad needs a scalar field")
        out = gradient(mesh, values)
        payload = (
            ffio.face_field_to_dict(mesh, out)
            if mesh.dimension == 2
            else ffio.edge_values_to_dict(mesh, out)
        )
    elif args.op == "div":
        if kind == "scalar":
            raise ParseError("div needs a vector field")
        payload = ffio.scalar_field_to_dict(mesh, divergence(mesh, values))
    else:
        if kind == "scalar":
            payload = {
                "lip_edgewise": lip_constant(mesh, values, "edgewise"),
                "lip_pairwise_geodesic": lip_constant(
                    mesh, values, "pairwise_geodesic"
                ),
            }
        else:
            payload = {
                "l1_norm": l1_norm(mesh, values),
                "linf_norm": linf_norm(mesh, values),
            }
    _emit(payload, args.out)
    return 0


def cmd_check_currents(args):
    if args.tol <= 0:
        raise ParseError(f"tolerance must be positive, got {args.tol}")
    mesh = ffio.mesh_from_dict(ffio.read_json(args.mesh))
    _, omega = ffio.field_from_dict(mesh, ffio.read_json(args.form), expect="edges")
    result = classify(mesh, omega, tol=args.tol)
    payload = result.to_dict()
    payload["betti1"] = betti1(mesh)
    payload["tol"] = args.tol
    _emit(payload, args.out)
    return 0


def cmd_free_norm(args):
    if args.field_tol <= 0 or args.field_step <= 0 or args.field_max_iter <= 0:
        raise ParseError("field solver parameters must be positive")
    mesh = ffio.mesh_from_dict(ffio.read_json(args.mesh))
    molecule = ffio.molecule_from_dict(ffio.read_json(args.molecule))
    params = FieldSolveParams(
        max_iter=args.field_max_iter, step=args.field_step, tol=args.field_tol
    )
    report = free_norm(mesh, molecule, method=args.method, field_params=params)
    payload = report.to_dict()
    payload["method"] = args.method
    payload["mesh_hash"] = ffio.mesh_hash(mesh)
    _emit(payload, args.out)
    return 0


_EXPERIMENT_KEYS = {
    "cutoff": {
        "kind", "width", "height", "nx", "ny", "ks", "decay", "seed",
    },
    "extension": {
        "kind", "nx", "center", "r_inner", "r_outer", "seed",
    },
    "weakstar": {
        "kind", "mesh_kind", "n", "total_length", "steps", "seed",
    },
    "refine": {
        "kind", "primitive", "levels", "atoms", "include_field",
        "field_max_iter", "field_tol", "seed",
    },
}


def _check_config(config, kind):
    declared = config.get("kind", kind)
    if declared != kind:
        raise ParseError(f"config kind {declared!r} does not match {kind!r}")
    unknown = set(config) - _EXPERIMENT_KEYS[kind]
    if unknown:
        raise ParseError(f"unknown config keys: {sorted(unknown)}")
    seed = int(config.get("seed", 42))
    return seed


def run_experiment(kind, config):
    seed = _check_config(config, kind)
    rng = np.random.default_rng(seed)
    if kind == "cutoff":
        mesh = generate_primitive(
            "flat_rect",
            width=float(config.get("width", 32.0)),
            height=float(config.get("height", 1.0)),
            nx=int(config.get("nx", 160)),
            ny=int(config.get("ny", 8)),
        )
        dist = geodesic_distances(mesh, mesh.base_vertex).dist
        decay = float(config.get("decay", 4.0))
        g = divergence_free_field(mesh, potential=np.exp(-dist / decay))
        return cutoff_decay(mesh, g, dist, ks=config.get("ks", [1, 2, 4, 8]))
    if kind == "extension":
        mesh = generate_primitive("flat_rect", nx=int(config.get("nx", 20)))
        center = np.asarray(config.get("center", [0.5, 0.5]), dtype=float)
        bary = mesh.aux["positions"][mesh.triangles].mean(axis=1)
        r = np.linalg.norm(bary - center[None, :], axis=1)
        faces = np.flatnonzero(
            (r >= float(config.get("r_inner", 0.15)))
            & (r <= float(config.get("r_outer", 0.35)))
        )
        return extension_experiment(mesh, faces, rng=rng)
    if kind == "weakstar":
        mesh_kind = config.get("mesh_kind", "circle_graph")
        params = {"n": int(config.get("n", 32))}
        if "total_length" in config:
            params["total_length"] = float(config["total_length"])
        mesh = generate_primitive(mesh_kind, **params)
        dist = geodesic_distances(mesh, mesh.base_vertex).dist
        steps = int(config.get("steps", 16))
        g = rng.normal(size=len(mesh.edges))
        f_lim = np.zeros(mesh.vertex_count)
        seq = [f_lim + dist / k for k in range(1, steps + 1)]
        l1g = l1_norm(mesh, g)
        report = weakstar_probe(
            mesh, seq, f_lim, g, lip_bound=1.0,
            pass_threshold=(1.0 / steps) * l1g * (1.0 + 1e-9),
        )
        per_row = [
            row["deviation"] <= (1.0 / (i + 1)) * l1g * (1.0 + 1e-9)
            for i, row in enumerate(report.rows)
        ]
        report.details["per_step_bound_holds"] = all(per_row)
        report.passed = report.passed and all(per_row)
        return report
    if kind == "refine":
        params = None
        if "field_max_iter" in config or "field_tol" in config:
            params = FieldSolveParams(
                max_iter=int(config.get("field_max_iter", 5000)),
                tol=float(config.get("field_tol", 1e-6)),
            )
        atoms = [
            (np.asarray(target, dtype=float), float(coeff))
            for target, coeff in config["atoms"]
        ]
        return refinement_study(
            config["primitive"],
            config["levels"],
            atoms,
            include_field=bool(config.get("include_field", False)),
            field_params=params,
        )
    raise ParseError(f"unknown experiment kind {kind!r}")


def cmd_experiment(args):
    config = ffio.read_json(args.config)
    report = run_experiment(args.kind, config)
    payload = report.to_dict()
    if args.out:
        ffio.write_json(args.out, payload)
    if args.csv:
        _rows_to_csv(args.csv, report.rows)
    if not args.out and not args.csv:
        print(json.dumps(payload, indent=2))
    return 0 if report.passed else 2


def _rows_to_csv(path, rows):
    fields = []
    for row in rows:
        for key in row:
            if key not in fields:
                fields.append(key)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        writer.writerows(rows)


def _run_batch_entry(entry, mesh_cache):
    command = entry.get("command")
    if command == "free-norm":
        mesh = _cached_mesh(entry["mesh"], mesh_cache)
        molecule = ffio.molecule_from_dict(ffio.read_json(entry["molecule"]))
        report = free_norm(mesh, molecule, method=entry.get("method", "all"))
        gap = report.duality_gap
        status = "pass"
        if gap is not None and abs(gap) > 1e-6 * max(
            1.0, abs(report.dual_value or 0.0)
        ):
            status = "fail"
        if entry.get("out"):
            ffio.write_json(entry["out"], report.to_dict())
        return status, f"gap={gap!r}"
    if command == "experiment":
        kind = entry["experiment"]
        report = run_experiment(kind, entry.get("config", {"kind": kind}))
        if entry.get("out"):
            ffio.write_json(entry["out"], report.to_dict())
        return ("pass" if report.passed else "fail"), f"kind={kind}"
    if command == "validate-mesh":
        mesh = _cached_mesh(entry["mesh"], mesh_cache)
        return "pass", f"vertices={mesh.vertex_count}"
    raise ParseError(f"unsupported batch command {command!r}")


def _cached_mesh(path, cache):
    data = ffio.read_json(path)
    key = json.dumps(data, sort_keys=True, separators=(",", ":"))
    digest = hashlib.sha256(key.encode()).hexdigest()
    if digest not in cache:
        cache[digest] = ffio.mesh_from_dict(data)
    return cache[digest]


def cmd_batch(args):
    manifest = ffio.read_json(args.manifest)
    entries = manifest.get("entries", [])
    mesh_cache = {}
    threads = max(1, int(os.environ.get("FREEFLOW_THREADS", "1")))

    def work(indexed):
        index, entry = indexed
        start = time.perf_counter()
        try:
            status, detail = _run_batch_entry(entry, mesh_cache)
        except Exception as exc:  # entry errors recorded, batch continues
            status, detail = "error", f"{type(exc).__name__}: {exc}"
        elapsed = time.perf_counter() - start
        return index, entry.get("command", "?"), status, detail, elapsed

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, enumerate(entries)))
    else:
        results = [work(item) for item in enumerate(entries)]

    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "command", "status", "detail", "wall_time_s"])
        for index, command, status, detail, elapsed in results:
            writer.writerow([index, command, status, detail, f"{elapsed:.6f}"])

    return 0 if all(r[2] == "pass" for r in results) else 2


if __name__ == "__main__":
    sys.exit(main())
