"""Command-line front end.

Subcommands: solve, compare, fit-weights, energy.  Exit codes: 0 success,
1 runtime failure (no convergence, singular input, ill conditioning),
2 validation or parse failure.
"""

from __future__ import annotations

import argparse
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from ._backend import backend_name
from .config import (
    build_composite,
    build_domain,
    load_config,
    reference_surface_grid,
    run_case,
)
from .errors import (
    ConfigError,
    DuplicateId,
    IdMismatch,
    IsokinError,
    NonFinite,
    OrderViolation,
    ParseError,
    ZeroDisplacement,
)
from .harness import (
    block_surface_mask,
    cylinder_surface_mask,
    error_metric,
    export_nodes_csv,
    export_surface_obj,
    ingest_nodes,
    NodeSet,
)
from .mechanics import fit_weight_matrix, total_energy

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_VALIDATION = 2

_VALIDATION_ERRORS = (
    ConfigError,
    OrderViolation,
    ParseError,
    DuplicateId,
    NonFinite,
    IdMismatch,
    ZeroDisplacement,
    ValueError,
)


def _load_weight_matrix(spec, cfg, seed):
    if spec == "identity":
        return None, "identity"
    if spec == "fit":
        comp = build_composite(cfg)
        if comp is None:
            raise ConfigError("rod3d has no modal parameters to weight")
        domain = build_domain(cfg)
        wf = cfg.weightfit
        fit = fit_weight_matrix(
            comp,
            domain,
            cfg.material,
            sample_count=wf.samples,
            magnitude=wf.magnitude,
            seed=seed if seed is not None else wf.seed,
        )
        return fit.W, "fit"
    W = np.loadtxt(spec, delimiter=",")
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise ConfigError(f"weight matrix file {spec} is not square")
    return W, spec


def _write_params(path, params):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for v in params:
            fh.write(f"{v:.17g}\n")


def _read_params(path):
    values = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            values.extend(float(v) for v in line.replace(",", " ").split())
    return np.array(values)


def _write_trace(path, trace):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("iteration,residual,param_norm,damped\n")
        for rec in trace:
            fh.write(
                f"{rec.iteration},{rec.residual:.17g},{rec.param_norm:.17g},"
                f"{int(rec.damped)}\n"
            )


def _write_manifest(path, sections):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for name, entries in sections:
            fh.write(f"[{name}]\n")
            for key, value in entries:
                if key == "_text":
                    for line in str(value).splitlines():
                        fh.write(f"    {line}\n")
                else:
                    fh.write(f"{key} = {value}\n")
            fh.write("\n")


def cmd_solve(args) -> int:
    cfg = load_config(args.config)
    if args.solver:
        from .config import _METHODS

        if args.solver not in _METHODS[cfg.case]:
            raise ConfigError(
                f"method {args.solver!r} not available for case {cfg.case!r}"
            )
        cfg.method = args.solver
    W, weights_label = _load_weight_matrix(args.weights, cfg, args.seed)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    t0 = time.perf_counter()
    outcome = run_case(cfg, weight_matrix=W)
    solve_ms = (time.perf_counter() - t0) * 1000.0

    t1 = time.perf_counter()
    domain = build_domain(cfg)
    ref_pts, _ = domain.points_and_volumes()
    ids = np.arange(1, len(ref_pts) + 1)
    def_pts = outcome.composite.apply(ref_pts)
    export_nodes_csv(out_dir / "reference_points.csv", ids, ref_pts)
    export_nodes_csv(out_dir / "deformed_points.csv", ids, def_pts)
    _write_params(out_dir / "params.txt", outcome.params)
    _write_trace(out_dir / "trace.csv", outcome.trace)
    outputs = [
        "reference_points.csv",
        "deformed_points.csv",
        "params.txt",
        "trace.csv",
    ]
    if args.surface_grid:
        nu, nv = args.surface_grid
        grid = reference_surface_grid(cfg, nu, nv)
        deformed = outcome.composite.apply(grid.reshape(-1, 3)).reshape(grid.shape)
        export_surface_obj(out_dir / "surface.obj", deformed)
        outputs.append("surface.obj")
    io_ms = (time.perf_counter() - t1) * 1000.0

    _write_manifest(
        out_dir / "manifest.txt",
        [
            (
                "run",
                [
                    ("command", "solve"),
                    ("version", __version__),
                    ("backend", backend_name()),
                    ("case", cfg.case),
                    ("solver", cfg.method),
                    ("seed", args.seed if args.seed is not None else cfg.weightfit.seed),
                    ("weights", weights_label),
                ],
            ),
            (
                "result",
                [
                    ("converged", "true"),
                    ("iterations", outcome.iterations),
                    ("residual", f"{outcome.residual:.17g}"),
                    ("damped", "true" if outcome.damped_any else "false"),
                ],
            ),
            (
                "timings",
                [
                    ("solve_ms", f"{solve_ms:.3f}"),
                    ("io_ms", f"{io_ms:.3f}"),
                    ("total_ms", f"{solve_ms + io_ms:.3f}"),
                ],
            ),
            ("outputs", [(f"file{i}", name) for i, name in enumerate(outputs)]),
            ("config", [("_text", cfg.source_text)]),
        ],
    )
    print(
        f"solved {cfg.case} with {cfg.method}: residual {outcome.residual:.3e} "
        f"in {outcome.iterations} iterations, {solve_ms:.1f} ms solve"
    )
    return EXIT_OK


def _surface_filter(cfg, reference: NodeSet):
    g = cfg.geometry
    if cfg.case == "block":
        return block_surface_mask(
            reference.points, g.width_x, g.width_y, g.height
        )
    if cfg.case == "chamber":
        return cylinder_surface_mask(
            reference.points, (g.inner_radius, g.outer_radius), g.height
        )
    return cylinder_surface_mask(reference.points, (g.radius,), g.height)


def cmd_compare(args) -> int:
    ours = ingest_nodes(args.ours, "primitive")
    theirs = ingest_nodes(args.theirs, "fem")
    ref = ingest_nodes(args.reference, "reference")
    if args.surface_only:
        if not args.config:
            raise ConfigError("--surface-only needs --config for the geometry")
        cfg = load_config(args.config)
        mask = _surface_filter(cfg, ref)
        if not mask.any():
            raise ConfigError("no surface nodes found for this geometry")
        ours = NodeSet(ours.ids[mask], ours.points[mask], ours.label)
        theirs = NodeSet(theirs.ids[mask], theirs.points[mask], theirs.label)
        ref = NodeSet(ref.ids[mask], ref.points[mask], ref.label)
    result = error_metric(ref, theirs, ours)
    print(f"E = {result.E:.17g}")
    print(
        f"nodes {len(result.ids)}, mean |a-f| {np.mean(result.node_errors):.6g}, "
        f"max |a-f| {np.max(result.node_errors):.6g}, "
        f"mean |a-o| {np.mean(result.node_displacements):.6g}"
    )
    if args.report:
        with open(args.report, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("id,error,displacement\n")
            for i, e, d in zip(
                result.ids, result.node_errors, result.node_displacements
            ):
                fh.write(f"{i},{e:.17g},{d:.17g}\n")
    return EXIT_OK


def cmd_fit_weights(args) -> int:
    cfg = load_config(args.config)
    comp = build_composite(cfg)
    if comp is None:
        raise ConfigError("rod3d has no modal parameters to weight")
    domain = build_domain(cfg)
    wf = cfg.weightfit
    fit = fit_weight_matrix(
        comp,
        domain,
        cfg.material,
        sample_count=wf.samples,
        magnitude=wf.magnitude,
        seed=wf.seed,
    )
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(out, fit.W, delimiter=",", fmt="%.17g")
    status = "positive-definite" if fit.is_positive_definite() else "indefinite"
    print(
        f"fitted {fit.W.shape[0]}x{fit.W.shape[0]} weight matrix from "
        f"{fit.sample_count} samples: residual {fit.residual:.6g}, {status}"
    )
    print(f"wrote {out}")
    return EXIT_OK


def cmd_energy(args) -> int:
    cfg = load_config(args.config)
    comp = build_composite(cfg)
    if comp is None:
        raise ConfigError("rod3d energy evaluation needs a solved curve; "
                          "use the library API")
    params = _read_params(args.params)
    if len(params) != comp.num_params:
        raise ConfigError(
            f"params file has {len(params)} values, case needs {comp.num_params}"
        )
    domain = build_domain(cfg)
    e = total_energy(comp, params, domain, cfg.material)
    e_fine = total_energy(comp, params, domain.refined(2), cfg.material)
    delta = abs(e_fine - e) / abs(e_fine) * 100.0 if e_fine != 0.0 else 0.0
    print(f"energy = {e:.17g} kPa.cm^3")
    print(f"refined-grid energy = {e_fine:.17g} kPa.cm^3 (delta {delta:.3f}%)")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="isokin",
        description="Reduced-order soft-body deformation solver",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve a case config")
    p_solve.add_argument("config")
    p_solve.add_argument(
        "--solver", choices=("jacobian", "projgrad", "se3"), default=None
    )
    p_solve.add_argument("--out", default="out")
    p_solve.add_argument("--seed", type=int, default=None)
    p_solve.add_argument(
        "--surface-grid", nargs=2, type=int, metavar=("NU", "NV"), default=None
    )
    p_solve.add_argument(
        "--weights",
        default="identity",
        help="identity | fit | path to a weight-matrix CSV",
    )
    p_solve.set_defaults(func=cmd_solve)

    p_cmp = sub.add_parser("compare", help="compare deformed node clouds")
    p_cmp.add_argument("ours")
    p_cmp.add_argument("theirs")
    p_cmp.add_argument("reference")
    p_cmp.add_argument("--surface-only", action="store_true")
    p_cmp.add_argument("--config", default=None)
    p_cmp.add_argument("--report", default=None)
    p_cmp.set_defaults(func=cmd_compare)

    p_fit = sub.add_parser("fit-weights", help="fit the energy weight matrix")
    p_fit.add_argument("config")
    p_fit.add_argument("--out", default="weights.csv")
    p_fit.set_defaults(func=cmd_fit_weights)

    p_en = sub.add_parser("energy", help="total strain energy at given weights")
    p_en.add_argument("config")
    p_en.add_argument("params")
    p_en.set_defaults(func=cmd_energy)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _VALIDATION_ERRORS as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except IsokinError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
