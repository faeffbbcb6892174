"""``vardesign`` command line: design, imse, sweep, simulate and verify.

Exit status is 0 on success, 1 for usage or validation failures and 2 for
numerical failures. Data goes to the declared output files (or standard
output); diagnostics go to standard error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import load_config, parse_grid
from .designs import Design, zone_one_gap_checks
from .errors import AssumptionError, ConfigError, NumericalError, VardesignError
from .imse import closed_form_errors, imse, quadrature_errors, rate_factor, ModelVariogram
from .rates import fmt, prop1_certificate, sweep
from .simulate import (
    FbmKernel,
    KernelVariogram,
    MbmKernel,
    empirical_imse,
    grid_with_knots,
    sample_paths,
    trapezoid_expectation,
)
from .smoothness import SmoothnessModel, validate_c1_c2

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def dump_json(obj):
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    return obj


def _write(text, path):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def design_csv(design):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["j", "t", "provenance"])
    for j, (t, tag) in enumerate(zip(design.knots, design.provenance)):
        writer.writerow([j, fmt(float(t)), tag])
    return buf.getvalue()


def read_design_csv(path):
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"design file not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"j", "t"} <= set(reader.fieldnames):
            raise ConfigError(f"{path}: expected a CSV header with columns j,t[,provenance]")
        rows = list(reader)
    try:
        knots = np.array([float(r["t"]) for r in rows])
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    prov = tuple(r.get("provenance") or "file" for r in rows)
    return Design(knots, max(len(rows) - 1, 1), prov, kind="file")


def _parse_zones(text):
    try:
        U, rho = (float(x) for x in text.split(","))
    except ValueError:
        raise ConfigError("--zones expects U,rho") from None
    return U, rho


def cmd_design(args):
    cfg = load_config(args.config)
    design = cfg.design.build(cfg.model, args.n)
    _write(design_csv(design), args.out)
    if design.degenerate:
        print(f"warning: degenerate design (N={design.N})", file=sys.stderr)
    return EXIT_OK


def cmd_imse(args):
    cfg = load_config(args.config)
    design = cfg.design.build(cfg.model, args.n)
    zones = None
    if args.zones:
        U, rho = _parse_zones(args.zones)
        zones = (U, rho, cfg.model.gamma)
    rate = rate_factor(args.n, cfg.model, design.kind, kappa=cfg.design.kappa)
    target = cfg.design.target(cfg.model)
    report = imse(design, model=cfg.model, method=cfg.engine.method, atol=cfg.engine.atol,
                  rtol=cfg.engine.rtol, zones=zones, rate=rate, target=target)
    out = report.to_dict()
    out.update({"n": args.n, "kind": design.kind, "rate_factor": rate})
    _write(dump_json(_clean(out)), args.out)
    if args.per_interval:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["j", "t_left", "t_right", "e2"])
        k = design.knots
        for j, e in enumerate(report.per_interval, start=1):
            writer.writerow([j, fmt(float(k[j - 1])), fmt(float(k[j])), fmt(float(e))])
        Path(args.per_interval).write_text(buf.getvalue(), encoding="utf-8")
    return EXIT_OK


def cmd_sweep(args):
    cfg = load_config(args.config)
    grid = parse_grid(args.grid) if args.grid else list(cfg.sweep_grid)
    table = sweep(cfg.design, cfg.model, grid, threads=args.threads)
    if args.out:
        Path(args.out).write_text(table.to_csv(), encoding="utf-8")
    else:
        sys.stdout.write(table.to_csv())
    summary = table.summary()
    summary["grid"] = grid
    text = dump_json(_clean(summary))
    if args.summary:
        Path(args.summary).write_text(text, encoding="utf-8")
    elif args.out:
        sys.stdout.write(text)
    for w in table.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return EXIT_OK


def _load_model(args, cfg):
    if args.model:
        path = Path(args.model)
        if not path.is_file():
            raise ConfigError(f"model file not found: {path}")
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
        return SmoothnessModel.from_dict(data.get("model", data))
    if cfg is not None:
        return cfg.model
    return None


def cmd_simulate(args):
    cfg = load_config(args.config) if args.config else None
    sim = cfg.simulation if cfg else None
    kernel_kind = args.kernel or (sim.kernel if sim else "fbm")
    grid_size = args.grid or (sim.grid if sim else 1025)
    paths = args.paths if args.paths is not None else (sim.paths if sim else 10000)
    seed = args.seed if args.seed is not None else (sim.seed if sim else 0)
    model = _load_model(args, cfg)
    if kernel_kind == "fbm":
        alpha = args.alpha if args.alpha is not None else (sim.alpha if sim and sim.alpha else None)
        if alpha is None:
            alpha = model.alpha0 if model is not None else 1.0
        kernel = FbmKernel(alpha)
    else:
        if model is None:
            raise ConfigError("the mbm kernel needs --model or --config")
        kernel = MbmKernel(model)
    if args.design:
        design = read_design_csv(args.design)
    elif cfg is not None and args.n:
        design = cfg.design.build(cfg.model, args.n)
    else:
        raise ConfigError("simulate needs --design knots.csv or --config with --n")
    grid = grid_with_knots(grid_size, design.knots)
    ensemble = sample_paths(kernel, grid, paths, seed)
    estimate, se = empirical_imse(ensemble, design, threads=args.threads)
    reference = imse(design, variogram=KernelVariogram(kernel), method="quadrature",
                     atol=1e-14, rtol=1e-11).e2
    out = {
        "kernel": kernel_kind,
        "estimate": estimate,
        "se": se,
        "deterministic_reference": reference,
        "trapezoid_reference": trapezoid_expectation(kernel, grid, design),
        "z_score": (estimate - reference) / se if se > 0 and math.isfinite(se) else None,
        "paths": paths,
        "seed": seed,
        "grid_size": int(grid.size),
        "N": design.N,
        "jitter": ensemble.jitter,
    }
    _write(dump_json(_clean(out)), args.out)
    return EXIT_OK


def _check(name, ok, **detail):
    return {"name": name, "ok": bool(ok), **detail}


def verify_config(cfg, n_engine=200):
    """Run the invariant suite on a validated config; returns the report dictionary."""
    model, spec = cfg.model, cfg.design
    checks = []
    c12 = validate_c1_c2(model)
    checks.append(_check("model C1/C2", c12.ok, fitted_b=c12.fitted_b, warnings=list(c12.warnings)))
    # design construction runs the assumption checks and raises on violation
    designs = {n: spec.build(model, n) for n in cfg.sweep_grid}
    small = spec.build(model, n_engine)
    structure = all(np.all(np.diff(d.knots) > 0) and d.knots[0] == 0 and d.knots[-1] == 1
                    for d in designs.values())
    checks.append(_check("design structure", structure, N=[d.N for d in designs.values()]))
    closed = closed_form_errors(small.knots, model)
    quad = quadrature_errors(small.knots, ModelVariogram(model), atol=1e-16, rtol=1e-13)
    e_c, e_q = math.fsum(closed), math.fsum(quad)
    rel = abs(e_c - e_q) / e_c
    checks.append(_check("closed form vs quadrature", rel <= 1e-10, relative_difference=rel, n=n_engine))
    if spec.rho is not None:
        d = designs[cfg.sweep_grid[0]]
        U = 0.5 * spec.rho * d.d_n
        rep = imse(d, model=model, zones=(U, spec.rho, model.gamma))
        parts = math.fsum([rep.s1, rep.s2, rep.s3])
        rel = abs(parts - rep.e2) / rep.e2
        checks.append(_check("zone partition", rel <= 1e-14, relative_difference=rel))
    if spec.p is not None:
        gaps = [zone_one_gap_checks(d, spec.p) for d in designs.values()]
        checks.append(_check("zone-one gap sandwich and monotone spacing",
                             all(g.sandwich_ok and g.monotone_ok for g in gaps),
                             worst_sandwich=min(g.worst_sandwich for g in gaps),
                             worst_monotone=min(g.worst_monotone for g in gaps)))
    certs = [prop1_certificate(d, model) for d in designs.values()]
    checks.append(_check("convexity lower bound", all(c.holds for c in certs),
                         bounds=[c.bound for c in certs], e2=[c.e2 for c in certs]))
    table = sweep(spec, model, cfg.sweep_grid)
    trend = {
        "name": "normalized deviation trend (informational)",
        "ok": table.deviation_decreasing(),
        "deviations": [r.deviation for r in table.rows],
        "informational": True,
    }
    checks.append(trend)
    failed = [c["name"] for c in checks if not c["ok"] and not c.get("informational")]
    return {"config": cfg.source, "checks": checks, "passed": not failed, "failed": failed}


def cmd_verify(args):
    cfg = load_config(args.config)
    try:
        report = verify_config(cfg)
    except AssumptionError as exc:
        report = {"config": cfg.source, "checks": [_check("assumptions", False, message=str(exc),
                                                          clause=exc.clause)],
                  "passed": False, "failed": ["assumptions"]}
        _write(dump_json(_clean(report)), args.out)
        print(f"assumption violated ({exc.clause}): {exc}", file=sys.stderr)
        return EXIT_INVALID
    _write(dump_json(_clean(report)), args.out)
    if not report["passed"]:
        print("verification failed: " + ", ".join(report["failed"]), file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=int, default=1, help="worker thread cap (default 1)")

    parser = _Parser(prog="vardesign", description="Sampling designs and IMSE for processes "
                     "with variable smoothness.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="{design,imse,sweep,simulate,verify}",
                                parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("design", parents=[common], help="write knots as CSV (j,t,provenance)")
    p.add_argument("--config", required=True, help="run configuration JSON")
    p.add_argument("--n", type=int, required=True, help="knot budget n")
    p.add_argument("--out", help="output CSV (default: standard output)")
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("imse", parents=[common], help="IMSE report as JSON")
    p.add_argument("--config", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--zones", help="U,rho for the three-zone split")
    p.add_argument("--per-interval", help="CSV with j,t_left,t_right,e2")
    p.add_argument("--out", help="output JSON (default: standard output)")
    p.set_defaults(func=cmd_imse)

    p = sub.add_parser("sweep", parents=[common], help="rate-normalized IMSE over an n grid")
    p.add_argument("--config", required=True)
    p.add_argument("--grid", help="comma separated n values, e.g. 1e3,1e4,1e5")
    p.add_argument("--out", help="table CSV (n,N,e2,normalized,target,deviation)")
    p.add_argument("--summary", help="summary JSON with the extrapolated limit")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo IMSE of Gaussian paths")
    p.add_argument("--kernel", choices=("fbm", "mbm"))
    p.add_argument("--model", help="smoothness model JSON (mbm kernel)")
    p.add_argument("--config", help="run configuration JSON")
    p.add_argument("--alpha", type=float, help="fBm index")
    p.add_argument("--grid", type=int, help="number of uniform grid points (knots are added)")
    p.add_argument("--paths", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--design", help="knots CSV as written by 'vardesign design'")
    p.add_argument("--n", type=int, help="build the design from --config with this n")
    p.add_argument("--out", help="output JSON (default: standard output)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", parents=[common], help="run the invariant suite on a config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="report JSON (default: standard output)")
    p.set_defaults(func=cmd_verify)
    return parser


def run(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "threads", 1) < 1:
            raise ConfigError("--threads must be at least 1")
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INVALID
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except AssumptionError as exc:
        print(f"assumption violated ({exc.clause}): {exc}", file=sys.stderr)
        return EXIT_INVALID
    except VardesignError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


def main():
    sys.exit(run())
