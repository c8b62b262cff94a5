"""Command-line front end.

Subcommands: simulate, sweep, thresholds, hyperbolicity-check,
limit-study, init-preview.  Exit codes: 0 completed, 10 breakdown
detected (a scientific result), 2 config error, 3 runtime domain error.
"""

from __future__ import annotations

import argparse
import itertools
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import classical, functionals, hyperbolic, initdata, solver
from .config import RunConfig, load_config, parse_config
from .errors import BreakdownError, ConfigError, DomainError
from .model import PrimitiveState
from .solver import RunStatus

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3
EXIT_BREAKDOWN = 10

_STATUS_EXIT = {
    RunStatus.COMPLETED: EXIT_OK,
    RunStatus.BREAKDOWN: EXIT_BREAKDOWN,
    RunStatus.DT_FLOOR_HIT: EXIT_RUNTIME,
    RunStatus.DOMAIN_ERROR: EXIT_RUNTIME,
}


def build_field(cfg: RunConfig) -> tuple[PrimitiveState, initdata.AdmissibilityReport]:
    if cfg.init_kind == "small_data":
        field = initdata.small_data_field(cfg.eps, cfg.grid)
        report = initdata.AdmissibilityReport(
            min_rho=float(np.min(field.rho)),
            min_theta=float(np.min(field.theta)),
            support_radius=functionals.support_radius(field, cfg.grid),
            G0=functionals.energy_G(field, cfg.grid, cfg.gas),
            H0=functionals.H0_functional(field, cfg.grid, cfg.gas),
            I0=functionals.I0_functional(field, cfg.grid, cfg.gas))
        return field, report
    return initdata.build_initial_field(cfg.init_specs(), cfg.grid, cfg.gas)


def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def threshold_block(cfg: RunConfig, field: PrimitiveState,
                    report: initdata.AdmissibilityReport,
                    sigma_num: float) -> str:
    ric = functionals.riccati_constants(cfg.gas, field, cfg.grid, cfg.M)
    thr = functionals.check_thresholds(ric)
    items = [
        ("AS1", thr.AS1), ("AS3", thr.AS3),
        ("c2", ric.c2), ("c3", ric.c3), ("F0", ric.F0),
        ("Tstar", ric.Tstar), ("sigma_num", sigma_num),
        ("sigma", cfg.gas.sigma_bound),
        ("sigma_dominates", cfg.gas.sigma_bound >= sigma_num),
        ("as1_threshold", thr.as1_threshold), ("as1_margin", thr.as1_margin),
        ("as3_lhs", thr.as3_lhs), ("as3_rhs", thr.as3_rhs),
        ("as3_margin", thr.as3_margin),
        ("as3_identity_ok", thr.identity_ok),
        ("G0", report.G0), ("H0", report.H0), ("I0", report.I0),
        ("u0_l2sq", ric.u0_l2sq), ("max_rho0", ric.max_rho0),
        ("gamma", cfg.gas.gamma()),
    ]
    return "\n".join(f"{k} = {_fmt(v)}" for k, v in items) + "\n"


def _write_run_outputs(cfg: RunConfig, outdir: str, field0, report, result):
    os.makedirs(outdir, exist_ok=True)
    result.series.write_csv(os.path.join(outdir, "series.csv"))
    with open(os.path.join(outdir, "snapshots_index.csv"), "w") as fh:
        fh.write("index,t,file\n")
        for i, (t, snap) in enumerate(result.snapshots):
            name = f"snapshot_{i:04d}.csv"
            solver.write_snapshot_csv(os.path.join(outdir, name), cfg.grid, snap)
            fh.write(f"{i},{t:.17g},{name}\n")
    with open(os.path.join(outdir, "threshold_report.txt"), "w") as fh:
        fh.write(threshold_block(cfg, field0, report, result.sigma_num))
        fh.write(f"status = {result.status.value}\n")
        if result.breakdown_time is not None:
            fh.write(f"breakdown_time = {result.breakdown_time:.17g}\n")
            fh.write(f"breakdown_kind = {result.breakdown_event.kind}\n")
    # Riccati comparison: measured F vs comparison trajectory and the
    # quadratic lower bound that holds while AS1/AS3 do.
    ric = functionals.riccati_constants(cfg.gas, field0, cfg.grid, cfg.M)
    t = result.series.column("t")
    F = result.series.column("F")
    y = functionals.riccati_closed_form(ric, t)
    lb = functionals.lower_bound_412(ric, t)
    with open(os.path.join(outdir, "riccati.csv"), "w") as fh:
        fh.write("t,F_measured,y_riccati,F_lowerbound_412\n")
        for row in zip(t, F, y, lb):
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def run_from_config(cfg: RunConfig):
    field0, report = build_field(cfg)
    solver.check_domain_covers(cfg.grid, cfg.M, cfg.gas.sigma_bound,
                               cfg.time.t_end)
    if cfg.mode == "classical":
        result = classical.run_classical(field0, cfg.grid, cfg.gas, cfg.time,
                                         cfg.breakdown, cfg.order)
    else:
        result = solver.run(field0, cfg.grid, cfg.gas, cfg.time,
                            cfg.breakdown, cfg.order)
    return field0, report, result


def cmd_simulate(cfg: RunConfig, outdir: str) -> int:
    field0, report, result = run_from_config(cfg)
    _write_run_outputs(cfg, outdir, field0, report, result)
    print(f"status = {result.status.value}")
    print(f"t_final = {result.t_final:.17g}")
    if result.breakdown_time is not None:
        print(f"breakdown_time = {result.breakdown_time:.17g} "
              f"({result.breakdown_event.kind})")
    return _STATUS_EXIT[result.status]


def cmd_thresholds(cfg: RunConfig) -> int:
    field0, report = build_field(cfg)
    sigma_num = hyperbolic.max_speed(field0, cfg.gas)
    sys.stdout.write(threshold_block(cfg, field0, report, sigma_num))
    return EXIT_OK


def cmd_hyperbolicity(cfg: RunConfig) -> int:
    field0, _ = build_field(cfg)
    ok = True
    for state in (PrimitiveState(*map(float, (f[0] for f in field0.as_arrays()))),):
        rep = hyperbolic.verify_structure(state, cfg.gas)
        ok = ok and rep.all_ok
    print(f"# a0_positive={rep.a0_positive} a1_symmetric={rep.a1_symmetric} "
          f"b_nonneg={rep.b_nonneg} source_matches={rep.source_matches}")
    print(f"# max_speed={hyperbolic.max_speed(field0, cfg.gas):.17g}")
    print("rho,u,theta,q,S,lambda1,lambda2,lambda3,lambda4,lambda5")
    lam = hyperbolic.speeds_field(field0, cfg.gas)
    rho, u, theta, q, S = field0.as_arrays()
    for i in range(cfg.grid.N):
        vals = [rho[i], u[i], theta[i], q[i], S[i]] + list(lam[i])
        print(",".join(f"{v:.17g}" for v in vals))
    return EXIT_OK if ok else EXIT_RUNTIME


def cmd_init_preview(cfg: RunConfig, outdir: str) -> int:
    field0, report = build_field(cfg)
    os.makedirs(outdir, exist_ok=True)
    solver.write_snapshot_csv(os.path.join(outdir, "init_field.csv"),
                              cfg.grid, field0)
    block = "\n".join(f"{k} = {_fmt(v)}" for k, v in (
        ("min_rho", report.min_rho), ("min_theta", report.min_theta),
        ("support_radius", report.support_radius), ("G0", report.G0),
        ("H0", report.H0), ("I0", report.I0),
        ("junctions_c1", report.junctions_c1))) + "\n"
    sys.stdout.write(block)
    with open(os.path.join(outdir, "init_report.txt"), "w") as fh:
        fh.write(block)
    return EXIT_OK


def cmd_limit_study(cfg: RunConfig, outdir: str) -> int:
    field0, _ = build_field(cfg)
    rows, orders = classical.relaxation_limit_study(
        field0, cfg.grid, cfg.gas, cfg.time, cfg.breakdown, cfg.limit_taus,
        cfg.order)
    os.makedirs(outdir, exist_ok=True)
    with open(os.path.join(outdir, "limit_study.csv"), "w") as fh:
        fh.write("tau,l1_gap\n")
        for tau, gap in rows:
            fh.write(f"{tau:.17g},{gap:.17g}\n")
    for tau, gap in rows:
        print(f"tau={tau:.6g} l1_gap={gap:.6g}")
    for o in orders:
        print(f"order={o:.4f}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------

def _sweep_worker(job):
    index, base_text, overrides = job
    try:
        text = base_text + "\n" + "\n".join(f"{k} = {v}" for k, v in overrides)
        cfg = parse_config(text)
        field0, report, result = run_from_config(cfg)
        ric = functionals.riccati_constants(cfg.gas, field0, cfg.grid, cfg.M)
        thr = functionals.check_thresholds(ric)
        row = {
            "status": result.status.value,
            "breakdown_time": ("" if result.breakdown_time is None
                               else f"{result.breakdown_time:.17g}"),
            "Tstar": "inf" if math.isinf(ric.Tstar) else f"{ric.Tstar:.17g}",
            "AS1": str(thr.AS1).lower(),
            "AS3": str(thr.AS3).lower(),
            "sigma_num": f"{result.sigma_num:.17g}",
        }
    except (ConfigError, DomainError, BreakdownError,
            ValueError, RuntimeError) as exc:  # row marked, sweep continues
        row = {"status": "error", "breakdown_time": "", "Tstar": "",
               "AS1": "", "AS3": "", "sigma_num": ""}
        row["_error"] = str(exc)
    return index, row


def parse_axes(axis_args) -> list:
    axes = []
    for spec in axis_args or []:
        if "=" not in spec:
            raise ConfigError(f"--axis expects key=v1,v2,..., got {spec!r}")
        key, _, vals = spec.partition("=")
        values = [v.strip() for v in vals.split(",") if v.strip()]
        if not values:
            raise ConfigError(f"--axis {key}: no values given")
        axes.append((key.strip(), values))
    return axes


def cmd_sweep(base_text: str, axes: list, workers: int, outdir: str) -> int:
    keys = [k for k, _ in axes]
    combos = list(itertools.product(*(vals for _, vals in axes))) or [()]
    jobs = [(i, base_text, list(zip(keys, combo)))
            for i, combo in enumerate(combos)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = dict(pool.map(_sweep_worker, jobs))
    else:
        results = dict(map(_sweep_worker, jobs))
    os.makedirs(outdir, exist_ok=True)
    cols = keys + ["status", "breakdown_time", "Tstar", "AS1", "AS3",
                   "sigma_num"]
    path = os.path.join(outdir, "sweep_summary.csv")
    with open(path, "w") as fh:
        fh.write(",".join(cols) + "\n")
        for i, combo in enumerate(combos):
            row = results[i]
            fh.write(",".join(list(combo) + [row[c] for c in cols[len(keys):]])
                     + "\n")
    print(f"wrote {path} ({len(combos)} runs)")
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="relaxns",
                                 description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("simulate", "sweep", "thresholds", "hyperbolicity-check",
                 "limit-study", "init-preview"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="config file path")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--order", type=int, choices=(1, 2), default=None)
        if name == "sweep":
            p.add_argument("--workers", type=int, default=None)
            p.add_argument("--axis", action="append", default=[],
                           help="sweep axis key=v1,v2,... (repeatable)")
    return ap


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.order is not None:
            cfg.order = args.order
        outdir = args.out if args.out is not None else cfg.outdir
        if args.command == "simulate":
            return cmd_simulate(cfg, outdir)
        if args.command == "thresholds":
            return cmd_thresholds(cfg)
        if args.command == "hyperbolicity-check":
            return cmd_hyperbolicity(cfg)
        if args.command == "init-preview":
            return cmd_init_preview(cfg, outdir)
        if args.command == "limit-study":
            return cmd_limit_study(cfg, outdir)
        if args.command == "sweep":
            workers = args.workers
            if workers is None:
                workers = int(os.environ.get("RELAXNS_WORKERS", "1"))
            with open(args.config, encoding="utf-8") as fh:
                base_text = fh.read()
            if args.order is not None:
                base_text += f"\nrun.order = {args.order}"
            return cmd_sweep(base_text, parse_axes(args.axis), workers, outdir)
        raise ConfigError(f"unknown command {args.command}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DomainError, BreakdownError, RuntimeError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
