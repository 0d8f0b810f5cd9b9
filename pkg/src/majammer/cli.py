"""Command-line entry point.

Exit codes: 0 success, 1 configuration error, 2 solver non-convergence.
"""
from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .fairness_ao import run_algorithm2
from .harness import (
    SCHEMES,
    ExperimentSpec,
    ResultRow,
    _run_scheme,
    load_config,
    rows_to_csv,
    sweep,
)
from .model import ConfigError, SystemConfig, derive_topology
from .special import k2_fairness, k2_sumrate_procedure, lb_minrate, lb_sumrate
from .sumrate_ao import run_algorithm1

EXIT_OK, EXIT_CONFIG, EXIT_NONCONVERGED = 0, 1, 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="majammer",
        description="Movable-antenna jammer optimization and benchmarks.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="key = value config file")
    common.add_argument("--out", type=Path, help="write CSV here instead of stdout")
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("--objective", choices=("sum", "min"), help="ST benefit to attack")
    common.add_argument("--scheme", choices=SCHEMES, help="scheme for `run`")
    common.add_argument(
        "--no-timing", action="store_true", help="write runtime_ms as 0 for byte-stable output"
    )
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="one scheme, one objective")
    sub.add_parser("sweep", parents=[common], help="grid sweep from the config's sweep_param")
    sub.add_parser("bench", parents=[common], help="every scheme on one objective")
    sub.add_parser("bounds", parents=[common], help="both rate lower bounds")
    sub.add_parser("k2", parents=[common], help="two-user closed-form pipelines")
    sub.add_parser("converge", parents=[common], help="iteration traces of both algorithms")
    return parser


def _load(args) -> tuple[SystemConfig, ExperimentSpec]:
    if args.config is not None:
        config, spec = load_config(args.config)
    else:
        config, spec = SystemConfig(), ExperimentSpec()
    if args.seed is not None:
        config = config.patch(seed=args.seed)
        spec = replace(spec, seed=args.seed)
    if args.objective is not None:
        spec = replace(spec, objective=args.objective)
    if args.no_timing:
        spec = replace(spec, timing=False)
    return config, spec


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text, encoding="utf-8")


def _row(spec, config, scheme, objective, rate, iterations=0) -> ResultRow:
    return ResultRow(
        experiment=spec.name,
        scheme=scheme,
        objective=objective,
        L=config.L,
        Q_J_dbm=config.Q_J_dbm,
        mu=spec.mu,
        seed=spec.seed,
        rate_bits=rate,
        iterations=iterations,
        runtime_ms=0.0,
    )


def _cmd_run(args, config, spec) -> int:
    scheme = args.scheme or "proposed"
    row, converged = _run_scheme(config, scheme, spec.objective, spec)
    _emit(rows_to_csv([row]), args.out)
    return EXIT_OK if converged else EXIT_NONCONVERGED


def _cmd_bench(args, config, spec) -> int:
    rows, ok = [], True
    for scheme in SCHEMES:
        row, converged = _run_scheme(config, scheme, spec.objective, spec)
        rows.append(row)
        ok = ok and converged
    _emit(rows_to_csv(rows), args.out)
    return EXIT_OK if ok else EXIT_NONCONVERGED


def _cmd_sweep(args, config, spec) -> int:
    _emit(rows_to_csv(sweep(config, spec)), args.out)
    return EXIT_OK


def _cmd_bounds(args, config, spec) -> int:
    topo = derive_topology(config)
    lb_s, lb_m = lb_sumrate(config, topo), lb_minrate(config, topo)
    print(f"LB_sumrate = {lb_s:.12g}")
    print(f"LB_minrate = {lb_m:.12g}")
    rows = [
        _row(spec, config, "lower_bound", "sum", lb_s),
        _row(spec, config, "lower_bound", "min", lb_m),
    ]
    _emit(rows_to_csv(rows), args.out)
    return EXIT_OK


def _cmd_k2(args, config, spec) -> int:
    topo = derive_topology(config)
    if topo.K != 2:
        raise ConfigError(f"k2 needs K = 2, config has K = {topo.K}")
    res = k2_sumrate_procedure(config, topo)
    _, _, rate_min = k2_fairness(config, topo)
    rows = [
        _row(spec, config, "k2_closed", "sum", res.rate, len(res.rate_curve)),
        _row(spec, config, "k2_closed", "min", rate_min),
    ]
    _emit(rows_to_csv(rows), args.out)
    return EXIT_OK


def _cmd_converge(args, config, spec) -> int:
    topo = derive_topology(config)
    traces = []
    ok = True
    if spec.objective == "sum" or args.objective is None:
        _, _, rep = run_algorithm1(config, topo)
        traces.append(("sum", rep.objective_trace))
        ok = ok and rep.converged
    if spec.objective == "min" or args.objective is None:
        _, _, rep = run_algorithm2(config, topo)
        traces.append(("min", rep.objective_trace))
        ok = ok and rep.converged
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["objective", "step", "value"])
    for objective, trace in traces:
        for k, v in enumerate(trace):
            w.writerow([objective, k, f"{v:.12g}"])
    _emit(buf.getvalue(), args.out)
    return EXIT_OK if ok else EXIT_NONCONVERGED


_COMMANDS = {
    "run": _cmd_run,
    "sweep": _cmd_sweep,
    "bench": _cmd_bench,
    "bounds": _cmd_bounds,
    "k2": _cmd_k2,
    "converge": _cmd_converge,
}


def cli_main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        config, spec = _load(args)
        return _COMMANDS[args.command](args, config, spec)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def main() -> None:
    sys.exit(cli_main())
