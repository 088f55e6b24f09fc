"""Command line entry point.

Subcommands: run (one config), sweep (vary T and seeds), verify (model class
report), bench (benchmark-only computation). Exit codes: 0 success,
2 configuration error, 3 resource limit, 4 protocol violation.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .bench import ExperimentConfig, compute_benchmark, run_experiment, run_sweep
from .errors import (ConfigurationError, InfeasibleParametersError,
                     InfeasibleSetError, InvalidInputError, InvalidModelError,
                     MenurecError, NotRealizableError, ProtocolViolationError,
                     ResourceLimitError)
from .models import model_from_spec, verify_class
from .simulate import RewardProcess


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="menurec",
        description="Recommendation experiments for agents with discounted adaptive preferences")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("config", help="path to a JSON experiment config")
        p.add_argument("--out", help="override the output directory")
        p.add_argument("--seed", type=int, action="append",
                       help="override config seeds (repeatable)")

    p_run = sub.add_parser("run", help="run one configured experiment")
    add_common(p_run)

    p_sweep = sub.add_parser("sweep", help="run the (T, seed) grid of a config")
    add_common(p_sweep)
    p_sweep.add_argument("--workers", type=int, default=1,
                         help="parallel worker processes")

    p_verify = sub.add_parser("verify", help="grid-check the config's model class")
    add_common(p_verify)
    p_verify.add_argument("--resolution", type=float, default=0.05)

    p_bench = sub.add_parser("bench", help="compute the benchmark only")
    add_common(p_bench)
    return parser


def _load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config)
    if args.out:
        cfg.output_dir = args.out
    if args.seed:
        cfg.seeds = list(args.seed)
    return cfg


def _cmd_run(args) -> int:
    cfg = _load_config(args)
    report = run_experiment(cfg)
    for line in report.summary_lines():
        print(line)
    return 0


def _cmd_sweep(args) -> int:
    cfg = _load_config(args)
    reports = run_sweep(cfg, workers=args.workers)
    for T in sorted(reports):
        print(f"# T={T}")
        for line in reports[T].summary_lines():
            print(line)
    return 0


def _cmd_verify(args) -> int:
    cfg = _load_config(args)
    model = model_from_spec(cfg.model)
    report = verify_class(model, grid_resolution=args.resolution)
    lines = [
        f"class {report.class_name}",
        f"grid_size {report.grid_size}",
        f"max_violation {report.max_violation:.9g}",
        f"lipschitz_estimate {report.lipschitz_estimate:.9g}",
        "witness " + ",".join(f"{x:.9g}" for x in report.witness_vector),
        f"passed {str(report.passed).lower()}",
    ]
    for key, value in sorted(report.components.items()):
        lines.append(f"component_{key} {value:.9g}")
    out_dir = cfg.output_dir
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, f"{cfg.name}_class_report.txt"), "w") as fh:
        fh.write("\n".join(lines) + "\n")
    print("\n".join(lines))
    return 0


def _cmd_bench(args) -> int:
    cfg = _load_config(args)
    model = model_from_spec(cfg.model)
    rewards = RewardProcess.from_spec(cfg.rewards, n=model.n)
    result = compute_benchmark(cfg.benchmark["name"], model, rewards, cfg.T,
                               cfg.k, phi=cfg.benchmark.get("phi"),
                               v_grid=cfg.benchmark.get("v_grid"))
    print(json.dumps(result.describe(), sort_keys=True))
    print(f"value_T{cfg.T} {result.value_at(cfg.T):.9g}")
    return 0


_EXIT_CODES = [
    ((ConfigurationError, InvalidInputError, InvalidModelError,
      InfeasibleParametersError, InfeasibleSetError, NotRealizableError), 2),
    ((ResourceLimitError,), 3),
    ((ProtocolViolationError,), 4),
]


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "sweep":
            return _cmd_sweep(args)
        if args.command == "verify":
            return _cmd_verify(args)
        if args.command == "bench":
            return _cmd_bench(args)
    except MenurecError as exc:
        for types, code in _EXIT_CODES:
            if isinstance(exc, types):
                print(f"error: {exc}", file=sys.stderr)
                return code
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
