"""Command-line entry point.

    stochgrad [--seed N] [--out PATH] {estimate,train,bm-check,oracle} --config PATH

Exit status: 0 on success, 2 on configuration errors, 3 on numerical
divergence during training.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .errors import ConfigError, ContractError, DivergenceError
from .experiments.bench import run_variance_bench
from .experiments.checks import BM_COLUMNS, ORACLE_COLUMNS, bm_rows, oracle_rows
from .experiments.config import load_config
from .experiments.report import emit, render_table, write_csv
from .experiments.training import run_training

EXIT_CONFIG = 2
EXIT_DIVERGED = 3

log = logging.getLogger("stochgrad")


def _global_flags(parser, suppress: bool) -> None:
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--seed", type=int, default=default, help="unsigned 64-bit seed; overrides the config")
    parser.add_argument("--out", default=default, help="output CSV path (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stochgrad", description="Gradient estimators for stochastic neurons.")
    _global_flags(parser, suppress=False)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("estimate", "bias/variance report of one estimator against the oracle"),
        ("train", "SGD training curve"),
        ("bm-check", "Boltzmann machine pair estimator vs reward correlator vs exact gradient"),
        ("oracle", "exact expected loss and gradient by enumeration"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True)
        _global_flags(p, suppress=True)
    return parser


def _run(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        if not 0 <= args.seed < 2**64:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {args.seed}")
        cfg.seed = args.seed
    out = args.out if args.out is not None else cfg.output
    header = f"stochgrad {args.command} seed={cfg.seed}"

    if args.command == "estimate":
        report = run_variance_bench(cfg)
        log.info("wall clock %.3fs", report.wall_clock)
        write_csv(report, out, cfg.seed)
    elif args.command == "train":
        try:
            result = run_training(cfg)
        except DivergenceError as exc:
            partial = exc.result
            emit(render_table(partial.columns, partial.rows, [header, f"diverged: {exc}"]), out)
            log.error("training diverged: %s", exc)
            return EXIT_DIVERGED
        emit(render_table(result.columns, result.rows, [header, f"estimator={cfg.estimator.kind}"]), out)
    elif args.command == "bm-check":
        emit(render_table(BM_COLUMNS, bm_rows(cfg), [header]), out)
    elif args.command == "oracle":
        emit(render_table(ORACLE_COLUMNS, oracle_rows(cfg), [header]), out)
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return _run(args)
    except (ConfigError, ContractError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
