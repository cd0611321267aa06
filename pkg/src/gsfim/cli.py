"""Command line interface: simulate, complexity, validate."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from . import complexity
from .checks import run_validation
from .config import DETECTOR_KINDS
from .errors import ConfigError
from .harness import load_config, run_sweep, write_csv


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gsfim",
        description="Link-level simulator for precoded space-frequency index modulation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a Monte Carlo SNR sweep and write a CSV")
    sim.add_argument("--config", required=True, help="scenario config file")
    sim.add_argument("--out", required=True, help="output CSV path")
    sim.add_argument("--seed", type=int, default=None, help="override sweep.seed")
    sim.add_argument(
        "--detector", choices=DETECTOR_KINDS, default=None, help="override detector.kind"
    )
    sim.add_argument("--jobs", type=int, default=1, help="parallel worker processes")

    comp = sub.add_parser("complexity", help="print the flop-model values for all detectors")
    comp.add_argument("--config", required=True)

    val = sub.add_parser("validate", help="run the invariant suite against a config")
    val.add_argument("--config", required=True)
    return parser


def _cmd_simulate(args) -> int:
    run = load_config(args.config)
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("--seed must be >= 0")
        run = replace(run, cfg=replace(run.cfg, seed=args.seed))
    if args.detector is not None:
        if args.detector == "separate" and run.cfg.crm_enabled:
            raise ConfigError("--detector separate requires system.crm_enabled = false")
        run = replace(run, detector=args.detector)
    if args.jobs < 1:
        raise ConfigError("--jobs must be >= 1")
    result = run_sweep(run, jobs=args.jobs)
    write_csv(args.out, run, result)
    for row in result.rows:
        print(
            f"snr {row.snr_db:+7.2f} dB  trials {row.trials:7d}  ber {row.ber:.4e}"
            f"  (+/- {row.ci95_halfwidth:.1e})"
        )
    return 0


def _cmd_complexity(args) -> int:
    run = load_config(args.config)
    print(f"{'detector':<12}{'params':<28}{'flops':>14}")
    for report in complexity.report_all(run.cfg):
        extras = {k: v for k, v in report.params.items() if k in ("l", "q", "table_iv_literal")}
        label = ",".join(f"{k}={v}" for k, v in extras.items())
        print(f"{report.detector:<12}{label:<28}{report.flops:>14.4e}")
    return 0


def _cmd_validate(args) -> int:
    run = load_config(args.config)
    results = run_validation(run)
    failed = 0
    for res in results:
        status = "PASS" if res.passed else "FAIL"
        print(f"[{status}] {res.name}: {res.detail}")
        failed += 0 if res.passed else 1
    if failed:
        print(f"{failed} check(s) failed")
        return 1
    print(f"all {len(results)} checks passed")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {
        "simulate": _cmd_simulate,
        "complexity": _cmd_complexity,
        "validate": _cmd_validate,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
