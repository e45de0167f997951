"""Command-line entry point: ``covest sweep | crlb | demo``."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

from .acquisition import ConfigurationError, NumericalError
from .harness import METHODS, ExperimentConfig, aggregate, run_trials, write_results

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_NUMERIC = 4

DEMO_CONFIG = {
    "n_ant": 64,
    "m_rf": 8,
    "k_sbcr": 128,
    "t_frm": 20,
    "scene_mode": "fixed",
    "aoas_deg": [-66, 13, 49, -7, 81, 62],
    "delays": [0, 4.34, 7.13, 17.05, 21.08, 25.73],
    "sweep_axis": "snr_db",
    "sweep_values": [-10, 0, 10, 20],
    "methods": ["cpd", "music", "crlb", "music_crlb"],
    "n_trials": 5,
    "out": "covest-demo",
}


def _parse_methods(text):
    methods = tuple(m.strip() for m in text.split(",") if m.strip())
    bad = [m for m in methods if m not in METHODS]
    if bad:
        raise ConfigurationError(f"unknown methods {bad}; choose from {', '.join(METHODS)}")
    return methods


def _apply_overrides(cfg: ExperimentConfig, args) -> ExperimentConfig:
    changes = {}
    if getattr(args, "out", None) is not None:
        changes["out"] = args.out
    if getattr(args, "seed", None) is not None:
        changes["base_seed"] = args.seed
    if getattr(args, "trials", None) is not None:
        changes["n_trials"] = args.trials
    if getattr(args, "methods", None) is not None:
        changes["methods"] = _parse_methods(args.methods)
    if getattr(args, "workers", None) is not None:
        changes["workers"] = args.workers
    return replace(cfg, **changes) if changes else cfg


def _print_rows(rows, stream):
    stream.write(f"{'value':>10}  {'method':<11}{'metric':<10}{'mean':>14}{'median':>14}{'n':>6}\n")
    for r in rows:
        mean = "-" if r["mean"] is None else f"{r['mean']:.6g}"
        med = "-" if r["median"] is None else f"{r['median']:.6g}"
        stream.write(f"{r['sweep_value']:>10g}  {r['method']:<11}{r['metric']:<10}{mean:>14}{med:>14}{r['n_effective']:>6}\n")


def _run(cfg: ExperimentConfig, quiet: bool) -> int:
    records = run_trials(cfg)
    out = write_results(cfg, records, cfg.out)
    if not quiet:
        _print_rows(aggregate(cfg, records), sys.stdout)
        print(f"wrote {out / 'results.csv'}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _apply_overrides(ExperimentConfig.from_json(args.config), args)
    return _run(cfg, args.quiet)


def cmd_crlb(args) -> int:
    cfg = _apply_overrides(ExperimentConfig.from_json(args.config), args)
    return _run(replace(cfg, methods=("crlb", "music_crlb")), args.quiet)


def cmd_demo(args) -> int:
    cfg = _apply_overrides(ExperimentConfig.from_dict(DEMO_CONFIG), args)
    return _run(cfg, args.quiet)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="covest", description="Tensor-based spatial covariance estimation experiments")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    p.add_argument("-q", "--quiet", action="store_true", help="no summary table")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, with_config=True):
        if with_config:
            sp.add_argument("--config", required=True, help="JSON experiment config")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--seed", type=int, help="base seed (non-negative)")
        sp.add_argument("--trials", type=int, help="trials per sweep value")
        sp.add_argument("--workers", type=int, help="worker processes")

    sp = sub.add_parser("sweep", help="Monte Carlo sweep")
    common(sp)
    sp.add_argument("--methods", help=f"comma-separated subset of {','.join(METHODS)}")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("crlb", help="bound curves only, no estimation")
    common(sp)
    sp.set_defaults(func=cmd_crlb)

    sp = sub.add_parser("demo", help="fixed six-path scene over SNR at a small trial count")
    common(sp, with_config=False)
    sp.set_defaults(func=cmd_demo)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (NumericalError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
