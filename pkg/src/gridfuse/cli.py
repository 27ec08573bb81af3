"""Command-line interface: run, sweep, verify, oracle."""

import argparse
import dataclasses
import sys
from pathlib import Path

from .config import ConfigError, load_config
from .experiment import centralized_oracle, run_experiment
from .verify import run_verification


def _add_common(parser):
    parser.add_argument("--config", required=True, help="path to the YAML experiment config")
    parser.add_argument("--out", default=None, help="output directory (overrides config)")
    parser.add_argument("--seed", type=int, default=None, help="override the master seed")
    parser.add_argument("--rounds", type=int, default=None, help="override the round count")


def _load(args):
    cfg = load_config(args.config)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.rounds is not None:
        overrides["rounds"] = args.rounds
    if overrides:
        cfg = dataclasses.replace(cfg, **overrides)
    return cfg


def cmd_run(args) -> int:
    cfg = _load(args)
    result = run_experiment(cfg, out_dir=args.out)
    final = result.summary["final"]
    where = result.out_dir if result.out_dir else "(no output dir)"
    print(f"run complete: {result.summary['rounds_executed']} rounds, "
          f"mean completion {final['mean_completion']:.2f}%, "
          f"mean rmse {final['mean_rmse']:.4f} -> {where}")
    if result.summary["aborted"]:
        print(f"aborted early: {result.summary['aborted']}")
        return 1
    return 0


def cmd_sweep(args) -> int:
    cfg = _load(args)
    rates = [float(r) for r in args.rates.split(",")] if args.rates else [cfg.comm_rate]
    variants = args.variants.split(",") if args.variants else [cfg.variant]
    agent_counts = [int(a) for a in args.agents.split(",")] if args.agents else [cfg.agents]
    root = Path(args.out) if args.out else Path(cfg.out_dir or "sweep_out")
    n_cells = 0
    for variant in variants:
        for rate in rates:
            for n in agent_counts:
                cell = dataclasses.replace(cfg, variant=variant, comm_rate=rate,
                                           agents=n, coverage=None, agent_seeds=None)
                cell_dir = root / f"{variant}_rate{rate:g}_agents{n}"
                result = run_experiment(cell, out_dir=cell_dir)
                n_cells += 1
                print(f"[{n_cells}] {cell_dir}: "
                      f"completion {result.summary['final']['mean_completion']:.2f}%")
    print(f"sweep complete: {n_cells} cells under {root}")
    return 0


def cmd_verify(args) -> int:
    results = run_verification(fast=args.fast)
    failed = 0
    for name, ok, detail in results:
        status = "PASS" if ok else "FAIL"
        print(f"{status} {name}" + (f" ({detail})" if detail else ""))
        failed += 0 if ok else 1
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return 0 if failed == 0 else 1


def cmd_oracle(args) -> int:
    cfg = _load(args)
    result = centralized_oracle(cfg, out_dir=args.out)
    print(f"oracle: pooled {result.pooled_size} observations, {result.steps} steps, "
          f"rmse {result.rmse:.4f}, completion {result.completion:.2f}%")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gridfuse",
        description="Decentralized consensus-mapping simulator over lossy links.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute one experiment config")
    _add_common(p_run)
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="cartesian sweep over rates/variants/agent counts")
    _add_common(p_sweep)
    p_sweep.add_argument("--rates", default=None, help="comma-separated success rates")
    p_sweep.add_argument("--variants", default=None, help="comma-separated variants")
    p_sweep.add_argument("--agents", default=None, help="comma-separated agent counts")
    p_sweep.set_defaults(func=cmd_sweep)

    p_verify = sub.add_parser("verify", help="run the built-in verification suite")
    p_verify.add_argument("--fast", action="store_true", help="smaller instance counts")
    p_verify.set_defaults(func=cmd_verify)

    p_oracle = sub.add_parser("oracle", help="train the centralized pooled-data reference")
    _add_common(p_oracle)
    p_oracle.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
