"""Command-line interface.

Subcommands:
  run    --config <path> [--seed N] [--horizon T] [--eta F] [--kappa F]
         [--gamma F] [--dist NAME] [--out DIR]
  batch  --grid <path> --out DIR
  verify --trace <csv> [--summary <json>]

Exit codes: 0 success, 2 config error, 3 infeasible safe set,
4 invariant violation.
"""

import argparse
import dataclasses
import json
import sys as _sys

from .errors import (InfeasibleSafeSet, ParseError, SafectrlError,
                     ValidationError)
from .reporting import (execute_run, load_grid, read_trace_csv, run_batch,
                        write_summary_json, write_trace_csv)
from .scenarios import load_config

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_INVARIANT = 4


def _build_parser():
    parser = argparse.ArgumentParser(prog="safectrl")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute one scenario")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--seed", type=int)
    p_run.add_argument("--horizon", type=int)
    p_run.add_argument("--eta", type=float)
    p_run.add_argument("--kappa", type=float)
    p_run.add_argument("--gamma", type=float)
    p_run.add_argument("--dist")
    p_run.add_argument("--out", default=None)

    p_batch = sub.add_parser("batch", help="execute a grid of scenarios")
    p_batch.add_argument("--grid", required=True)
    p_batch.add_argument("--out", required=True)

    p_verify = sub.add_parser("verify", help="re-check a stored trace")
    p_verify.add_argument("--trace", required=True)
    p_verify.add_argument("--summary", default=None)
    return parser


def _cmd_run(args):
    cfg = load_config(args.config)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.horizon is not None:
        overrides["horizon"] = args.horizon
    if args.eta is not None:
        overrides["eta"] = args.eta
    if args.kappa is not None:
        overrides["kappa"] = args.kappa
    if args.gamma is not None:
        overrides["gamma"] = args.gamma
    if args.dist is not None:
        overrides["distribution"] = args.dist
    if args.out is not None:
        overrides["out_dir"] = args.out
    if overrides:
        cfg = dataclasses.replace(cfg, **overrides)
    trace, summary, _ = execute_run(cfg)
    stem = f"{cfg.scenario}_{cfg.distribution}_seed{cfg.seed}"
    write_trace_csv(trace, f"{cfg.out_dir}/{stem}.csv")
    write_summary_json(summary, f"{cfg.out_dir}/{stem}.json")
    print(json.dumps(summary.to_dict(), indent=2, default=float))
    if summary.violation_count > 0:
        print("invariant violation: realized safety slack went negative",
              file=_sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


def _cmd_batch(args):
    configs = load_grid(args.grid)
    summaries, failures = run_batch(configs, args.out)
    print(f"completed {len(summaries)} runs, {len(failures)} failures")
    if failures or any(s.violation_count > 0 for s in summaries):
        return EXIT_INVARIANT
    return EXIT_OK


def _cmd_verify(args):
    data = read_trace_csv(args.trace)
    bad = int((data["min_slack"] < 0.0).sum())
    print(f"steps: {data['t'].size}, negative-slack steps: {bad}")
    ok = bad == 0
    if args.summary:
        with open(args.summary) as fh:
            summary = json.load(fh)
        regret, bound = summary.get("regret"), summary.get("bound")
        if regret is not None and bound is not None:
            dominated = regret <= bound
            print(f"regret {regret:.6g} <= bound {bound:.6g}: {dominated}")
            ok = ok and dominated
        if summary.get("violation_count", 0) != bad:
            print("warning: summary violation_count disagrees with trace")
            ok = False
    return EXIT_OK if ok else EXIT_INVARIANT


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "batch":
            return _cmd_batch(args)
        return _cmd_verify(args)
    except (ParseError, ValidationError) as exc:
        print(f"config error: {exc}", file=_sys.stderr)
        return EXIT_CONFIG
    except InfeasibleSafeSet as exc:
        print(f"infeasible safe set: {exc}", file=_sys.stderr)
        return EXIT_INFEASIBLE
    except SafectrlError as exc:
        print(f"invariant violation: {exc}", file=_sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    raise SystemExit(main())
