"""Command-line front end.

Subcommands::

    lplangevin run <config.json> [--out DIR]
    lplangevin verify <suite> [--report FILE] [--theta VALUE]
    lplangevin preset <name> --out DIR [--no-run]

Exit codes: 0 success, 1 failed verification, 2 invalid input or
configuration, 3 numerical failure during a run (partial outputs written).
The worker count for ensembles is read from ``LPL_WORKERS``.
"""

import argparse
import json
import os
import sys

from .errors import ConfigError, LPLError
from .integrate import write_json
from .runconfig import execute, load_config, normalize_config
from .verification import PRESETS, SUITES, preset_config, run_suite


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(2)


def build_parser():
    p = _Parser(prog="lplangevin", description="Stochastic Lie-Poisson-Langevin simulations.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a JSON configuration")
    r.add_argument("config", help="config file, or a metadata.json from an earlier run")
    r.add_argument("--out", help="output directory (default: the config file's directory)")

    v = sub.add_parser("verify", help="run an acceptance suite")
    v.add_argument("suite", help=f"one of {', '.join(SUITES)}")
    v.add_argument("--report", help="write the JSON report here (default: stdout)")
    v.add_argument("--theta", type=float, default=None,
                   help="override the tuned dissipation strength in the Gibbs check")

    s = sub.add_parser("preset", help="write a shipped preset config and run it")
    s.add_argument("name", help=f"one of {', '.join(PRESETS)}")
    s.add_argument("--out", required=True, help="output directory")
    s.add_argument("--no-run", action="store_true", help="only write config.json")
    return p


def _run_config(raw, out_dir):
    try:
        cfg = normalize_config(raw)
    except ConfigError as err:
        print(f"config error in {err.field}: {err}", file=sys.stderr)
        return 2
    code, summary = execute(cfg, out_dir)
    if code != 0:
        print(f"run failed: {summary.get('error') or summary['ensemble']['failures']}", file=sys.stderr)
        print(f"partial outputs written to {out_dir}", file=sys.stderr)
    else:
        print(f"outputs written to {out_dir}")
    return code


def cmd_run(args):
    try:
        raw = load_config(args.config)
    except OSError as err:
        print(f"cannot read {args.config}: {err}", file=sys.stderr)
        return 2
    except ConfigError as err:
        print(f"config error in {err.field}: {err}", file=sys.stderr)
        return 2
    out = args.out or os.path.dirname(os.path.abspath(args.config))
    return _run_config(raw, out)


def cmd_verify(args):
    if args.suite not in SUITES:
        print(f"unknown suite {args.suite!r}; choose from {', '.join(SUITES)}", file=sys.stderr)
        return 2

    def show(res):
        print(res.line(), file=sys.stderr)

    report = run_suite(args.suite, theta_override=args.theta, progress=show)
    if args.report:
        write_json(report, args.report)
    else:
        print(json.dumps(report, indent=2, sort_keys=True, default=float))
    if not report["passed"]:
        print(f"failed criteria: {', '.join(report['failures'])}", file=sys.stderr)
        return 1
    return 0


def cmd_preset(args):
    if args.name not in PRESETS:
        print(f"unknown preset {args.name!r}; choose from {', '.join(PRESETS)}", file=sys.stderr)
        return 2
    raw = preset_config(args.name)
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "config.json"), "w") as fh:
        json.dump(raw, fh, indent=2)
        fh.write("\n")
    if args.no_run:
        return 0
    return _run_config(raw, args.out)


def main(argv=None):
    args = build_parser().parse_args(argv)
    handler = {"run": cmd_run, "verify": cmd_verify, "preset": cmd_preset}[args.command]
    try:
        return handler(args)
    except LPLError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
