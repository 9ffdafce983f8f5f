"""``lab`` command line: run / validate experiment configs and expose the oracles."""
from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from . import diophantine, experiments, oracles
from .errors import ConfigError
from .systems import Point, parse_system


def _cmd_run(args) -> int:
    try:
        cfg = experiments.load_config(args.config)
    except ConfigError as exc:
        for d in exc.diagnostics:
            print(f"error: {d}", file=sys.stderr)
        return experiments.EXIT_CONFIG
    result = experiments.run(cfg, workers=args.workers)
    fmt = args.format or cfg.fmt
    output = args.output or cfg.output
    if output is None:
        output = Path(args.config).with_suffix(".jsonl" if fmt == "jsonl" else ".csv").name
    else:
        base = Path(args.config).parent
        output = output if args.output or Path(output).is_absolute() else base / output
    path = experiments.write_outputs(result, output, fmt)
    print(json.dumps(result.summary, indent=2, default=experiments._jsonable))
    print(f"rows: {path}", file=sys.stderr)
    return result.exit_code


def _cmd_validate(args) -> int:
    diags = experiments.validate(args.config)
    if diags:
        for d in diags:
            print(f"error: {d}", file=sys.stderr)
        return experiments.EXIT_CONFIG
    print("ok")
    return experiments.EXIT_PASS


def _coords(text: str) -> Point:
    return Point(tuple(float(Fraction(t)) for t in text.split(",")))


def _cmd_oracle(args) -> int:
    op = args.op
    if op == "waiting-time":
        system = parse_system(args.system)
        tau = oracles.naive_waiting_time(system, _coords(args.x), _coords(args.y), args.r, args.horizon)
        print(f"exceeded:{args.horizon}" if tau is None else tau)
    elif op == "cf":
        q = Fraction(args.value)
        a0, quotients = oracles.euclid_cf(q.numerator, q.denominator)
        print(json.dumps({"a0": a0, "quotients": quotients}))
    elif op == "fibonacci":
        print(json.dumps(oracles.fibonacci_convergents(args.depth)))
    elif op == "constant-type":
        c, q = oracles.brute_constant_type(Fraction(args.value), args.q_max)
        print(json.dumps({"c_min": c, "argmin_Q": q}))
    elif op == "gaps":
        alpha = float(diophantine.parse_rotation_value(args.value))
        gaps = oracles.rotation_gaps(alpha, args.n)
        print(json.dumps({"min_gap": min(gaps), "distinct": oracles.count_distinct(gaps)}))
    elif op == "orbit":
        system = parse_system(args.system)
        for p in oracles.naive_orbit(system, _coords(args.x), args.n):
            print(" ".join(repr(v) for v in p))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lab", description="Shrinking-target and waiting-time experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment config")
    run.add_argument("config")
    run.add_argument("-o", "--output", help="row output path (default from config, else <config>.jsonl)")
    run.add_argument("--format", choices=("jsonl", "csv"))
    run.add_argument("--workers", type=int, help="worker processes (default: LAB_WORKERS or 1)")
    run.set_defaults(func=_cmd_run)

    val = sub.add_parser("validate", help="check a config without running it")
    val.add_argument("config")
    val.set_defaults(func=_cmd_validate)

    ora = sub.add_parser("oracle", help="brute-force reference computations")
    osub = ora.add_subparsers(dest="op", required=True)
    p = osub.add_parser("waiting-time", help="plain-loop first entry time")
    p.add_argument("--system", required=True, help='e.g. "expanding k=2"')
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--horizon", type=int, default=10**5)
    p = osub.add_parser("cf", help="Euclid continued fraction of p/q")
    p.add_argument("value")
    p = osub.add_parser("fibonacci", help="golden convergents via Fibonacci numbers")
    p.add_argument("depth", type=int)
    p = osub.add_parser("constant-type", help="brute min Q ||Q alpha|| for rational alpha")
    p.add_argument("value")
    p.add_argument("q_max", type=int)
    p = osub.add_parser("gaps", help="rotation discontinuity gaps by sorting")
    p.add_argument("value")
    p.add_argument("n", type=int)
    p = osub.add_parser("orbit", help="T^1 x .. T^n x one step at a time")
    p.add_argument("--system", required=True)
    p.add_argument("--x", required=True)
    p.add_argument("--n", type=int, default=10)
    ora.set_defaults(func=_cmd_oracle)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        for d in exc.diagnostics:
            print(f"error: {d}", file=sys.stderr)
        return experiments.EXIT_CONFIG
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return experiments.EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
