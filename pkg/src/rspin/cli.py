"""Command-line entry point: ``rspin correlator|potential|operator|verify``."""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .correlators import Evaluator, NeedsBase, load_base_table
from .hierarchy import solve
from .keys import InvalidKey, dimension_gate, open_key, validate
from .potentials import OpenPotentials, dump_table
from .verify import (Bounds, _pipelines, all_passed, default_fit_weight, default_weight,
                     report_json, run_suite)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _insertion(text: str) -> tuple[int, int]:
    try:
        a, d = text.split(":")
        return int(a), int(d)
    except ValueError:
        raise argparse.ArgumentTypeError(f"insertion must look like a:d, got {text!r}") from None


def _r_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of integers, got {text!r}") from None


def _base_table(args, r):
    path = args.base_table or os.environ.get("RSPIN_BASE_TABLE")
    return load_base_table(path, r) if path else None


def cmd_correlator(args) -> int:
    r = args.r
    key = open_key(args.g, args.ins or [], args.k)
    try:
        validate(key, r)
    except InvalidKey as exc:
        raise UsageError(str(exc)) from None
    W = args.weight or max(default_weight(r), key.weight(r))
    if key.weight(r) > W:
        print(f"error: {key} has weight {key.weight(r)} above the truncation weight {W}", file=sys.stderr)
        return EXIT_FAIL
    if not dimension_gate(key, r):
        print("0 (dimension gate)")
        return EXIT_OK
    values = []
    if args.pipeline in ("A", "both"):
        v = OpenPotentials.compute(r, W).correlator(key)
        values.append(v)
        print(f"{v}  (pipeline A, r={r}, W={W})")
    if args.pipeline in ("B", "both"):
        fw = args.fit_weight or default_fit_weight(r, W)
        state = _pipelines(r, W, None, fw, _base_table(args, r))
        try:
            v = Evaluator(r, state["base"])(key)
        except NeedsBase as exc:
            print(f"error: pipeline B needs a base value for {exc.key}", file=sys.stderr)
            return EXIT_FAIL
        values.append(v)
        print(f"{v}  (pipeline B, r={r}, W={W}, fit weight {fw})")
    if len(set(values)) > 1:
        print("error: the pipelines disagree", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def cmd_potential(args) -> int:
    if args.weight < 0:
        raise UsageError("--weight must be >= 0")
    if args.weight == 0:
        table = {}
    else:
        table = OpenPotentials.compute(args.r, args.weight).candidates(args.g)
    if args.format == "pretty":
        text = "".join(f"{k}  {v}\n" for k, v in sorted(table.items()))
    else:
        text = dump_table(table, args.format)
        if not text.endswith("\n"):
            text += "\n"
    _emit(text, args.out)
    return EXIT_OK


def cmd_operator(args) -> int:
    sol = solve(args.r, args.weight)
    out = {
        "r": args.r, "W": args.weight,
        "L": {str(e): sol.L.coeff(e).to_json() for e in range(args.r - 1)},
        "residues": {str(n): sol.residue(n).to_json() for n in range(1, args.weight + 1)},
    }
    _emit(json.dumps(out, indent=1, sort_keys=True) + "\n", args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    bounds = Bounds(fit_weight=args.fit_weight)
    W = args.weight if args.weight else None
    records = run_suite(args.r, W, bounds, fault=args.fault_inject, workers=args.threads)
    text = report_json(records, timings=not args.no_timings) + "\n"
    if args.report:
        Path(args.report).write_text(text)
    for rec in records:
        line = f"{rec.status.upper():4}  {rec.name}  r={rec.params.get('r')} W={rec.params.get('W')}"
        if rec.counterexample:
            line += f"  -- {rec.counterexample}"
        print(line)
    ok = all_passed(records)
    print("all checks passed" if ok else "some checks FAILED")
    return EXIT_OK if ok else EXIT_FAIL


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rspin", description="Exact open r-spin intersection numbers.")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("correlator", help="one correlator from either or both pipelines")
    c.add_argument("--r", type=int, required=True)
    c.add_argument("--g", type=int, choices=(0, 1), default=0)
    c.add_argument("--ins", type=_insertion, action="append", help="insertion a:d (repeatable)")
    c.add_argument("--k", type=int, default=0, help="number of boundary markings")
    c.add_argument("--pipeline", choices=("A", "B", "both"), default="both")
    c.add_argument("--weight", type=int, help="truncation weight W")
    c.add_argument("--fit-weight", type=int, help="weight used to fit extended primaries")
    c.add_argument("--base-table", help="JSON-lines base table (default $RSPIN_BASE_TABLE)")
    c.set_defaults(func=cmd_correlator)

    t = sub.add_parser("potential", help="correlator table of F_0 or F_1")
    t.add_argument("--r", type=int, required=True)
    t.add_argument("--g", type=int, choices=(0, 1), required=True)
    t.add_argument("--weight", type=int, required=True)
    t.add_argument("--format", choices=("json", "csv", "pretty"), default="json")
    t.add_argument("--out")
    t.set_defaults(func=cmd_potential)

    o = sub.add_parser("operator", help="coefficients of L and residues of its fractional powers")
    o.add_argument("--r", type=int, required=True)
    o.add_argument("--weight", type=int, required=True)
    o.add_argument("--out")
    o.set_defaults(func=cmd_operator)

    v = sub.add_parser("verify", help="run the property suite and the pipeline cross-check")
    v.add_argument("--r", type=_r_list, default=[2, 3])
    v.add_argument("--weight", type=int, help="truncation weight (default depends on r)")
    v.add_argument("--fit-weight", type=int)
    v.add_argument("--report", help="write the JSON report here")
    v.add_argument("--fault-inject", choices=("flow",))
    v.add_argument("--threads", type=int, default=1, help="parallel worker processes (one per r)")
    v.add_argument("--no-timings", action="store_true", help="omit wall times from the report")
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    r = getattr(args, "r", None)
    rs = r if isinstance(r, list) else [r] if r is not None else []
    if any(x < 2 for x in rs):
        parser.error("r must be >= 2")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"rspin: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
