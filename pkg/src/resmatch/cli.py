"""Command-line front end: ``resmatch validate|run|generate|audit``.

Exit status is 0 on success, 1 on an invalid market or a failed audit, and
2 on unreadable or malformed input.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from .audit import prop1_counterexample
from .choice import ChoicePolicy
from .cop import cumulative_offer
from .generate import MAX_INDIVIDUALS, MAX_INSTITUTIONS, random_market
from .instance import InstanceFormatError, break_ties, dumps, read_market
from .model import Market, validate_market
from .mutants import MUTANTS
from .suite import AuditConfig, run_audit

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2
SEED_ENV = "RESMATCH_SEED"


class InputError(Exception):
    """Bad file, bad JSON or bad arguments; maps to exit status 2."""


def _seed(value: Optional[int]) -> int:
    if value is not None:
        return value
    env = os.environ.get(SEED_ENV)
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError as exc:
        raise InputError(f"{SEED_ENV} must be an integer, got {env!r}") from exc


def _load(path: str) -> Market:
    try:
        return read_market(path)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from exc
    except InstanceFormatError as exc:
        raise InputError(f"{path}: {exc}") from exc


def _market(args) -> Market:
    """The instance file if given, otherwise a generated market."""
    if args.instance is not None:
        market = _load(args.instance)
    else:
        market = _generate(_seed(args.seed), args.individuals, args.institutions)
    return break_ties(market) if getattr(args, "break_ties", False) else market


def _generate(seed: int, n: int, m: int) -> Market:
    try:
        return random_market(seed, n, m)
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def _write(text: str, out: Optional[str]) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    try:
        Path(out).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot write {out}: {exc.strerror or exc}") from exc


def _report_invalid(market: Market) -> bool:
    report = validate_market(market)
    for v in report.violations:
        print(v)
    for note in report.notes:
        print(f"note: {note}", file=sys.stderr)
    return report.ok


def cmd_validate(args) -> int:
    market = _load(args.instance)
    if not _report_invalid(market):
        return EXIT_FAIL
    print(f"ok: {len(market.individuals)} individuals, {len(market.institutions)} institutions")
    return EXIT_OK


def cmd_run(args) -> int:
    market = _market(args)
    if not _report_invalid(market):
        return EXIT_FAIL
    order = args.order.split(",") if args.order else None
    try:
        matching, trace = cumulative_offer(market, ChoicePolicy(args.policy), order)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    lines = [
        f"({c.individual}, {c.institution}, {c.category})"
        for c in sorted(matching.contracts, key=lambda c: (c.individual, c.institution, c.category))
    ]
    _write("".join(line + "\n" for line in lines), args.out)
    if args.trace:
        _write(json.dumps(trace.to_dict(), indent=2) + "\n", args.trace)
    return EXIT_OK


def cmd_generate(args) -> int:
    market = _generate(_seed(args.seed), args.individuals, args.institutions)
    _write(dumps(market), args.out)
    return EXIT_OK


def cmd_audit(args) -> int:
    policies = tuple(ChoicePolicy(p) for p in args.policy) if args.policy else tuple(ChoicePolicy)
    if args.prop1:
        ok = True
        for p in policies:
            rep = prop1_counterexample(p)
            print("\n".join(rep.lines()))
            ok &= rep.ok
        return EXIT_OK if ok else EXIT_FAIL

    config = AuditConfig(
        seed=_seed(args.seed),
        markets=args.markets,
        max_individuals=args.individuals,
        max_institutions=args.institutions,
        policies=policies,
        mutant=args.mutant,
        exhaustive_blocks=True if args.exhaustive_blocks else None,
        strategy_proofness=not args.skip_strategy_proofness,
        lemma_probes=args.lemma_probes,
    )
    markets = None
    if args.instance is not None:
        market = _load(args.instance)
        if not _report_invalid(market):
            return EXIT_FAIL
        markets = [(args.instance, market)]
    report = run_audit(config, markets)
    print("\n".join(report.lines()))
    if args.out:
        _write(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n", args.out)
    return EXIT_OK if report.ok else EXIT_FAIL


def _sizes(p: argparse.ArgumentParser, individuals: int, institutions: int) -> None:
    p.add_argument("--seed", type=int, help=f"generator seed (default: ${SEED_ENV} or 0)")
    p.add_argument("--individuals", type=int, default=individuals, help=f"at most {MAX_INDIVIDUALS}")
    p.add_argument("--institutions", type=int, default=institutions, help=f"at most {MAX_INSTITUTIONS}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="resmatch", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    policies = [p.value for p in ChoicePolicy]

    p = sub.add_parser("validate", help="check a market instance file")
    p.add_argument("instance")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("run", help="run the cumulative offer process")
    p.add_argument("instance", nargs="?", help="instance file; omit to generate one from --seed")
    p.add_argument("--policy", choices=policies, default=ChoicePolicy.NO_TRANSFER.value)
    p.add_argument("--order", help="comma-separated proposal order (default: sorted ids)")
    p.add_argument("--trace", metavar="PATH", help="write the step-by-step trace as JSON")
    p.add_argument("--out", metavar="PATH", help="write the matching here instead of stdout")
    p.add_argument("--break-ties", action="store_true", help="make tied scores strict by id before running")
    _sizes(p, 5, 2)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("generate", help="write a seeded random market")
    p.add_argument("--out", metavar="PATH")
    _sizes(p, 5, 2)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("audit", help="run the property audit")
    p.add_argument("instance", nargs="?", help="audit this market instead of a generated batch")
    p.add_argument("--policy", action="append", choices=policies, help="repeatable; default: all")
    p.add_argument("--markets", type=int, default=1000)
    p.add_argument("--lemma-probes", type=int, default=10_000)
    p.add_argument("--exhaustive-blocks", action="store_true", help="search every blocking set, not only small ones")
    p.add_argument("--skip-strategy-proofness", action="store_true")
    p.add_argument("--mutant", choices=sorted(MUTANTS), help="audit a deliberately broken choice rule")
    p.add_argument("--prop1", action="store_true", help="print the two-person fairness/stability example")
    p.add_argument("--out", metavar="PATH", help="write the full report as JSON")
    _sizes(p, 6, 3)
    p.set_defaults(func=cmd_audit)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
