"""Seeded audit suite: every property check over a batch of random markets.

Each check counts passes and failures and keeps the first few
counterexamples as JSON-ready dumps, together with the seed and the
generator parameters needed to rebuild them.
"""

from __future__ import annotations

import itertools
import random
import time
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Any, Callable, Iterable, Optional, Union

from .audit import (
    EnumerationBoundError,
    ImprovementSpec,
    check_respect_improvements,
    check_strategy_proofness,
    declaration_helps,
    find_block,
    is_fair_matching,
    prop1_counterexample,
    type_drops_that_help,
)
from .choice import ChoiceFunction, ChoicePolicy, ChoiceRule, is_fair_chosen_set, monotone_transfer_violations
from .choice import demand_grid, stage_log_errors
from .choiceprops import probe_failures, random_probe
from .cop import cumulative_offer, default_order
from .generate import GeneratorParams, random_markets
from .instance import market_to_dict
from .model import Institution, Market, build_contract_universe
from .mutants import MUTANTS
from .subchoice import OracleError, SubChoiceInput, oracle_undominated

# (check id, description) in report order.
CHECKS = (
    ("independence-example", "fairness and stability are independent on the two-person market"),
    ("subchoice-oracle", "every within-category stage equals the exhaustive undominated set"),
    ("subchoice-properties", "substitutability, size and quota monotonicity, rejected-contract irrelevance"),
    ("choice-feasibility", "every institutional choice is a feasible subset of the offer"),
    ("choice-stages", "every institutional choice follows the prescribed stage sequence"),
    ("choice-fairness", "every institutional choice is fair"),
    ("matching-fairness", "cumulative offer outcomes are fair"),
    ("stability", "cumulative offer outcomes are individually rational and unblocked"),
    ("strategy-proofness", "no preference misreport or non-declaration helps"),
    ("improvements", "a higher score never hurts"),
    ("declaration", "declaring the reserved category weakly helps"),
    ("type-drop", "hiding a horizontal type never helps"),
    ("order-invariance", "every proposal order yields the same matching"),
    ("monotone-transfer", "capacity transfers are monotone on the demand grid"),
    ("process-invariants", "cumulative availability, held sets and feasibility"),
)

# Institutions (open, SC, ST, OBC seats) used for the demand-grid check.
GRID_SHAPES = ((2, 1, 1, 2), (1, 1, 1, 1), (0, 1, 0, 3), (3, 0, 0, 1), (1, 0, 2, 2))


@dataclass
class AuditConfig:
    seed: int = 0
    markets: int = 1000
    max_individuals: int = 6
    max_institutions: int = 3
    policies: tuple[ChoicePolicy, ...] = tuple(ChoicePolicy)
    mutant: Optional[str] = None
    exhaustive_blocks: Optional[bool] = None
    max_block_size: int = 1
    strategy_proofness: bool = True
    order_invariance_max_individuals: int = 5
    lemma_probes: int = 10_000
    improvements_per_market: int = 1
    offer_probes: int = 4
    grid_bound: tuple[int, ...] = (3, 3, 3, 3)
    max_dumps: int = 3
    params: GeneratorParams = field(default_factory=GeneratorParams)

    def rules(self) -> list[tuple[str, Union[ChoicePolicy, ChoiceFunction]]]:
        if self.mutant is not None:
            if self.mutant not in MUTANTS:
                raise ValueError(f"unknown mutant {self.mutant!r}; choose from {sorted(MUTANTS)}")
            return [(self.mutant, MUTANTS[self.mutant]())]
        return [(p.value, p) for p in self.policies]

    def to_dict(self) -> dict[str, Any]:
        return {
            "seed": self.seed,
            "markets": self.markets,
            "max_individuals": self.max_individuals,
            "max_institutions": self.max_institutions,
            "policies": [p.value for p in self.policies],
            "mutant": self.mutant,
            "block_search": "auto" if self.exhaustive_blocks is None else
            ("exhaustive" if self.exhaustive_blocks else f"up to {self.max_block_size}"),
            "strategy_proofness": self.strategy_proofness,
            "order_invariance_max_individuals": self.order_invariance_max_individuals,
            "lemma_probes": self.lemma_probes,
            "improvements_per_market": self.improvements_per_market,
            "offer_probes": self.offer_probes,
            "grid_bound": list(self.grid_bound),
            "generator": self.params.to_dict(),
        }


@dataclass
class CheckResult:
    name: str
    description: str
    passed: int = 0
    failed: int = 0
    skipped: int = 0
    dumps: list[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.failed == 0

    def line(self) -> str:
        status = "PASS" if self.ok else "FAIL"
        extra = f", {self.skipped} skipped" if self.skipped else ""
        return f"{status} {self.name}: {self.passed} passed, {self.failed} failed{extra} ({self.description})"


@dataclass
class AuditReport:
    config: AuditConfig
    results: dict[str, CheckResult]
    elapsed: float = 0.0

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.results.values())

    @property
    def failing(self) -> list[str]:
        return [n for n, r in self.results.items() if not r.ok]

    def lines(self, dumps: bool = True) -> list[str]:
        cfg = self.config
        who = f"mutant {cfg.mutant}" if cfg.mutant else "policies " + ", ".join(p.value for p in cfg.policies)
        out = [f"audit seed={cfg.seed} markets={cfg.markets} {who}"]
        out += [r.line() for r in self.results.values()]
        if dumps:
            for r in self.results.values():
                for d in r.dumps:
                    out.append(f"  counterexample [{r.name}] seed={d.get('seed')} policy={d.get('policy')}: {d['detail']}")
        out.append(("all checks passed" if self.ok else "FAILED: " + ", ".join(self.failing)) + f" in {self.elapsed:.1f}s")
        return out

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "ok": self.ok,
            "elapsed_seconds": round(self.elapsed, 3),
            "checks": {
                n: {
                    "description": r.description,
                    "passed": r.passed,
                    "failed": r.failed,
                    "skipped": r.skipped,
                    "counterexamples": r.dumps,
                }
                for n, r in self.results.items()
            },
        }


class _Recorder:
    def __init__(self, config: AuditConfig):
        self.config = config
        self.results = {n: CheckResult(n, d) for n, d in CHECKS}

    def record(self, check: str, ok: bool, detail: Callable[[], str] = lambda: "", **context) -> bool:
        r = self.results[check]
        if ok:
            r.passed += 1
        else:
            r.failed += 1
            if len(r.dumps) < self.config.max_dumps:
                market = context.pop("market", None)
                dump = {"detail": detail(), **context}
                if market is not None:
                    dump["market"] = market_to_dict(market)
                r.dumps.append(dump)
        return ok

    def skip(self, check: str) -> None:
        self.results[check].skipped += 1


def random_improvement(market: Market, rng: random.Random) -> ImprovementSpec:
    """Raise one individual's score at a random nonempty set of institutions, avoiding ties."""
    ind = rng.choice(market.individuals).id
    insts = [s for s in market.institutions if rng.random() < 0.6] or [rng.choice(market.institutions)]
    new = {}
    for s in insts:
        taken = {k for i, k in s.scores.items() if i != ind}
        k = s.scores[ind] + rng.randint(1, 40) + Decimal("0.5")
        while k in taken:
            k += Decimal("0.25")
        new[s.id] = k
    return ImprovementSpec(ind, new)


def _fmt(contracts) -> str:
    return "{" + ", ".join(f"({c.individual},{c.institution},{c.category})" for c in sorted(contracts)) + "}"


def _choice_feasibility(offered, chosen, inst: Institution) -> list[str]:
    errs = []
    if not chosen <= offered:
        errs.append(f"chose unoffered {_fmt(chosen - offered)}")
    if len(chosen) > inst.capacity:
        errs.append(f"chose {len(chosen)} for {inst.capacity} seats")
    who = [c.individual for c in chosen]
    for i in sorted({i for i in who if who.count(i) > 1}):
        errs.append(f"{i} chosen twice in {_fmt(chosen)}")
    return errs


def _probe_offers(market: Market, rule: ChoiceRule, rng: random.Random, count: int) -> None:
    """Evaluate the rule on each institution's full contract set and random subsets of it."""
    universe = build_contract_universe(market)
    for inst in market.institutions:
        mine = sorted(c for c in universe if c.institution == inst.id)
        rule(mine, inst.id)
        for _ in range(count):
            rule([c for c in mine if rng.random() < 0.5], inst.id)


def _audit_choices(rec: _Recorder, market: Market, rule: ChoiceRule, ctx: dict) -> None:
    hier = market.hierarchy
    cats = set(market.all_categories)
    for s, offered, outcome in rule.evaluated():
        inst = market.institution(s)
        errs = _choice_feasibility(offered, outcome.chosen, inst)
        rec.record("choice-feasibility", not errs, lambda: f"{errs[0]} when offered {_fmt(offered)}", **ctx)
        serr = stage_log_errors(offered, outcome, inst, market.categories)
        rec.record("choice-stages", not serr, lambda: f"{serr[0]} when offered {_fmt(offered)}", **ctx)
        bad = is_fair_chosen_set(offered, outcome.chosen, inst, hier)
        rec.record("choice-fairness", not bad, lambda: f"{bad[0]} when offered {_fmt(offered)}", **ctx)
        for st in outcome.stages:
            if st.stage not in cats:
                continue
            try:
                inp = SubChoiceInput(st.considered, st.capacity, hier.reserves(st.stage, s), inst.scores, hier)
                expected = oracle_undominated(inp)
                msg = f"{s}/{st.stage} chose {_fmt(st.chosen)}, oracle {_fmt(expected)} from {_fmt(st.considered)}"
                ok = expected == st.chosen
            except (OracleError, ValueError) as exc:
                ok, msg = False, f"{s}/{st.stage}: {exc}"
            rec.record("subchoice-oracle", ok, lambda: msg, **ctx)


def _audit_market(rec: _Recorder, cfg: AuditConfig, seed: int, market: Market, label: str, policy) -> None:
    ctx = {"seed": seed, "policy": label}
    full = dict(ctx, market=market)
    rule = ChoiceRule(market, policy)
    matching, trace = cumulative_offer(market, rule)
    outcome_str = _fmt(matching.contracts)

    errs = trace.invariant_errors(rule) + matching.feasibility_errors(market)
    rec.record("process-invariants", not errs, lambda: "; ".join(errs), **full)

    envy = is_fair_matching(matching, market)
    rec.record("matching-fairness", not envy, lambda: f"{envy[0]} in {outcome_str}", **full)

    block = find_block(matching, market, rule, max_block_size=cfg.max_block_size, exhaustive=cfg.exhaustive_blocks)
    rec.record("stability", block.stable, lambda: f"{outcome_str}: {block}", **full)

    for ind in market.individuals:
        if cfg.strategy_proofness:
            try:
                dev = check_strategy_proofness(market, rule, ind.id)
                rec.record("strategy-proofness", dev is None, lambda: str(dev), **full)
            except EnumerationBoundError:
                rec.skip("strategy-proofness")
        if ind.declared is not None:
            rec.record(
                "declaration",
                declaration_helps(market, rule, ind.id),
                lambda: f"{ind.id} does better hiding {ind.declared}",
                **full,
            )
        if ind.types:
            helped = type_drops_that_help(market, rule, ind.id)
            rec.record("type-drop", not helped, lambda: f"{ind.id} gains by hiding {helped}", **full)

    rng = random.Random(f"{seed}/{label}")
    for _ in range(cfg.improvements_per_market):
        imp = random_improvement(market, rng)
        ok = check_respect_improvements(market, policy, imp)
        rec.record(
            "improvements",
            ok,
            lambda: f"{imp.individual} raised to { {k: str(v) for k, v in imp.scores.items()} } ends up worse",
            **full,
        )

    if len(market.individuals) <= cfg.order_invariance_max_individuals:
        seen = {}
        for order in itertools.permutations(default_order(market)):
            m, _ = cumulative_offer(market, rule, order)
            seen.setdefault(m.contracts, order)
        rec.record(
            "order-invariance",
            len(seen) == 1,
            lambda: "; ".join(f"order {list(o)} gives {_fmt(m)}" for m, o in list(seen.items())[:2]),
            **full,
        )

    _probe_offers(market, rule, rng, cfg.offer_probes)
    # Last, so it sees every choice the checks above triggered.
    _audit_choices(rec, market, rule, full)


def _grid_institution(shape: tuple[int, ...], categories) -> Institution:
    open_, *reserved = shape
    res = dict(zip(categories, reserved))
    return Institution("grid", open_ + sum(reserved), res, {})


def run_audit(
    config: Optional[AuditConfig] = None, markets: Optional[Iterable[tuple[Any, Market]]] = None
) -> AuditReport:
    """Run every check; ``markets`` replaces the generated batch with ``(label, market)`` pairs."""
    cfg = config or AuditConfig()
    start = time.perf_counter()
    rec = _Recorder(cfg)
    rules = cfg.rules()

    for label, policy in rules:
        for swap in (False, True):
            rep = prop1_counterexample(policy, swap)
            rec.record("independence-example", rep.ok, lambda: "; ".join(rep.problems), policy=label, swap=swap)

    rng = random.Random(cfg.seed)
    for _ in range(cfg.lemma_probes):
        case, pool, x, y = random_probe(rng)
        bad = probe_failures(case, pool, x, y)
        rec.record("subchoice-properties", not bad, lambda: f"{bad[0]} in {case.describe()}")

    if markets is None:
        markets = random_markets(cfg.seed, cfg.markets, cfg.max_individuals, cfg.max_institutions, cfg.params)
    for seed, market in markets:
        for label, policy in rules:
            _audit_market(rec, cfg, seed, market, label, policy)

    categories = ("SC", "ST", "OBC")
    profiles = demand_grid(cfg.grid_bound)
    for label, policy in rules:
        for shape in GRID_SHAPES:
            inst = _grid_institution(shape, categories)
            bad = monotone_transfer_violations(policy, inst, profiles, categories)
            rec.record(
                "monotone-transfer",
                not bad,
                lambda: f"shape {shape}, stage {bad[0][0]}: {bad[0][3]} ({bad[0][1]} vs {bad[0][2]})",
                policy=label,
            )

    return AuditReport(cfg, rec.results, time.perf_counter() - start)
