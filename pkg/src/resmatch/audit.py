"""Executable checks for fairness, stability, incentives and improvements."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Iterator, Mapping, NamedTuple, Optional, Sequence, Union

from .choice import ChoiceFunction, ChoicePolicy, ChoiceRule, as_rule
from .cop import Matching, cumulative_offer, default_order
from .model import GC, SC, Contract, Individual, Institution, Market, build_contract_universe

Policy = Union[ChoicePolicy, ChoiceFunction, ChoiceRule]

EXHAUSTIVE_BLOCK_LIMIT = 12
MISREPORT_PAIR_LIMIT = 4


# -- fairness of matchings -----------------------------------------------------


class Envy(NamedTuple):
    envier: str
    held: Optional[Contract]
    envied: Contract

    def __str__(self) -> str:
        mine = "nothing" if self.held is None else f"({self.held.institution}, {self.held.category})"
        return (
            f"{self.envier} holding {mine} envies {self.envied.individual}'s "
            f"({self.envied.institution}, {self.envied.category}) with a higher score "
            f"and every horizontal type the other holds"
        )


def is_fair_matching(matching: Union[Matching, frozenset], market: Market) -> list[Envy]:
    """Unjustified envy instances; an empty list means the matching is fair.

    Envy of ``y`` by individual ``i`` is justified when ``y``'s holder
    scores higher at ``y``'s institution or holds a horizontal type ``i``
    lacks. Unmatched individuals are checked too, against the outside option.
    """
    contracts = matching.contracts if isinstance(matching, Matching) else frozenset(matching)
    mine = {c.individual: c for c in contracts}
    out = []
    for ind in market.individuals:
        held = mine.get(ind.id)
        cur = None if held is None else (held.institution, held.category)
        for y in sorted(contracts):
            if y.individual == ind.id or not ind.prefers((y.institution, y.category), cur):
                continue
            scores = market.institution(y.institution).scores
            other = market.individual(y.individual)
            if scores[y.individual] > scores[ind.id]:
                continue
            if not ind.types >= other.types:
                continue
            out.append(Envy(ind.id, held, y))
    return out


# -- stability -------------------------------------------------------------------


@dataclass(frozen=True)
class BlockReport:
    ir_violation: Optional[str] = None
    block: Optional[frozenset[Contract]] = None
    search: str = "singleton"
    bound: int = 1
    candidates: int = 0

    @property
    def stable(self) -> bool:
        return self.ir_violation is None and self.block is None

    def __str__(self) -> str:
        parts = []
        if self.ir_violation:
            parts.append(f"not individually rational: {self.ir_violation}")
        if self.block:
            parts.append("blocked via {" + ", ".join(map(str, sorted(self.block))) + "}")
        if parts:
            return "; ".join(parts)
        return f"no block found ({self.search} search, bound {self.bound}, {self.candidates} candidates)"


def _ir_violation(contracts: frozenset[Contract], market: Market, rule: ChoiceRule) -> Optional[str]:
    seen = set()
    for c in sorted(contracts):
        if c.individual in seen:
            return f"{c.individual} holds more than one contract"
        seen.add(c.individual)
        ind = market.individual(c.individual)
        if (c.institution, c.category) not in ind.preferences or c.category not in ind.claimable:
            return f"{c.individual} finds {c} unacceptable"
    for inst in market.institutions:
        xs = frozenset(c for c in contracts if c.institution == inst.id)
        if rule(xs, inst.id) != xs:
            return f"{inst.id} would not choose all of its contracts"
    return None


def _blocks(z: Sequence[Contract], contracts: frozenset[Contract], rule: ChoiceRule) -> bool:
    by_inst: dict[str, list[Contract]] = {}
    for c in z:
        by_inst.setdefault(c.institution, []).append(c)
    for s, zs in by_inst.items():
        base = frozenset(c for c in contracts if c.institution == s)
        if not set(zs) <= rule(base | set(zs), s):
            return False
    return True


def find_block(
    matching: Union[Matching, frozenset],
    market: Market,
    policy: Policy,
    max_block_size: int = 1,
    exhaustive: Optional[bool] = None,
) -> BlockReport:
    """Look for an individual-rationality failure and a blocking set.

    Both are reported: the block search runs even when the matching is not
    individually rational.

    Blocking sets hold at most one contract per individual, each strictly
    preferred by its individual to her current assignment. Singletons are
    always tried; when ``exhaustive`` is left as ``None`` the search widens to
    every candidate subset as long as there are at most
    ``EXHAUSTIVE_BLOCK_LIMIT`` contracts outside the matching.
    """
    rule = as_rule(market, policy)
    contracts = matching.contracts if isinstance(matching, Matching) else frozenset(matching)
    ir = _ir_violation(contracts, market, rule)
    outside = build_contract_universe(market) - contracts
    mine = {c.individual: (c.institution, c.category) for c in contracts}
    cands = sorted(
        c for c in outside if market.individual(c.individual).prefers((c.institution, c.category), mine.get(c.individual))
    )
    if exhaustive is None:
        exhaustive = len(outside) <= EXHAUSTIVE_BLOCK_LIMIT
    bound = len(cands) if exhaustive else max_block_size
    search = "exhaustive" if exhaustive else ("singleton" if bound == 1 else f"up to {bound}")
    for k in range(1, bound + 1):
        for z in itertools.combinations(cands, k):
            if len({c.individual for c in z}) < k:
                continue
            if _blocks(z, contracts, rule):
                return BlockReport(ir, frozenset(z), search, bound, len(cands))
    return BlockReport(ir, None, search, bound, len(cands))


def is_stable(matching, market: Market, policy: Policy, **kw) -> bool:
    return find_block(matching, market, policy, **kw).stable


# -- strategy-proofness ----------------------------------------------------------


class EnumerationBoundError(ValueError):
    pass


@dataclass(frozen=True)
class Deviation:
    individual: str
    report: tuple[tuple[str, str], ...]
    declared: Optional[str]
    truthful: Optional[tuple[str, str]]
    obtained: Optional[tuple[str, str]]

    def __str__(self) -> str:
        rep = " > ".join(f"({s},{v})" for s, v in self.report) or "empty list"
        return (
            f"{self.individual} reports [{rep}] declaring {self.declared or 'nothing'} and gets "
            f"{self.obtained} instead of {self.truthful}"
        )


def misreports(pairs: Sequence[tuple[str, str]]) -> Iterator[tuple[tuple[str, str], ...]]:
    """Every strict ranking of every subset of ``pairs``, the empty list included."""
    for k in range(len(pairs) + 1):
        for sub in itertools.permutations(pairs, k):
            yield sub


def _outcome(market: Market, rule: ChoiceRule, individual: str, order=None) -> Optional[tuple[str, str]]:
    matching, _ = cumulative_offer(market, rule, order)
    c = matching.of(individual)
    return None if c is None else (c.institution, c.category)


def check_strategy_proofness(
    market: Market,
    policy: Policy,
    individual: str,
    max_pairs: int = MISREPORT_PAIR_LIMIT,
    domain: str = "acceptable",
) -> Optional[Deviation]:
    """Search for a profitable misreport by ``individual``.

    ``domain="acceptable"`` permutes subsets of the pairs she truly finds
    acceptable; ``domain="claimable"`` uses every pair her true category
    allows. A report naming no reserved pair is submitted without a category
    declaration. Returns the first misreport that lands her a strictly
    better pair under her true preferences.
    """
    rule = as_rule(market, policy)
    ind = market.individual(individual)
    if domain == "acceptable":
        pairs = [p for p in ind.preferences if p[1] in ind.claimable]
    elif domain == "claimable":
        cats = (GC,) if ind.vertical is None else (GC, ind.vertical)
        pairs = [(s.id, v) for s in market.institutions for v in cats]
    else:
        raise ValueError(f"unknown misreport domain {domain!r}")
    if len(pairs) > max_pairs:
        raise EnumerationBoundError(f"{individual} has {len(pairs)} pairs; bound is {max_pairs}")
    truth = _outcome(market, rule, individual)
    for report in misreports(pairs):
        declared = ind.vertical if any(v != GC for _, v in report) else None
        fake = Individual(ind.id, ind.vertical, declared, ind.types, report)
        got = _outcome(market.replace_individual(fake), rule, individual)
        if ind.prefers(got, truth):
            return Deviation(individual, report, declared, truth, got)
    return None


def declaration_helps(market: Market, policy: Policy, individual: str) -> bool:
    """Declaring her reserved category is weakly better than hiding it."""
    ind = market.individual(individual)
    if ind.declared is None:
        return True
    rule = as_rule(market, policy)
    hidden = Individual(ind.id, ind.vertical, None, ind.types, tuple(p for p in ind.preferences if p[1] == GC))
    truth = _outcome(market, rule, individual)
    alt = _outcome(market.replace_individual(hidden), rule, individual)
    return ind.weakly_prefers(truth, alt)


def type_drops_that_help(market: Market, policy: Policy, individual: str) -> list[str]:
    """Horizontal types whose omission strictly improves ``individual``'s outcome.

    Dropping a type also drops the types it strictly contains, so the
    family of holder sets stays hierarchical.
    """
    ind = market.individual(individual)
    hier = market.hierarchy
    truth = _outcome(market, as_rule(market, policy), individual)
    helped = []
    for h in sorted(ind.types):
        gone = {h} | {k for k in ind.types if hier.contains(h, k)}
        alt_market = market.replace_individual(
            Individual(ind.id, ind.vertical, ind.declared, ind.types - gone, ind.preferences)
        )
        # Holder sets change, so the choice rule has to be rebuilt.
        alt = _outcome(alt_market, as_rule(alt_market, _bare(policy)), individual)
        if ind.prefers(alt, truth):
            helped.append(h)
    return helped


def _bare(policy: Policy):
    return policy.policy if isinstance(policy, ChoiceRule) else policy


# -- respect for improvements ------------------------------------------------------


class InvalidImprovement(ValueError):
    pass


@dataclass(frozen=True)
class ImprovementSpec:
    individual: str
    scores: Mapping[str, Decimal]

    @classmethod
    def between(cls, before: Market, after: Market, individual: str) -> "ImprovementSpec":
        """Read the improvement off two markets; anyone else's change is an error."""
        new = {}
        for inst in before.institutions:
            other = after.institution(inst.id)
            for i, k in inst.scores.items():
                if other.scores[i] != k:
                    if i != individual:
                        raise InvalidImprovement(f"score of {i} at {inst.id} changed")
                    new[inst.id] = other.scores[i]
        return cls(individual, new)

    def validate(self, market: Market) -> None:
        strict = False
        for s, k in self.scores.items():
            inst = market.institution(s)
            old = inst.scores[self.individual]
            if k < old:
                raise InvalidImprovement(f"score of {self.individual} at {s} decreases")
            if k > old:
                strict = True
            if any(v == k for i, v in inst.scores.items() if i != self.individual):
                raise InvalidImprovement(f"new score of {self.individual} at {s} ties another score")
        if not strict:
            raise InvalidImprovement("no score strictly increases")

    def apply(self, market: Market) -> Market:
        self.validate(market)
        out = market
        for s, k in self.scores.items():
            inst = market.institution(s)
            scores = dict(inst.scores)
            scores[self.individual] = k
            out = out.replace_institution(Institution(inst.id, inst.capacity, dict(inst.reservations), scores))
        return out


def check_respect_improvements(market: Market, policy: Policy, improvement: ImprovementSpec) -> bool:
    improved = improvement.apply(market)
    i = improvement.individual
    base = _bare(policy)
    before = _outcome(market, as_rule(market, base), i)
    after = _outcome(improved, as_rule(improved, base), i)
    return market.individual(i).weakly_prefers(after, before)


# -- the fairness / stability independence example ---------------------------------


def prop1_market(swap: bool = False) -> Market:
    """One institution, two SC individuals, one open and one SC seat."""
    hi, lo = (Decimal(80), Decimal(90)) if swap else (Decimal(90), Decimal(80))
    prefs = (("s", SC), ("s", GC))
    return Market(
        individuals=(
            Individual("i", SC, SC, frozenset(), prefs),
            Individual("j", SC, SC, frozenset(), prefs),
        ),
        institutions=(Institution("s", 2, {SC: 1}, {"i": hi, "j": lo}),),
    )


@dataclass
class Prop1Report:
    policy: str
    top: str
    y: frozenset[Contract]
    y_envy: list[Envy]
    y_block: BlockReport
    choice_with_block: frozenset[Contract]
    z: frozenset[Contract]
    z_envy: list[Envy]
    z_block: BlockReport
    problems: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.problems

    def lines(self) -> list[str]:
        def fmt(cs):
            return "{" + ", ".join(f"({c.individual},{c.institution},{c.category})" for c in sorted(cs)) + "}"

        return [
            f"policy: {self.policy}; higher score: {self.top}",
            f"Y = {fmt(self.y)}: fair={not self.y_envy} stable={self.y_block.stable} ({self.y_block})",
            f"choice from Y plus block = {fmt(self.choice_with_block)}",
            f"Z = {fmt(self.z)}: fair={not self.z_envy} stable={self.z_block.stable}",
            *(f"  envy: {e}" for e in self.z_envy),
            "result: " + ("as expected" if self.ok else "; ".join(self.problems)),
        ]


class Prop1Failure(AssertionError):
    pass


def prop1_counterexample(policy: Policy = ChoicePolicy.NO_TRANSFER, swap: bool = False) -> Prop1Report:
    """Rebuild the two-person example and check that fairness and stability come apart.

    Y gives both individuals open seats: fair, yet the lower scorer blocks it
    with her SC contract. Z gives the higher scorer the open seat and the
    lower scorer the SC seat: stable, yet the higher scorer envies the SC seat.
    """
    market = prop1_market(swap)
    top, low = ("j", "i") if swap else ("i", "j")
    gc = {p: Contract(p, "s", GC) for p in "ij"}
    sc = {p: Contract(p, "s", SC) for p in "ij"}
    rule = as_rule(market, policy)
    y = frozenset({gc["i"], gc["j"]})
    z = frozenset({gc[top], sc[low]})
    report = Prop1Report(
        policy=str(getattr(policy, "value", policy)),
        top=top,
        y=y,
        y_envy=is_fair_matching(y, market),
        y_block=find_block(y, market, rule),
        choice_with_block=rule(y | {sc[low]}, "s"),
        z=z,
        z_envy=is_fair_matching(z, market),
        z_block=find_block(z, market, rule),
    )
    if report.y_envy:
        report.problems.append("Y should be fair")
    if report.y_block.block != frozenset({sc[low]}):
        report.problems.append(f"Y should be blocked via {{{sc[low]}}}, got {report.y_block}")
    if report.choice_with_block != frozenset({gc[top], sc[low]}):
        report.problems.append("choice from Y plus the block should be Z")
    if not report.z_block.stable:
        report.problems.append(f"Z should be stable, got {report.z_block}")
    if [(e.envier, e.envied) for e in report.z_envy] != [(top, sc[low])]:
        report.problems.append("Z should show exactly one envy: the higher scorer for the SC seat")
    return report


def assert_prop1(policy: Policy = ChoicePolicy.NO_TRANSFER, swap: bool = False) -> Prop1Report:
    report = prop1_counterexample(policy, swap)
    if not report.ok:
        raise Prop1Failure("; ".join(report.problems))
    return report


# -- order invariance --------------------------------------------------------------


def order_variants(market: Market, policy: Policy, limit: Optional[int] = None):
    """Distinct matchings reached over proposal orders (all orders unless ``limit``)."""
    rule = as_rule(market, policy)
    seen: dict[frozenset, tuple[str, ...]] = {}
    base = default_order(market)
    for k, order in enumerate(itertools.permutations(base)):
        if limit is not None and k >= limit:
            break
        m, _ = cumulative_offer(market, rule, order)
        seen.setdefault(m.contracts, order)
    return seen
