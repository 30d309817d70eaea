"""Sequential cumulative offer process.

At every step the first individual in the proposal order who holds nothing
and still has an unproposed acceptable contract proposes her best such
contract. The receiving institution adds it to everything it has ever been
offered and holds its choice from that set.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence, Union

from .choice import ChoiceFunction, ChoicePolicy, ChoiceRule, as_rule
from .model import Contract, Market


class CopError(RuntimeError):
    pass


@dataclass(frozen=True)
class Matching:
    contracts: frozenset[Contract] = frozenset()

    def __iter__(self):
        return iter(sorted(self.contracts))

    def __len__(self) -> int:
        return len(self.contracts)

    def __contains__(self, c) -> bool:
        return c in self.contracts

    def of(self, individual: str) -> Optional[Contract]:
        """The contract of ``individual``; ``None`` if unmatched."""
        for c in self.contracts:
            if c.individual == individual:
                return c
        return None

    def at(self, institution: str) -> frozenset[Contract]:
        return frozenset(c for c in self.contracts if c.institution == institution)

    def feasibility_errors(self, market: Market) -> list[str]:
        errors = []
        seen: dict[str, Contract] = {}
        for c in sorted(self.contracts):
            if c.individual in seen:
                errors.append(f"{c.individual} holds {seen[c.individual]} and {c}")
            seen[c.individual] = c
        for inst in market.institutions:
            n = len(self.at(inst.id))
            if n > inst.capacity:
                errors.append(f"{inst.id} holds {n} contracts for {inst.capacity} seats")
        return errors

    def is_feasible(self, market: Market) -> bool:
        return not self.feasibility_errors(market)


@dataclass(frozen=True)
class CopStep:
    step: int
    proposer: str
    proposed: Contract
    available: Mapping[str, frozenset[Contract]]
    held: Mapping[str, frozenset[Contract]]
    rejected: frozenset[Contract]


@dataclass
class CopTrace:
    order: tuple[str, ...]
    steps: list[CopStep] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.steps)

    def invariant_errors(self, rule: ChoiceRule) -> list[str]:
        """Cumulative availability, held = choice(available), single holding."""
        errors = []
        prev: dict[str, frozenset[Contract]] = {}
        for st in self.steps:
            for s, avail in st.available.items():
                if not prev.get(s, frozenset()) <= avail:
                    errors.append(f"step {st.step}: available set of {s} shrank")
                if rule(avail, s) != st.held[s]:
                    errors.append(f"step {st.step}: held set of {s} differs from its choice")
            holders: dict[str, int] = {}
            for held in st.held.values():
                for c in held:
                    holders[c.individual] = holders.get(c.individual, 0) + 1
            for i, n in sorted(holders.items()):
                if n > 1:
                    errors.append(f"step {st.step}: {i} has {n} contracts on hold")
            prev = dict(st.available)
        return errors

    def to_dict(self) -> dict:
        def cs(xs):
            return [list(c) for c in sorted(xs)]

        return {
            "order": list(self.order),
            "steps": [
                {
                    "step": st.step,
                    "proposer": st.proposer,
                    "proposed": list(st.proposed),
                    "rejected": cs(st.rejected),
                    "available": {s: cs(v) for s, v in sorted(st.available.items())},
                    "held": {s: cs(v) for s, v in sorted(st.held.items())},
                }
                for st in self.steps
            ],
        }


def default_order(market: Market) -> tuple[str, ...]:
    return tuple(sorted(i.id for i in market.individuals))


def proposal_lists(market: Market) -> dict[str, list[Contract]]:
    """Each individual's acceptable contracts, best first."""
    out = {}
    for ind in market.individuals:
        claimable = ind.claimable
        out[ind.id] = [
            Contract(ind.id, s, v)
            for s, v in ind.preferences
            if v in claimable and s in market.by_institution
        ]
    return out


def cumulative_offer(
    market: Market,
    policy: Union[ChoicePolicy, ChoiceFunction, ChoiceRule],
    order: Optional[Sequence[str]] = None,
) -> tuple[Matching, CopTrace]:
    rule = as_rule(market, policy)
    order = tuple(order) if order is not None else default_order(market)
    if sorted(order) != sorted(i.id for i in market.individuals):
        raise ValueError("proposal order must list every individual exactly once")

    lists = proposal_lists(market)
    nxt = {i: 0 for i in order}
    available: dict[str, frozenset[Contract]] = {s.id: frozenset() for s in market.institutions}
    held: dict[str, frozenset[Contract]] = {s.id: frozenset() for s in market.institutions}
    holding: set[str] = set()
    trace = CopTrace(order)
    limit = sum(len(v) for v in lists.values()) + 1

    step = 0
    while True:
        proposer = next(
            (i for i in order if i not in holding and nxt[i] < len(lists[i])),
            None,
        )
        if proposer is None:
            break
        step += 1
        if step > limit:
            raise CopError(f"cumulative offer process exceeded {limit} steps")
        x = lists[proposer][nxt[proposer]]
        nxt[proposer] += 1
        s = x.institution
        before = held[s]
        available[s] = available[s] | {x}
        held[s] = rule(available[s], s)
        rejected = (before | {x}) - held[s]
        holding = {c.individual for h in held.values() for c in h}
        trace.steps.append(CopStep(step, proposer, x, dict(available), dict(held), rejected))

    matched = frozenset(c for h in held.values() for c in h)
    return Matching(matched), trace


def run(market: Market, policy, order: Optional[Sequence[str]] = None) -> Matching:
    return cumulative_offer(market, policy, order)[0]


def outcomes(matching: Matching, individuals: Iterable[str]) -> dict[str, Optional[tuple[str, str]]]:
    """Assigned (institution, category) pair per individual."""
    by_ind = {c.individual: (c.institution, c.category) for c in matching.contracts}
    return {i: by_ind.get(i) for i in individuals}
