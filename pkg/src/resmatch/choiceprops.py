"""Structural properties of the within-category rule, checked by brute force.

Each check works on a table mapping every subset of a small pool of
individuals to the rule's selection from it, so one table serves
substitutability, size monotonicity and irrelevance of rejected contracts.
Quota monotonicity compares the tables for capacities q and q + 1.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from decimal import Decimal
from typing import Iterator, Mapping, Optional, Sequence

from .model import Contract, HorizontalHierarchy, minimal_cover_size
from .subchoice import OracleError, SubChoiceInput, c_hier, oracle_undominated, rank_by_score, select_hier

Table = dict[frozenset[str], frozenset[str]]

# Type patterns an individual may hold: none, W, W and WD (WD inside W), MD.
NESTED_PATTERNS = ((), ("W",), ("W", "WD"), ("MD",))


@dataclass(frozen=True)
class ProbeCase:
    ids: tuple[str, ...]
    scores: Mapping[str, Decimal]
    hierarchy: HorizontalHierarchy
    reserves: Mapping[str, int]
    capacity: int

    def choose(self, pool, capacity=None) -> frozenset[str]:
        cap = self.capacity if capacity is None else capacity
        ranked = rank_by_score(pool, self.scores)
        return frozenset(select_hier(ranked, cap, self.reserves, self.hierarchy))

    def applicable(self, capacity=None) -> bool:
        cap = self.capacity if capacity is None else capacity
        return minimal_cover_size(self.ids, self.reserves, self.hierarchy) <= cap

    def describe(self) -> str:
        types = {i: sorted(h for h, who in self.hierarchy.holders.items() if i in who) for i in self.ids}
        return (
            f"capacity={self.capacity} reserves={dict(self.reserves)} "
            f"individuals={[(i, str(self.scores[i]), types[i]) for i in self.ids]}"
        )


def choice_table(case: ProbeCase, capacity=None) -> Table:
    return {
        frozenset(sub): case.choose(sub, capacity)
        for r in range(len(case.ids) + 1)
        for sub in itertools.combinations(case.ids, r)
    }


def substitutability_failures(table: Table) -> list[str]:
    """x rejected from Y + x must stay rejected from Y + x + y."""
    out = []
    everyone = frozenset().union(*table)
    for pool, chosen in table.items():
        for x in pool - chosen:
            for y in everyone - pool:
                if x in table[pool | {y}]:
                    out.append(f"{x} rejected from {sorted(pool)} but chosen once {y} joins")
    return out


def size_monotonicity_failures(table: Table) -> list[str]:
    out = []
    everyone = frozenset().union(*table)
    for pool, chosen in table.items():
        for y in everyone - pool:
            if len(table[pool | {y}]) < len(chosen):
                out.append(f"adding {y} to {sorted(pool)} shrinks the selection")
    return out


def rejected_irrelevance_failures(table: Table) -> list[str]:
    out = []
    for pool, chosen in table.items():
        for z in pool - chosen:
            if table[pool - {z}] != chosen:
                out.append(f"dropping rejected {z} from {sorted(pool)} changes the selection")
    return out


def quota_monotonicity_failures(small: Table, large: Table) -> list[str]:
    out = []
    for pool, chosen in small.items():
        bigger = large[pool]
        if not chosen <= bigger or len(bigger) > len(chosen) + 1:
            out.append(f"raising the capacity for {sorted(pool)} turns {sorted(chosen)} into {sorted(bigger)}")
    return out


def lemma_failures(case: ProbeCase) -> list[str]:
    """All four properties on every subset of the case's pool."""
    table = choice_table(case)
    out = substitutability_failures(table)
    out += size_monotonicity_failures(table)
    out += rejected_irrelevance_failures(table)
    out += quota_monotonicity_failures(table, choice_table(case, case.capacity + 1))
    return out


def probe_failures(case: ProbeCase, pool: frozenset[str], x: str, y: str) -> list[str]:
    """The same properties at a single (X, x, y, q) point."""
    out = []
    with_x = pool | {x}
    if x not in case.choose(with_x) and x in case.choose(with_x | {y}):
        out.append(f"{x} rejected from {sorted(with_x)} but chosen once {y} joins")
    if len(case.choose(with_x | {y})) < len(case.choose(with_x)):
        out.append(f"adding {y} to {sorted(with_x)} shrinks the selection")
    chosen = case.choose(with_x)
    for z in sorted(with_x - chosen):
        if case.choose(with_x - {z}) != chosen:
            out.append(f"dropping rejected {z} from {sorted(with_x)} changes the selection")
    bigger = case.choose(with_x, case.capacity + 1)
    if not chosen <= bigger or len(bigger) > len(chosen) + 1:
        out.append(f"raising the capacity for {sorted(with_x)} breaks quota monotonicity")
    return out


def _hierarchy(ids: Sequence[str], patterns: Sequence[Sequence[str]], types: Sequence[str]) -> HorizontalHierarchy:
    holders = {h: frozenset(i for i, p in zip(ids, patterns) if h in p) for h in types}
    return HorizontalHierarchy(holders=holders)


def exhaustive_cases(
    max_individuals: int = 5,
    patterns: Sequence[Sequence[str]] = NESTED_PATTERNS,
    max_capacity: int = 3,
    max_reserve: int = 2,
) -> Iterator[ProbeCase]:
    """Every applicable case up to relabelling.

    Individuals are ranked i1 > i2 > ... by score, so assigning type
    patterns to ranked positions covers every score order.
    """
    types = sorted({h for p in patterns for h in p})
    for n in range(max_individuals + 1):
        ids = tuple(f"i{k + 1}" for k in range(n))
        scores = {i: Decimal(100 - k) for k, i in enumerate(ids)}
        for pats in itertools.product(patterns, repeat=n):
            hier = _hierarchy(ids, pats, types)
            for res in itertools.product(range(max_reserve + 1), repeat=len(types)):
                reserves = dict(zip(types, res))
                for cap in range(max_capacity + 1):
                    case = ProbeCase(ids, scores, hier, reserves, cap)
                    if case.applicable():
                        yield case


def random_case(rng: random.Random, max_individuals: int = 8, max_capacity: int = 4) -> ProbeCase:
    """A random applicable case; reserves shrink until they fit the capacity."""
    n = rng.randint(2, max_individuals)
    ids = tuple(f"i{k + 1}" for k in range(n))
    scores = dict(zip(ids, (Decimal(v) for v in rng.sample(range(1, 1000), n))))
    types = sorted({h for p in NESTED_PATTERNS for h in p})
    hier = _hierarchy(ids, [rng.choice(NESTED_PATTERNS) for _ in ids], types)
    cap = rng.randint(0, max_capacity)
    reserves = {h: rng.randint(0, 3) for h in types}
    while minimal_cover_size(ids, reserves, hier) > cap:
        h = rng.choice([h for h, r in reserves.items() if r])
        reserves[h] -= 1
    return ProbeCase(ids, scores, hier, reserves, cap)


def random_probe(rng: random.Random) -> tuple[ProbeCase, frozenset[str], str, str]:
    case = random_case(rng)
    x, y = rng.sample(case.ids, 2)
    rest = [i for i in case.ids if i not in (x, y)]
    pool = frozenset(i for i in rest if rng.random() < 0.5)
    return case, pool, x, y


# Two-type families for the oracle sweep: a nested pair and a disjoint pair.
NESTED_PAIR = ((), ("W",), ("W", "WD"))
DISJOINT_PAIR = ((), ("W",), ("MD",))


def as_subchoice_input(case: ProbeCase, institution: str = "s", category: str = "GC") -> SubChoiceInput:
    return SubChoiceInput(
        frozenset(Contract(i, institution, category) for i in case.ids),
        case.capacity,
        dict(case.reserves),
        case.scores,
        case.hierarchy,
    )


def oracle_mismatch(case: ProbeCase) -> Optional[str]:
    """``None`` when the rule agrees with the exhaustive oracle on the full pool."""
    inp = as_subchoice_input(case)
    try:
        expected = oracle_undominated(inp)
    except OracleError as exc:
        return f"oracle failed: {exc}"
    got = c_hier(inp)
    if got != expected:
        return f"rule picked {sorted(c.individual for c in got)}, oracle {sorted(c.individual for c in expected)}"
    return None
