"""Within-category choice: hierarchical horizontal reserves on top of merit.

Inside one (institution, category) every individual has at most one
contract, so selection works on individual ids ranked by score.
"""

from __future__ import annotations

import enum
import itertools
import logging
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Collection, Iterable, Mapping, Sequence

from .model import Contract, HorizontalHierarchy

log = logging.getLogger(__name__)

ORACLE_LIMIT = 20


class Domination(enum.Enum):
    FIRST = "first_dominates"
    SECOND = "second_dominates"
    EQUAL = "equal"
    INCOMPARABLE = "incomparable"


def merit_compare(
    first: Collection[str], second: Collection[str], scores: Mapping[str, Decimal]
) -> Domination:
    """Compare two equal-size sets of individuals by merit.

    A bijection g with score(i) >= score(g(i)) everywhere exists iff the
    descending score vectors dominate position by position (pair the k-th
    best with the k-th best; any other pairing can be uncrossed without
    breaking an inequality), so the comparison is done on sorted vectors.
    """
    if len(first) != len(second):
        raise ValueError(f"cannot compare sets of size {len(first)} and {len(second)}")
    a = sorted((scores[i] for i in first), reverse=True)
    b = sorted((scores[i] for i in second), reverse=True)
    ge = all(x >= y for x, y in zip(a, b))
    le = all(x <= y for x, y in zip(a, b))
    if ge and le:
        return Domination.EQUAL
    if ge:
        return Domination.FIRST
    if le:
        return Domination.SECOND
    return Domination.INCOMPARABLE


def rank_by_score(ids: Iterable[str], scores: Mapping[str, Decimal]) -> list[str]:
    return sorted(ids, key=lambda i: scores[i], reverse=True)


def select_hier(
    ranked: Sequence[str],
    capacity: int,
    reserves: Mapping[str, int],
    hierarchy: HorizontalHierarchy,
) -> list[str]:
    """Core of the hierarchical sub-choice rule on score-ranked individual ids.

    Types are visited bottom-up (innermost first; siblings by id). Each type
    takes its highest-scoring remaining holders up to its current reserve;
    picks are charged to the reserve of every containing type and to the
    overall capacity. Seats left after the last layer go by merit.
    """
    if capacity <= 0 or not ranked:
        return []
    avail = list(ranked)
    chosen: list[str] = []
    cap = capacity
    if any(reserves.values()):
        left = dict(reserves)
        for layer in hierarchy.layers:
            for h in layer:
                want = left.get(h, 0)
                if want <= 0:
                    continue
                if want > cap:
                    log.debug("reserve %d for %s exceeds %d remaining seats; truncated", want, h, cap)
                    want = cap
                holders = hierarchy.holders[h]
                picks = [i for i in avail if i in holders][:want]
                if not picks:
                    continue
                taken = set(picks)
                avail = [i for i in avail if i not in taken]
                chosen.extend(picks)
                cap -= len(picks)
                for g in hierarchy.ancestors[h]:
                    if g in left:
                        left[g] = max(0, left[g] - len(picks))
                if cap == 0 or not avail:
                    return chosen
    chosen.extend(avail[:cap])
    return chosen


@dataclass(frozen=True)
class SubChoiceInput:
    contracts: frozenset[Contract]
    capacity: int
    reserves: Mapping[str, int]
    scores: Mapping[str, Decimal]
    hierarchy: HorizontalHierarchy = field(compare=False)

    def __post_init__(self):
        if self.capacity < 0:
            raise ValueError("capacity must be non-negative")
        who = [c.individual for c in self.contracts]
        if len(set(who)) != len(who):
            raise ValueError("at most one contract per individual")
        if len({(c.institution, c.category) for c in self.contracts}) > 1:
            raise ValueError("contracts must share one institution and one category")

    @property
    def by_individual(self) -> dict[str, Contract]:
        return {c.individual: c for c in self.contracts}


def c_hier(inp: SubChoiceInput) -> frozenset[Contract]:
    by_ind = inp.by_individual
    ranked = rank_by_score(by_ind, inp.scores)
    picked = select_hier(ranked, inp.capacity, inp.reserves, inp.hierarchy)
    return frozenset(by_ind[i] for i in picked)


def satisfies_horizontal(chosen: Collection[Contract], inp: SubChoiceInput) -> bool:
    """Every reserve is met, or no holder of that type was left out."""
    picked = {c.individual for c in chosen}
    pool = {c.individual for c in inp.contracts}
    for h, r in inp.reserves.items():
        if r <= 0:
            continue
        holders = inp.hierarchy.holders.get(h, frozenset())
        if len(picked & holders) < r and (pool - picked) & holders:
            return False
    return True


class OracleError(RuntimeError):
    pass


def oracle_undominated(inp: SubChoiceInput, limit: int = ORACLE_LIMIT) -> frozenset[Contract]:
    """Exhaustive reference for ``c_hier``.

    Enumerates every reserve-satisfying subset of the largest feasible size
    and returns the one that merit-dominates all the others. In a finite
    preorder a unique maximal element is the greatest one, so failing to
    find a greatest set means the undominated set is not unique.
    """
    n = len(inp.contracts)
    if n > limit:
        raise OracleError(f"{n} contracts exceed the enumeration bound {limit}")
    size = min(n, inp.capacity)
    pool = sorted(inp.contracts)
    feasible = [
        frozenset(sub)
        for sub in itertools.combinations(pool, size)
        if satisfies_horizontal(sub, inp)
    ]
    if not feasible:
        raise OracleError("no subset of maximal size satisfies the reserves")

    def vector(sub):
        return sorted((inp.scores[c.individual] for c in sub), reverse=True)

    best = max(feasible, key=vector)
    best_ids = [c.individual for c in best]
    for other in feasible:
        rel = merit_compare(best_ids, [c.individual for c in other], inp.scores)
        if rel not in (Domination.FIRST, Domination.EQUAL):
            raise OracleError("more than one merit-undominated subset")
    return best
