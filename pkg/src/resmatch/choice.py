"""Institution-level choice rules with vertical reserves and OBC de-reservation.

Processing order is GC first, then each reserved category in market order,
then (for the transfer policies) a final stage that fills vacant OBC seats.
Once an individual is chosen at some stage her other contracts are dropped
for the rest of the computation.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, NamedTuple, Optional, Sequence, Union

from .model import DEFAULT_RESERVED, GC, OBC, Contract, HorizontalHierarchy, Institution, Market
from .subchoice import rank_by_score, select_hier

DERESERVED = OBC
TRANSFER_GC_STAGE = "OBC->GC"
TRANSFER_MERIT_STAGE = "OBC->Merit"


class ChoicePolicy(enum.Enum):
    NO_TRANSFER = "no-transfer"
    TRANSFER_GC = "transfer-gc"
    TRANSFER_MERIT = "transfer-merit"

    def __str__(self) -> str:
        return self.value


class StageLog(NamedTuple):
    stage: str
    capacity: int
    considered: frozenset[Contract]
    chosen: frozenset[Contract]

    @property
    def vacant(self) -> int:
        return self.capacity - len(self.chosen)


@dataclass(frozen=True)
class ChoiceOutcome:
    chosen: frozenset[Contract]
    stages: tuple[StageLog, ...]

    def stage(self, name: str) -> Optional[StageLog]:
        for st in self.stages:
            if st.stage == name:
                return st
        return None

    @property
    def transferred(self) -> int:
        last = self.stages[-1] if self.stages else None
        if last is not None and last.stage in (TRANSFER_GC_STAGE, TRANSFER_MERIT_STAGE):
            return last.capacity
        return 0


def _hier_stage(
    name: str,
    pool: Iterable[Contract],
    capacity: int,
    reserves: Mapping[str, int],
    institution: Institution,
    hierarchy: HorizontalHierarchy,
) -> StageLog:
    pool = frozenset(pool)
    by_ind = {c.individual: c for c in pool}
    ranked = rank_by_score(by_ind, institution.scores)
    picked = select_hier(ranked, capacity, reserves, hierarchy)
    return StageLog(name, capacity, pool, frozenset(by_ind[i] for i in picked))


def _merit_stage(name: str, pool: Iterable[Contract], capacity: int, institution: Institution) -> StageLog:
    pool = frozenset(pool)
    ranked = sorted(pool, key=lambda c: institution.scores[c.individual], reverse=True)
    return StageLog(name, capacity, pool, frozenset(ranked[: max(capacity, 0)]))


def overall_choice(
    contracts: Iterable[Contract],
    institution: Institution,
    hierarchy: HorizontalHierarchy,
    policy: ChoicePolicy,
    categories: Sequence[str] = DEFAULT_RESERVED,
) -> ChoiceOutcome:
    contracts = frozenset(contracts)
    for c in contracts:
        if c.institution != institution.id:
            raise ValueError(f"contract {c} does not target {institution.id}")

    remaining = set(contracts)
    stages = []
    for v in (GC, *categories):
        pool = [c for c in remaining if c.category == v]
        log = _hier_stage(
            v, pool, institution.seats(v), hierarchy.reserves(v, institution.id), institution, hierarchy
        )
        stages.append(log)
        done = {c.individual for c in log.chosen}
        remaining = {c for c in remaining if c.individual not in done}

    if policy is not ChoicePolicy.NO_TRANSFER:
        obc = next((st for st in stages if st.stage == DERESERVED), None)
        vacant = obc.vacant if obc is not None else 0
        if policy is ChoicePolicy.TRANSFER_GC:
            pool = [c for c in remaining if c.category == GC]
            stages.append(_merit_stage(TRANSFER_GC_STAGE, pool, vacant, institution))
        elif policy is ChoicePolicy.TRANSFER_MERIT:
            # One contract per individual: the GC one whenever she still has it.
            per_ind: dict[str, Contract] = {}
            for c in sorted(remaining, key=lambda c: c.category != GC):
                per_ind.setdefault(c.individual, c)
            stages.append(_merit_stage(TRANSFER_MERIT_STAGE, per_ind.values(), vacant, institution))

    chosen = frozenset(itertools.chain.from_iterable(st.chosen for st in stages))
    return ChoiceOutcome(chosen, tuple(stages))


# A pluggable rule: (contracts, institution, hierarchy, categories) -> outcome.
ChoiceFunction = Callable[[frozenset, Institution, HorizontalHierarchy, Sequence[str]], ChoiceOutcome]


def policy_function(policy: ChoicePolicy) -> ChoiceFunction:
    def choose(contracts, institution, hierarchy, categories):
        return overall_choice(contracts, institution, hierarchy, policy, categories)

    choose.__name__ = f"choose_{policy.name.lower()}"
    return choose


class ChoiceRule:
    """The choice rules of every institution in one market, memoised.

    Choice depends on scores and horizontal types only, never on
    preferences, so one instance can be shared across preference misreports.
    """

    def __init__(self, market: Market, policy: Union[ChoicePolicy, ChoiceFunction]):
        self.market = market
        self.policy = policy
        self._fn = policy_function(policy) if isinstance(policy, ChoicePolicy) else policy
        self._cache: dict[tuple[str, frozenset], ChoiceOutcome] = {}

    def outcome(self, contracts: Iterable[Contract], institution: str) -> ChoiceOutcome:
        key = (institution, frozenset(contracts))
        hit = self._cache.get(key)
        if hit is None:
            m = self.market
            hit = self._fn(key[1], m.institution(institution), m.hierarchy, m.categories)
            self._cache[key] = hit
        return hit

    def __call__(self, contracts: Iterable[Contract], institution: str) -> frozenset[Contract]:
        return self.outcome(contracts, institution).chosen

    def evaluated(self) -> list[tuple[str, frozenset[Contract], ChoiceOutcome]]:
        """Every ``(institution, offered, outcome)`` computed so far."""
        return [(s, xs, out) for (s, xs), out in self._cache.items()]


def as_rule(market: Market, policy: Union[ChoicePolicy, ChoiceFunction, ChoiceRule]) -> ChoiceRule:
    """Wrap ``policy`` for ``market``; an existing rule is reused as is.

    Reuse is only sound when the two markets share scores and horizontal
    types, as they do across preference or declaration misreports.
    """
    if isinstance(policy, ChoiceRule):
        return policy
    return ChoiceRule(market, policy)


def stage_log_errors(
    offered: Iterable[Contract],
    outcome: ChoiceOutcome,
    institution: Institution,
    categories: Sequence[str] = DEFAULT_RESERVED,
) -> list[str]:
    """Check a stage log against the prescribed procedure.

    Open seats go first, then each reserved category in order, each stage
    seeing exactly the offered contracts of its category whose individuals
    are still unchosen. An optional last stage may fill only the vacant OBC
    seats, by score, from what is left.
    """
    offered = frozenset(offered)
    errs = []
    expected = (GC, *categories)
    names = tuple(st.stage for st in outcome.stages)
    if names[: len(expected)] != expected:
        return [f"stages run as {list(names)}, expected {list(expected)} first"]
    extra = names[len(expected):]
    if len(extra) > 1 or (extra and extra[0] not in (TRANSFER_GC_STAGE, TRANSFER_MERIT_STAGE)):
        return [f"unexpected trailing stages {list(extra)}"]

    done: set[str] = set()
    for st in outcome.stages[: len(expected)]:
        pool = frozenset(c for c in offered if c.category == st.stage and c.individual not in done)
        if st.capacity != institution.seats(st.stage):
            errs.append(f"{st.stage} stage used {st.capacity} seats instead of {institution.seats(st.stage)}")
        if st.considered != pool:
            errs.append(f"{st.stage} stage considered the wrong contracts")
        if not st.chosen <= st.considered or len(st.chosen) > st.capacity:
            errs.append(f"{st.stage} stage chose outside its pool or capacity")
        done |= {c.individual for c in st.chosen}

    if extra:
        last = outcome.stages[-1]
        obc = outcome.stage(DERESERVED)
        vacant = obc.vacant if obc is not None else 0
        if last.capacity != vacant:
            errs.append(f"{last.stage} moved {last.capacity} seats but {vacant} OBC seats were vacant")
        rest = [c for c in offered if c.individual not in done]
        if last.stage == TRANSFER_GC_STAGE:
            pool = frozenset(c for c in rest if c.category == GC)
        else:
            has_gc = {c.individual for c in rest if c.category == GC}
            pool = frozenset(c for c in rest if c.category == GC or c.individual not in has_gc)
        if last.considered != pool:
            errs.append(f"{last.stage} stage considered the wrong contracts")
        top = sorted(pool, key=lambda c: institution.scores[c.individual], reverse=True)[: last.capacity]
        if last.chosen != frozenset(top):
            errs.append(f"{last.stage} stage did not fill by score")
    if outcome.chosen != frozenset(itertools.chain.from_iterable(st.chosen for st in outcome.stages)):
        errs.append("chosen set differs from the union of the stage choices")
    return errs


# -- fairness of a chosen set ------------------------------------------------


class ChoiceFairnessViolation(NamedTuple):
    rejected: Contract
    chosen: Contract

    def __str__(self) -> str:
        return (
            f"{self.rejected.individual} rejected at {self.rejected.institution} while "
            f"{self.chosen.individual} was chosen under {self.chosen.category} with a lower score "
            f"and no extra horizontal type"
        )


def is_fair_chosen_set(
    offered: Iterable[Contract],
    chosen: Iterable[Contract],
    institution: Institution,
    hierarchy: HorizontalHierarchy,
) -> list[ChoiceFairnessViolation]:
    """Pairs (x, y) where x's individual got nothing, y was chosen, and no clause excuses it.

    A pair is excused when y's individual scores higher, the two terms
    differ, or y's individual holds a horizontal type x's does not.
    """
    offered = frozenset(offered)
    chosen = frozenset(chosen)
    types = _types_of(hierarchy)
    winners = {c.individual for c in chosen}
    out = []
    for x in sorted(offered):
        if x.individual in winners:
            continue
        kx = institution.scores[x.individual]
        tx = types.get(x.individual, frozenset())
        for y in sorted(chosen):
            if institution.scores[y.individual] > kx or x.category != y.category:
                continue
            if tx >= types.get(y.individual, frozenset()):
                out.append(ChoiceFairnessViolation(x, y))
    return out


def _types_of(hierarchy: HorizontalHierarchy) -> dict[str, frozenset[str]]:
    out: dict[str, set[str]] = {}
    for h, who in hierarchy.holders.items():
        for i in who:
            out.setdefault(i, set()).add(h)
    return {i: frozenset(v) for i, v in out.items()}


# -- monotone capacity transfers ---------------------------------------------


class TransferProfile(NamedTuple):
    demand: tuple[int, ...]
    capacities: tuple[int, ...]
    vacancies: tuple[int, ...]


def demand_profile_contracts(
    demand: Sequence[int], institution: Institution, categories: Sequence[str] = DEFAULT_RESERVED
) -> tuple[frozenset[Contract], Institution]:
    """Synthetic offer set with ``demand[k]`` applicants for the k-th category (GC first).

    Each applicant offers a single contract for her own category. Scores
    descend with creation order so they are strict.
    """
    contracts = []
    scores = {}
    n = 0
    for v, d in zip((GC, *categories), demand):
        for k in range(d):
            who = f"{v}{k}"
            contracts.append(Contract(who, institution.id, v))
            scores[who] = 1000 - n
            n += 1
    inst = Institution(institution.id, institution.capacity, dict(institution.reservations), scores)
    return frozenset(contracts), inst


def transfer_profile(
    policy: Union[ChoicePolicy, ChoiceFunction],
    institution: Institution,
    demand: Sequence[int],
    categories: Sequence[str] = DEFAULT_RESERVED,
) -> TransferProfile:
    contracts, inst = demand_profile_contracts(demand, institution, categories)
    hierarchy = HorizontalHierarchy(holders={})
    fn = policy_function(policy) if isinstance(policy, ChoicePolicy) else policy
    out = fn(contracts, inst, hierarchy, categories)
    return TransferProfile(
        tuple(demand),
        tuple(st.capacity for st in out.stages),
        tuple(st.vacant for st in out.stages),
    )


def monotone_transfer_violations(
    policy: Union[ChoicePolicy, ChoiceFunction],
    institution: Institution,
    profiles: Iterable[Sequence[int]],
    categories: Sequence[str] = DEFAULT_RESERVED,
) -> list[tuple[int, TransferProfile, TransferProfile, str]]:
    """Check both monotone-transfer requirements over every pair of profiles.

    For stage j with capacities q and preceding vacancies r:
      (1) r >= r' componentwise implies q_j(r) >= q_j(r');
      (2) r >= r' implies q_j(r) - q_j(r') <= sum(r - r'), i.e. seats filled
          before j plus capacity at j never shrink when demand grows.
    """
    runs = [transfer_profile(policy, institution, d, categories) for d in profiles]
    bad = []
    for a, b in itertools.permutations(runs, 2):
        for j in range(min(len(a.capacities), len(b.capacities))):
            ra, rb = a.vacancies[:j], b.vacancies[:j]
            if not all(x >= y for x, y in zip(ra, rb)):
                continue
            if a.capacities[j] < b.capacities[j]:
                bad.append((j, a, b, "capacity fell although earlier vacancies grew"))
            elif a.capacities[j] - b.capacities[j] > sum(ra) - sum(rb):
                bad.append((j, a, b, "transfer exceeded the extra vacancies"))
    return bad


def demand_grid(bound: Sequence[int] = (3, 3, 3, 3)) -> list[tuple[int, ...]]:
    return list(itertools.product(*(range(b + 1) for b in bound)))


def check_monotone_transfer(
    policy: Union[ChoicePolicy, ChoiceFunction],
    institution: Institution,
    profiles: Optional[Iterable[Sequence[int]]] = None,
    categories: Sequence[str] = DEFAULT_RESERVED,
) -> bool:
    if profiles is None:
        profiles = demand_grid((3,) * (len(categories) + 1))
    return not monotone_transfer_violations(policy, institution, profiles, categories)
