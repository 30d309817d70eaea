"""Deliberately broken choice functions used to measure what the audit catches."""

from __future__ import annotations

import itertools
from typing import Callable, Optional, Sequence

from .choice import (
    DERESERVED,
    TRANSFER_GC_STAGE,
    ChoiceFunction,
    ChoiceOutcome,
    ChoicePolicy,
    StageLog,
    _hier_stage,
    _merit_stage,
)
from .model import GC, HorizontalHierarchy, Institution


def _staged(
    contracts,
    institution: Institution,
    hierarchy: HorizontalHierarchy,
    order: Sequence[str],
    remove_after: Callable[[int], bool],
    reserves_for: Callable[[str], dict],
    transfer: bool,
) -> ChoiceOutcome:
    remaining = set(contracts)
    stages: list[StageLog] = []
    for k, v in enumerate(order):
        pool = [c for c in remaining if c.category == v]
        log = _hier_stage(v, pool, institution.seats(v), reserves_for(v), institution, hierarchy)
        stages.append(log)
        if remove_after(k):
            done = {c.individual for c in log.chosen}
            remaining = {c for c in remaining if c.individual not in done}
        else:
            remaining -= log.chosen
    if transfer:
        obc = next((st for st in stages if st.stage == DERESERVED), None)
        vacant = obc.vacant if obc is not None else 0
        pool = [c for c in remaining if c.category == GC]
        stages.append(_merit_stage(TRANSFER_GC_STAGE, pool, vacant, institution))
    chosen = frozenset(itertools.chain.from_iterable(st.chosen for st in stages))
    return ChoiceOutcome(chosen, tuple(stages))


def skip_open_removal(policy: ChoicePolicy = ChoicePolicy.NO_TRANSFER) -> ChoiceFunction:
    """Individuals picked for open seats keep their reserved contracts in play."""

    def choose(contracts, institution, hierarchy, categories):
        return _staged(
            contracts,
            institution,
            hierarchy,
            (GC, *categories),
            remove_after=lambda k: k > 0,
            reserves_for=lambda v: hierarchy.reserves(v, institution.id),
            transfer=policy is ChoicePolicy.TRANSFER_GC,
        )

    choose.__name__ = "skip_open_removal"
    return choose


def remove_before_open(policy: ChoicePolicy = ChoicePolicy.NO_TRANSFER) -> ChoiceFunction:
    """Reserved contracts of anyone who also offers an open contract are dropped up front."""

    def choose(contracts, institution, hierarchy, categories):
        has_open = {c.individual for c in contracts if c.category == GC}
        kept = [c for c in contracts if c.category == GC or c.individual not in has_open]
        out = _staged(
            kept,
            institution,
            hierarchy,
            (GC, *categories),
            remove_after=lambda k: True,
            reserves_for=lambda v: hierarchy.reserves(v, institution.id),
            transfer=policy is ChoicePolicy.TRANSFER_GC,
        )
        return out

    choose.__name__ = "remove_before_open"
    return choose


def dereserved_first(policy: ChoicePolicy = ChoicePolicy.NO_TRANSFER) -> ChoiceFunction:
    """OBC seats are filled before the open seats."""

    def choose(contracts, institution, hierarchy, categories):
        order = (DERESERVED, GC, *(v for v in categories if v != DERESERVED))
        return _staged(
            contracts,
            institution,
            hierarchy,
            order,
            remove_after=lambda k: True,
            reserves_for=lambda v: hierarchy.reserves(v, institution.id),
            transfer=policy is ChoicePolicy.TRANSFER_GC,
        )

    choose.__name__ = "dereserved_first"
    return choose


def ignore_reserve(type_id: Optional[str] = None, policy: ChoicePolicy = ChoicePolicy.NO_TRANSFER) -> ChoiceFunction:
    """Drop one horizontal type's reserves; by default the first type (by id) that has one."""

    def choose(contracts, institution, hierarchy, categories):
        def reserves_for(v):
            res = hierarchy.reserves(v, institution.id)
            target = type_id
            if target is None:
                target = next((h for h in hierarchy.types if res.get(h)), None)
            if target is not None:
                res[target] = 0
            return res

        return _staged(
            contracts,
            institution,
            hierarchy,
            (GC, *categories),
            remove_after=lambda k: True,
            reserves_for=reserves_for,
            transfer=policy is ChoicePolicy.TRANSFER_GC,
        )

    choose.__name__ = "ignore_reserve"
    return choose


def lowest_merit(policy: ChoicePolicy = ChoicePolicy.NO_TRANSFER) -> ChoiceFunction:
    """Scores read upside down: an unfair rule that still fills every seat."""

    def choose(contracts, institution, hierarchy, categories):
        flipped = Institution(
            institution.id,
            institution.capacity,
            dict(institution.reservations),
            {i: -k for i, k in institution.scores.items()},
        )
        out = _staged(
            contracts,
            flipped,
            hierarchy,
            (GC, *categories),
            remove_after=lambda k: True,
            reserves_for=lambda v: hierarchy.reserves(v, institution.id),
            transfer=policy is ChoicePolicy.TRANSFER_GC,
        )
        return out

    choose.__name__ = "lowest_merit"
    return choose


MUTANTS: dict[str, Callable[[], ChoiceFunction]] = {
    "skip-open-removal": skip_open_removal,
    "remove-before-open": remove_before_open,
    "dereserved-first": dereserved_first,
    "ignore-reserve": ignore_reserve,
    "lowest-merit": lowest_merit,
}
