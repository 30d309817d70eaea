"""Seeded random markets for audits and the ``generate`` command."""

from __future__ import annotations

import random
from dataclasses import asdict, dataclass, field
from decimal import Decimal
from typing import Optional

from .model import (
    DEFAULT_RESERVED,
    GC,
    HorizontalType,
    Individual,
    Institution,
    Market,
    minimal_cover_size,
    validate_market,
)

MAX_INDIVIDUALS = 12
MAX_INSTITUTIONS = 6

# Women, disabled women (inside women) and disabled men (disjoint from women).
TYPES = (
    HorizontalType("W", "women"),
    HorizontalType("WD", "disabled women"),
    HorizontalType("MD", "disabled men"),
)


@dataclass(frozen=True)
class GeneratorParams:
    category_weights: dict = field(
        default_factory=lambda: {GC: 0.4, "SC": 0.2, "ST": 0.15, "OBC": 0.25}
    )
    declare_prob: float = 0.85
    woman_prob: float = 0.5
    disabled_prob: float = 0.3
    max_capacity: int = 3
    reserve_prob: float = 0.4
    max_reserve: int = 2
    max_preferences: int = 4
    score_range: tuple = (1, 100)

    def to_dict(self) -> dict:
        return asdict(self)


def random_market(
    seed: int,
    n_individuals: int = 5,
    n_institutions: int = 2,
    params: Optional[GeneratorParams] = None,
) -> Market:
    if not 0 <= n_individuals <= MAX_INDIVIDUALS:
        raise ValueError(f"n_individuals must be within 0..{MAX_INDIVIDUALS}")
    if not 1 <= n_institutions <= MAX_INSTITUTIONS:
        raise ValueError(f"n_institutions must be within 1..{MAX_INSTITUTIONS}")
    p = params or GeneratorParams()
    rng = random.Random(seed)
    lo, hi = p.score_range
    if hi - lo + 1 < n_individuals:
        raise ValueError("score range too narrow for strict scores")

    inst_ids = [f"s{k + 1}" for k in range(n_institutions)]
    ind_ids = [f"i{k + 1}" for k in range(n_individuals)]

    cats = list(p.category_weights)
    weights = [p.category_weights[c] for c in cats]
    individuals = []
    for iid in ind_ids:
        cat = rng.choices(cats, weights)[0]
        vertical = None if cat == GC else cat
        declared = vertical if vertical and rng.random() < p.declare_prob else None
        types = set()
        if rng.random() < p.woman_prob:
            types.add("W")
            if rng.random() < p.disabled_prob:
                types.add("WD")
        elif rng.random() < p.disabled_prob:
            types.add("MD")
        claimable = [(s, v) for s in inst_ids for v in ((GC,) if declared is None else (GC, declared))]
        k = rng.randint(0, min(p.max_preferences, len(claimable)))
        prefs = tuple(rng.sample(claimable, k))
        individuals.append(Individual(iid, vertical, declared, frozenset(types), prefs))

    institutions = []
    for sid in inst_ids:
        cap = rng.randint(1, p.max_capacity)
        left = cap
        res = {}
        for v in DEFAULT_RESERVED:
            n = rng.randint(0, left) if rng.random() < 0.6 else 0
            res[v] = n
            left -= n
        scores = dict(zip(ind_ids, (Decimal(x) for x in rng.sample(range(lo, hi + 1), n_individuals))))
        institutions.append(Institution(sid, cap, res, scores))

    market = Market(tuple(individuals), tuple(institutions), TYPES, {}, DEFAULT_RESERVED)
    hier = market.hierarchy
    everyone = [i.id for i in individuals]
    reservations = {}
    for inst in institutions:
        for v in (GC, *DEFAULT_RESERVED):
            seats = inst.seats(v)
            res = {h.id: (rng.randint(1, p.max_reserve) if rng.random() < p.reserve_prob else 0) for h in TYPES}
            # Shrink until the reserves fit the seats for the whole population,
            # which (need being monotone in the pool) covers every subset.
            while minimal_cover_size(everyone, res, hier) > seats:
                h = rng.choice([h for h, n in res.items() if n > 0])
                res[h] -= 1
            for h, n in res.items():
                if n:
                    reservations[(v, inst.id, h)] = n

    market = Market(tuple(individuals), tuple(institutions), TYPES, reservations, DEFAULT_RESERVED)
    report = validate_market(market)
    if report.violations:
        raise AssertionError(f"generator produced an invalid market: {report.violations}")
    return market


def random_markets(seed: int, count: int, max_individuals: int = 6, max_institutions: int = 3, params=None):
    """``count`` markets with sizes drawn from the seed; yields ``(seed, market)``."""
    rng = random.Random(seed)
    for _ in range(count):
        sub = rng.randrange(2**31)
        n = rng.randint(1, max_individuals)
        m = rng.randint(1, max_institutions)
        yield sub, random_market(sub, n, m, params)
