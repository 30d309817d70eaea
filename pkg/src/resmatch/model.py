"""Market data model: individuals, institutions, horizontal types, contracts.

Vertical categories are plain strings. ``GC`` is the open category and is
claimable by everyone; the reserved categories (``SC``, ``ST``, ``OBC`` by
default) are configuration on the :class:`Market`.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from decimal import Decimal
from functools import cached_property
from typing import Iterable, Mapping, NamedTuple, Optional

GC = "GC"
SC = "SC"
ST = "ST"
OBC = "OBC"
DEFAULT_RESERVED: tuple[str, ...] = (SC, ST, OBC)

# Above this many individuals applicability is checked by the greedy
# sufficiency test instead of subset enumeration.
EXHAUSTIVE_APPLICABILITY_LIMIT = 15


class Contract(NamedTuple):
    individual: str
    institution: str
    category: str

    def __str__(self) -> str:
        return f"({self.individual},{self.institution},{self.category})"


@dataclass(frozen=True)
class HorizontalType:
    id: str
    label: str = ""


@dataclass(frozen=True)
class Individual:
    id: str
    vertical: Optional[str] = None
    declared: Optional[str] = None
    types: frozenset[str] = frozenset()
    preferences: tuple[tuple[str, str], ...] = ()

    @property
    def claimable(self) -> tuple[str, ...]:
        """Categories this individual can be admitted under, as declared."""
        return (GC,) if self.declared is None else (GC, self.declared)

    def rank(self, pair: Optional[tuple[str, str]]) -> int:
        """Position of ``pair`` in the preference list; ``None`` is the outside option.

        Lower is better. Unlisted pairs rank below the outside option.
        """
        n = len(self.preferences)
        if pair is None:
            return n
        try:
            return self.preferences.index(pair)
        except ValueError:
            return n + 1

    def prefers(self, a: Optional[tuple[str, str]], b: Optional[tuple[str, str]]) -> bool:
        """Strict preference ``a P_i b``."""
        return self.rank(a) < self.rank(b)

    def weakly_prefers(self, a: Optional[tuple[str, str]], b: Optional[tuple[str, str]]) -> bool:
        """``a R_i b``."""
        return self.rank(a) <= self.rank(b)


@dataclass(frozen=True)
class Institution:
    id: str
    capacity: int
    reservations: Mapping[str, int] = field(default_factory=dict)
    scores: Mapping[str, Decimal] = field(default_factory=dict)

    @property
    def open_seats(self) -> int:
        return self.capacity - sum(self.reservations.values())

    def seats(self, category: str) -> int:
        if category == GC:
            return self.open_seats
        return self.reservations.get(category, 0)

    def score(self, individual: str) -> Decimal:
        return self.scores[individual]


@dataclass(frozen=True)
class HorizontalHierarchy:
    """Holder sets of each horizontal type plus the reservation counts.

    ``reservations`` maps ``(category, institution, type)`` to a count;
    missing keys mean zero.
    """

    holders: Mapping[str, frozenset[str]]
    reservations: Mapping[tuple[str, str, str], int] = field(default_factory=dict)

    @cached_property
    def types(self) -> tuple[str, ...]:
        return tuple(sorted(self.holders))

    def contains(self, outer: str, inner: str) -> bool:
        """True iff every holder of ``inner`` holds ``outer`` and the holder sets differ."""
        for h in (outer, inner):
            if h not in self.holders:
                raise KeyError(f"unknown horizontal type {h!r}")
        return self.holders[inner] < self.holders[outer]

    def nested_in(self, inner: str, outer: str) -> bool:
        """Processing order used by the sub-choice rule.

        Strict containment, with identical holder sets ordered by type id so
        the relation stays a strict partial order.
        """
        a, b = self.holders[inner], self.holders[outer]
        return a < b or (a == b and inner < outer)

    @cached_property
    def ancestors(self) -> Mapping[str, tuple[str, ...]]:
        return {
            h: tuple(g for g in self.types if g != h and self.nested_in(h, g))
            for h in self.types
        }

    @cached_property
    def parents(self) -> Mapping[str, tuple[str, ...]]:
        """Immediate containing types (one at most when the family is laminar)."""
        out = {}
        for h, anc in self.ancestors.items():
            out[h] = tuple(g for g in anc if not any(self.nested_in(k, g) for k in anc if k != g))
        return out

    @cached_property
    def children(self) -> Mapping[str, tuple[str, ...]]:
        return {h: tuple(k for k in self.types if h in self.parents[k]) for h in self.types}

    @cached_property
    def layers(self) -> tuple[tuple[str, ...], ...]:
        """Types grouped bottom-up: each layer holds the minimal types left."""
        remaining = set(self.types)
        out = []
        while remaining:
            layer = tuple(
                sorted(h for h in remaining if not any(self.nested_in(k, h) for k in remaining if k != h))
            )
            out.append(layer)
            remaining.difference_update(layer)
        return tuple(out)

    def reserves(self, category: str, institution: str) -> dict[str, int]:
        return {h: self.reservations.get((category, institution, h), 0) for h in self.types}

    def broken_pairs(self) -> list[tuple[str, str]]:
        """Pairs of types whose holder sets overlap without nesting."""
        bad = []
        for a, b in itertools.combinations(self.types, 2):
            ha, hb = self.holders[a], self.holders[b]
            if ha & hb and not (ha <= hb or hb <= ha):
                bad.append((a, b))
        return bad


def contains(outer: str, inner: str, hierarchy: HorizontalHierarchy) -> bool:
    return hierarchy.contains(outer, inner)


@dataclass(frozen=True)
class Market:
    individuals: tuple[Individual, ...]
    institutions: tuple[Institution, ...]
    horizontal_types: tuple[HorizontalType, ...] = ()
    reservations: Mapping[tuple[str, str, str], int] = field(default_factory=dict)
    categories: tuple[str, ...] = DEFAULT_RESERVED

    @cached_property
    def by_individual(self) -> dict[str, Individual]:
        return {i.id: i for i in self.individuals}

    @cached_property
    def by_institution(self) -> dict[str, Institution]:
        return {s.id: s for s in self.institutions}

    def individual(self, id: str) -> Individual:
        return self.by_individual[id]

    def institution(self, id: str) -> Institution:
        return self.by_institution[id]

    @cached_property
    def hierarchy(self) -> HorizontalHierarchy:
        holders: dict[str, set[str]] = {h.id: set() for h in self.horizontal_types}
        for ind in self.individuals:
            for h in ind.types:
                holders.setdefault(h, set()).add(ind.id)
        return HorizontalHierarchy(
            holders={h: frozenset(v) for h, v in holders.items()},
            reservations=dict(self.reservations),
        )

    @property
    def all_categories(self) -> tuple[str, ...]:
        return (GC,) + tuple(self.categories)

    def replace_individual(self, ind: Individual) -> "Market":
        return Market(
            individuals=tuple(ind if i.id == ind.id else i for i in self.individuals),
            institutions=self.institutions,
            horizontal_types=self.horizontal_types,
            reservations=self.reservations,
            categories=self.categories,
        )

    def replace_institution(self, inst: Institution) -> "Market":
        return Market(
            individuals=self.individuals,
            institutions=tuple(inst if s.id == inst.id else s for s in self.institutions),
            horizontal_types=self.horizontal_types,
            reservations=self.reservations,
            categories=self.categories,
        )


def build_contract_universe(market: Market) -> frozenset[Contract]:
    """Contracts individuals can sign and rank as acceptable.

    An undeclared reserved-category member only gets GC contracts.
    """
    out = set()
    for ind in market.individuals:
        claimable = ind.claimable
        for s, v in ind.preferences:
            if v in claimable and s in market.by_institution:
                out.add(Contract(ind.id, s, v))
    return frozenset(out)


# -- validation ---------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    kind: str
    message: str
    ids: tuple[str, ...] = ()

    def __str__(self) -> str:
        return f"{self.kind}: {self.message}"


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return bool(self.violations)

    def __iter__(self):
        return iter(self.violations)

    def __len__(self) -> int:
        return len(self.violations)

    def add(self, kind: str, message: str, *ids: str) -> None:
        self.violations.append(Violation(kind, message, tuple(ids)))


def minimal_cover_size(
    pool: Iterable[str], reserves: Mapping[str, int], hierarchy: HorizontalHierarchy
) -> int:
    """Smallest |J| with J ⊆ pool meeting every reserve "whenever possible".

    Each type needs ``min(reserve, holders in pool)`` members; with nested
    types a child's picks count toward its ancestors, so the need of a type
    is the larger of its own floor and the sum of its children's needs.
    """
    pool = set(pool)
    need: dict[str, int] = {}
    for layer in hierarchy.layers:
        for h in layer:
            own = min(reserves.get(h, 0), len(hierarchy.holders[h] & pool))
            kids = sum(need[k] for k in hierarchy.children[h])
            need[h] = max(own, kids)
    return sum(need[h] for h in hierarchy.types if not hierarchy.parents[h])


def applicability_failures(
    market: Market, category: str, institution: Institution
) -> tuple[Optional[frozenset[str]], bool]:
    """Return ``(witness, exhaustive)``.

    ``witness`` is a set of individuals for which no subset within the
    category capacity meets the reserves, or ``None`` if the reserves are
    applicable. ``exhaustive`` tells whether every subset was examined.
    """
    hier = market.hierarchy
    reserves = hier.reserves(category, institution.id)
    cap = institution.seats(category)
    ids = [i.id for i in market.individuals]
    if not any(reserves.values()):
        return None, True
    if len(ids) > EXHAUSTIVE_APPLICABILITY_LIMIT:
        full = frozenset(ids)
        if minimal_cover_size(full, reserves, hier) > cap:
            return full, False
        return None, False
    for r in range(len(ids) + 1):
        for subset in itertools.combinations(ids, r):
            if minimal_cover_size(subset, reserves, hier) > cap:
                return frozenset(subset), True
    return None, True


def validate_market(market: Market) -> ValidationReport:
    """Collect every violated model assumption; an empty report means valid."""
    report = ValidationReport()
    reserved = set(market.categories)
    if GC in reserved:
        report.add("categories", "GC must not be listed as a reserved category", GC)

    type_ids = [h.id for h in market.horizontal_types]
    for h in sorted({h for h in type_ids if type_ids.count(h) > 1}):
        report.add("duplicate type", f"horizontal type {h} defined more than once", h)
    known_types = set(type_ids)

    seen_ind: set[str] = set()
    for ind in market.individuals:
        if ind.id in seen_ind:
            report.add("duplicate individual", f"individual {ind.id} defined more than once", ind.id)
        seen_ind.add(ind.id)
    seen_inst: set[str] = set()
    for inst in market.institutions:
        if inst.id in seen_inst:
            report.add("duplicate institution", f"institution {inst.id} defined more than once", inst.id)
        seen_inst.add(inst.id)

    for ind in market.individuals:
        if ind.vertical is not None and ind.vertical not in reserved:
            report.add("category", f"{ind.id} belongs to unknown category {ind.vertical}", ind.id)
        if ind.declared is not None and ind.declared != ind.vertical:
            report.add(
                "declaration",
                f"{ind.id} declares {ind.declared} but belongs to {ind.vertical}",
                ind.id,
            )
        for h in sorted(ind.types - known_types):
            report.add("unknown type", f"{ind.id} holds undefined horizontal type {h}", ind.id, h)
        if len(set(ind.preferences)) != len(ind.preferences):
            report.add("duplicate preference", f"{ind.id} lists a pair twice", ind.id)
        for s, v in ind.preferences:
            if s not in seen_inst:
                report.add("unknown institution", f"{ind.id} ranks unknown institution {s}", ind.id, s)
            if v not in ind.claimable:
                report.add(
                    "ineligible pair",
                    f"{ind.id} ranks ({s}, {v}) but can only claim {'/'.join(ind.claimable)}",
                    ind.id,
                    s,
                )

    for inst in market.institutions:
        if inst.capacity < 0:
            report.add("capacity", f"{inst.id} has negative capacity", inst.id)
        for v, n in inst.reservations.items():
            if v not in reserved:
                report.add("category", f"{inst.id} reserves seats for unknown category {v}", inst.id)
            if n < 0:
                report.add("capacity", f"{inst.id} reserves a negative count for {v}", inst.id)
        if inst.open_seats < 0:
            report.add("capacity", f"{inst.id} reserves more seats than its capacity", inst.id)
        missing = sorted(seen_ind - set(inst.scores))
        if missing:
            report.add("missing score", f"{inst.id} has no score for {', '.join(missing)}", inst.id, *missing)
        by_score: dict[Decimal, list[str]] = {}
        for i, k in inst.scores.items():
            if k < 0:
                report.add("score", f"negative score for {i} at {inst.id}", inst.id, i)
            by_score.setdefault(k, []).append(i)
        for k, who in sorted(by_score.items()):
            if len(who) > 1:
                who = sorted(who)
                report.add("duplicate score", f"duplicate score {k} at {inst.id}: {', '.join(who)}", inst.id, *who)

    for (v, s, h), n in market.reservations.items():
        if v != GC and v not in reserved:
            report.add("reservation", f"reservation for unknown category {v}", v, s, h)
        if s not in seen_inst:
            report.add("reservation", f"reservation at unknown institution {s}", v, s, h)
        if h not in known_types:
            report.add("reservation", f"reservation for unknown type {h}", v, s, h)
        if n < 0:
            report.add("reservation", f"negative reservation ({v}, {s}, {h})", v, s, h)

    if report.violations:
        return report

    hier = market.hierarchy
    for a, b in hier.broken_pairs():
        report.add("hierarchy broken", f"types {a} and {b} overlap without nesting", a, b)
    if report.violations:
        return report

    for inst in market.institutions:
        for v in market.all_categories:
            witness, exhaustive = applicability_failures(market, v, inst)
            if witness is not None:
                report.add(
                    "not applicable",
                    f"reserves for {v} at {inst.id} cannot be met within {inst.seats(v)} seats "
                    f"for individuals {', '.join(sorted(witness))}",
                    inst.id,
                    v,
                )
            elif not exhaustive:
                report.notes.append(f"applicability of {v} at {inst.id} not exhaustively verified")
    return report
