"""JSON instance files.

Layout::

    {
      "categories": ["SC", "ST", "OBC"],            # optional, reserved categories
      "horizontal_types": [{"id": "W", "label": "women"}],
      "individuals": [
        {"id": "i", "vertical": "SC", "declared": "SC", "types": ["W"],
         "preferences": [["s", "SC"], ["s", "GC"]]}
      ],
      "institutions": [
        {"id": "s", "capacity": 2, "reservations": {"SC": 1},
         "scores": {"i": "90", "j": "80"}}
      ],
      "reservations": [
        {"category": "GC", "institution": "s", "type": "W", "count": 1}
      ]
    }

Scores are written as decimal strings so they survive a round trip exactly.
"""

from __future__ import annotations

import json
from decimal import Decimal, InvalidOperation
from pathlib import Path
from typing import Any, Union

from .model import DEFAULT_RESERVED, HorizontalType, Individual, Institution, Market


class InstanceFormatError(ValueError):
    pass


def market_to_dict(market: Market) -> dict[str, Any]:
    return {
        "categories": list(market.categories),
        "horizontal_types": [{"id": h.id, "label": h.label} for h in market.horizontal_types],
        "individuals": [
            {
                "id": i.id,
                "vertical": i.vertical,
                "declared": i.declared,
                "types": sorted(i.types),
                "preferences": [[s, v] for s, v in i.preferences],
            }
            for i in market.individuals
        ],
        "institutions": [
            {
                "id": s.id,
                "capacity": s.capacity,
                "reservations": dict(s.reservations),
                "scores": {i: str(k) for i, k in s.scores.items()},
            }
            for s in market.institutions
        ],
        "reservations": [
            {"category": v, "institution": s, "type": h, "count": n}
            for (v, s, h), n in sorted(market.reservations.items())
        ],
    }


def _score(value: Any, where: str) -> Decimal:
    if isinstance(value, bool) or not isinstance(value, (str, int, float)):
        raise InstanceFormatError(f"{where}: score must be a decimal string or number")
    try:
        out = Decimal(str(value))
    except InvalidOperation as exc:
        raise InstanceFormatError(f"{where}: bad score {value!r}") from exc
    if not out.is_finite():
        raise InstanceFormatError(f"{where}: score must be finite")
    return out


def market_from_dict(data: Any) -> Market:
    if not isinstance(data, dict):
        raise InstanceFormatError("instance must be a JSON object")
    for key in ("individuals", "institutions"):
        if not isinstance(data.get(key), list):
            raise InstanceFormatError(f"missing list {key!r}")
    try:
        types = tuple(
            HorizontalType(str(h["id"]), str(h.get("label", ""))) for h in data.get("horizontal_types", [])
        )
        individuals = tuple(
            Individual(
                id=str(i["id"]),
                vertical=i.get("vertical"),
                declared=i.get("declared"),
                types=frozenset(str(h) for h in i.get("types", [])),
                preferences=tuple((str(s), str(v)) for s, v in i.get("preferences", [])),
            )
            for i in data["individuals"]
        )
        institutions = tuple(
            Institution(
                id=str(s["id"]),
                capacity=int(s["capacity"]),
                reservations={str(v): int(n) for v, n in s.get("reservations", {}).items()},
                scores={str(i): _score(k, f"institution {s['id']}") for i, k in s.get("scores", {}).items()},
            )
            for s in data["institutions"]
        )
        reservations = {}
        for r in data.get("reservations", []):
            key = (str(r["category"]), str(r["institution"]), str(r["type"]))
            if key in reservations:
                raise InstanceFormatError(f"reservation {key} listed twice")
            reservations[key] = int(r["count"])
        categories = tuple(str(v) for v in data.get("categories", DEFAULT_RESERVED))
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        if isinstance(exc, InstanceFormatError):
            raise
        raise InstanceFormatError(f"malformed instance: {exc!r}") from exc
    return Market(individuals, institutions, types, reservations, categories)


def dumps(market: Market) -> str:
    return json.dumps(market_to_dict(market), indent=2, sort_keys=True) + "\n"


def loads(text: str) -> Market:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"not valid JSON: {exc}") from exc
    return market_from_dict(data)


def read_market(path: Union[str, Path]) -> Market:
    return loads(Path(path).read_text(encoding="utf-8"))


def write_market(market: Market, path: Union[str, Path]) -> None:
    Path(path).write_text(dumps(market), encoding="utf-8")


def break_ties(market: Market) -> Market:
    """Make scores strict by lifting tied individuals in id order.

    Within a group of equal scores the smallest id ends up highest. Lifts
    stay below the gap to the next distinct score, so no existing strict
    comparison flips.
    """
    institutions = []
    for inst in market.institutions:
        groups: dict[Decimal, list[str]] = {}
        for i, k in inst.scores.items():
            groups.setdefault(k, []).append(i)
        if all(len(g) == 1 for g in groups.values()):
            institutions.append(inst)
            continue
        distinct = sorted(groups)
        gaps = [b - a for a, b in zip(distinct, distinct[1:])]
        eps = (min(gaps) if gaps else Decimal(1)) / (max(len(g) for g in groups.values()) + 1)
        scores = {}
        for k, who in groups.items():
            for pos, i in enumerate(sorted(who)):
                scores[i] = k + (len(who) - 1 - pos) * eps
        institutions.append(Institution(inst.id, inst.capacity, dict(inst.reservations), scores))
    return Market(
        market.individuals, tuple(institutions), market.horizontal_types, market.reservations, market.categories
    )
