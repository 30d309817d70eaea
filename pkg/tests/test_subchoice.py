import itertools
from decimal import Decimal

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from resmatch.model import GC, Contract, HorizontalHierarchy, minimal_cover_size
from resmatch.subchoice import (
    Domination,
    OracleError,
    SubChoiceInput,
    c_hier,
    merit_compare,
    oracle_undominated,
    satisfies_horizontal,
    select_hier,
)


def make_input(people, capacity, reserves=None, holders=None):
    """``people`` is a list of (id, score)."""
    contracts = frozenset(Contract(i, "s", GC) for i, _ in people)
    return SubChoiceInput(
        contracts,
        capacity,
        reserves or {},
        {i: Decimal(k) for i, k in people},
        HorizontalHierarchy({h: frozenset(v) for h, v in (holders or {}).items()}),
    )


def ids(contracts):
    return {c.individual for c in contracts}


# -- merit comparison ----------------------------------------------------------

RANKED = {"i1": Decimal(4), "i2": Decimal(3), "i3": Decimal(2), "i4": Decimal(1)}


@pytest.mark.parametrize(
    "a, b, expected",
    [
        ({"i1", "i4"}, {"i2", "i3"}, Domination.INCOMPARABLE),
        ({"i1", "i2"}, {"i1", "i2"}, Domination.EQUAL),
        ({"i1", "i3"}, {"i2", "i3"}, Domination.FIRST),
        ({"i2", "i3"}, {"i1", "i3"}, Domination.SECOND),
    ],
)
def test_merit_compare_examples(a, b, expected):
    assert merit_compare(a, b, RANKED) is expected


def test_merit_compare_size_mismatch():
    with pytest.raises(ValueError):
        merit_compare({"i1"}, {"i1", "i2"}, RANKED)


def _bijection_dominates(a, b, scores):
    """Some bijection g: a -> b with score(x) >= score(g(x)) for every x."""
    a, b = list(a), list(b)
    return any(all(scores[x] >= scores[y] for x, y in zip(a, perm)) for perm in itertools.permutations(b))


def _brute_compare(a, b, scores):
    ab, ba = _bijection_dominates(a, b, scores), _bijection_dominates(b, a, scores)
    if ab and ba:
        return Domination.EQUAL
    if ab:
        return Domination.FIRST
    if ba:
        return Domination.SECOND
    return Domination.INCOMPARABLE


@given(st.data())
def test_sorted_vectors_agree_with_bijection_search(data):
    n = data.draw(st.integers(0, 8))
    people = [f"p{k}" for k in range(n)]
    scores = {p: Decimal(data.draw(st.integers(0, 5))) for p in people}
    size = data.draw(st.integers(0, min(4, n // 2))) if n else 0
    a = data.draw(st.lists(st.sampled_from(people), min_size=size, max_size=size, unique=True)) if size else []
    rest = [p for p in people if p not in a] + a
    b = data.draw(st.lists(st.sampled_from(rest), min_size=size, max_size=size, unique=True)) if size else []
    assert merit_compare(a, b, scores) is _brute_compare(a, b, scores)


# -- the hierarchical rule -------------------------------------------------------


def test_pure_merit_without_types():
    inp = make_input([("a", 90), ("b", 80), ("c", 70)], 2)
    assert ids(c_hier(inp)) == {"a", "b"}


def test_single_reserve_already_met_by_merit():
    inp = make_input([("a", 90), ("w1", 80), ("w2", 70)], 2, {"W": 1}, {"W": {"w1", "w2"}})
    assert ids(c_hier(inp)) == {"a", "w1"}
    assert ids(oracle_undominated(inp)) == {"a", "w1"}


def test_nested_reserves():
    inp = make_input(
        [("w", 90), ("wd", 80), ("n", 70)], 2, {"W": 1, "WD": 1}, {"W": {"w", "wd"}, "WD": {"wd"}}
    )
    assert ids(c_hier(inp)) == {"w", "wd"}
    assert c_hier(inp) == oracle_undominated(inp)


def test_reserve_pulls_in_lower_scorer():
    inp = make_input([("a", 90), ("b", 80), ("w", 10)], 2, {"W": 1}, {"W": {"w"}})
    assert ids(c_hier(inp)) == {"a", "w"}


def test_reserve_larger_than_holders_takes_all_holders():
    inp = make_input([("a", 90), ("b", 80), ("w", 10)], 2, {"W": 2}, {"W": {"w"}})
    assert ids(c_hier(inp)) == {"a", "w"}


def test_capacity_zero_and_empty():
    assert c_hier(make_input([("a", 1)], 0)) == frozenset()
    assert oracle_undominated(make_input([("a", 1)], 0)) == frozenset()
    assert oracle_undominated(make_input([], 3)) == frozenset()


def test_input_invariants():
    with pytest.raises(ValueError):
        make_input([("a", 1)], -1)
    with pytest.raises(ValueError):
        SubChoiceInput(
            frozenset({Contract("a", "s", GC), Contract("a", "s", "SC")}), 1, {}, {"a": Decimal(1)},
            HorizontalHierarchy({}),
        )
    with pytest.raises(ValueError):
        SubChoiceInput(
            frozenset({Contract("a", "s", GC), Contract("b", "t", GC)}), 1, {},
            {"a": Decimal(1), "b": Decimal(2)}, HorizontalHierarchy({}),
        )


def test_satisfies_horizontal_examples():
    inp = make_input([("w1", 9), ("w2", 8), ("m", 7)], 2, {"W": 2}, {"W": {"w1", "w2"}})
    chosen = frozenset({Contract("w1", "s", GC), Contract("m", "s", GC)})
    assert not satisfies_horizontal(chosen, inp)
    single = make_input([("w1", 9), ("m", 7)], 2, {"W": 2}, {"W": {"w1"}})
    assert satisfies_horizontal(frozenset({Contract("w1", "s", GC)}), single)
    zero = make_input([("w1", 9), ("m", 7)], 1, {"W": 0}, {"W": {"w1"}})
    assert satisfies_horizontal(frozenset({Contract("m", "s", GC)}), zero)


def test_oracle_bound():
    people = [(f"p{k}", k) for k in range(21)]
    with pytest.raises(OracleError):
        oracle_undominated(make_input(people, 2))


# -- properties over random applicable inputs -----------------------------------

PATTERNS = [(), ("W",), ("W", "WD"), ("MD",)]


@st.composite
def applicable_inputs(draw, max_people=7):
    n = draw(st.integers(0, max_people))
    people = [f"p{k}" for k in range(n)]
    raw = draw(st.lists(st.integers(0, 10_000), min_size=n, max_size=n, unique=True))
    pats = draw(st.lists(st.sampled_from(PATTERNS), min_size=n, max_size=n))
    holders = {h: {p for p, pat in zip(people, pats) if h in pat} for h in ("W", "WD", "MD")}
    cap = draw(st.integers(0, 4))
    reserves = {h: draw(st.integers(0, 3)) for h in ("W", "WD", "MD")}
    inp = make_input(list(zip(people, raw)), cap, reserves, holders)
    assume(minimal_cover_size(people, reserves, inp.hierarchy) <= cap)
    return inp


@settings(max_examples=300)
@given(applicable_inputs())
def test_rule_equals_oracle(inp):
    assert c_hier(inp) == oracle_undominated(inp)


@settings(max_examples=300)
@given(applicable_inputs())
def test_acceptance_reserves_and_fairness(inp):
    chosen = c_hier(inp)
    assert chosen <= inp.contracts
    assert len(chosen) == min(len(inp.contracts), inp.capacity)
    assert satisfies_horizontal(chosen, inp)
    types = {i: {h for h, who in inp.hierarchy.holders.items() if i in who} for i in ids(inp.contracts)}
    for x in inp.contracts - chosen:
        for y in chosen:
            if inp.scores[x.individual] > inp.scores[y.individual]:
                assert not types[x.individual] >= types[y.individual]


@settings(max_examples=200)
@given(applicable_inputs(), st.randoms(use_true_random=False))
def test_sibling_order_is_irrelevant(inp, rnd):
    ranked = sorted(ids(inp.contracts), key=lambda i: inp.scores[i], reverse=True)
    base = select_hier(ranked, inp.capacity, inp.reserves, inp.hierarchy)

    class Shuffled(HorizontalHierarchy):
        @property
        def layers(self):
            return tuple(tuple(rnd.sample(layer, len(layer))) for layer in super().layers)

    shuffled = Shuffled(inp.hierarchy.holders)
    assert set(select_hier(ranked, inp.capacity, inp.reserves, shuffled)) == set(base)


@settings(max_examples=200)
@given(applicable_inputs(max_people=6))
def test_rejected_contracts_are_irrelevant(inp):
    chosen = c_hier(inp)
    for z in inp.contracts - chosen:
        smaller = SubChoiceInput(inp.contracts - {z}, inp.capacity, inp.reserves, inp.scores, inp.hierarchy)
        assert c_hier(smaller) == chosen
