import itertools
from decimal import Decimal

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from resmatch.choice import ChoicePolicy, ChoiceRule
from resmatch.cop import Matching, cumulative_offer, default_order, outcomes, run
from resmatch.generate import random_market
from resmatch.model import GC, Contract, Individual, Institution, Market, build_contract_universe


def test_prop1_hand_trace(prop1_cop_market):
    matching, trace = cumulative_offer(prop1_cop_market, ChoicePolicy.NO_TRANSFER, ("i", "j"))
    assert matching.contracts == {Contract("i", "s", "SC"), Contract("j", "s", GC)}
    assert [(st.proposer, st.proposed) for st in trace.steps] == [
        ("i", Contract("i", "s", "SC")),
        ("j", Contract("j", "s", "SC")),
        ("j", Contract("j", "s", GC)),
    ]
    assert trace.steps[1].rejected == {Contract("j", "s", "SC")}
    assert trace.steps[0].rejected == frozenset()
    assert not trace.invariant_errors(ChoiceRule(prop1_cop_market, ChoicePolicy.NO_TRANSFER))


def test_unique_choices_with_ample_capacity():
    people = tuple(Individual(f"i{k}", preferences=((f"s{k}", GC),)) for k in range(3))
    insts = tuple(Institution(f"s{k}", 2, {}, {p.id: Decimal(n) for n, p in enumerate(people)}) for k in range(3))
    m = run(Market(people, insts), ChoicePolicy.NO_TRANSFER)
    assert outcomes(m, ["i0", "i1", "i2"]) == {f"i{k}": (f"s{k}", GC) for k in range(3)}


def test_empty_preferences_stay_unmatched():
    m = Market((Individual("i"),), (Institution("s", 1, {}, {"i": Decimal(1)}),))
    matching, trace = cumulative_offer(m, ChoicePolicy.NO_TRANSFER)
    assert matching.of("i") is None and len(trace) == 0


def test_empty_market():
    m = Market((), ())
    assert run(m, ChoicePolicy.TRANSFER_GC).contracts == frozenset()
    assert default_order(m) == ()


def test_default_order_sorts_ids():
    m = Market(tuple(Individual(x) for x in "bac"), ())
    assert default_order(m) == ("a", "b", "c")
    assert default_order(Market((Individual("z"),), ())) == ("z",)


def test_order_must_cover_everyone(prop1_cop_market):
    with pytest.raises(ValueError):
        cumulative_offer(prop1_cop_market, ChoicePolicy.NO_TRANSFER, ("i",))


def test_each_contract_is_proposed_once(prop1_cop_market):
    _, trace = cumulative_offer(prop1_cop_market, ChoicePolicy.TRANSFER_MERIT)
    assert len(trace) <= len(build_contract_universe(prop1_cop_market))


def test_matching_helpers(prop1):
    m = Matching(frozenset({Contract("i", "s", GC), Contract("i", "s", "SC")}))
    assert m.feasibility_errors(prop1) and not m.is_feasible(prop1)
    assert len(m) == 2 and Contract("i", "s", GC) in m
    assert m.at("s") == m.contracts


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from(list(ChoicePolicy)))
def test_trace_invariants_and_feasibility(seed, policy):
    market = random_market(seed, 6, 3)
    rule = ChoiceRule(market, policy)
    matching, trace = cumulative_offer(market, rule)
    assert matching.is_feasible(market)
    assert not trace.invariant_errors(rule)
    proposed = [st.proposed for st in trace.steps]
    assert len(proposed) == len(set(proposed))
    final = trace.steps[-1].held if trace.steps else {}
    assert matching.contracts == frozenset(itertools.chain.from_iterable(final.values()))


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from(list(ChoicePolicy)))
def test_every_order_gives_the_same_matching(seed, policy):
    market = random_market(seed, 5, 2)
    rule = ChoiceRule(market, policy)
    results = {cumulative_offer(market, rule, o)[0].contracts for o in itertools.permutations(default_order(market))}
    assert len(results) == 1


def test_trace_serialises(prop1_cop_market):
    _, trace = cumulative_offer(prop1_cop_market, ChoicePolicy.NO_TRANSFER)
    d = trace.to_dict()
    assert d["order"] == ["i", "j"]
    assert d["steps"][1]["rejected"] == [["j", "s", "SC"]]
