import random
from decimal import Decimal

from resmatch.choiceprops import (
    DISJOINT_PAIR,
    NESTED_PAIR,
    ProbeCase,
    choice_table,
    exhaustive_cases,
    lemma_failures,
    oracle_mismatch,
    probe_failures,
    quota_monotonicity_failures,
    random_probe,
    rejected_irrelevance_failures,
    size_monotonicity_failures,
    substitutability_failures,
)
from resmatch.model import HorizontalHierarchy


def test_small_exhaustive_sweep_is_clean():
    cases = list(exhaustive_cases(3))
    assert len(cases) > 100
    assert all(not lemma_failures(c) for c in cases)


def test_oracle_sweep_on_tiny_pairs():
    for fam in (NESTED_PAIR, DISJOINT_PAIR):
        assert all(oracle_mismatch(c) is None for c in exhaustive_cases(3, fam, 2, 2))


def test_random_probes_are_clean_and_reproducible():
    a = [random_probe(random.Random(5))[1:] for _ in range(3)]
    b = [random_probe(random.Random(5))[1:] for _ in range(3)]
    assert a == b
    rng = random.Random(1)
    for _ in range(500):
        assert probe_failures(*random_probe(rng)) == []


def test_checks_flag_a_complementary_rule():
    # Chooses b only when a is also offered: not substitutable, not size monotone.
    table = {
        frozenset(): frozenset(),
        frozenset("a"): frozenset("a"),
        frozenset("b"): frozenset(),
        frozenset("ab"): frozenset("ab"),
    }
    assert substitutability_failures(table)
    assert rejected_irrelevance_failures(
        {frozenset("ab"): frozenset("a"), frozenset("a"): frozenset(), frozenset(): frozenset()}
    )
    assert size_monotonicity_failures({frozenset("a"): frozenset("a"), frozenset("ab"): frozenset()})
    assert quota_monotonicity_failures({frozenset("ab"): frozenset("a")}, {frozenset("ab"): frozenset("b")})


def test_choice_table_covers_all_subsets():
    case = ProbeCase(("a", "b"), {"a": Decimal(2), "b": Decimal(1)}, HorizontalHierarchy({}), {}, 1)
    table = choice_table(case)
    assert len(table) == 4 and table[frozenset("ab")] == frozenset("a")
    assert "capacity=1" in case.describe()
