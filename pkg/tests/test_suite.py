import json
import random

import pytest

from resmatch.choice import ChoicePolicy
from resmatch.generate import random_market
from resmatch.mutants import MUTANTS
from resmatch.suite import CHECKS, AuditConfig, random_improvement, run_audit


def small(**kw):
    base = dict(markets=25, lemma_probes=200, grid_bound=(2, 2, 2, 2))
    base.update(kw)
    return AuditConfig(**base)


def test_small_audit_passes():
    report = run_audit(small())
    assert report.ok, "\n".join(report.lines())
    assert set(report.results) == {n for n, _ in CHECKS}
    assert report.results["stability"].passed == 75
    assert report.lines()[-1].startswith("all checks passed")


def test_audit_is_deterministic():
    a = run_audit(small(markets=10, lemma_probes=50)).to_dict()
    b = run_audit(small(markets=10, lemma_probes=50)).to_dict()
    a.pop("elapsed_seconds"), b.pop("elapsed_seconds")
    assert a == b


def test_report_records_seed_and_generator():
    d = run_audit(small(markets=3, lemma_probes=0)).to_dict()
    json.dumps(d)
    assert d["config"]["seed"] == 0 and "category_weights" in d["config"]["generator"]
    assert d["config"]["block_search"] == "auto"


@pytest.mark.parametrize("mutant", sorted(MUTANTS))
def test_every_mutant_is_caught(mutant):
    report = run_audit(small(markets=60, lemma_probes=0, mutant=mutant))
    assert not report.ok
    failing = report.failing
    first = report.results[failing[0]]
    assert first.dumps and first.dumps[0]["detail"]


def test_unfair_mutant_fails_choice_fairness_with_witness():
    report = run_audit(small(markets=30, lemma_probes=0, mutant="lowest-merit"))
    fair = report.results["choice-fairness"]
    assert fair.failed and "rejected at" in fair.dumps[0]["detail"]
    assert "market" in fair.dumps[0]


def test_unknown_mutant():
    with pytest.raises(ValueError):
        AuditConfig(mutant="nope").rules()


def test_explicit_markets(prop1):
    report = run_audit(small(lemma_probes=0), markets=[("prop1", prop1)])
    assert report.ok
    assert report.results["matching-fairness"].passed == 3


def test_random_improvements_are_valid():
    rng = random.Random(3)
    for seed in range(30):
        market = random_market(seed, 4, 2)
        imp = random_improvement(market, rng)
        imp.validate(market)


def test_forced_exhaustive_block_search():
    report = run_audit(small(markets=5, lemma_probes=0, exhaustive_blocks=True, policies=(ChoicePolicy.TRANSFER_GC,)))
    assert report.ok and report.to_dict()["config"]["block_search"] == "exhaustive"
