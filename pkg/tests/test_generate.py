import pytest

from resmatch.generate import GeneratorParams, random_market, random_markets
from resmatch.instance import dumps
from resmatch.model import validate_market


def test_same_seed_same_market():
    assert dumps(random_market(42)) == dumps(random_market(42))
    assert dumps(random_market(42)) != dumps(random_market(43))


def test_generated_markets_validate():
    for seed in range(100):
        market = random_market(seed, 5, 2)
        assert validate_market(market).ok
        assert len(market.individuals) == 5 and len(market.institutions) == 2


@pytest.mark.parametrize("n, m", [(-1, 1), (13, 1), (3, 0), (3, 7)])
def test_size_bounds(n, m):
    with pytest.raises(ValueError):
        random_market(0, n, m)


def test_score_range_must_fit():
    with pytest.raises(ValueError):
        random_market(0, 5, 1, GeneratorParams(score_range=(1, 3)))


def test_batches_are_reproducible():
    a = [(s, dumps(m)) for s, m in random_markets(7, 20)]
    b = [(s, dumps(m)) for s, m in random_markets(7, 20)]
    assert a == b
    assert all(len(m.individuals) <= 6 and len(m.institutions) <= 3 for _, m in random_markets(7, 50))


def test_params_are_recordable():
    d = GeneratorParams().to_dict()
    assert d["category_weights"]["GC"] == 0.4 and d["max_preferences"] == 4
