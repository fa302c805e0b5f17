import math

import pytest

from revmax.datagen import SynthConfig, generate, parse_capacity_dist
from revmax.model import fingerprint

SMALL = SynthConfig(num_users=6, num_items=30, items_per_user=8, num_classes=7, horizon=4, seed=3)


def test_deterministic():
    assert fingerprint(generate(SMALL)) == fingerprint(generate(SMALL))
    other = SynthConfig(**{**SMALL.__dict__, "seed": 4})
    assert fingerprint(generate(other)) != fingerprint(generate(SMALL))


def test_users_are_independent_streams():
    small = generate(SMALL)
    more = generate(SynthConfig(**{**SMALL.__dict__, "num_users": 9}))
    for pair, row in small.adoption.items():
        assert more.adoption[pair] == row


def test_shape_and_ranges():
    inst = generate(SMALL)
    assert inst.num_positive() == 6 * 8 * 4
    assert inst.display_k == 5 and inst.horizon == 4
    per_user = {}
    for (u, i), row in inst.adoption.items():
        per_user[u] = per_user.get(u, 0) + 1
        assert len(row) == 4
        assert all(0.0 < q <= 1.0 for _, q in row)
    assert set(per_user.values()) == {8}
    for it in inst.items:
        assert it.class_id == it.item_id % 7
        assert 0.0 <= it.saturation <= 1.0
        assert it.capacity >= 1
        # every price lies in [x, 2x] for the item's base x in [10, 500]
        lo, hi = min(it.prices), max(it.prices)
        assert 10.0 <= lo and hi <= 1000.0
        assert hi <= 2.0 * lo


def test_cheaper_times_get_higher_probability():
    inst = generate(SMALL)
    for (u, i), row in inst.adoption.items():
        ranked = sorted(row, key=lambda tq: (inst.price[i][tq[0]], tq[0]))
        qs = [q for _, q in ranked]
        assert qs == sorted(qs, reverse=True)


def test_fixed_saturation_and_capacity_distribution():
    cfg = SynthConfig(**{**SMALL.__dict__, "saturation": 0.25, "capacity_dist": "exponential:0.01"})
    inst = generate(cfg)
    assert set(inst.beta) == {0.25}
    assert all(c >= 1 for c in inst.capacity)


def test_default_noise_level():
    assert SynthConfig().adoption_sigma == pytest.approx(math.sqrt(0.1))


@pytest.mark.parametrize(
    "spec, parsed",
    [("gaussian:5000,300", ("gaussian", (5000.0, 300.0))), ("exponential:0.5", ("exponential", (0.5,)))],
)
def test_parse_capacity(spec, parsed):
    assert parse_capacity_dist(spec) == parsed


@pytest.mark.parametrize("spec", ["gaussian:1", "exponential:0", "poisson:3", "gaussian:a,b", "gaussian:1,-1"])
def test_parse_capacity_rejects(spec):
    with pytest.raises(ValueError):
        parse_capacity_dist(spec)


@pytest.mark.parametrize(
    "change",
    [
        {"num_users": 0},
        {"items_per_user": 31},
        {"num_classes": 0},
        {"price_base_range": (5.0, 5.0)},
        {"adoption_sigma": 0.0},
        {"saturation": 1.5},
        {"capacity_dist": "bogus"},
    ],
)
def test_config_validation(change):
    with pytest.raises(ValueError):
        generate(SynthConfig(**{**SMALL.__dict__, **change}))
