import json

import numpy as np
import pytest

from _gen import random_instance
from revmax.model import (
    InstanceParseError,
    InstanceValidationError,
    ItemSpec,
    Strategy,
    Triple,
    build_instance,
    fingerprint,
    instance_from_text,
    instance_to_text,
    load_instance,
    repeat_histogram,
    save_instance,
    validate_strategy,
)


def _items(n=2, T=2, cap=1, beta=0.5):
    return [ItemSpec(i, i, cap, beta, tuple(1.0 + t for t in range(T))) for i in range(n)]


def test_times_are_one_based(two_step):
    assert two_step.price[0][1] == 1.0
    assert two_step.price[0][2] == 0.95
    assert two_step.q(0, 0, 2) == 0.6
    assert two_step.q(5, 0, 1) == 0.0


def test_positive_triples_sorted():
    rng = np.random.default_rng(1)
    inst = random_instance(rng, 3, 3, 3)
    trips = inst.positive_triples()
    assert trips == sorted(trips)
    assert len(trips) == inst.num_positive()


@pytest.mark.parametrize("seed", range(5))
def test_text_roundtrip(seed, tmp_path):
    inst = random_instance(np.random.default_rng(seed))
    text = instance_to_text(inst)
    back = instance_from_text(text)
    assert instance_to_text(back) == text
    assert fingerprint(back) == fingerprint(inst)
    path = tmp_path / "inst.json"
    save_instance(inst, path)
    assert fingerprint(load_instance(path)) == fingerprint(inst)


def test_text_is_json():
    doc = json.loads(instance_to_text(build_instance(1, _items(), 2, 1, [(0, 1, 2, 0.25)])))
    assert doc["adoption"] == [{"user": 0, "item": 1, "time": 2, "prob": 0.25}]
    assert doc["items"][0]["prices"] == [1.0, 2.0]


def test_fingerprint_sensitive_to_probability():
    a = build_instance(1, _items(), 2, 1, [(0, 0, 1, 0.5)])
    b = build_instance(1, _items(), 2, 1, [(0, 0, 1, 0.5000001)])
    assert fingerprint(a) != fingerprint(b)


@pytest.mark.parametrize(
    "text",
    ["not json", "[]", '{"num_users": 1}', '{"num_users":1,"horizon":1,"display_k":1,"items":[{"id":0}],"adoption":[]}'],
)
def test_parse_errors(text):
    with pytest.raises(InstanceParseError):
        instance_from_text(text)


def test_duplicate_key_rejected():
    with pytest.raises(InstanceParseError, match="duplicate"):
        build_instance(1, _items(), 2, 1, [(0, 0, 1, 0.5), (0, 0, 1, 0.4)])


@pytest.mark.parametrize(
    "entries, horizon, k, match",
    [
        ([(0, 0, 3, 0.5)], 2, 1, "time outside"),
        ([(0, 0, 1, 1.5)], 2, 1, "outside"),
        ([(0, 0, 1, 0.0)], 2, 1, "outside"),
        ([(1, 0, 1, 0.5)], 2, 1, "user 1"),
        ([(0, 7, 1, 0.5)], 2, 1, "item 7"),
        ([], 2, 0, "display_k"),
    ],
)
def test_validation_errors(entries, horizon, k, match):
    with pytest.raises(InstanceValidationError, match=match):
        build_instance(1, _items(T=horizon), horizon, k, entries)


def test_item_field_validation():
    with pytest.raises(InstanceValidationError, match="saturation"):
        build_instance(1, [ItemSpec(0, 0, 1, 1.5, (1.0,))], 1, 1, [])
    with pytest.raises(InstanceValidationError, match="prices"):
        build_instance(1, [ItemSpec(0, 0, 1, 0.5, (1.0,))], 2, 1, [])
    with pytest.raises(InstanceValidationError, match="ids"):
        build_instance(1, [ItemSpec(1, 0, 1, 0.5, (1.0,))], 1, 1, [])


def test_with_saturation_keeps_everything_else(two_step):
    flat = two_step.with_saturation(1.0)
    assert flat.beta == (1.0,)
    assert flat.q_table == two_step.q_table
    assert flat.price == two_step.price


def test_strategy_constraints():
    inst = build_instance(2, _items(n=2, T=2, cap=1), 2, 1, [(u, i, t, 0.5) for u in (0, 1) for i in (0, 1) for t in (1, 2)])
    s = Strategy(inst)
    s.add(Triple(0, 0, 1))
    assert not s.can_add(Triple(0, 1, 1))  # slot (0, 1) full
    assert s.can_add(Triple(0, 0, 2))  # repeating an item uses no extra capacity
    assert not s.can_add(Triple(1, 0, 2))  # item 0 already has its one user
    assert s.can_add(Triple(1, 1, 2))
    with pytest.raises(ValueError):
        s.add(Triple(0, 0, 1))
    with pytest.raises(KeyError):
        s.remove(Triple(1, 1, 1))


def test_validate_strategy_reports_violations():
    inst = build_instance(2, _items(n=2, T=2, cap=1), 2, 1, [])
    rep = validate_strategy(inst, [(0, 0, 1), (0, 1, 1), (1, 0, 2)])
    assert rep.display_violations == [(0, 1)]
    assert rep.capacity_violations == [0]
    assert not rep.valid
    assert validate_strategy(inst, [(0, 0, 1), (0, 0, 2)]).valid


@pytest.mark.parametrize("seed", range(10))
def test_strategy_indexes_survive_add_remove(seed):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, 3, 4, 4)
    ground = [Triple(u, i, t) for u in range(inst.num_users) for i in range(inst.num_items) for t in range(1, 5) if t <= inst.horizon]
    s = Strategy(inst)
    for _ in range(60):
        z = ground[int(rng.integers(len(ground)))]
        if z in s:
            s.remove(z)
        else:
            s.add(z)
        assert s.check_indexes()
    c = s.copy()
    if len(s):
        c.remove(next(iter(s)))
        assert len(c) == len(s) - 1 and s.check_indexes()


def test_strategy_group_sorted_by_time():
    items = [ItemSpec(0, 0, 1, 0.5, (1.0,) * 3), ItemSpec(1, 0, 1, 0.5, (1.0,) * 3)]
    inst = build_instance(1, items, 3, 2, [])
    s = Strategy(inst, [(0, 1, 3), (0, 0, 1), (0, 1, 1)])
    assert s.group(0, 0) == [(1, 0), (1, 1), (3, 1)]


def test_repeat_histogram():
    assert repeat_histogram([(0, 0, 1), (0, 0, 2), (0, 1, 1), (1, 0, 3)]) == {1: 2, 2: 1}
    assert repeat_histogram([]) == {}
