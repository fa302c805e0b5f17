import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _gen import all_triples, random_instance, random_nested_sets
from conftest import same_class_instance
from revmax.model import ItemSpec, Strategy, Triple, build_instance
from revmax.revenue import (
    RevenueEvaluator,
    dynamic_adoption_prob,
    dynamic_probs,
    marginal_revenue,
    memory,
    revenue,
)


def oracle_revenue(inst, triples):
    """Direct transcription of the model over a plain list, no indexes."""
    triples = list(triples)
    total = 0.0
    for u, i, t in triples:
        c = inst.items[i].class_id
        mem = 0.0
        prod = 1.0
        for v, j, t2 in triples:
            if v != u or inst.items[j].class_id != c:
                continue
            if t2 < t:
                mem += 1.0 / (t - t2)
                prod *= 1.0 - inst.q(u, j, t2)
            elif t2 == t and j != i:
                prod *= 1.0 - inst.q(u, j, t2)
        total += inst.items[i].prices[t - 1] * inst.q(u, i, t) * inst.items[i].saturation ** mem * prod
    return total


def test_memory_weights_by_recency():
    inst = same_class_instance(0.5, 0.5)
    s = Strategy(inst, [(0, 0, 1), (0, 1, 2), (0, 0, 3)])
    assert memory(s, 0, 0, 3) == pytest.approx(1.0 / 2 + 1.0)
    assert memory(s, 0, 1, 2) == pytest.approx(1.0)
    assert memory(s, 0, 0, 1) == 0.0


def test_two_step_values(two_step):
    # repeating: 1*0.5 + 0.95*0.6*0.1*(1-0.5)
    assert revenue(two_step, [(0, 0, 1), (0, 0, 2)]) == pytest.approx(0.5285, abs=1e-12)
    assert revenue(two_step, [(0, 0, 2)]) == pytest.approx(0.57, abs=1e-12)
    assert revenue(two_step, []) == 0.0


def test_same_time_competitors_discount_each_other():
    inst = same_class_instance(0.4, 1.0)
    s = Strategy(inst, [(0, 0, 1), (0, 1, 1)])
    assert dynamic_adoption_prob(s, (0, 0, 1)) == pytest.approx(0.4 * 0.6)
    assert dynamic_adoption_prob(s, (0, 1, 2)) == 0.0


def test_full_saturation_keeps_first_showing():
    inst = same_class_instance(0.4, 0.0)
    s = Strategy(inst, [(0, 0, 1), (0, 0, 2)])
    probs = dynamic_probs(inst, s)
    assert probs[Triple(0, 0, 1)] == pytest.approx(0.4)
    assert probs[Triple(0, 0, 2)] == 0.0


def test_other_classes_and_users_are_independent():
    items = [ItemSpec(0, 0, 2, 0.3, (2.0, 2.0)), ItemSpec(1, 1, 2, 0.3, (3.0, 3.0))]
    inst = build_instance(2, items, 2, 2, [(u, i, t, 0.5) for u in (0, 1) for i in (0, 1) for t in (1, 2)])
    s = [(0, 0, 1), (0, 1, 1), (1, 0, 1)]
    assert revenue(inst, s) == pytest.approx(2.0 * 0.5 + 3.0 * 0.5 + 2.0 * 0.5)


@pytest.mark.parametrize("seed", range(40))
def test_revenue_matches_oracle(seed):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, 3, 4, 4)
    ground = all_triples(inst)
    sub = [z for z in ground if rng.uniform() < 0.4]
    assert revenue(inst, sub) == pytest.approx(oracle_revenue(inst, sub), abs=1e-12)


@pytest.mark.parametrize("seed", range(30))
def test_evaluator_tracks_commits_and_removals(seed):
    rng = np.random.default_rng(100 + seed)
    inst = random_instance(rng, 3, 3, 4)
    ev = RevenueEvaluator(inst)
    ground = all_triples(inst)
    for _ in range(25):
        z = ground[int(rng.integers(len(ground)))]
        if z in ev.strategy:
            ev.remove(z)
        else:
            predicted = ev.marginal_revenue(z)
            assert ev.commit(z) == pytest.approx(predicted, abs=1e-12)
        assert ev.total_revenue == pytest.approx(revenue(inst, ev.strategy), abs=1e-12)
        assert ev.cached_q == pytest.approx(dynamic_probs(inst, ev.strategy), abs=1e-15)


def test_evaluator_copy_is_independent(two_step):
    ev = RevenueEvaluator(two_step)
    ev.commit((0, 0, 1))
    dup = ev.copy()
    dup.commit((0, 0, 2))
    assert len(ev.strategy) == 1 and len(dup.strategy) == 2
    assert ev.total_revenue == pytest.approx(0.5)


def test_marginal_of_member_rejected(two_step):
    ev = RevenueEvaluator(two_step, Strategy(two_step, [(0, 0, 1)]))
    with pytest.raises(ValueError):
        marginal_revenue(ev, (0, 0, 1))
    with pytest.raises(ValueError):
        ev.commit((0, 0, 1))


def test_submodularity_counterexample():
    # a cheap slot at t=2 shields the expensive t=3 showing from the loss the
    # t=1 showing would otherwise inflict, so the gain grows with the set
    inst = build_instance(1, [ItemSpec(0, 0, 1, 0.5, (1.0, 0.01, 1.0))], 3, 1, [(0, 0, t, 0.5) for t in (1, 2, 3)])
    small = RevenueEvaluator(inst, Strategy(inst, [(0, 0, 3)]))
    big = RevenueEvaluator(inst, Strategy(inst, [(0, 0, 2), (0, 0, 3)]))
    z = (0, 0, 1)
    assert small.marginal_revenue(z) == pytest.approx(0.1768, abs=1e-4)
    assert big.marginal_revenue(z) == pytest.approx(0.4154, abs=1e-4)
    assert small.marginal_revenue(z) < big.marginal_revenue(z)


@pytest.mark.parametrize("seed", range(50))
def test_dynamic_probability_monotone_in_set(seed):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, 2, 3, 4)
    small, big, z = random_nested_sets(rng, inst)
    s_small = Strategy(inst, small + [z])
    s_big = Strategy(inst, big + [z])
    assert dynamic_adoption_prob(s_big, z) <= dynamic_adoption_prob(s_small, z) + 1e-15


@settings(max_examples=60, deadline=None)
@given(
    q=st.lists(st.floats(0.01, 1.0), min_size=3, max_size=3),
    beta=st.floats(0.0, 1.0),
    mask=st.lists(st.booleans(), min_size=3, max_size=3),
)
def test_single_item_closed_form(q, beta, mask):
    inst = build_instance(1, [ItemSpec(0, 0, 1, beta, (1.0, 2.0, 3.0))], 3, 1, [(0, 0, t, q[t - 1]) for t in (1, 2, 3)])
    times = [t for t, m in zip((1, 2, 3), mask) if m]
    expected = 0.0
    for t in times:
        earlier = [t2 for t2 in times if t2 < t]
        mem = sum(1.0 / (t - t2) for t2 in earlier)
        expected += t * q[t - 1] * beta**mem * math.prod(1.0 - q[t2 - 1] for t2 in earlier)
    assert revenue(inst, [(0, 0, t) for t in times]) == pytest.approx(expected, abs=1e-12)


def test_exhaustive_marginals_tiny():
    inst = same_class_instance(0.3, 0.7)
    ground = all_triples(inst)
    for r in range(len(ground)):
        for base in itertools.combinations(ground, r):
            ev = RevenueEvaluator(inst, Strategy(inst, base))
            for z in ground:
                if z in ev.strategy:
                    continue
                diff = oracle_revenue(inst, list(base) + [z]) - oracle_revenue(inst, base)
                assert ev.marginal_revenue(z) == pytest.approx(diff, abs=1e-12)
