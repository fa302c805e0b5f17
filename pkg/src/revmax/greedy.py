"""Greedy solvers: global greedy with two-level heaps and lazy forward,
sequential and randomized local greedy, and staged sub-horizon solving."""

from __future__ import annotations

import contextlib
import gc
import heapq
import itertools
import math
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .heaps import IndexedHeap, TwoLevelHeap
from .model import Instance, Strategy, Triple, repeat_histogram
from .revenue import RevenueEvaluator


@dataclass
class SolveReport:
    algo: str
    strategy: Strategy
    expected_revenue: float
    runtime_ms: float
    selections: int
    recomputations: int
    repeat_histogram: Dict[int, int] = field(default_factory=dict)
    info: Dict[str, object] = field(default_factory=dict)

    @property
    def triples(self) -> List[Triple]:
        return sorted(self.strategy.triples)


@dataclass
class _Stats:
    selections: int = 0
    recomputations: int = 0


def _report(algo: str, ev: RevenueEvaluator, started: float, stats: _Stats, **info) -> SolveReport:
    return SolveReport(
        algo=algo,
        strategy=ev.strategy,
        expected_revenue=ev.total_revenue,
        runtime_ms=(time.perf_counter() - started) * 1000.0,
        selections=stats.selections,
        recomputations=stats.recomputations,
        repeat_histogram=repeat_histogram(ev.strategy.triples),
        info=dict(info),
    )


@contextlib.contextmanager
def _gc_paused():
    """Suspend cyclic GC while a solver churns through short-lived tuples.

    The solvers create no reference cycles, and full collections would
    otherwise rescan every object of a large instance again and again.
    """
    was_enabled = gc.isenabled()
    gc.disable()
    try:
        yield
    finally:
        if was_enabled:
            gc.enable()


# -- global greedy -----------------------------------------------------------


def _user_class_pairs(inst: Instance) -> Dict[Tuple[int, int], List[int]]:
    out: Dict[Tuple[int, int], List[int]] = {}
    cls = inst.item_class
    for (u, i) in inst.adoption:
        out.setdefault((u, cls[i]), []).append(i)
    return out


def _global_pass(ev: RevenueEvaluator, times: Optional[Sequence[int]], variant: str, stats: _Stats) -> None:
    if variant == "flat":
        _global_pass_flat(ev, times, stats)
        return
    if variant not in ("lazy", "eager"):
        raise ValueError(f"unknown g_greedy variant {variant!r}")
    eager = variant == "eager"
    inst = ev.inst
    s = ev.strategy
    allowed = None if times is None else set(times)
    cls = inst.item_class
    groups = s.per_user_class
    marginal = ev.marginal_revenue
    price = inst.price
    chosen = s.triples

    pairs: List[Tuple[int, int]] = []
    rows: list = []
    roots: List[Tuple[float, int]] = []
    flags0: List[int] = []
    lower: list = []
    evaluated = 0
    for (u, i), row in inst.adoption.items():
        if allowed is not None:
            row = [(t, q) for t, q in row if t in allowed]
        gsize = len(groups.get((u, cls[i]), ()))
        if gsize:
            heap = [(-marginal((u, i, t)), t) for t, _ in row if (u, i, t) not in chosen]
            heapq.heapify(heap)
            root = heap[0] if heap else None
        else:
            # nothing to compete with or saturate: the marginal is the standalone
            # value, so only the best entry is kept until the pair is touched
            p = price[i]
            heap = None
            root = min([(-p[t] * q, t) for t, q in row], default=None)
        evaluated += len(row)
        if root is None:
            continue
        pairs.append((u, i))
        rows.append(row)
        roots.append(root)
        lower.append(heap)
        flags0.append(gsize)
    stats.recomputations += evaluated

    def load(pid: int) -> List[Tuple[float, int]]:
        p = price[pairs[pid][1]]
        return [(-p[t] * q, t) for t, q in rows[pid]]

    tl = TwoLevelHeap(pairs, roots, load, flags0, lower)
    flags = tl.flags
    upper = tl.upper
    k = inst.display_k
    slot_count = s.per_user_time_count
    item_users = s.per_item_users
    capacity = inst.capacity
    pair_users = _user_class_pairs(inst) if eager else None
    num_slots = inst.num_users * (inst.horizon if times is None else len(set(times)))
    full_slots = sum(1 for (u, t), n in slot_count.items() if n >= k and (allowed is None or t in allowed))

    while upper and full_slots < num_slots:
        (negkey, u, i, t), pid = upper.peek()
        if s.pair_count(u, i) == 0 and len(item_users.get(i, ())) >= capacity[i]:
            tl.delete_pair(pid)
            continue
        if slot_count.get((u, t), 0) >= k:
            tl.drop_while(pid, lambda t2: slot_count.get((u, t2), 0) >= k)
            continue
        size = len(groups.get((u, cls[i]), ()))
        if flags[pid] < size:
            fresh = [(-marginal((u, i, t2)), t2) for _, t2 in tl.heap(pid)]
            flags[pid] = size
            stats.recomputations += len(fresh)
            tl.replace_lower(pid, fresh)
            continue
        if negkey >= 0.0:
            break
        ev.commit(Triple(u, i, t))
        stats.selections += 1
        tl.pop_root_entry(pid)
        if slot_count[(u, t)] >= k:
            full_slots += 1
        if eager:
            c = cls[i]
            size = len(groups[(u, c)])
            for j in pair_users.get((u, c), ()):
                pj = tl.pid_of((u, j))
                if pj is None or pj not in upper:
                    continue
                fresh = [(-marginal((u, j, t2)), t2) for _, t2 in tl.heap(pj)]
                flags[pj] = size
                stats.recomputations += len(fresh)
                tl.replace_lower(pj, fresh)


def _global_pass_flat(ev: RevenueEvaluator, times: Optional[Sequence[int]], stats: _Stats) -> None:
    """Lazy-forward global greedy over one flat heap holding every triple."""
    inst = ev.inst
    s = ev.strategy
    allowed = None if times is None else set(times)
    cls = inst.item_class
    groups = s.per_user_class
    marginal = ev.marginal_revenue
    items = []
    triples: List[Triple] = []
    flags: List[int] = []
    for (u, i), row in inst.adoption.items():
        gsize = len(groups.get((u, cls[i]), ()))
        for t, _ in row:
            if allowed is not None and t not in allowed:
                continue
            z = Triple(u, i, t)
            if z in s.triples:
                continue
            items.append(((-marginal(z), u, i, t), len(triples)))
            triples.append(z)
            flags.append(gsize)
            stats.recomputations += 1
    heap = IndexedHeap(items)
    k = inst.display_k
    slot_count = s.per_user_time_count
    item_users = s.per_item_users
    capacity = inst.capacity
    num_slots = inst.num_users * (inst.horizon if times is None else len(set(times)))
    full_slots = sum(1 for (u, t), n in slot_count.items() if n >= k and (allowed is None or t in allowed))

    while heap and full_slots < num_slots:
        (negkey, u, i, t), h = heap.peek()
        if (s.pair_count(u, i) == 0 and len(item_users.get(i, ())) >= capacity[i]) or slot_count.get(
            (u, t), 0
        ) >= k:
            heap.remove(h)
            continue
        size = len(groups.get((u, cls[i]), ()))
        if flags[h] < size:
            heap.update(h, (-marginal(triples[h]), u, i, t))
            flags[h] = size
            stats.recomputations += 1
            continue
        if negkey >= 0.0:
            break
        ev.commit(triples[h])
        stats.selections += 1
        heap.remove(h)
        if slot_count[(u, t)] >= k:
            full_slots += 1


def g_greedy(inst: Instance, variant: str = "lazy") -> SolveReport:
    """Global greedy: repeatedly commit the valid triple of largest positive
    marginal revenue, anywhere in the horizon.

    ``variant`` selects the bookkeeping: ``"lazy"`` (two-level heaps with lazy
    forward), ``"eager"`` (two-level heaps, every affected key refreshed after
    each commit) or ``"flat"`` (one lazy heap over all triples).
    """
    started = time.perf_counter()
    ev = RevenueEvaluator(inst)
    stats = _Stats()
    with _gc_paused():
        _global_pass(ev, None, variant, stats)
    return _report("gg" if variant == "lazy" else f"gg-{variant}", ev, started, stats)


# -- local greedy ------------------------------------------------------------


def _local_round(ev: RevenueEvaluator, t: int, stats: _Stats) -> None:
    """Greedy selection restricted to time step ``t``, conditioned on the current strategy."""
    inst = ev.inst
    s = ev.strategy
    cls = inst.item_class
    groups = s.per_user_class
    marginal = ev.marginal_revenue
    heap = []
    flags: Dict[Tuple[int, int], int] = {}
    for (u, i), row in inst.q_table.items():
        if row[t] <= 0.0:
            continue
        z = Triple(u, i, t)
        if z in s.triples:
            continue
        heap.append((-marginal(z), u, i, t))
        flags[(u, i)] = len(groups.get((u, cls[i]), ()))
    stats.recomputations += len(heap)
    heapq.heapify(heap)
    k = inst.display_k
    slot_count = s.per_user_time_count
    item_users = s.per_item_users
    capacity = inst.capacity

    while heap:
        negkey, u, i, _ = heap[0]
        if slot_count.get((u, t), 0) >= k or (
            s.pair_count(u, i) == 0 and len(item_users.get(i, ())) >= capacity[i]
        ):
            heapq.heappop(heap)
            continue
        size = len(groups.get((u, cls[i]), ()))
        if flags[(u, i)] < size:
            heapq.heapreplace(heap, (-marginal(Triple(u, i, t)), u, i, t))
            flags[(u, i)] = size
            stats.recomputations += 1
            continue
        if negkey >= 0.0:
            break
        ev.commit(Triple(u, i, t))
        stats.selections += 1
        heapq.heappop(heap)


def sl_greedy(inst: Instance) -> SolveReport:
    """Sequential local greedy: finalize time steps in chronological order."""
    started = time.perf_counter()
    ev = RevenueEvaluator(inst)
    stats = _Stats()
    with _gc_paused():
        for t in range(1, inst.horizon + 1):
            _local_round(ev, t, stats)
    return _report("slg", ev, started, stats)


def sample_permutations(items: Sequence[int], n_perms: int, seed: int) -> List[Tuple[int, ...]]:
    """``n_perms`` distinct orderings of ``items``, deterministic in ``seed``."""
    items = list(items)
    total = math.factorial(len(items))
    if n_perms < 1:
        raise ValueError("n_perms must be >= 1")
    if n_perms > total:
        raise ValueError(f"n_perms={n_perms} exceeds the {total} distinct permutations available")
    rng = np.random.default_rng(seed)
    if len(items) <= 8 and 2 * n_perms >= total:
        every = list(itertools.permutations(items))
        order = rng.permutation(total)
        return [every[j] for j in order[:n_perms]]
    seen = set()
    out = []
    while len(out) < n_perms:
        perm = tuple(items[j] for j in rng.permutation(len(items)))
        if perm not in seen:
            seen.add(perm)
            out.append(perm)
    return out


def _randomized_local(
    base: RevenueEvaluator, perms: Sequence[Sequence[int]], stats: _Stats
) -> Tuple[RevenueEvaluator, int]:
    best = None
    best_idx = -1
    for idx, perm in enumerate(perms):
        ev = base.copy()
        for t in perm:
            _local_round(ev, t, stats)
        # strict comparison keeps the lowest permutation index on ties
        if best is None or ev.total_revenue > best.total_revenue:
            best, best_idx = ev, idx
    return best, best_idx


def rl_greedy(
    inst: Instance,
    n_perms: int = 20,
    seed: int = 0,
    permutations: Optional[Sequence[Sequence[int]]] = None,
) -> SolveReport:
    """Randomized local greedy: best of ``n_perms`` distinct time orderings.

    Pass ``permutations`` to run specific orderings instead of sampled ones.
    """
    started = time.perf_counter()
    if permutations is None:
        permutations = sample_permutations(range(1, inst.horizon + 1), n_perms, seed)
    stats = _Stats()
    with _gc_paused():
        best, idx = _randomized_local(RevenueEvaluator(inst), permutations, stats)
    stats.selections = len(best.strategy)
    return _report("rlg", best, started, stats, permutation=tuple(permutations[idx]))


# -- staged sub-horizons -----------------------------------------------------


def split_horizon(horizon: int, cutoffs: Sequence[int]) -> List[List[int]]:
    cutoffs = list(cutoffs)
    if any(b <= a for a, b in zip(cutoffs, cutoffs[1:])):
        raise ValueError(f"cutoffs must be strictly increasing: {cutoffs}")
    if cutoffs and (cutoffs[0] < 1 or cutoffs[-1] >= horizon):
        raise ValueError(f"cutoffs must lie in [1, {horizon - 1}]: {cutoffs}")
    edges = [0] + cutoffs + [horizon]
    return [list(range(a + 1, b + 1)) for a, b in zip(edges, edges[1:])]


def staged_solve(
    inst: Instance,
    cutoffs: Sequence[int],
    inner: str = "gg",
    n_perms: int = 20,
    seed: int = 0,
) -> SolveReport:
    """Solve sub-horizon after sub-horizon; earlier commitments stay fixed and
    condition the marginal revenues of later blocks."""
    blocks = split_horizon(inst.horizon, cutoffs)
    started = time.perf_counter()
    ev = RevenueEvaluator(inst)
    stats = _Stats()
    for b, block in enumerate(blocks):
        if inner == "gg":
            _global_pass(ev, block, "lazy", stats)
        elif inner == "slg":
            for t in block:
                _local_round(ev, t, stats)
        elif inner == "rlg":
            n = min(n_perms, math.factorial(len(block)))
            perms = sample_permutations(block, n, seed + b)
            ev, _ = _randomized_local(ev, perms, stats)
        else:
            raise ValueError(f"unknown inner solver {inner!r}")
    stats.selections = len(ev.strategy)
    return _report(f"staged-{inner}", ev, started, stats, cutoffs=tuple(cutoffs))
