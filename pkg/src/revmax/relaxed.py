"""Relaxed-capacity machinery: effective adoption probabilities, capacity-tail
estimates, the display-constraint matroid, and a small local search.

Adoption events of different users are treated as independent. Within a user,
adoptions of one item at different times are mutually exclusive, so that user's
chance of having adopted the item by time ``t`` is the sum of its dynamic
probabilities over the recommended times ``<= t`` (capped at 1).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Dict, Iterable, List, Sequence, Tuple

import numpy as np

from .greedy import SolveReport, g_greedy
from .model import Instance, Strategy, Triple, repeat_histogram
from .revenue import dynamic_adoption_prob, dynamic_probs, revenue

MAX_LOCAL_SEARCH_TRIPLES = 2000


@dataclass(frozen=True)
class CapacityTailEstimate:
    value: float
    method: str  # "exact-dp" or "monte-carlo"
    samples: int = 0
    std_error: float = 0.0


def _other_adopter_probs(
    s: Strategy, i: int, t: int, exclude_user: int, probs: Dict[Triple, float] = None
) -> List[float]:
    if probs is None:
        probs = dynamic_probs(s.inst, s)
    per_user: Dict[int, float] = {}
    for v in s.users_of(i):
        if v == exclude_user:
            continue
        for tau in range(1, t + 1):
            z = Triple(v, i, tau)
            if z in s.triples:
                per_user[v] = per_user.get(v, 0.0) + probs[z]
    return [min(1.0, per_user[v]) for v in sorted(per_user)]


def at_most_probability(probs: Sequence[float], limit: int) -> float:
    """P[at most ``limit`` successes] for independent Bernoulli trials, O(n * limit)."""
    if limit < 0:
        return 0.0
    if limit >= len(probs):
        return 1.0
    # dist[c] = P[c successes so far], truncated at limit
    dist = [1.0] + [0.0] * limit
    for p in probs:
        for c in range(limit, 0, -1):
            dist[c] = dist[c] * (1.0 - p) + dist[c - 1] * p
        dist[0] *= 1.0 - p
    return min(1.0, max(0.0, math.fsum(dist)))


def capacity_tail_exact(
    s: Strategy, i: int, t: int, exclude_user: int, probs: Dict[Triple, float] = None
) -> CapacityTailEstimate:
    """Probability that at most ``q_i - 1`` other recommended users adopt ``i`` by ``t``."""
    others = _other_adopter_probs(s, i, t, exclude_user, probs)
    return CapacityTailEstimate(at_most_probability(others, s.inst.capacity[i] - 1), "exact-dp")


def capacity_tail_mc(
    s: Strategy,
    i: int,
    t: int,
    exclude_user: int,
    samples: int,
    seed: int,
    chunk: int = 65536,
) -> CapacityTailEstimate:
    """Monte-Carlo estimate of :func:`capacity_tail_exact` under the same model."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    others = np.asarray(_other_adopter_probs(s, i, t, exclude_user), dtype=float)
    limit = s.inst.capacity[i] - 1
    rng = np.random.default_rng(seed)
    hits = 0
    done = 0
    while done < samples:
        m = min(chunk, samples - done)
        if others.size:
            adopters = (rng.random((m, others.size)) < others).sum(axis=1)
            hits += int(np.count_nonzero(adopters <= limit))
        elif limit >= 0:
            hits += m
        done += m
    v = hits / samples
    return CapacityTailEstimate(v, "monte-carlo", samples, math.sqrt(v * (1.0 - v) / samples))


def effective_adoption_prob(s: Strategy, z: Tuple[int, int, int], tail: CapacityTailEstimate) -> float:
    return dynamic_adoption_prob(s, z) * tail.value


def relaxed_revenue(inst: Instance, s) -> float:
    """Revenue with the capacity constraint folded into each triple's probability."""
    if not isinstance(s, Strategy):
        s = Strategy(inst, s)
    probs = dynamic_probs(inst, s)
    terms = []
    for z, q in probs.items():
        if q == 0.0:
            continue
        others = _other_adopter_probs(s, z.item, z.time, z.user, probs)
        tail = at_most_probability(others, inst.capacity[z.item] - 1)
        terms.append(inst.price[z.item][z.time] * q * tail)
    return math.fsum(terms)


# -- matroid checks ----------------------------------------------------------


def check_partition_matroid(inst: Instance, s: Iterable[Tuple[int, int, int]]) -> bool:
    """Independence in the display-constraint partition matroid: at most k per (user, time)."""
    counts: Dict[Tuple[int, int], int] = {}
    for u, _, t in s:
        n = counts.get((u, t), 0) + 1
        if n > inst.display_k:
            return False
        counts[(u, t)] = n
    return True


def check_capacity(inst: Instance, s: Iterable[Tuple[int, int, int]]) -> bool:
    """The capacity constraint alone, as a set-system membership test."""
    users: Dict[int, set] = {}
    for u, i, _ in s:
        users.setdefault(i, set()).add(u)
    return all(len(us) <= inst.capacity[i] for i, us in users.items())


# -- local search ------------------------------------------------------------


def local_search_rrevmax(inst: Instance, max_iters: int = 1000, seed: int = 0) -> SolveReport:
    """Hill-climb the relaxed objective over display-feasible sets.

    Starts from the global greedy solution and applies the first strictly
    improving add, delete or 1-for-1 swap found, scanning candidates in an
    order fixed by ``seed``.
    """
    ground = inst.positive_triples()
    if len(ground) > MAX_LOCAL_SEARCH_TRIPLES:
        raise ValueError(
            f"{len(ground)} positive triples exceeds the local-search guard {MAX_LOCAL_SEARCH_TRIPLES}"
        )
    started = time.perf_counter()
    rng = np.random.default_rng(seed)
    order = [ground[j] for j in rng.permutation(len(ground))]
    current = set(g_greedy(inst).strategy.triples)
    value = relaxed_revenue(inst, current)
    evaluations = 1
    iters = 0
    k = inst.display_k

    def slot_counts(sel):
        counts: Dict[Tuple[int, int], int] = {}
        for u, _, t in sel:
            counts[(u, t)] = counts.get((u, t), 0) + 1
        return counts

    while iters < max_iters:
        improved = False
        counts = slot_counts(current)
        members = [z for z in order if z in current]
        outsiders = [z for z in order if z not in current]
        for z in outsiders:
            if counts.get((z.user, z.time), 0) < k:
                cand = current | {z}
                v = relaxed_revenue(inst, cand)
                evaluations += 1
                if v > value + 1e-12:
                    current, value, improved = cand, v, True
                    break
        if not improved:
            for z in members:
                cand = current - {z}
                v = relaxed_revenue(inst, cand)
                evaluations += 1
                if v > value + 1e-12:
                    current, value, improved = cand, v, True
                    break
        if not improved:
            for out in members:
                for z in outsiders:
                    same_slot = out.user == z.user and out.time == z.time
                    if not same_slot and counts.get((z.user, z.time), 0) >= k:
                        continue
                    cand = (current - {out}) | {z}
                    v = relaxed_revenue(inst, cand)
                    evaluations += 1
                    if v > value + 1e-12:
                        current, value, improved = cand, v, True
                        break
                if improved:
                    break
        if not improved:
            break
        iters += 1

    s = Strategy(inst, current)
    return SolveReport(
        algo="rrevmax-ls",
        strategy=s,
        expected_revenue=revenue(inst, s),
        runtime_ms=(time.perf_counter() - started) * 1000.0,
        selections=len(s),
        recomputations=evaluations,
        repeat_histogram=repeat_histogram(s.triples),
        info={"iterations": iters, "relaxed_objective": value},
    )
