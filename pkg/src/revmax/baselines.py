"""Comparison strategies and exact oracles."""

from __future__ import annotations

import heapq
import time
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .greedy import SolveReport, _Stats, _report, g_greedy
from .model import Instance, Strategy, Triple, repeat_histogram
from .revenue import RevenueEvaluator, revenue


def _static_top_k(inst: Instance, scores: Mapping[Tuple[int, int], float], algo: str) -> SolveReport:
    """Give each user (in index order) its k best-scored items with capacity left,
    repeated at every time step."""
    started = time.perf_counter()
    s = Strategy(inst)
    k = inst.display_k
    for u, items in sorted(inst.pairs_by_user().items()):
        ranked = sorted(items, key=lambda i: (-scores[(u, i)], i))
        chosen = 0
        for i in ranked:
            if chosen == k:
                break
            if len(s.users_of(i)) >= inst.capacity[i]:
                continue
            for t in range(1, inst.horizon + 1):
                s.add(Triple(u, i, t))
            chosen += 1
    ev = RevenueEvaluator(inst, s)
    stats = _Stats(selections=len(s))
    return _report(algo, ev, started, stats)


def top_ra(inst: Instance, ratings: Mapping[Tuple[int, int], float]) -> SolveReport:
    """Top predicted rating per user, repeated over the horizon."""
    missing = [pair for pair in inst.adoption if pair not in ratings]
    if missing:
        raise ValueError(f"ratings missing for {len(missing)} adoption pairs, e.g. {missing[0]}")
    return _static_top_k(inst, ratings, "topra")


def top_re(inst: Instance) -> SolveReport:
    """Top horizon-averaged price x primitive probability per user."""
    T = inst.horizon
    scores = {}
    for (u, i), row in inst.q_table.items():
        prices = inst.price[i]
        scores[(u, i)] = sum(prices[t] * row[t] for t in range(1, T + 1)) / T
    return _static_top_k(inst, scores, "topre")


def global_no(inst: Instance) -> SolveReport:
    """Global greedy that selects as though there were no saturation, scored
    under the true saturation factors."""
    started = time.perf_counter()
    blind = g_greedy(inst.with_saturation(1.0))
    ev = RevenueEvaluator(inst, Strategy(inst, blind.strategy.triples))
    stats = _Stats(selections=blind.selections, recomputations=blind.recomputations)
    return _report("ggno", ev, started, stats)


def brute_force_opt(inst: Instance, limit: int = 16) -> SolveReport:
    """Exact optimum by enumerating every valid subset of positive triples."""
    started = time.perf_counter()
    ground = inst.positive_triples()
    n = len(ground)
    if n > limit:
        raise ValueError(f"{n} positive triples exceeds the enumeration limit {limit}")
    ev = RevenueEvaluator(inst)
    s = ev.strategy
    best_value = 0.0
    best: List[Triple] = []

    def search(idx: int) -> None:
        nonlocal best_value, best
        if idx == n:
            if ev.total_revenue > best_value:
                best_value = ev.total_revenue
                best = sorted(s.triples)
            return
        search(idx + 1)
        z = ground[idx]
        if s.can_add(z):
            ev.commit(z)
            search(idx + 1)
            ev.remove(z)

    search(0)
    out = RevenueEvaluator(inst, Strategy(inst, best))
    stats = _Stats(selections=len(best))
    return _report("opt", out, started, stats, subsets_examined=2 ** n)


# -- T = 1 via min-cost flow -------------------------------------------------


@dataclass
class FlowNetwork:
    """Residual graph for max-weight degree-constrained bipartite selection.

    Node 0 is the source, users are ``1..U``, items ``U+1..U+I``, and the sink is
    last. Arcs are stored as ``[head, capacity, cost, reverse_index]``.
    """

    num_users: int
    num_items: int
    adj: List[List[list]] = field(default_factory=list)

    @property
    def source(self) -> int:
        return 0

    @property
    def sink(self) -> int:
        return self.num_users + self.num_items + 1

    def user_node(self, u: int) -> int:
        return 1 + u

    def item_node(self, i: int) -> int:
        return 1 + self.num_users + i

    def add_arc(self, tail: int, head: int, cap: int, cost: float) -> None:
        if cap < 0:
            raise ValueError("arc capacity must be non-negative")
        self.adj[tail].append([head, cap, cost, len(self.adj[head])])
        self.adj[head].append([tail, 0, -cost, len(self.adj[tail]) - 1])

    @classmethod
    def from_instance(cls, inst: Instance) -> "FlowNetwork":
        net = cls(inst.num_users, inst.num_items)
        net.adj = [[] for _ in range(inst.num_users + inst.num_items + 2)]
        for u in range(inst.num_users):
            net.add_arc(net.source, net.user_node(u), inst.display_k, 0.0)
        for (u, i), row in sorted(inst.q_table.items()):
            w = inst.price[i][1] * row[1]
            if row[1] > 0.0:
                net.add_arc(net.user_node(u), net.item_node(i), 1, -w)
        for i in range(inst.num_items):
            net.add_arc(net.item_node(i), net.sink, inst.capacity[i], 0.0)
        return net

    def _initial_potentials(self) -> List[float]:
        # Bellman-Ford over arcs with residual capacity; the network is acyclic at start
        n = len(self.adj)
        dist = [float("inf")] * n
        dist[self.source] = 0.0
        for _ in range(n - 1):
            changed = False
            for v in range(n):
                if dist[v] == float("inf"):
                    continue
                for head, cap, cost, _ in self.adj[v]:
                    if cap > 0 and dist[v] + cost < dist[head]:
                        dist[head] = dist[v] + cost
                        changed = True
            if not changed:
                break
        return [d if d != float("inf") else 0.0 for d in dist]

    def max_weight_flow(self, eps: float = 1e-12) -> float:
        """Successive shortest paths; stops once no augmenting path has negative cost.

        Returns the total (positive) weight routed.
        """
        n = len(self.adj)
        pot = self._initial_potentials()
        total = 0.0
        inf = float("inf")
        while True:
            dist = [inf] * n
            prev: List[Optional[Tuple[int, int]]] = [None] * n
            dist[self.source] = 0.0
            pq = [(0.0, self.source)]
            while pq:
                d, v = heapq.heappop(pq)
                if d > dist[v]:
                    continue
                for idx, (head, cap, cost, _) in enumerate(self.adj[v]):
                    if cap <= 0:
                        continue
                    nd = d + cost + pot[v] - pot[head]
                    if nd < dist[head] - 1e-15:
                        dist[head] = nd
                        prev[head] = (v, idx)
                        heapq.heappush(pq, (nd, head))
            if dist[self.sink] == inf:
                break
            for v in range(n):
                if dist[v] < inf:
                    pot[v] += dist[v]
            path_cost = pot[self.sink] - pot[self.source]
            if path_cost >= -eps:
                break
            # unit capacity on the user-item arcs: every augmentation moves one unit
            v = self.sink
            while v != self.source:
                tail, idx = prev[v]
                arc = self.adj[tail][idx]
                arc[1] -= 1
                self.adj[v][arc[3]][1] += 1
                v = tail
            total -= path_cost
        return total

    def selected_pairs(self) -> List[Tuple[int, int]]:
        out = []
        for u in range(self.num_users):
            for head, cap, cost, _ in self.adj[self.user_node(u)]:
                if 1 + self.num_users <= head < self.sink and cap == 0 and cost <= 0.0:
                    out.append((u, head - 1 - self.num_users))
        return sorted(out)


def dcs_optimal_t1(inst: Instance) -> SolveReport:
    """Exact optimum for a single time step with singleton classes."""
    if inst.horizon != 1:
        raise ValueError(f"dcs_optimal_t1 needs horizon 1, got {inst.horizon}")
    sizes = Counter(inst.item_class)
    shared = sorted(c for c, n in sizes.items() if n >= 2)
    if shared:
        raise ValueError(f"dcs_optimal_t1 needs singleton classes; class {shared[0]} has {sizes[shared[0]]} items")
    started = time.perf_counter()
    net = FlowNetwork.from_instance(inst)
    net.max_weight_flow()
    s = Strategy(inst, [Triple(u, i, 1) for u, i in net.selected_pairs()])
    ev = RevenueEvaluator(inst, s)
    return _report("dcs", ev, started, _Stats(selections=len(s)))
