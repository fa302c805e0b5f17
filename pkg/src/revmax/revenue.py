"""Exact evaluation of the dynamic revenue model.

A triple's dynamic adoption probability depends only on triples that share its
user and item class, so everything here works one ``(user, class)`` group at a
time.
"""

from __future__ import annotations

import math
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .model import Instance, Strategy, Triple


def _as_strategy(inst: Instance, s) -> Strategy:
    return s if isinstance(s, Strategy) else Strategy(inst, s)


def memory(s: Strategy, u: int, i: int, t: int) -> float:
    """Recency-weighted count of earlier same-class recommendations to ``u``."""
    inst = s.inst
    total = 0.0
    for t2, _ in s.group(u, inst.item_class[i]):
        if t2 >= t:
            break
        total += 1.0 / (t - t2)
    return total


def group_probs(inst: Instance, u: int, members: Sequence[Tuple[int, int]]) -> List[float]:
    """Dynamic adoption probabilities of every member of one (user, class) group.

    ``members`` is the group's time-sorted list of ``(time, item)``.
    """
    prim = [inst.q(u, j, t) for t, j in members]
    out = []
    for idx, (t, i) in enumerate(members):
        mem = 0.0
        prod = 1.0
        for jdx, (t2, j) in enumerate(members):
            if t2 < t:
                mem += 1.0 / (t - t2)
                prod *= 1.0 - prim[jdx]
            elif t2 == t:
                if j != i:
                    prod *= 1.0 - prim[jdx]
            else:
                break
        # 0.0 ** 0.0 == 1.0, so full saturation leaves the first recommendation intact
        out.append(prim[idx] * inst.beta[i] ** mem * prod)
    return out


def dynamic_adoption_prob(s: Strategy, z: Tuple[int, int, int]) -> float:
    """Dynamic adoption probability of ``z`` under ``s`` (0 if ``z`` is not in ``s``)."""
    z = Triple(*z)
    if z not in s:
        return 0.0
    inst = s.inst
    members = s.group(z.user, inst.item_class[z.item])
    probs = group_probs(inst, z.user, members)
    return probs[members.index((z.time, z.item))]


def dynamic_probs(inst: Instance, s) -> Dict[Triple, float]:
    """Dynamic adoption probability of every triple in ``s``."""
    s = _as_strategy(inst, s)
    out: Dict[Triple, float] = {}
    for (u, _c), members in s.per_user_class.items():
        for (t, i), q in zip(members, group_probs(inst, u, members)):
            out[Triple(u, i, t)] = q
    return out


def revenue(inst: Instance, s) -> float:
    """Expected revenue of any strategy (validity not required)."""
    probs = dynamic_probs(inst, s)
    price = inst.price
    return math.fsum(price[z.item][z.time] * q for z, q in probs.items())


class RevenueEvaluator:
    """Incrementally maintained strategy, dynamic probabilities and total revenue."""

    def __init__(self, inst: Instance, strategy: Optional[Strategy] = None) -> None:
        self.inst = inst
        self.strategy = Strategy(inst) if strategy is None else strategy
        self.cached_q: Dict[Triple, float] = {}
        self._sum = 0.0
        self._comp = 0.0
        if len(self.strategy):
            self.cached_q = dynamic_probs(inst, self.strategy)
            price = inst.price
            self._sum = math.fsum(price[z.item][z.time] * q for z, q in self.cached_q.items())

    @property
    def total_revenue(self) -> float:
        return self._sum

    def _accumulate(self, delta: float) -> None:
        # Kahan summation keeps long commit sequences stable
        y = delta - self._comp
        t = self._sum + y
        self._comp = (t - self._sum) - y
        self._sum = t

    def marginal_revenue(self, z: Tuple[int, int, int]) -> float:
        """``Rev(S + z) - Rev(S)``: the gain of ``z`` plus the loss it inflicts
        on same-class triples of the same user at the same or later times."""
        u, i, t = z
        inst = self.inst
        s = self.strategy
        if z in s.triples:
            raise ValueError(f"{tuple(z)} is already in the strategy")
        base = inst.q(u, i, t)
        price = inst.price
        group = s.per_user_class.get((u, inst.item_class[i]))
        if not group:
            return price[i][t] * base
        beta = inst.beta
        cached = self.cached_q
        qfun = inst.q
        keep = 1.0 - base
        mem = 0.0
        prod = 1.0
        loss = 0.0
        for t2, j in group:
            if t2 < t:
                mem += 1.0 / (t - t2)
                prod *= 1.0 - qfun(u, j, t2)
                continue
            old = cached[(u, j, t2)]
            if t2 == t:
                prod *= 1.0 - qfun(u, j, t2)
                if old:
                    loss -= price[j][t2] * old * base
            elif old:
                factor = keep * beta[j] ** (1.0 / (t2 - t))
                loss += price[j][t2] * old * (factor - 1.0)
        gain = price[i][t] * base * beta[i] ** mem * prod
        return gain + loss

    def _refresh_group(self, u: int, class_id: int, old_members: Iterable[Tuple[int, int]]) -> float:
        inst = self.inst
        cached = self.cached_q
        price = inst.price
        before = 0.0
        for t, j in old_members:
            before += price[j][t] * cached.pop((u, j, t))
        members = self.strategy.per_user_class.get((u, class_id), [])
        after = 0.0
        for (t, j), q in zip(members, group_probs(inst, u, members)):
            cached[Triple(u, j, t)] = q
            after += price[j][t] * q
        return after - before

    def commit(self, z: Tuple[int, int, int]) -> float:
        """Add ``z`` to the strategy; returns the realized revenue change."""
        z = Triple(*z)
        if z in self.strategy.triples:
            raise ValueError(f"{tuple(z)} is already in the strategy")
        c = self.inst.item_class[z.item]
        old = list(self.strategy.group(z.user, c))
        self.strategy.add(z)
        delta = self._refresh_group(z.user, c, old)
        self._accumulate(delta)
        return delta

    def remove(self, z: Tuple[int, int, int]) -> float:
        """Drop ``z`` from the strategy; returns the realized revenue change."""
        z = Triple(*z)
        c = self.inst.item_class[z.item]
        old = list(self.strategy.group(z.user, c))
        self.strategy.remove(z)
        delta = self._refresh_group(z.user, c, old)
        self._accumulate(delta)
        return delta

    def copy(self) -> "RevenueEvaluator":
        new = RevenueEvaluator.__new__(RevenueEvaluator)
        new.inst = self.inst
        new.strategy = self.strategy.copy()
        new.cached_q = dict(self.cached_q)
        new._sum = self._sum
        new._comp = self._comp
        return new


def marginal_revenue(ev: RevenueEvaluator, z: Tuple[int, int, int]) -> float:
    return ev.marginal_revenue(z)


def commit(ev: RevenueEvaluator, z: Tuple[int, int, int]) -> float:
    return ev.commit(z)
