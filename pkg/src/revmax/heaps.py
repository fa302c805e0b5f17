"""Addressable priority queues used by the greedy solvers.

Priorities are tuples ``(-key, user, item, time)`` so that the smallest tuple is
the largest key, with ties going to the lexicographically smallest triple.
"""

from __future__ import annotations

import heapq
from array import array
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

Priority = Tuple[float, int, int, int]


class IndexedHeap:
    """Four-ary min-heap over ``(priority, handle)`` with update and delete by handle.

    Handles are small non-negative integers. The leading float of each priority
    is mirrored in a contiguous array so sifting mostly touches packed memory;
    full priority tuples are compared only on exact key ties.
    """

    __slots__ = ("_key", "_prio", "_hid", "_pos")

    def __init__(self, items: Iterable[Tuple[Priority, int]] = ()) -> None:
        ordered = sorted(items)
        self._key = array("d", [prio[0] for prio, _ in ordered])
        self._prio: List[Priority] = [prio for prio, _ in ordered]
        self._hid = array("q", [h for _, h in ordered])
        size = 1 + max(self._hid, default=-1)
        self._pos = array("q", [-1]) * size
        for idx, h in enumerate(self._hid):
            if h < 0:
                raise ValueError(f"handle {h!r} must be a non-negative integer")
            if self._pos[h] != -1:
                raise ValueError(f"duplicate handle {h!r}")
            self._pos[h] = idx

    def __len__(self) -> int:
        return len(self._key)

    def __bool__(self) -> bool:
        return len(self._key) > 0

    def __contains__(self, handle: int) -> bool:
        return 0 <= handle < len(self._pos) and self._pos[handle] != -1

    def peek(self) -> Tuple[Priority, int]:
        return self._prio[0], self._hid[0]

    def priority(self, handle: int) -> Priority:
        return self._prio[self._pos[handle]]

    def push(self, handle: int, prio: Priority) -> None:
        if handle < 0:
            raise ValueError(f"handle {handle!r} must be a non-negative integer")
        if handle in self:
            raise ValueError(f"handle {handle!r} already present")
        if handle >= len(self._pos):
            self._pos.extend([-1] * (handle + 1 - len(self._pos)))
        self._key.append(prio[0])
        self._prio.append(prio)
        self._hid.append(handle)
        idx = len(self._key) - 1
        self._pos[handle] = idx
        self._sift_up(idx)

    def pop(self) -> Tuple[Priority, int]:
        prio, h = self.peek()
        self.remove(h)
        return prio, h

    def update(self, handle: int, prio: Priority) -> None:
        idx = self._pos[handle]
        if idx < 0:
            raise KeyError(handle)
        old = self._prio[idx]
        self._prio[idx] = prio
        self._key[idx] = prio[0]
        if prio < old:
            self._sift_up(idx)
        elif prio > old:
            self._sift_down(idx)

    def remove(self, handle: int) -> None:
        idx = self._pos[handle]
        if idx < 0:
            raise KeyError(handle)
        self._pos[handle] = -1
        key, prios, hid = self._key, self._prio, self._hid
        last_key = key.pop()
        last_prio = prios.pop()
        last_h = hid.pop()
        if idx == len(key):
            return
        key[idx] = last_key
        prios[idx] = last_prio
        hid[idx] = last_h
        self._pos[last_h] = idx
        if idx > 0 and last_prio < prios[(idx - 1) >> 2]:
            self._sift_up(idx)
        else:
            self._sift_down(idx)

    def _sift_up(self, idx: int) -> None:
        key, prios, hid, pos = self._key, self._prio, self._hid, self._pos
        k0 = key[idx]
        p0 = prios[idx]
        h0 = hid[idx]
        while idx > 0:
            parent = (idx - 1) >> 2
            kp = key[parent]
            if k0 < kp or (k0 == kp and p0 < prios[parent]):
                key[idx] = kp
                prios[idx] = prios[parent]
                h = hid[parent]
                hid[idx] = h
                pos[h] = idx
                idx = parent
            else:
                break
        key[idx] = k0
        prios[idx] = p0
        hid[idx] = h0
        pos[h0] = idx

    def _sift_down(self, idx: int) -> None:
        key, prios, hid, pos = self._key, self._prio, self._hid, self._pos
        n = len(key)
        k0 = key[idx]
        p0 = prios[idx]
        h0 = hid[idx]
        while True:
            first = 4 * idx + 1
            if first >= n:
                break
            best = first
            kb = key[first]
            last = first + 4 if first + 4 < n else n
            for j in range(first + 1, last):
                kj = key[j]
                if kj < kb or (kj == kb and prios[j] < prios[best]):
                    best = j
                    kb = kj
            if kb < k0 or (kb == k0 and prios[best] < p0):
                key[idx] = kb
                prios[idx] = prios[best]
                h = hid[best]
                hid[idx] = h
                pos[h] = idx
                idx = best
            else:
                break
        key[idx] = k0
        prios[idx] = p0
        hid[idx] = h0
        pos[h0] = idx


class TwoLevelHeap:
    """Per-(user, item) lower heaps over time steps, whose roots feed one upper heap.

    Pairs are numbered ``0..n-1`` in construction order; ``pairs[pid]`` is the
    ``(user, item)`` pair. Lower-heap entries are ``(-key, time)`` and the upper
    priority of a pair is ``(-key, u, i, time)`` of its lower root.

    A lower heap may start unmaterialized: only its root is known up front and
    ``loader(pid)`` produces the full entry list the first time the heap is
    touched. Pairs that never reach the top of the upper heap never pay for
    their other entries.

    ``flags[pid]`` stores the size of the ``(u, class(i))`` group when the
    pair's keys were last computed; every refresh recomputes the whole lower
    heap, so one stamp per pair is as precise as one per triple.
    """

    __slots__ = ("pairs", "lower", "upper", "flags", "_loader", "_pid_of")

    def __init__(
        self,
        pairs: Sequence[Tuple[int, int]],
        roots: Sequence[Tuple[float, int]],
        loader: Optional[Callable[[int], List[Tuple[float, int]]]] = None,
        flags: Optional[Sequence[int]] = None,
        lower: Optional[List[Optional[List[Tuple[float, int]]]]] = None,
    ) -> None:
        if len(pairs) != len(roots):
            raise ValueError("one root per pair required")
        self.pairs: List[Tuple[int, int]] = list(pairs)
        self.lower: List[Optional[List[Tuple[float, int]]]] = [None] * len(self.pairs) if lower is None else lower
        if loader is None and any(h is None for h in self.lower):
            raise ValueError("unmaterialized lower heaps need a loader")
        self._loader = loader
        self._pid_of: Optional[Dict[Tuple[int, int], int]] = None
        self.upper = IndexedHeap(
            ((negkey, u, i, t), pid) for pid, ((u, i), (negkey, t)) in enumerate(zip(self.pairs, roots))
        )
        self.flags: List[int] = [0] * len(self.pairs) if flags is None else list(flags)
        if len(self.flags) != len(self.pairs):
            raise ValueError("one flag per pair required")

    @classmethod
    def from_entries(
        cls, entries: Sequence[Tuple[Tuple[int, int], List[Tuple[float, int]]]], flags: Optional[Sequence[int]] = None
    ) -> "TwoLevelHeap":
        """Build with every lower heap materialized from ``(pair, entries)`` items."""
        pairs, heaps = [], []
        for pair, heap in entries:
            if not heap:
                raise ValueError(f"empty lower heap for pair {pair}")
            heapq.heapify(heap)
            pairs.append(pair)
            heaps.append(heap)
        return cls(pairs, [h[0] for h in heaps], flags=flags, lower=heaps)

    def __bool__(self) -> bool:
        return bool(self.upper)

    def root(self) -> Tuple[Priority, int]:
        return self.upper.peek()

    def pid_of(self, pair: Tuple[int, int]) -> Optional[int]:
        if self._pid_of is None:
            self._pid_of = {p: pid for pid, p in enumerate(self.pairs)}
        return self._pid_of.get(pair)

    def heap(self, pid: int) -> List[Tuple[float, int]]:
        """The pair's lower heap, materializing it on first use (empty once exhausted)."""
        h = self.lower[pid]
        if h is None:
            h = self._loader(pid)
            heapq.heapify(h)
            self.lower[pid] = h
        return h

    def _sync(self, pid: int) -> None:
        heap = self.lower[pid]
        if heap:
            negkey, t = heap[0]
            u, i = self.pairs[pid]
            self.upper.update(pid, (negkey, u, i, t))
        else:
            self.lower[pid] = []
            self.upper.remove(pid)

    def drop_while(self, pid: int, dead: Callable[[int], bool]) -> None:
        """Pop lower-heap roots while ``dead(time)`` holds, then resync once."""
        heap = self.heap(pid)
        while heap and dead(heap[0][1]):
            heapq.heappop(heap)
        self._sync(pid)

    def pop_root_entry(self, pid: int) -> Tuple[float, int]:
        """Remove the root entry of a lower heap and resync the upper heap."""
        entry = heapq.heappop(self.heap(pid))
        self._sync(pid)
        return entry

    def delete_pair(self, pid: int) -> None:
        self.lower[pid] = []
        if pid in self.upper:
            self.upper.remove(pid)

    def replace_lower(self, pid: int, entries: List[Tuple[float, int]]) -> None:
        heapq.heapify(entries)
        self.lower[pid] = entries
        self._sync(pid)
