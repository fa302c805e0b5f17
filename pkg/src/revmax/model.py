"""Domain types for the revenue-maximization problem, instance I/O and validity checks.

Times are 1-based throughout: a horizon of ``T`` steps means ``t in 1..T``.
"""

from __future__ import annotations

import bisect
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, Iterator, List, Mapping, NamedTuple, Optional, Sequence, Set, Tuple


class InstanceError(ValueError):
    """Base class for problems with an instance file or object."""


class InstanceParseError(InstanceError):
    """The document is not a well-formed instance."""


class InstanceValidationError(InstanceError):
    """The document parsed, but an invariant does not hold."""


class Triple(NamedTuple):
    """One recommendation: ``item`` shown to ``user`` at ``time``.

    Ordering is lexicographic on (user, item, time), which is what every solver
    uses to break ties.
    """

    user: int
    item: int
    time: int


@dataclass(frozen=True)
class ItemSpec:
    item_id: int
    class_id: int
    capacity: int
    saturation: float
    prices: Tuple[float, ...]


@dataclass(frozen=True, eq=False)
class Instance:
    """Immutable problem input.

    ``adoption`` maps ``(user, item)`` to a time-sorted tuple of ``(time, prob)``
    pairs; only strictly positive probabilities are stored.
    """

    num_users: int
    items: Tuple[ItemSpec, ...]
    horizon: int
    display_k: int
    adoption: Mapping[Tuple[int, int], Tuple[Tuple[int, float], ...]]

    # derived lookup tables, filled in __post_init__
    item_class: Tuple[int, ...] = field(init=False, repr=False)
    beta: Tuple[float, ...] = field(init=False, repr=False)
    capacity: Tuple[int, ...] = field(init=False, repr=False)
    price: Tuple[Tuple[float, ...], ...] = field(init=False, repr=False)
    q_table: Dict[Tuple[int, int], List[float]] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        _validate(self)
        T = self.horizon
        set_ = object.__setattr__
        set_(self, "item_class", tuple(it.class_id for it in self.items))
        set_(self, "beta", tuple(float(it.saturation) for it in self.items))
        set_(self, "capacity", tuple(int(it.capacity) for it in self.items))
        # index 0 is padding so price[i][t] works with 1-based t
        set_(self, "price", tuple((0.0,) + tuple(float(p) for p in it.prices) for it in self.items))
        table: Dict[Tuple[int, int], List[float]] = {}
        for pair, entries in self.adoption.items():
            row = [0.0] * (T + 1)
            for t, p in entries:
                row[t] = p
            table[pair] = row
        set_(self, "q_table", table)

    # -- convenience ---------------------------------------------------------

    @property
    def num_items(self) -> int:
        return len(self.items)

    def q(self, user: int, item: int, time: int) -> float:
        """Primitive adoption probability (0 when not stored)."""
        row = self.q_table.get((user, item))
        return row[time] if row is not None else 0.0

    def positive_triples(self) -> List[Triple]:
        """All triples with a positive primitive probability, in lexicographic order."""
        out = []
        for (u, i) in sorted(self.adoption):
            for t, _ in self.adoption[(u, i)]:
                out.append(Triple(u, i, t))
        return out

    def num_positive(self) -> int:
        return sum(len(v) for v in self.adoption.values())

    def pairs_by_user(self) -> Dict[int, List[int]]:
        out: Dict[int, List[int]] = {}
        for (u, i) in sorted(self.adoption):
            out.setdefault(u, []).append(i)
        return out

    def replace(self, **changes) -> "Instance":
        """Copy with some constructor fields replaced (re-validated)."""
        kwargs = dict(
            num_users=self.num_users,
            items=self.items,
            horizon=self.horizon,
            display_k=self.display_k,
            adoption=self.adoption,
        )
        kwargs.update(changes)
        return Instance(**kwargs)

    def with_saturation(self, beta: float) -> "Instance":
        items = tuple(
            ItemSpec(it.item_id, it.class_id, it.capacity, beta, it.prices) for it in self.items
        )
        return self.replace(items=items)


def _validate(inst: Instance) -> None:
    T = inst.horizon
    if not isinstance(T, int) or T < 1:
        raise InstanceValidationError(f"horizon must be an integer >= 1, got {T!r}")
    if not isinstance(inst.display_k, int) or inst.display_k < 1:
        raise InstanceValidationError(f"display_k must be an integer >= 1, got {inst.display_k!r}")
    if not isinstance(inst.num_users, int) or inst.num_users < 0:
        raise InstanceValidationError(f"num_users must be a non-negative integer, got {inst.num_users!r}")
    for idx, it in enumerate(inst.items):
        if it.item_id != idx:
            raise InstanceValidationError(f"item at position {idx} has id {it.item_id}; ids must be 0..n-1 in order")
        if it.capacity < 0:
            raise InstanceValidationError(f"item {idx}: capacity {it.capacity} < 0")
        if not 0.0 <= it.saturation <= 1.0:
            raise InstanceValidationError(f"item {idx}: saturation {it.saturation} outside [0, 1]")
        if len(it.prices) != T:
            raise InstanceValidationError(f"item {idx}: expected {T} prices, got {len(it.prices)}")
        for t, p in enumerate(it.prices, start=1):
            if not p >= 0.0:
                raise InstanceValidationError(f"item {idx}: price at time {t} is {p}, must be >= 0")
    n_items = len(inst.items)
    for (u, i), entries in inst.adoption.items():
        if not 0 <= u < inst.num_users:
            raise InstanceValidationError(f"adoption entry for user {u} out of range [0, {inst.num_users})")
        if not 0 <= i < n_items:
            raise InstanceValidationError(f"adoption entry for item {i} out of range [0, {n_items})")
        prev = 0
        for t, p in entries:
            if not 1 <= t <= T:
                raise InstanceValidationError(f"adoption ({u},{i},{t}): time outside [1, {T}]")
            if t <= prev:
                raise InstanceValidationError(f"adoption ({u},{i}): times must be strictly increasing")
            prev = t
            if not 0.0 < p <= 1.0:
                raise InstanceValidationError(f"adoption ({u},{i},{t}): probability {p} outside (0, 1]")


def build_instance(
    num_users: int,
    items: Sequence[ItemSpec],
    horizon: int,
    display_k: int,
    entries: Iterable[Tuple[int, int, int, float]],
) -> Instance:
    """Assemble an Instance from flat ``(user, item, time, prob)`` records.

    Duplicate ``(user, item, time)`` keys raise :class:`InstanceParseError`.
    """
    grouped: Dict[Tuple[int, int], Dict[int, float]] = {}
    for u, i, t, p in entries:
        slot = grouped.setdefault((u, i), {})
        if t in slot:
            raise InstanceParseError(f"duplicate adoption key ({u},{i},{t})")
        slot[t] = p
    adoption = {pair: tuple(sorted(times.items())) for pair, times in grouped.items()}
    return Instance(
        num_users=num_users,
        items=tuple(items),
        horizon=horizon,
        display_k=display_k,
        adoption=adoption,
    )


# -- file format -------------------------------------------------------------


def instance_to_text(inst: Instance) -> str:
    """Canonical JSON text: fixed key order, adoption sorted by (user, item, time)."""
    lines = ["{"]
    lines.append(f'  "num_users": {inst.num_users},')
    lines.append(f'  "horizon": {inst.horizon},')
    lines.append(f'  "display_k": {inst.display_k},')
    lines.append('  "items": [')
    item_lines = []
    for it in inst.items:
        obj = {
            "id": it.item_id,
            "class": it.class_id,
            "capacity": it.capacity,
            "beta": float(it.saturation),
            "prices": [float(p) for p in it.prices],
        }
        item_lines.append("    " + json.dumps(obj))
    lines.append(",\n".join(item_lines))
    lines.append("  ],")
    lines.append('  "adoption": [')
    adopt_lines = []
    for (u, i) in sorted(inst.adoption):
        for t, p in inst.adoption[(u, i)]:
            adopt_lines.append(
                "    " + json.dumps({"user": u, "item": i, "time": t, "prob": float(p)})
            )
    lines.append(",\n".join(adopt_lines))
    lines.append("  ]")
    lines.append("}")
    return "\n".join(line for line in lines if line != "") + "\n"


def instance_from_text(text: str) -> Instance:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceParseError(f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise InstanceParseError("top level must be an object")
    missing = [k for k in ("num_users", "horizon", "display_k", "items", "adoption") if k not in doc]
    if missing:
        raise InstanceParseError(f"missing top-level fields: {', '.join(missing)}")
    try:
        items = [
            ItemSpec(
                item_id=int(obj["id"]),
                class_id=int(obj["class"]),
                capacity=int(obj["capacity"]),
                saturation=float(obj["beta"]),
                prices=tuple(float(p) for p in obj["prices"]),
            )
            for obj in doc["items"]
        ]
        entries = [
            (int(a["user"]), int(a["item"]), int(a["time"]), float(a["prob"])) for a in doc["adoption"]
        ]
    except (KeyError, TypeError, ValueError) as exc:
        raise InstanceParseError(f"malformed item or adoption record: {exc!r}") from exc
    return build_instance(doc["num_users"], items, doc["horizon"], doc["display_k"], entries)


def load_instance(path) -> Instance:
    return instance_from_text(Path(path).read_text())


def save_instance(inst: Instance, path) -> None:
    Path(path).write_text(instance_to_text(inst))


def fingerprint(inst: Instance) -> str:
    """SHA-256 of the canonical file bytes."""
    return hashlib.sha256(instance_to_text(inst).encode()).hexdigest()


# -- strategies --------------------------------------------------------------


class Strategy:
    """A set of triples with the indexes solvers need for O(1) constraint checks.

    ``per_user_class[(u, c)]`` is kept sorted by time as a list of ``(time, item)``.
    """

    __slots__ = ("inst", "triples", "per_user_time_count", "per_item_users", "per_user_class", "_pair_count")

    def __init__(self, inst: Instance, triples: Iterable[Tuple[int, int, int]] = ()) -> None:
        self.inst = inst
        self.triples: Set[Triple] = set()
        self.per_user_time_count: Dict[Tuple[int, int], int] = {}
        self.per_item_users: Dict[int, Set[int]] = {}
        self.per_user_class: Dict[Tuple[int, int], List[Tuple[int, int]]] = {}
        self._pair_count: Dict[Tuple[int, int], int] = {}
        for z in triples:
            self.add(Triple(*z))

    def __contains__(self, z) -> bool:
        return z in self.triples

    def __len__(self) -> int:
        return len(self.triples)

    def __iter__(self) -> Iterator[Triple]:
        return iter(sorted(self.triples))

    def add(self, z: Triple) -> None:
        if z in self.triples:
            raise ValueError(f"{z} already in strategy")
        u, i, t = z
        self.triples.add(z)
        key = (u, t)
        self.per_user_time_count[key] = self.per_user_time_count.get(key, 0) + 1
        pc = self._pair_count.get((u, i), 0)
        if pc == 0:
            self.per_item_users.setdefault(i, set()).add(u)
        self._pair_count[(u, i)] = pc + 1
        bisect.insort(self.per_user_class.setdefault((u, self.inst.item_class[i]), []), (t, i))

    def remove(self, z: Triple) -> None:
        if z not in self.triples:
            raise KeyError(z)
        u, i, t = z
        self.triples.remove(z)
        key = (u, t)
        n = self.per_user_time_count[key] - 1
        if n:
            self.per_user_time_count[key] = n
        else:
            del self.per_user_time_count[key]
        pc = self._pair_count[(u, i)] - 1
        if pc:
            self._pair_count[(u, i)] = pc
        else:
            del self._pair_count[(u, i)]
            users = self.per_item_users[i]
            users.discard(u)
            if not users:
                del self.per_item_users[i]
        group_key = (u, self.inst.item_class[i])
        group = self.per_user_class[group_key]
        group.remove((t, i))
        if not group:
            del self.per_user_class[group_key]

    def group(self, user: int, class_id: int) -> List[Tuple[int, int]]:
        return self.per_user_class.get((user, class_id), [])

    def slot_count(self, user: int, time: int) -> int:
        return self.per_user_time_count.get((user, time), 0)

    def users_of(self, item: int) -> Set[int]:
        return self.per_item_users.get(item, set())

    def pair_count(self, user: int, item: int) -> int:
        return self._pair_count.get((user, item), 0)

    def can_add(self, z: Triple) -> bool:
        """Would adding ``z`` keep both the display and capacity constraints?"""
        u, i, t = z
        if self.per_user_time_count.get((u, t), 0) >= self.inst.display_k:
            return False
        if self._pair_count.get((u, i), 0) == 0 and len(self.per_item_users.get(i, ())) >= self.inst.capacity[i]:
            return False
        return True

    def copy(self) -> "Strategy":
        new = Strategy.__new__(Strategy)
        new.inst = self.inst
        new.triples = set(self.triples)
        new.per_user_time_count = dict(self.per_user_time_count)
        new.per_item_users = {i: set(us) for i, us in self.per_item_users.items()}
        new.per_user_class = {k: list(v) for k, v in self.per_user_class.items()}
        new._pair_count = dict(self._pair_count)
        return new

    def check_indexes(self) -> bool:
        """True iff the incremental indexes equal a from-scratch rebuild."""
        fresh = Strategy(self.inst, self.triples)
        return (
            fresh.per_user_time_count == self.per_user_time_count
            and fresh.per_item_users == self.per_item_users
            and fresh.per_user_class == self.per_user_class
            and fresh._pair_count == self._pair_count
        )

    def __repr__(self) -> str:
        return f"Strategy({sorted(self.triples)!r})"


@dataclass
class ValidityReport:
    display_violations: List[Tuple[int, int]]
    capacity_violations: List[int]

    @property
    def display_ok(self) -> bool:
        return not self.display_violations

    @property
    def capacity_ok(self) -> bool:
        return not self.capacity_violations

    @property
    def valid(self) -> bool:
        return self.display_ok and self.capacity_ok


def validate_strategy(inst: Instance, s) -> ValidityReport:
    """Check the display and capacity constraints of ``s``.

    ``s`` may be a :class:`Strategy` or any iterable of triples.
    """
    if not isinstance(s, Strategy):
        s = Strategy(inst, s)
    display = sorted(key for key, n in s.per_user_time_count.items() if n > inst.display_k)
    capacity = sorted(i for i, users in s.per_item_users.items() if len(users) > inst.capacity[i])
    return ValidityReport(display, capacity)


def repeat_histogram(triples: Iterable[Tuple[int, int, int]]) -> Dict[int, int]:
    """Map repeat-count -> number of (user, item) pairs recommended that many times."""
    counts: Dict[Tuple[int, int], int] = {}
    for u, i, _ in triples:
        counts[(u, i)] = counts.get((u, i), 0) + 1
    hist: Dict[int, int] = {}
    for n in counts.values():
        hist[n] = hist.get(n, 0) + 1
    return dict(sorted(hist.items()))
