"""Seeded synthetic instance generator."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Tuple, Union

import numpy as np

from .model import Instance, ItemSpec, build_instance

MAX_REDRAWS = 100


def parse_capacity_dist(spec: str) -> Tuple[str, Tuple[float, ...]]:
    """Parse ``gaussian:MU,SIGMA`` or ``exponential:RATE``."""
    name, _, rest = spec.partition(":")
    try:
        params = tuple(float(x) for x in rest.split(",")) if rest else ()
    except ValueError:
        raise ValueError(f"bad capacity distribution {spec!r}") from None
    if name == "gaussian" and len(params) == 2 and params[1] >= 0:
        return name, params
    if name == "exponential" and len(params) == 1 and params[0] > 0:
        return name, params
    raise ValueError(f"bad capacity distribution {spec!r}; expected gaussian:MU,SIGMA or exponential:RATE")


@dataclass(frozen=True)
class SynthConfig:
    num_users: int = 100
    num_items: int = 200
    horizon: int = 5
    items_per_user: int = 100
    num_classes: int = 50
    display_k: int = 5
    capacity_dist: str = "gaussian:5000,300"
    price_base_range: Tuple[float, float] = (10.0, 500.0)
    adoption_sigma: float = math.sqrt(0.1)
    # "uniform" draws each item's factor from U[0, 1]; a number fixes it for all items
    saturation: Union[str, float] = "uniform"
    seed: int = 0

    def validate(self) -> None:
        if self.num_users < 1 or self.num_items < 1 or self.horizon < 1 or self.display_k < 1:
            raise ValueError("num_users, num_items, horizon and display_k must be >= 1")
        if not 1 <= self.items_per_user <= self.num_items:
            raise ValueError(f"items_per_user must lie in [1, {self.num_items}], got {self.items_per_user}")
        if not 1 <= self.num_classes <= self.num_items:
            raise ValueError(f"num_classes must lie in [1, {self.num_items}], got {self.num_classes}")
        lo, hi = self.price_base_range
        if not 0.0 <= lo < hi:
            raise ValueError(f"price_base_range must satisfy 0 <= lo < hi, got {self.price_base_range}")
        if not self.adoption_sigma > 0.0:
            raise ValueError("adoption_sigma must be positive")
        if self.saturation != "uniform":
            b = float(self.saturation)
            if not 0.0 <= b <= 1.0:
                raise ValueError(f"saturation must be 'uniform' or in [0, 1], got {self.saturation!r}")
        parse_capacity_dist(self.capacity_dist)


def _draw_capacities(rng: np.random.Generator, spec: str, n: int) -> List[int]:
    name, params = parse_capacity_dist(spec)
    if name == "gaussian":
        raw = rng.normal(params[0], params[1], size=n)
    else:
        raw = rng.exponential(1.0 / params[0], size=n)
    return [max(1, int(round(v))) for v in raw]


def _positive_normal(rng: np.random.Generator, mean: float, sd: float, size: int) -> np.ndarray:
    vals = rng.normal(mean, sd, size=size)
    for _ in range(MAX_REDRAWS):
        bad = vals <= 0.0
        if not bad.any():
            return np.minimum(vals, 1.0)
        vals[bad] = rng.normal(mean, sd, size=int(bad.sum()))
    raise RuntimeError(f"could not draw positive adoption values after {MAX_REDRAWS} attempts (mean {mean})")


def generate(cfg: SynthConfig) -> Instance:
    """Build a synthetic instance; identical configs give identical instances.

    Item-level quantities come from one stream, and each user's adoption
    block from its own ``(seed, user)`` stream, so users are independent.
    """
    cfg.validate()
    T = cfg.horizon
    item_rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 0]))
    lo, hi = cfg.price_base_range
    base = item_rng.uniform(lo, hi, size=cfg.num_items)
    prices = item_rng.uniform(base[:, None], 2.0 * base[:, None], size=(cfg.num_items, T))
    centers = item_rng.uniform(0.0, 1.0, size=cfg.num_items)
    if cfg.saturation == "uniform":
        betas = item_rng.uniform(0.0, 1.0, size=cfg.num_items)
    else:
        betas = np.full(cfg.num_items, float(cfg.saturation))
    caps = _draw_capacities(item_rng, cfg.capacity_dist, cfg.num_items)
    items = [
        ItemSpec(i, i % cfg.num_classes, caps[i], float(betas[i]), tuple(float(p) for p in prices[i]))
        for i in range(cfg.num_items)
    ]
    # times of each item ordered by ascending price; ties keep time order
    price_order = np.argsort(prices, axis=1, kind="stable")

    entries = []
    for u in range(cfg.num_users):
        rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 1, u]))
        chosen = np.sort(rng.choice(cfg.num_items, size=cfg.items_per_user, replace=False))
        for i in chosen:
            vals = np.sort(_positive_normal(rng, centers[i], cfg.adoption_sigma, T))[::-1]
            for rank, t_idx in enumerate(price_order[i]):
                entries.append((u, int(i), int(t_idx) + 1, float(vals[rank])))
    return build_instance(cfg.num_users, items, T, cfg.display_k, entries)
