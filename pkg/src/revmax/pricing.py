"""Price distributions, primitive adoption probabilities, and expected revenue
under random prices via a second-order Taylor expansion."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .model import Instance, ItemSpec, Strategy, build_instance

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)

PAPER = "paper-gaussian"
MIXTURE = "mixture"


def silverman_bandwidth(samples: Sequence[float]) -> float:
    """Rule-of-thumb Gaussian-kernel bandwidth ``(4 s^5 / (3 n))^(1/5)``.

    ``s`` is the sample standard deviation (divisor ``n - 1``).
    """
    x = np.asarray(samples, dtype=float)
    n = x.size
    if n < 2:
        raise ValueError("need at least two samples")
    sd = float(np.std(x, ddof=1))
    if sd == 0.0:
        raise ValueError("samples are degenerate (zero standard deviation)")
    return (4.0 * sd**5 / (3.0 * n)) ** 0.2


@dataclass(frozen=True)
class KdeModel:
    """Fitted price/valuation distribution for one item.

    In ``paper-gaussian`` mode the distribution is a single Gaussian with
    ``mu = sum(p) / (n h)`` and ``sigma = sqrt(h)``. In ``mixture`` mode it is the
    kernel mixture itself; ``mu``/``sigma`` then hold its exact mean and
    standard deviation.
    """

    samples: Tuple[float, ...]
    bandwidth: float
    mu: float
    sigma: float
    mode: str = MIXTURE


def fit_kde(samples: Sequence[float], mode: str = MIXTURE, bandwidth: Optional[float] = None) -> KdeModel:
    x = np.asarray(samples, dtype=float)
    if x.size < 1:
        raise ValueError("need at least one sample")
    h = silverman_bandwidth(x) if bandwidth is None else float(bandwidth)
    if not h > 0.0:
        raise ValueError("bandwidth must be positive")
    n = x.size
    if mode == PAPER:
        mu = float(x.sum()) / (n * h)
        sigma = math.sqrt(h)
    elif mode == MIXTURE:
        mu = float(x.mean())
        sigma = math.sqrt(float(x.var()) + h * h)
    else:
        raise ValueError(f"unknown KDE mode {mode!r}")
    return KdeModel(tuple(float(v) for v in x), h, mu, sigma, mode)


def _normal_tail(p: float, mean: float, sd: float) -> Tuple[float, float, float]:
    """Upper tail of N(mean, sd^2) at ``p`` with its first and second derivative in ``p``."""
    x = (p - mean) / sd
    phi = _INV_SQRT_2PI * math.exp(-0.5 * x * x)
    return 0.5 * math.erfc(x / _SQRT2), -phi / sd, x * phi / (sd * sd)


def valuation_tail_derivs(model: KdeModel, price: float) -> Tuple[float, float, float]:
    """``P[valuation >= price]`` and its first two derivatives with respect to price."""
    if model.mode == PAPER:
        return _normal_tail(price, model.mu, model.sigma)
    n = len(model.samples)
    v = d1 = d2 = 0.0
    for pj in model.samples:
        a, b, c = _normal_tail(price, pj, model.bandwidth)
        v += a
        d1 += b
        d2 += c
    return v / n, d1 / n, d2 / n


def valuation_tail(model: KdeModel, price: float) -> float:
    return valuation_tail_derivs(model, price)[0]


def primitive_adoption(pred_rating: float, r_max: float, tail: float) -> float:
    """Primitive adoption probability: valuation tail scaled by the normalized rating."""
    if not r_max > 0.0:
        raise ValueError("r_max must be positive")
    if not 0.0 <= pred_rating <= r_max:
        raise ValueError(f"predicted rating {pred_rating} outside [0, {r_max}]")
    if not 0.0 <= tail <= 1.0:
        raise ValueError(f"tail probability {tail} outside [0, 1]")
    return min(1.0, max(0.0, tail * pred_rating / r_max))


def sample_prices(model: KdeModel, t_steps: int, seed: int) -> np.ndarray:
    """Draw ``t_steps`` prices from the fitted distribution; negatives clamp to 0."""
    rng = np.random.default_rng(seed)
    if model.mode == PAPER:
        draws = rng.normal(model.mu, model.sigma, size=t_steps)
    else:
        centers = np.asarray(model.samples)[rng.integers(len(model.samples), size=t_steps)]
        draws = rng.normal(centers, model.bandwidth)
    return np.maximum(draws, 0.0)


def build_adoption(
    inst: Instance,
    ratings: Mapping[Tuple[int, int], float],
    models: Mapping[int, KdeModel],
    r_max: float,
) -> Instance:
    """Replace ``inst``'s adoption block with probabilities built from ratings
    and fitted valuation models, at the instance's own prices."""
    entries = []
    for (u, i), r in sorted(ratings.items()):
        model = models.get(i)
        if model is None:
            continue
        for t in range(1, inst.horizon + 1):
            q = primitive_adoption(r, r_max, valuation_tail(model, inst.price[i][t]))
            if q > 0.0:
                entries.append((u, i, t, q))
    return build_instance(inst.num_users, inst.items, inst.horizon, inst.display_k, entries)


# -- random prices -----------------------------------------------------------

PriceKey = Tuple[int, int]  # (item, time)


@dataclass
class RandomPriceModel:
    """Per-(item, time) price means and covariances.

    ``valuations`` and ``rating_scale`` describe how a price maps to a primitive
    adoption probability: for a pair ``(u, i)`` with both an item model and a
    rating scale ``r/r_max``, ``q(u, i, t) = scale * tail_i(price)``. Other
    pairs keep the instance's fixed probability.
    """

    means: Dict[PriceKey, float]
    cov: Dict[Tuple[PriceKey, PriceKey], float] = field(default_factory=dict)
    valuations: Dict[int, KdeModel] = field(default_factory=dict)
    rating_scale: Dict[Tuple[int, int], float] = field(default_factory=dict)
    off_diagonal_default: Optional[float] = None

    def covariance(self, a: PriceKey, b: PriceKey) -> float:
        if (a, b) in self.cov:
            return self.cov[(a, b)]
        if (b, a) in self.cov:
            return self.cov[(b, a)]
        if a != b and self.off_diagonal_default is not None:
            return self.off_diagonal_default
        raise KeyError(f"missing covariance entry for {a}, {b}")

    def adoption(self, inst: Instance, u: int, i: int, t: int, price: float) -> Tuple[float, float, float]:
        model = self.valuations.get(i)
        scale = self.rating_scale.get((u, i))
        if model is None or scale is None:
            return inst.q(u, i, t), 0.0, 0.0
        v, d1, d2 = valuation_tail_derivs(model, price)
        return scale * v, scale * d1, scale * d2


def instance_at_means(inst: Instance, prices: RandomPriceModel) -> Instance:
    """The exact-price instance obtained by fixing every price at its mean."""
    items = []
    for it in inst.items:
        ps = tuple(prices.means.get((it.item_id, t), it.prices[t - 1]) for t in range(1, inst.horizon + 1))
        items.append(ItemSpec(it.item_id, it.class_id, it.capacity, it.saturation, ps))
    entries = []
    for (u, i), row in inst.q_table.items():
        for t in range(1, inst.horizon + 1):
            if row[t] <= 0.0:
                continue
            q = prices.adoption(inst, u, i, t, items[i].prices[t - 1])[0]
            if q > 0.0:
                entries.append((u, i, t, min(1.0, q)))
    return build_instance(inst.num_users, items, inst.horizon, inst.display_k, entries)


@dataclass
class _Contribution:
    """One triple's revenue contribution as a product of one-coordinate factors."""

    keys: List[PriceKey]  # price coordinates; index 0 is the triple's own price
    users: List[int]
    constant: float  # saturation discount, independent of prices

    def factors(self, inst: Instance, prices: RandomPriceModel, x: Sequence[float]):
        out = []
        for a, ((i, t), u) in enumerate(zip(self.keys, self.users)):
            f, f1, f2 = prices.adoption(inst, u, i, t, x[a])
            if a == 0:
                out.append((x[a] * f, f + x[a] * f1, 2.0 * f1 + x[a] * f2))
            else:
                out.append((1.0 - f, -f1, -f2))
        return out

    def value(self, inst: Instance, prices: RandomPriceModel, x: Sequence[float]) -> float:
        v = self.constant
        for h, _, _ in self.factors(inst, prices, x):
            v *= h
        return v

    def hessian(self, inst: Instance, prices: RandomPriceModel, x: Sequence[float]) -> np.ndarray:
        fac = self.factors(inst, prices, x)
        n = len(fac)
        H = np.zeros((n, n))
        for a in range(n):
            for b in range(n):
                v = self.constant
                for c, (h, h1, h2) in enumerate(fac):
                    if c == a and c == b:
                        v *= h2
                    elif c == a or c == b:
                        v *= h1
                    else:
                        v *= h
                H[a, b] = v
        return H


def _contributions(inst: Instance, s: Strategy) -> List[_Contribution]:
    out = []
    for (u, _c), members in sorted(s.per_user_class.items()):
        for t, i in members:
            keys = [(i, t)]
            mem = 0.0
            for t2, j in members:
                if t2 < t:
                    mem += 1.0 / (t - t2)
                    keys.append((j, t2))
                elif t2 == t and j != i:
                    keys.append((j, t2))
            out.append(_Contribution(keys, [u] * len(keys), inst.beta[i] ** mem))
    return out


def hessian_fd(g: Callable[[np.ndarray], float], x: Sequence[float]) -> np.ndarray:
    """Central-difference Hessian with step ``max(1e-4 |x_a|, 1e-6)`` per coordinate."""
    x = np.asarray(x, dtype=float)
    n = x.size
    steps = np.maximum(1e-4 * np.abs(x), 1e-6)
    H = np.zeros((n, n))
    g0 = g(x)
    for a in range(n):
        e_a = np.zeros(n)
        e_a[a] = steps[a]
        H[a, a] = (g(x + e_a) - 2.0 * g0 + g(x - e_a)) / steps[a] ** 2
        for b in range(a + 1, n):
            e_b = np.zeros(n)
            e_b[b] = steps[b]
            H[a, b] = H[b, a] = (
                g(x + e_a + e_b) - g(x + e_a - e_b) - g(x - e_a + e_b) + g(x - e_a - e_b)
            ) / (4.0 * steps[a] * steps[b])
    return H


def taylor_expected_revenue(
    inst: Instance, s, prices: RandomPriceModel, hessian: str = "analytic"
) -> float:
    """Second-order approximation of expected revenue when prices are random.

    Each triple's contribution is expanded around the mean price vector of the
    triples competing with it (same user and class, at or before its time).
    """
    if not isinstance(s, Strategy):
        s = Strategy(inst, s)
    total = []
    for contrib in _contributions(inst, s):
        x = np.array([prices.means[key] for key in contrib.keys])
        g0 = contrib.value(inst, prices, x)
        if hessian == "analytic":
            H = contrib.hessian(inst, prices, x)
        elif hessian == "fd":
            H = hessian_fd(lambda y: contrib.value(inst, prices, y), x)
        else:
            raise ValueError(f"unknown hessian method {hessian!r}")
        second = 0.0
        n = len(contrib.keys)
        for a in range(n):
            second += 0.5 * H[a, a] * prices.covariance(contrib.keys[a], contrib.keys[a])
            for b in range(a + 1, n):
                second += H[a, b] * prices.covariance(contrib.keys[a], contrib.keys[b])
        total.append(g0 + second)
    return math.fsum(total)
