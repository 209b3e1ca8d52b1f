"""Knapsack instances, the large/small/garbage partition and efficiency buckets.

All quantities are exact :class:`fractions.Fraction` values. Instances built
from raw integer data via :func:`normalize` have total profit 1 and total
weight 1; the capacity is scaled by the same weight factor.
"""

from __future__ import annotations

import json
import math
from bisect import bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, NamedTuple, Sequence

import numpy as np


def as_fraction(value) -> Fraction:
    """Coerce ints, strings, Fractions and floats (via their repr) to Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        return Fraction(repr(value))
    return Fraction(value)


def check_epsilon(epsilon) -> Fraction:
    eps = as_fraction(epsilon)
    if not 0 < eps <= 1:
        raise ValueError(f"epsilon must lie in (0, 1], got {eps}")
    return eps


class InstanceError(ValueError):
    """Raised for malformed instance data."""


@dataclass(frozen=True)
class Item:
    profit: Fraction
    weight: Fraction
    index: int

    @property
    def efficiency(self) -> Fraction:
        return self.profit / self.weight


@dataclass(frozen=True, eq=False)
class KnapsackInstance:
    """An immutable item list plus capacity.

    ``profit_denominator`` (B') and ``weight_denominator`` (B) are the least
    common denominators of the profits and of the weights/capacity, so every
    profit is a multiple of 1/B' and every weight a multiple of 1/B.

    ``feasibility_only`` instances carry all-zero profits and may contain
    zero weights; they exist for the maximal-solution hardness family.
    """

    items: tuple[Item, ...]
    capacity: Fraction
    feasibility_only: bool = False
    raw: tuple[tuple[int, ...], tuple[int, ...], int] | None = field(default=None, repr=False)

    def __post_init__(self):
        if not self.items:
            raise InstanceError("instance has no items")
        if self.capacity <= 0:
            raise InstanceError(f"capacity must be positive, got {self.capacity}")
        # integer cross-multiplication; Fraction comparisons dominate otherwise
        cap_n, cap_d = self.capacity.numerator, self.capacity.denominator
        for pos, item in enumerate(self.items):
            if item.index != pos:
                raise InstanceError(f"item at position {pos} carries index {item.index}")
            p, w = item.profit, item.weight
            if p.numerator < 0:
                raise InstanceError(f"item {pos} has negative profit")
            if w.numerator * cap_d > cap_n * w.denominator:
                raise InstanceError(
                    f"item {pos} has weight {w} exceeding capacity {self.capacity}"
                )
            if self.feasibility_only:
                if w.numerator < 0 or p.numerator != 0:
                    raise InstanceError(f"item {pos}: feasibility-only items need p=0, w>=0")
            elif w.numerator <= 0:
                raise InstanceError(f"item {pos} has non-positive weight")
        if not self.feasibility_only and sum(i.profit for i in self.items) != 1:
            raise InstanceError("profits must sum to exactly 1")

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple], capacity, **kwargs) -> "KnapsackInstance":
        """Build from (profit, weight) pairs that are already normalized."""
        items = tuple(
            Item(as_fraction(p), as_fraction(w), idx) for idx, (p, w) in enumerate(pairs)
        )
        return cls(items, as_fraction(capacity), **kwargs)

    def __len__(self) -> int:
        return len(self.items)

    def __getitem__(self, index: int) -> Item:
        return self.items[index]

    @cached_property
    def profit_denominator(self) -> int:
        return math.lcm(*(i.profit.denominator for i in self.items))

    @cached_property
    def weight_denominator(self) -> int:
        return math.lcm(self.capacity.denominator, *(i.weight.denominator for i in self.items))

    @cached_property
    def profit_numerators(self) -> np.ndarray:
        """Profits scaled by B' as exact integers (object dtype if they overflow int64)."""
        scale = self.profit_denominator
        nums = [int(i.profit * scale) for i in self.items]
        return _int_array(nums)

    @cached_property
    def weight_numerators(self) -> np.ndarray:
        scale = self.weight_denominator
        return _int_array([int(i.weight * scale) for i in self.items])

    @cached_property
    def integer_capacity(self) -> int:
        return int(self.capacity * self.weight_denominator)

    @cached_property
    def profit_floats(self) -> np.ndarray:
        return np.array([float(i.profit) for i in self.items])

    def total_weight(self, indices: Iterable[int]) -> Fraction:
        return sum((self.items[i].weight for i in indices), Fraction(0))

    def total_profit(self, indices: Iterable[int]) -> Fraction:
        return sum((self.items[i].profit for i in indices), Fraction(0))

    def is_feasible(self, indices: Iterable[int]) -> bool:
        return self.total_weight(indices) <= self.capacity

    # memo for per-epsilon views; holds only functions of the instance itself
    @cached_property
    def _memo(self) -> dict:
        return {}


def _int_array(values: Sequence[int]) -> np.ndarray:
    if values and max(abs(v) for v in values) >= 2**62:
        return np.array(values, dtype=object)
    return np.array(values, dtype=np.int64)


def normalize(raw_items: Sequence[tuple[int, int]], capacity: int) -> KnapsackInstance:
    """Turn raw integer (profit, weight) pairs into a normalized instance.

    Profits are divided by their total and weights and capacity by the total
    weight, so both sum to 1. The raw data is kept for lossless writing.
    """
    if not raw_items:
        raise InstanceError("empty item list")
    profits = [int(p) for p, _ in raw_items]
    weights = [int(w) for _, w in raw_items]
    capacity = int(capacity)
    if capacity < 1:
        raise InstanceError(f"capacity must be a positive integer, got {capacity}")
    for idx, (p, w) in enumerate(zip(profits, weights)):
        if p < 0:
            raise InstanceError(f"item {idx}: negative raw profit {p}")
        if not 1 <= w <= capacity:
            raise InstanceError(f"item {idx}: raw weight {w} outside [1, {capacity}]")
    total_p = sum(profits)
    if total_p == 0:
        raise InstanceError("total raw profit is zero")
    total_w = sum(weights)
    items = tuple(
        Item(Fraction(p, total_p), Fraction(w, total_w), idx)
        for idx, (p, w) in enumerate(zip(profits, weights))
    )
    return KnapsackInstance(
        items, Fraction(capacity, total_w), raw=(tuple(profits), tuple(weights), capacity)
    )


def raw_form(instance: KnapsackInstance) -> tuple[list[int], list[int], int]:
    if instance.raw is not None:
        profits, weights, capacity = instance.raw
        return list(profits), list(weights), capacity
    return (
        [int(v) for v in instance.profit_numerators],
        [int(v) for v in instance.weight_numerators],
        instance.integer_capacity,
    )


def dumps_instance(instance: KnapsackInstance) -> str:
    profits, weights, capacity = raw_form(instance)
    doc = {"capacity": capacity, "items": [{"p": p, "w": w} for p, w in zip(profits, weights)]}
    return json.dumps(doc, separators=(",", ":")) + "\n"


def loads_instance(text: str) -> KnapsackInstance:
    doc = json.loads(text)
    try:
        pairs = [(entry["p"], entry["w"]) for entry in doc["items"]]
        capacity = doc["capacity"]
    except (KeyError, TypeError) as exc:
        raise InstanceError(f"malformed instance document: {exc}") from exc
    return normalize(pairs, capacity)


def save_instance(instance: KnapsackInstance, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_instance(instance))


def load_instance(path) -> KnapsackInstance:
    with open(path, encoding="utf-8") as fh:
        return loads_instance(fh.read())


@dataclass(frozen=True)
class Partition:
    epsilon: Fraction
    large: frozenset[int]
    small: frozenset[int]
    garbage: frozenset[int]


def partition(instance: KnapsackInstance, epsilon) -> Partition:
    eps = check_epsilon(epsilon)
    key = ("partition", eps)
    memo = instance._memo
    if key not in memo:
        eps2 = eps * eps
        large, small, garbage = [], [], []
        for item in instance.items:
            if item.profit > eps2:
                large.append(item.index)
            elif item.profit >= eps2 * item.weight:
                small.append(item.index)
            else:
                garbage.append(item.index)
        memo[key] = Partition(eps, frozenset(large), frozenset(small), frozenset(garbage))
    return memo[key]


@dataclass(frozen=True)
class EfficiencySequence:
    """Non-increasing efficiency thresholds e_1 >= ... >= e_t."""

    thresholds: tuple[Fraction, ...]
    epsilon: Fraction

    def __post_init__(self):
        for a, b in zip(self.thresholds, self.thresholds[1:]):
            if a < b:
                raise ValueError(f"thresholds must be non-increasing: {a} < {b}")
        if len(self.thresholds) > math.floor(1 / self.epsilon):
            raise ValueError(
                f"sequence length {len(self.thresholds)} exceeds floor(1/eps) for eps={self.epsilon}"
            )

    @classmethod
    def of(cls, thresholds: Iterable, epsilon) -> "EfficiencySequence":
        return cls(tuple(as_fraction(e) for e in thresholds), check_epsilon(epsilon))

    def __len__(self) -> int:
        return len(self.thresholds)


class SmallItemView(NamedTuple):
    """S(I) sorted by efficiency (non-increasing, ties by index) with prefix sums."""

    order: tuple[int, ...]
    efficiencies: tuple[Fraction, ...]
    # negated efficiencies ascending, for bisect
    neg_efficiencies: tuple[Fraction, ...]
    profit_prefix: tuple[Fraction, ...]
    weight_prefix: tuple[Fraction, ...]


def small_item_view(instance: KnapsackInstance, epsilon) -> SmallItemView:
    eps = check_epsilon(epsilon)
    key = ("small-view", eps)
    memo = instance._memo
    if key not in memo:
        part = partition(instance, eps)
        order = sorted(part.small, key=lambda i: (-instance[i].efficiency, i))
        effs = tuple(instance[i].efficiency for i in order)
        pp, wp = [Fraction(0)], [Fraction(0)]
        for i in order:
            pp.append(pp[-1] + instance[i].profit)
            wp.append(wp[-1] + instance[i].weight)
        memo[key] = SmallItemView(tuple(order), effs, tuple(-e for e in effs), tuple(pp), tuple(wp))
    return memo[key]


def count_at_least(view: SmallItemView, threshold: Fraction) -> int:
    """Number of small items with efficiency >= threshold (a prefix of ``view.order``)."""
    return bisect_right(view.neg_efficiencies, -threshold)


def _bucket_bounds(view: SmallItemView, seq: EfficiencySequence) -> list[int]:
    # cut[k] = #items with efficiency >= e_k, so bucket k spans cut[k]..cut[k+1]
    return [0] + [count_at_least(view, e) for e in seq.thresholds] + [len(view.order)]


def bucketize(instance: KnapsackInstance, epsilon, seq: EfficiencySequence) -> list[frozenset[int]]:
    """Split S(I) into A_0..A_t by the thresholds.

    A_0 takes efficiency >= e_1, A_k takes e_k > eff >= e_{k+1} and A_t takes
    eff < e_t. With an empty sequence the single bucket A_0 is all of S(I).
    """
    view = small_item_view(instance, epsilon)
    cuts = _bucket_bounds(view, seq)
    return [frozenset(view.order[cuts[k] : cuts[k + 1]]) for k in range(len(cuts) - 1)]


class EpsCheck(NamedTuple):
    valid: bool
    bucket_profits: tuple[Fraction, ...]

    def __bool__(self) -> bool:
        return self.valid


def is_eps(instance: KnapsackInstance, epsilon, seq: EfficiencySequence) -> EpsCheck:
    """Check whether ``seq`` equally partitions the small items of ``instance``.

    Buckets A_0..A_{t-1} need profit in [eps, eps + eps^2) and the tail A_t
    profit in [0, eps + eps^2).
    """
    eps = check_epsilon(epsilon)
    view = small_item_view(instance, eps)
    cuts = _bucket_bounds(view, seq)
    profits = tuple(
        view.profit_prefix[cuts[k + 1]] - view.profit_prefix[cuts[k]] for k in range(len(cuts) - 1)
    )
    upper = eps + eps * eps
    ok = all(eps <= p < upper for p in profits[:-1]) and profits[-1] < upper
    return EpsCheck(ok, profits)
