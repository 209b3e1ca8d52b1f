"""Reference solvers: exhaustive search, weight-indexed DP and greedy baselines."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .instance import KnapsackInstance

BRUTE_FORCE_LIMIT = 24
DP_CELL_BUDGET = 10**8


class OracleLimitError(ValueError):
    """The instance is too large for the requested oracle."""


@dataclass(frozen=True)
class SolveResult:
    chosen: frozenset[int]
    value: Fraction
    weight: Fraction

    @classmethod
    def of(cls, instance: KnapsackInstance, chosen) -> "SolveResult":
        chosen = frozenset(int(i) for i in chosen)
        return cls(chosen, instance.total_profit(chosen), instance.total_weight(chosen))

    def as_record(self) -> dict:
        return {
            "chosen": sorted(self.chosen),
            "value": str(self.value),
            "weight": str(self.weight),
        }


def _subset_table(values: np.ndarray) -> np.ndarray:
    """Sums over all subsets of ``values``; bit i of the position selects item i."""
    table = np.zeros(1, dtype=values.dtype)
    for v in values:
        table = np.concatenate((table, table + v))
    return table


def brute_force(instance: KnapsackInstance) -> SolveResult:
    """Exhaustive optimum; ties go to the lexicographically smallest index tuple."""
    n = len(instance)
    if n > BRUTE_FORCE_LIMIT:
        raise OracleLimitError(f"brute force is limited to {BRUTE_FORCE_LIMIT} items, got {n}")
    profits = instance.profit_numerators
    weights = instance.weight_numerators
    if profits.dtype == object or weights.dtype == object:
        raise OracleLimitError("brute force needs profit and weight numerators below 2**62")
    low = min(n, 16)
    lp, lw = _subset_table(profits[:low]), _subset_table(weights[:low])
    cap = instance.integer_capacity
    best, masks = -1, []
    for high_mask in range(1 << (n - low)):
        hp = hw = 0
        for bit in range(n - low):
            if high_mask >> bit & 1:
                hp += int(profits[low + bit])
                hw += int(weights[low + bit])
        if hw > cap:
            continue
        value = np.where(lw + hw <= cap, lp + hp, -1)
        top = int(value.max())
        if top < best:
            continue
        hits = np.flatnonzero(value == top)
        if top > best:
            best, masks = top, []
        masks.extend((high_mask << low) | int(h) for h in hits)
    winner = min(
        (tuple(i for i in range(n) if mask >> i & 1) for mask in masks)
    )
    return SolveResult.of(instance, winner)


def dp_exact(instance: KnapsackInstance, cell_budget: int = DP_CELL_BUDGET) -> SolveResult:
    """Exact optimum by DP over integer weights (weights scaled by B)."""
    n = len(instance)
    cap = instance.integer_capacity
    if (cap + 1) * n > cell_budget:
        raise OracleLimitError(f"dp needs {(cap + 1) * n} cells, budget is {cell_budget}")
    profits = instance.profit_numerators
    weights = instance.weight_numerators
    if profits.dtype == object:
        raise OracleLimitError("dp needs profit numerators below 2**62")
    best = np.zeros(cap + 1, dtype=np.int64)
    take = np.zeros((n, cap + 1), dtype=bool)
    for i in range(n):
        w, p = int(weights[i]), int(profits[i])
        if w == 0:
            if p > 0:
                best += p
                take[i, :] = True
            continue
        candidate = best[:-w] + p
        better = candidate > best[w:]
        take[i, w:] = better
        best[w:] = np.where(better, candidate, best[w:])
    chosen, c = [], cap
    for i in range(n - 1, -1, -1):
        if take[i, c]:
            chosen.append(i)
            c -= int(weights[i])
    return SolveResult.of(instance, chosen)


def _efficiency_order(instance: KnapsackInstance) -> list[int]:
    return sorted(range(len(instance)), key=lambda i: (-instance[i].efficiency, i))


def greedy_half(instance: KnapsackInstance) -> SolveResult:
    """Better of the maximal efficiency prefix and the first item it leaves out."""
    order = _efficiency_order(instance)
    used, prefix = Fraction(0), []
    for i in order:
        if used + instance[i].weight > instance.capacity:
            break
        used += instance[i].weight
        prefix.append(i)
    result = SolveResult.of(instance, prefix)
    if len(prefix) < len(order):
        single = SolveResult.of(instance, [order[len(prefix)]])
        if single.value > result.value:
            return single
    return result


def fractional_greedy_value(instance: KnapsackInstance) -> Fraction:
    """Optimal value of the fractional relaxation."""
    room, value = instance.capacity, Fraction(0)
    for i in _efficiency_order(instance):
        item = instance[i]
        if item.weight <= room:
            room -= item.weight
            value += item.profit
        else:
            value += item.profit * room / item.weight
            break
    return value


ORACLES = {
    "brute": brute_force,
    "dp": dp_exact,
    "greedy": greedy_half,
}
