"""Hard instance families and a probe-budgeted adversary harness.

Families:

``or_optimal``
    items (x_i, 1) for i < n and (1/2, 1) last, capacity 1. The last item is
    in the (then unique) optimum iff every x_i is 0.
``or_approx``
    the same with the last profit replaced by beta < alpha.
``maximal_pair``
    zero profits, capacity 1; item i weighs 3/4, item j weighs 1/4 or 3/4,
    every other item weighs 0.

The OR families are normalized to total profit 1 (profits scaled by a common
factor, which preserves every optimality and approximation statement).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable

import numpy as np

from .instance import Item, KnapsackInstance, as_fraction, normalize
from .sampling import ProbeBudgetExceeded, WeightedSampler

FAMILIES = ("or_optimal", "or_approx", "maximal_pair")


@dataclass(frozen=True)
class HardInstanceSpec:
    family: str
    n: int
    x: tuple[int, ...] = ()
    beta: Fraction | None = None
    pair: tuple[int, int] | None = None
    w_j: Fraction | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if self.n < 2:
            raise ValueError("hard instances need n >= 2")
        if self.family in ("or_optimal", "or_approx"):
            if len(self.x) != self.n - 1 or any(b not in (0, 1) for b in self.x):
                raise ValueError("x must be a 0/1 vector of length n - 1")
        if self.family == "or_approx" and (self.beta is None or not 0 < self.beta < 1):
            raise ValueError("or_approx needs 0 < beta < 1")
        if self.family == "maximal_pair":
            if self.pair is None or self.w_j not in (Fraction(1, 4), Fraction(3, 4)):
                raise ValueError("maximal_pair needs a pair and w_j in {1/4, 3/4}")
            i, j = self.pair
            if i == j or not (0 <= i < self.n and 0 <= j < self.n):
                raise ValueError("pair must be two distinct valid indices")


def random_spec(family: str, n: int, rng: np.random.Generator, beta=None) -> HardInstanceSpec:
    """Draw from the hard distribution: x is 0 or a single random 1 with equal odds."""
    if family == "maximal_pair":
        i, j = (int(v) for v in rng.choice(n, size=2, replace=False))
        w_j = Fraction(1, 4) if rng.random() < 0.5 else Fraction(3, 4)
        return HardInstanceSpec(family, n, pair=(i, j), w_j=w_j)
    x = [0] * (n - 1)
    if rng.random() < 0.5:
        x[int(rng.integers(n - 1))] = 1
    return HardInstanceSpec(family, n, tuple(x), None if beta is None else as_fraction(beta))


_ZERO = Fraction(0)
_HEAVY = Fraction(3, 4)


@lru_cache(maxsize=8)
def _zero_items(n: int) -> tuple[Item, ...]:
    return tuple(Item(_ZERO, _ZERO, k) for k in range(n))


def generate(spec: HardInstanceSpec) -> KnapsackInstance:
    if spec.family == "maximal_pair":
        i, j = spec.pair
        items = list(_zero_items(spec.n))
        items[i] = Item(_ZERO, _HEAVY, i)
        items[j] = Item(_ZERO, spec.w_j, j)
        items = tuple(items)
        return KnapsackInstance(items, Fraction(1), feasibility_only=True)
    last = Fraction(1, 2) if spec.family == "or_optimal" else spec.beta
    scale = last.denominator
    raw = [(b * scale, 1) for b in spec.x] + [(last.numerator, 1)]
    return normalize(raw, 1)


def or_value(spec: HardInstanceSpec) -> int:
    return int(any(spec.x))


def maximal_solutions(instance: KnapsackInstance) -> list[frozenset[int]]:
    """All maximal feasible subsets, by enumeration (small n only)."""
    n = len(instance)
    if n > 20:
        raise ValueError("enumeration limited to 20 items")
    feasible = [
        frozenset(i for i in range(n) if mask >> i & 1)
        for mask in range(1 << n)
        if instance.is_feasible(i for i in range(n) if mask >> i & 1)
    ]
    fset = set(feasible)
    return [s for s in feasible if all(s | {k} not in fset for k in range(n) if k not in s)]


# A strategy answers one query through a budgeted oracle; it must not keep state.
Strategy = Callable[[WeightedSampler, int, np.random.Generator], bool]


def always_yes(oracle: WeightedSampler, index: int, rng: np.random.Generator) -> bool:
    return True


def _canonical_answer(index: int, heavy: list[int]) -> bool:
    # with two 3/4 items the canonical maximal solution drops the larger index
    if len(heavy) >= 2:
        return index != max(heavy)
    return True


def full_scan(oracle: WeightedSampler, index: int, rng: np.random.Generator) -> bool:
    n = len(oracle.instance)
    weights = [oracle.probe(k).weight for k in range(n)]
    heavy = [k for k, w in enumerate(weights) if w == _HEAVY]
    return _canonical_answer(index, heavy)


def random_probe(budget_fraction: Fraction = Fraction(1, 12)) -> Strategy:
    """Probe the queried item plus up to floor(n * fraction) - 1 random others."""

    def strategy(oracle: WeightedSampler, index: int, rng: np.random.Generator) -> bool:
        n = len(oracle.instance)
        allowance = max(1, math.floor(n * budget_fraction))
        own = oracle.probe(index).weight
        others = [k for k in range(n) if k != index]
        picks = rng.choice(others, size=min(allowance - 1, len(others)), replace=False)
        heavy = [index] if own == _HEAVY else []
        for k in picks:
            w = oracle.probe(int(k)).weight
            if w == _HEAVY:
                heavy.append(int(k))
        return _canonical_answer(index, heavy)

    return strategy


STRATEGIES = {
    "always_yes": lambda n: always_yes,
    "full_scan": lambda n: full_scan,
    "random_probe": lambda n: random_probe(),
}


@dataclass
class AdversaryReport:
    family: str
    n: int
    trials: int
    errors: int = 0
    budget_violations: int = 0
    probes: int = 0
    queries: int = 0

    @property
    def error_rate(self) -> float:
        return self.errors / self.trials

    @property
    def mean_probes(self) -> float:
        return self.probes / max(self.queries, 1)

    def as_record(self) -> dict:
        return {
            "family": self.family,
            "n": self.n,
            "trials": self.trials,
            "error_rate": self.error_rate,
            "mean_probes": self.mean_probes,
            "budget_violations": self.budget_violations,
        }


def _ask(strategy, instance, index, budget, rng, report) -> bool | None:
    oracle = WeightedSampler(instance, rng, probe_budget=budget)
    try:
        answer = bool(strategy(oracle, index, rng))
    except ProbeBudgetExceeded:
        answer = None
        report.budget_violations += 1
    report.probes += oracle.account.point_probes
    report.queries += 1
    return answer


def pair_answers_consistent(instance: KnapsackInstance, i: int, j: int, a_i, a_j) -> bool:
    """Whether (a_i, a_j) embeds in some maximal feasible solution of a pair instance."""
    if a_i is None or a_j is None:
        return False
    if instance[j].weight == Fraction(1, 4):
        return a_i and a_j
    return a_i != a_j


def run_adversary(
    strategy: Strategy,
    family: str,
    n: int,
    trials: int,
    probe_budget: int | None,
    rng: np.random.Generator,
    beta=Fraction(1, 4),
) -> AdversaryReport:
    """Error rate of ``strategy`` on fresh draws from a hard family.

    ``maximal_pair`` asks for item i then item j; a trial is correct when the
    two answers fit some maximal feasible solution. The OR families ask only
    for the last item; the correct answer is yes iff OR(x) = 0. A strategy
    that exceeds its probe budget counts as an error for that trial.
    """
    report = AdversaryReport(family, n, trials)
    for _ in range(trials):
        spec = random_spec(family, n, rng, beta if family == "or_approx" else None)
        instance = generate(spec)
        if family == "maximal_pair":
            i, j = spec.pair
            a_i = _ask(strategy, instance, i, probe_budget, rng, report)
            a_j = _ask(strategy, instance, j, probe_budget, rng, report)
            ok = pair_answers_consistent(instance, i, j, a_i, a_j)
        else:
            answer = _ask(strategy, instance, n - 1, probe_budget, rng, report)
            ok = answer is not None and answer == (or_value(spec) == 0)
        report.errors += not ok
    return report
