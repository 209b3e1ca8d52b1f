"""The per-query Knapsack LCA under weighted-sampling access.

Every query rebuilds the reduced instance from scratch:

1. sample ``m`` items, keep the distinct ones with profit > eps^2 (the
   sampled large set);
2. unless the remaining profit is below eps, sample ``a`` more items, drop
   the large ones and compute t reproducible efficiency quantiles at levels
   1 - k q, giving the threshold sequence;
3. form the reduced instance (sampled large items plus floor(1/eps)
   representatives of profit eps^2 per bucket), run the half-greedy on it and
   compress the outcome into a :class:`GreedySummary`;
4. answer from the summary.

Nothing is cached between queries; all derived parameters come from epsilon
and the current run's sample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .instance import (
    EfficiencySequence,
    KnapsackInstance,
    Item,
    as_fraction,
    check_epsilon,
    count_at_least,
    partition,
    small_item_view,
)
from .rquantile import (
    EmpiricalSample,
    QuantileParams,
    discretize_efficiencies,
    efficiency_codes,
    r_quantile,
)
from .sampling import RandomnessPlan, SampleAccount, WeightedSampler

DEFAULT_DOMAIN_BITS = 32


def _ceil(x: Fraction) -> int:
    return -((-x.numerator) // x.denominator)


def coupon_repetitions(epsilon: Fraction) -> int:
    """Smallest j with 3**j >= 3/eps."""
    target, j = 3 / epsilon, 0
    while 3**j < target:
        j += 1
    return j


def large_sample_size(epsilon, repetitions: int | None = None) -> int:
    """m = ceil(6 eps^-2 (ln eps^-2 + 1)) * ceil(log_3(3/eps)).

    The first factor is the coupon-collector size for items of profit at
    least eps^2 (success 5/6); the repetition count pushes failure to eps/3.
    """
    eps = check_epsilon(epsilon)
    inv2 = 1 / (eps * eps)
    base = math.ceil(6 * float(inv2) * (math.log(float(inv2)) + 1))
    return base * (coupon_repetitions(eps) if repetitions is None else repetitions)


@dataclass(frozen=True)
class LcaConfig:
    """Parameters of one run, derived from epsilon and the sampled large profit."""

    epsilon: Fraction
    m: int
    large_profit: Fraction
    q: Fraction | None
    t: int
    tau: Fraction
    rho: Fraction
    beta: Fraction
    d: int
    n_rq: int
    a: int
    construction: str = "bisect"

    @classmethod
    def derive(cls, epsilon, large_profit, *, d: int = DEFAULT_DOMAIN_BITS,
               m: int | None = None, construction: str = "bisect",
               tau=None, rho=None, beta=None) -> "LcaConfig":
        """Derive a run's parameters; ``tau``, ``rho``, ``beta`` override the defaults."""
        eps = check_epsilon(epsilon)
        eps2 = eps * eps
        rho = eps2 / 18 if rho is None else as_fraction(rho)
        tau = eps2 / 5 if tau is None else as_fraction(tau)
        beta = rho / 2 if beta is None else as_fraction(beta)
        params = QuantileParams(rho, tau, beta, d, construction)
        rest = 1 - large_profit
        if rest >= eps:
            q = (eps + eps2 / 2) / rest
            t = math.floor(1 / q)
            a = _ceil(3 * params.n_rq / (2 * rest))
        else:
            q, t, a = None, 0, 0
        return cls(eps, large_sample_size(eps) if m is None else m, large_profit, q, t,
                   params.tau, params.rho, params.beta, d, params.n_rq, a, construction)

    @property
    def quantile_params(self) -> QuantileParams:
        return QuantileParams(self.rho, self.tau, self.beta, self.d, self.construction)

    def as_record(self) -> dict:
        return {
            "epsilon": str(self.epsilon),
            "q": None if self.q is None else str(self.q),
            "t": self.t,
            "tau": str(self.tau),
            "rho": str(self.rho),
            "beta": str(self.beta),
            "m": self.m,
            "a": self.a,
            "n_rq": self.n_rq,
            "d": self.d,
            "construction": self.construction,
        }


@dataclass(frozen=True)
class Representative:
    """One of the floor(1/eps) stand-ins for threshold bucket ``bucket``."""

    bucket: int
    copy: int
    profit: Fraction
    weight: Fraction

    @property
    def efficiency(self) -> Fraction:
        return self.profit / self.weight


@dataclass(frozen=True)
class ReducedInstance:
    large: tuple[Item, ...]
    small_reps: tuple[Representative, ...]
    capacity: Fraction

    def __len__(self) -> int:
        return len(self.large) + len(self.small_reps)


@dataclass(frozen=True)
class GreedySummary:
    """Compressed decision rule: chosen large indices, small cut-off, singleton flag.

    ``e_small is None`` stands for "no small items". ``j`` and ``k`` record
    the greedy split position and threshold index for diagnostics.
    """

    index_large: frozenset[int]
    e_small: Fraction | None
    b_indicator: bool
    j: int = 0
    k: int = 0

    @property
    def branch(self) -> str:
        return "singleton" if self.b_indicator else "prefix"


@dataclass
class ReducedBuild:
    """Everything one run derives before answering."""

    reduced: ReducedInstance
    eps: EfficiencySequence
    config: LcaConfig
    account: SampleAccount
    raw_thresholds: tuple[Fraction, ...] = ()
    short_sample: bool = False
    repaired: bool = False

    @property
    def used_eps(self) -> bool:
        return self.config.q is not None


def build_reduced(
    instance: KnapsackInstance,
    epsilon,
    plan: RandomnessPlan,
    *,
    d: int = DEFAULT_DOMAIN_BITS,
    m: int | None = None,
    quantile_oracle=None,
    **overrides,
) -> ReducedBuild:
    """Sample, compute thresholds and assemble the reduced instance.

    ``quantile_oracle(sample, level, k)`` may replace the reproducible
    quantile (tests use it to substitute exact quantiles); it receives the
    :class:`EmpiricalSample` of efficiency codes and returns a code.
    ``overrides`` (tau, rho, beta, construction) go to :meth:`LcaConfig.derive`.
    """
    eps = check_epsilon(epsilon)
    eps2 = eps * eps
    sampler = WeightedSampler(instance, plan.sampling("R"))
    m = large_sample_size(eps) if m is None else m
    drawn = sampler.sample_indices(m)
    large = tuple(
        instance[int(i)] for i in np.unique(drawn) if instance[int(i)].profit > eps2
    )
    large_profit = sum((item.profit for item in large), Fraction(0))
    config = LcaConfig.derive(eps, large_profit, d=d, m=m, **overrides)

    thresholds: tuple[Fraction, ...] = ()
    raw: tuple[Fraction, ...] = ()
    short = repaired = False
    if config.q is not None:
        sampler.rng = plan.sampling("Q")
        counts = sampler.sample_counts(config.a)
        domain = discretize_efficiencies(instance, d)
        codes = efficiency_codes(instance, domain)
        keep = (counts > 0) & ~_large_mask(instance, eps)
        sample = EmpiricalSample.from_histogram(codes[keep], counts[keep])
        short = sample.size < config.n_rq
        values = []
        for k in range(1, config.t + 1):
            level = 1 - k * config.q
            if sample.size == 0 or level <= 0:
                code = 0
            elif quantile_oracle is not None:
                code = quantile_oracle(sample, level, k)
            else:
                code = r_quantile(
                    sample, level, config.quantile_params,
                    plan.internal("rquantile", k), plan.sampling("pad", k), strict=False,
                )
            values.append(domain.decode(code))
        raw = tuple(values)
        values = _running_min(values)
        repaired = tuple(values) != raw
        if values and values[-1] < eps2:
            values.pop()
        if 0 in values:
            values = values[: values.index(0)]
            repaired = True
        thresholds = tuple(values)

    seq = EfficiencySequence(thresholds, eps)
    per_bucket = math.floor(1 / eps)
    reps = tuple(
        Representative(k, c, eps2, eps2 / e)
        for k, e in enumerate(thresholds)
        for c in range(per_bucket)
    )
    reduced = ReducedInstance(large, reps, instance.capacity)
    return ReducedBuild(reduced, seq, config, sampler.account, raw, short, repaired)


def _running_min(values):
    out = []
    for v in values:
        out.append(v if not out or v <= out[-1] else out[-1])
    return out


def _large_mask(instance: KnapsackInstance, eps: Fraction) -> np.ndarray:
    key = ("large-mask", eps)
    memo = instance._memo
    if key not in memo:
        eps2 = eps * eps
        memo[key] = np.array([item.profit > eps2 for item in instance.items], dtype=bool)
    return memo[key]


def convert_greedy(reduced: ReducedInstance, seq: EfficiencySequence) -> GreedySummary:
    """Half-greedy on the reduced instance, mapped back to a decision rule.

    Items are sorted by efficiency (non-increasing; ties by original index,
    representatives after originals). ``j`` is the longest prefix that fits.
    Either the prefix or the first excluded item wins; the prefix case keeps
    its large items and a small cut-off two thresholds above the split.
    """
    eps2 = seq.epsilon * seq.epsilon
    entries = [(-it.efficiency, 0, it.index, 0, it) for it in reduced.large]
    entries += [(-r.efficiency, 1, r.bucket, r.copy, r) for r in reduced.small_reps]
    entries.sort(key=lambda e: e[:4])
    items = [e[4] for e in entries]

    j, used, gained = 0, Fraction(0), Fraction(0)
    for it in items:
        if used + it.weight > reduced.capacity:
            break
        used += it.weight
        gained += it.profit
        j += 1

    k = 0
    if j > 0:
        cut = items[j - 1].efficiency
        for idx, e in enumerate(seq.thresholds, start=1):
            if e > cut:
                k = idx

    if j == len(items) or gained >= items[j].profit:
        chosen = frozenset(it.index for it in items[:j] if isinstance(it, Item) and it.profit > eps2)
        e_small = seq.thresholds[k - 3] if k >= 3 else None
        return GreedySummary(chosen, e_small, False, j, k)
    nxt = items[j]
    # a representative cannot map back to an original item; answer with the empty set
    chosen = frozenset([nxt.index]) if isinstance(nxt, Item) else frozenset()
    return GreedySummary(chosen, None, True, j, k)


def decide(instance: KnapsackInstance, index: int, epsilon, summary: GreedySummary) -> bool:
    eps = as_fraction(epsilon)
    eps2 = eps * eps
    item = instance[index]
    if item.profit > eps2:
        return index in summary.index_large
    if summary.e_small is not None and not summary.b_indicator:
        eff = item.efficiency
        return eff >= summary.e_small and eff >= eps2
    return False


def answer_query(
    instance: KnapsackInstance, item_index: int, epsilon, plan: RandomnessPlan, **kwargs
) -> bool:
    """Answer whether ``item_index`` belongs to the run's solution. Stateless."""
    if not 0 <= item_index < len(instance):
        raise IndexError(f"item index {item_index} out of range")
    build = build_reduced(instance, epsilon, plan, **kwargs)
    summary = convert_greedy(build.reduced, build.eps)
    return decide(instance, item_index, epsilon, summary)


def mapping_greedy(summary: GreedySummary, instance: KnapsackInstance, epsilon) -> frozenset[int]:
    """The full solution C a run's answers are consistent with."""
    chosen = set(summary.index_large)
    if not summary.b_indicator and summary.e_small is not None:
        view = small_item_view(instance, epsilon)
        chosen.update(view.order[: count_at_least(view, summary.e_small)])
    return frozenset(chosen)


@dataclass
class RunOutcome:
    build: ReducedBuild
    summary: GreedySummary
    solution: frozenset[int]
    weight: Fraction
    profit: Fraction

    @property
    def feasible(self) -> bool:
        return self.weight <= self.build.reduced.capacity


def solution_totals(instance: KnapsackInstance, epsilon, summary: GreedySummary) -> tuple[Fraction, Fraction]:
    """(weight, profit) of mapping_greedy's solution using prefix sums."""
    weight = instance.total_weight(summary.index_large)
    profit = instance.total_profit(summary.index_large)
    if not summary.b_indicator and summary.e_small is not None:
        view = small_item_view(instance, epsilon)
        cut = count_at_least(view, summary.e_small)
        weight += view.weight_prefix[cut]
        profit += view.profit_prefix[cut]
    return weight, profit


def materialize(instance: KnapsackInstance, epsilon, plan: RandomnessPlan, **kwargs) -> RunOutcome:
    build = build_reduced(instance, epsilon, plan, **kwargs)
    summary = convert_greedy(build.reduced, build.eps)
    weight, profit = solution_totals(instance, epsilon, summary)
    return RunOutcome(build, summary, mapping_greedy(summary, instance, epsilon), weight, profit)


def sampled_all_large(instance: KnapsackInstance, epsilon, build: ReducedBuild) -> bool:
    return {it.index for it in build.reduced.large} == set(partition(instance, epsilon).large)
