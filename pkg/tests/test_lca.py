import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lcaknap.experiment import GeneratorSpec, gen_instance
from lcaknap.instance import EfficiencySequence, KnapsackInstance, is_eps, normalize, partition
from lcaknap.lca import (
    GreedySummary,
    LcaConfig,
    ReducedInstance,
    Representative,
    answer_query,
    build_reduced,
    convert_greedy,
    decide,
    mapping_greedy,
    materialize,
)
from lcaknap.sampling import RandomnessPlan


def _reduced(instance, eps, thresholds=()):
    per = int(1 / eps)
    reps = tuple(
        Representative(k, c, eps * eps, eps * eps / e) for k, e in enumerate(thresholds) for c in range(per)
    )
    return ReducedInstance(instance.items, reps, instance.capacity), EfficiencySequence.of(thresholds, eps)


def test_convert_greedy_prefix_branch(three_items):
    reduced, seq = _reduced(three_items, Fraction(1, 2))
    summary = convert_greedy(reduced, seq)
    assert summary.j == 2 and not summary.b_indicator
    assert summary.index_large == {0, 1}
    assert summary.e_small is None


def test_convert_greedy_singleton_branch():
    inst = KnapsackInstance.from_pairs([(Fraction(1, 10), Fraction(1, 20)), (Fraction(9, 10), 1)], 1)
    reduced, seq = _reduced(inst, Fraction(1, 4))
    summary = convert_greedy(reduced, seq)
    assert summary.j == 1 and summary.b_indicator
    assert summary.index_large == {1} and summary.e_small is None
    assert mapping_greedy(summary, inst, Fraction(1, 4)) == {1}
    assert decide(inst, 1, Fraction(1, 4), summary)
    assert not decide(inst, 0, Fraction(1, 4), summary)


def test_convert_greedy_small_cutoff():
    # four thresholds at eps = 1/4: 16 representatives of profit 1/16
    eps = Fraction(1, 4)
    inst = KnapsackInstance.from_pairs([(Fraction(1, 20), Fraction(1, 200))] * 20, 1)
    reduced, seq = _reduced(inst, eps, (8, 6, 4, 2))
    reduced = ReducedInstance((), reduced.small_reps, Fraction(1, 20))
    summary = convert_greedy(reduced, seq)
    assert len(reduced.small_reps) == 16
    # reps of bucket 0..2 weigh 1/128, 1/96, 1/64 each: 12 of them fit into 1/20 only partially
    cut = sorted(r.efficiency for r in reduced.small_reps)[::-1][summary.j - 1]
    k = max((i for i, e in enumerate(seq.thresholds, 1) if e > cut), default=0)
    assert summary.k == k
    if k >= 3:
        assert summary.e_small == seq.thresholds[k - 3]
    else:
        assert summary.e_small is None


def test_k_at_least_three_sets_e_small():
    eps = Fraction(1, 4)
    inst = KnapsackInstance.from_pairs([(Fraction(1, 20), Fraction(1, 200))] * 20, 1)
    reduced, seq = _reduced(inst, eps, (8, 6, 4, 2))
    reduced = ReducedInstance((), reduced.small_reps, Fraction(1))
    summary = convert_greedy(reduced, seq)
    # everything fits: the split sits at the last representative (efficiency 2), k = 3
    assert summary.j == 16 and summary.k == 3
    assert summary.e_small == 8 and not summary.b_indicator


def test_eps_empty_branch():
    inst = normalize([(1, 1), (1, 1), (1, 1)], 3)
    build = build_reduced(inst, Fraction(1, 2), RandomnessPlan(b"x"))
    assert build.config.q is None and len(build.eps) == 0
    assert build.reduced.small_reps == ()
    assert {it.index for it in build.reduced.large} == {0, 1, 2}
    assert build.account.samples_drawn == build.config.m


def test_representative_count():
    eps = Fraction(1, 4)
    config = LcaConfig.derive(eps, Fraction(0))
    assert config.t == 3 and config.q == Fraction(9, 32)
    inst = KnapsackInstance.from_pairs([(Fraction(1, 20), Fraction(1, 200))] * 20, 1)
    reduced, _ = _reduced(inst, eps, (8, 6))
    assert len(reduced.small_reps) == 8
    assert all(r.profit == Fraction(1, 16) for r in reduced.small_reps)


def _exact_quantile(sample, level, k):
    cum = np.cumsum(sample.counts)
    return int(sample.codes[np.searchsorted(cum, float(level) * cum[-1], side="left")])


def test_exact_quantiles_give_eps(twenty_small):
    eps = Fraction(1, 4)
    build = build_reduced(twenty_small, eps, RandomnessPlan(b"stub"), quantile_oracle=_exact_quantile)
    assert len(build.eps) == 3
    check = is_eps(twenty_small, eps, build.eps)
    assert check.valid, check.bucket_profits


@pytest.fixture(scope="module")
def fifty():
    return gen_instance(GeneratorSpec("mixed", 50, seed=5))


@pytest.mark.parametrize("nonce", [0, 1, 2])
def test_per_item_answers_match_materialized(fifty, nonce):
    eps = Fraction(1, 3)
    plan = RandomnessPlan(b"fifty", nonce)
    solution = materialize(fifty, eps, plan).solution
    answers = {i for i in range(len(fifty)) if answer_query(fifty, i, eps, plan)}
    assert answers == solution


def test_query_order_oblivious(fifty):
    eps = Fraction(1, 2)
    plan = RandomnessPlan(b"order")
    order = list(range(len(fifty)))
    forward = {i: answer_query(fifty, i, eps, plan) for i in order}
    random.Random(1).shuffle(order)
    backward = {i: answer_query(fifty, i, eps, plan) for i in order}
    assert forward == backward


def test_invalid_query_index(fifty):
    with pytest.raises(IndexError):
        answer_query(fifty, len(fifty), Fraction(1, 2), RandomnessPlan(b"x"))


def test_garbage_guard():
    eps = Fraction(1, 4)
    # item 0 is garbage (efficiency 1/100 < 1/16)
    inst = KnapsackInstance.from_pairs([(Fraction(1, 100), 1), (Fraction(99, 100), Fraction(1, 2))], 1)
    assert 0 in partition(inst, eps).garbage
    summary = GreedySummary(frozenset(), Fraction(1, 1000), False)
    assert not decide(inst, 0, eps, summary)


def test_solution_totals_match(fifty):
    for nonce in range(5):
        out = materialize(fifty, Fraction(1, 8), RandomnessPlan(b"tot", nonce))
        assert out.weight == fifty.total_weight(out.solution)
        assert out.profit == fifty.total_profit(out.solution)


@settings(max_examples=60)
@given(
    st.lists(st.tuples(st.integers(1, 100), st.integers(1, 50)), min_size=10, max_size=60),
    st.sampled_from([Fraction(1, 2), Fraction(1, 3), Fraction(1, 4)]),
    st.binary(min_size=1, max_size=8),
)
def test_feasible_when_eps_verified(raw, eps, seed):
    inst = normalize(raw, max(sum(w for _, w in raw) // 3, max(w for _, w in raw)))
    out = materialize(inst, eps, RandomnessPlan(seed))
    if is_eps(inst, eps, out.build.eps).valid:
        assert out.feasible
    assert out.build.account.samples_drawn == out.build.config.m + out.build.config.a
