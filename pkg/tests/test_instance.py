from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lcaknap.instance import (
    EfficiencySequence,
    InstanceError,
    KnapsackInstance,
    bucketize,
    dumps_instance,
    is_eps,
    loads_instance,
    normalize,
    partition,
)

raw_items = st.lists(
    st.tuples(st.integers(0, 1000), st.integers(1, 100)), min_size=1, max_size=40
).filter(lambda items: sum(p for p, _ in items) > 0)
epsilons = st.fractions(min_value=Fraction(1, 50), max_value=1).filter(lambda e: e > 0)


def test_normalize_example():
    inst = normalize([(60, 10), (100, 20), (120, 30)], 50)
    assert [it.profit for it in inst.items] == [Fraction(60, 280), Fraction(100, 280), Fraction(120, 280)]
    assert sum(it.profit for it in inst.items) == 1
    # weights keep their ratio to the capacity
    assert [it.weight / inst.capacity for it in inst.items] == [Fraction(10, 50), Fraction(20, 50), Fraction(30, 50)]


def test_normalize_single_item():
    inst = normalize([(5, 1)], 1)
    assert inst[0].profit == 1


@pytest.mark.parametrize(
    "raw, cap",
    [([(1, 2)], 1), ([], 5), ([(0, 1), (0, 2)], 5), ([(-1, 1), (3, 1)], 5), ([(1, 0)], 5)],
)
def test_normalize_rejects(raw, cap):
    with pytest.raises(InstanceError):
        normalize(raw, cap)


def test_instance_rejects_bad_profit_sum():
    with pytest.raises(InstanceError):
        KnapsackInstance.from_pairs([(Fraction(1, 2), Fraction(1, 2))], 1)


def test_file_round_trip(tmp_path):
    inst = normalize([(60, 10), (100, 20), (120, 30)], 50)
    text = dumps_instance(inst)
    assert text == '{"capacity":50,"items":[{"p":60,"w":10},{"p":100,"w":20},{"p":120,"w":30}]}\n'
    again = loads_instance(text)
    assert again.items == inst.items and again.capacity == inst.capacity


def _single(p, w):
    # one item of interest plus filler so profits sum to 1
    p, w = Fraction(p), Fraction(w)
    return KnapsackInstance.from_pairs([(p, w), (1 - p, Fraction(1))], 1)


@pytest.mark.parametrize(
    "p, w, cls",
    [("0.02", "0.5", "large"), ("0.008", "0.2", "small"), ("0.004", "0.9", "garbage")],
)
def test_partition_examples(p, w, cls):
    part = partition(_single(p, w), Fraction(1, 10))
    assert 0 in getattr(part, cls)


@settings(max_examples=300)
@given(raw_items, epsilons)
def test_partition_is_disjoint_cover(raw, eps):
    inst = normalize(raw, max(w for _, w in raw))
    part = partition(inst, eps)
    eps2 = eps * eps
    assert part.large | part.small | part.garbage == set(range(len(inst)))
    assert len(part.large) + len(part.small) + len(part.garbage) == len(inst)
    assert all(inst[i].profit > eps2 for i in part.large)
    assert all(inst[i].profit <= eps2 and inst[i].efficiency >= eps2 for i in part.small)
    assert all(inst[i].profit <= eps2 and inst[i].efficiency < eps2 for i in part.garbage)
    assert len(part.large) * eps2 < 1 + eps2


def test_is_eps_twenty_items(twenty_small):
    eps = Fraction(1, 4)
    check = is_eps(twenty_small, eps, EfficiencySequence.of(["15.5", "10.5", "5.5"], eps))
    assert check.valid
    assert check.bucket_profits == (Fraction(1, 4),) * 4
    check = is_eps(twenty_small, eps, EfficiencySequence.of(["15.5"], eps))
    assert not check.valid
    assert check.bucket_profits == (Fraction(1, 4), Fraction(3, 4))


def test_is_eps_empty_small_set():
    inst = KnapsackInstance.from_pairs([(Fraction(1, 2), 1), (Fraction(1, 2), 1)], 1)
    assert is_eps(inst, Fraction(1, 2), EfficiencySequence.of([], Fraction(1, 2))).valid


def test_bucketize_examples():
    # small items (eps = 1/2) with efficiencies 5, 3, 1 plus a large filler
    p = Fraction(1, 10)
    inst = KnapsackInstance.from_pairs([(p, p / 5), (p, p / 3), (p, p), (Fraction(7, 10), 1)], 1)
    eps = Fraction(1, 2)
    buckets = bucketize(inst, eps, EfficiencySequence.of([4, 2], eps))
    assert buckets == [frozenset({0}), frozenset({1}), frozenset({2})]
    # an item exactly at e_1 sits in A_0
    buckets = bucketize(inst, eps, EfficiencySequence.of([5, 3], eps))
    assert buckets == [frozenset({0}), frozenset({1}), frozenset({2})]
    assert bucketize(inst, eps, EfficiencySequence.of([], eps)) == [frozenset({0, 1, 2})]


def test_sequence_validation():
    with pytest.raises(ValueError):
        EfficiencySequence.of([1, 2], Fraction(1, 2))
    with pytest.raises(ValueError):
        EfficiencySequence.of([3, 2, 1], Fraction(1, 2))


@settings(max_examples=200)
@given(raw_items, epsilons, st.lists(st.fractions(min_value=0, max_value=200), max_size=6))
def test_bucketize_agrees_with_is_eps(raw, eps, thresholds):
    thresholds = sorted(thresholds, reverse=True)[: int(1 / eps)]
    inst = normalize(raw, max(w for _, w in raw))
    seq = EfficiencySequence.of(thresholds, eps)
    buckets = bucketize(inst, eps, seq)
    assert frozenset().union(*buckets) == partition(inst, eps).small
    assert sum(len(b) for b in buckets) == len(partition(inst, eps).small)
    profits = tuple(sum((inst[i].profit for i in b), Fraction(0)) for b in buckets)
    assert is_eps(inst, eps, seq).bucket_profits == profits
    bounds = [None, *thresholds, None]
    for k, bucket in enumerate(buckets):
        for i in bucket:
            e = inst[i].efficiency
            if bounds[k] is not None:
                assert e < bounds[k]
            if bounds[k + 1] is not None:
                assert e >= bounds[k + 1]
