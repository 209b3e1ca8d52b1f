from fractions import Fraction

import numpy as np
import pytest
from scipy import stats

from lcaknap.hardness import HardInstanceSpec, generate
from lcaknap.instance import KnapsackInstance, normalize
from lcaknap.lca import build_reduced, large_sample_size
from lcaknap.sampling import ProbeBudgetExceeded, RandomnessPlan, WeightedSampler, derive_stream


def test_exact_distribution_chi_square():
    inst = KnapsackInstance.from_pairs(
        [(Fraction(1, 2), 1), (Fraction(3, 10), 1), (Fraction(1, 5), 1)], 1
    )
    sampler = WeightedSampler(inst, np.random.default_rng(1))
    counts = np.bincount(sampler.sample_indices(10**6), minlength=3)
    expected = np.array([0.5, 0.3, 0.2]) * 10**6
    assert np.all(np.abs(counts - expected) <= 3 * np.sqrt(expected))
    assert stats.chisquare(counts, expected).pvalue > 1e-3


def test_chi_square_thousand_items():
    rng = np.random.default_rng(7)
    inst = normalize([(int(p), 1) for p in rng.integers(1, 100, 1000)], 1)
    sampler = WeightedSampler(inst, np.random.default_rng(2))
    counts = np.bincount(sampler.sample_indices(10**6), minlength=1000)
    expected = inst.profit_floats * 10**6
    assert stats.chisquare(counts, expected).pvalue > 1e-3
    multi = WeightedSampler(inst, np.random.default_rng(3)).sample_counts(10**6)
    assert stats.chisquare(multi, expected).pvalue > 1e-3


def test_single_item_and_empty_multiset():
    inst = normalize([(5, 1)], 1)
    sampler = WeightedSampler(inst, np.random.default_rng(0))
    assert sampler.sample_multiset(0) == []
    assert sampler.sample_multiset(3) == [inst[0]] * 3
    assert sampler.account.samples_drawn == 3


def test_coupon_collector():
    # uniform profits 1/delta items; m = ceil(6/delta (ln 1/delta + 1)) catches all w.p. >= 5/6
    inst = normalize([(1, 1)] * 50, 1)
    m = int(np.ceil(6 * 50 * (np.log(50) + 1)))
    hits = 0
    for trial in range(300):
        sampler = WeightedSampler(inst, np.random.default_rng(trial))
        hits += len(np.unique(sampler.sample_indices(m))) == 50
    assert hits / 300 >= 5 / 6


def test_large_sample_size_formula():
    # eps = 1/2: ceil(6 * 4 * (ln 4 + 1)) = 58, times 2 repetitions (3**2 >= 6)
    assert large_sample_size(Fraction(1, 2)) == 58 * 2
    assert large_sample_size(Fraction(1, 2), repetitions=1) == 58


def test_probe_and_budget():
    spec = HardInstanceSpec("maximal_pair", 10, pair=(2, 5), w_j=Fraction(1, 4))
    inst = generate(spec)
    sampler = WeightedSampler(inst, np.random.default_rng(0), probe_budget=3)
    assert sampler.probe(0) == sampler.probe(0)
    assert sampler.probe(0).weight == 0
    with pytest.raises(ProbeBudgetExceeded):
        sampler.probe(1)
    assert sampler.account.point_probes == 3
    with pytest.raises(IndexError):
        WeightedSampler(inst, np.random.default_rng(0)).probe(10)


def test_stream_discipline():
    a, b = RandomnessPlan(b"seed", 0), RandomnessPlan(b"seed", 1)
    assert a.internal("rquantile", 1).bytes(1024) == b.internal("rquantile", 1).bytes(1024)
    assert a.sampling("R").bytes(1024) != b.sampling("R").bytes(1024)
    assert a.internal("x").bytes(64) != RandomnessPlan(b"other", 0).internal("x").bytes(64)
    # derivation is pinned: HMAC-SHA256 over "label/nonce/path" seeding PCG64
    assert derive_stream(b"seed", "sampling", 0, "R").bytes(1024) == a.sampling("R").bytes(1024)


def test_distinct_nonces_draw_different_samples():
    inst = normalize([(i + 1, 1) for i in range(200)], 1)
    plan = RandomnessPlan(b"k")
    draws = [WeightedSampler(inst, plan.with_nonce(n).sampling("R")).sample_indices(50) for n in (0, 1)]
    assert not np.array_equal(np.sort(draws[0]), np.sort(draws[1]))


@pytest.mark.parametrize("eps", [Fraction(1, 2), Fraction(1, 3), Fraction(1, 4)])
def test_account_equals_m_plus_a(eps):
    inst = normalize([(i % 17 + 1, i % 13 + 1) for i in range(300)], 400)
    build = build_reduced(inst, eps, RandomnessPlan(b"acct"))
    assert build.account.samples_drawn == build.config.m + build.config.a
    assert build.config.a > 0


def test_huge_profit_denominator():
    # denominators beyond 2**62 fall back to byte-level rejection sampling
    big = 2**70 + 1
    inst = normalize([(1, 1), (big - 1, 1)], 1)
    sampler = WeightedSampler(inst, np.random.default_rng(0))
    idx = sampler.sample_indices(2000)
    assert set(int(i) for i in idx) <= {0, 1}
    assert sum(int(i) == 0 for i in idx) <= 2
