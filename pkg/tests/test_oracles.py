import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lcaknap.experiment import GeneratorSpec, gen_instance
from lcaknap.instance import KnapsackInstance, is_eps, normalize
from lcaknap.lca import build_reduced, sampled_all_large
from lcaknap.oracles import (
    OracleLimitError,
    SolveResult,
    brute_force,
    dp_exact,
    fractional_greedy_value,
    greedy_half,
)
from lcaknap.sampling import RandomnessPlan

raw_instances = st.lists(
    st.tuples(st.integers(0, 40), st.integers(1, 40)), min_size=1, max_size=12
).filter(lambda r: sum(p for p, _ in r) > 0)


def test_brute_force_fixture(three_items):
    # items 1 and 2 in one-based numbering
    res = brute_force(three_items)
    assert res.value == Fraction(7, 10)
    assert res.chosen == {0, 1}


def test_dp_fixture():
    inst = normalize([(60, 10), (100, 20), (120, 30)], 50)
    res = dp_exact(inst)
    assert res.value == Fraction(220, 280)
    assert res.chosen == {1, 2}


def test_single_item():
    inst = normalize([(5, 1)], 3)
    assert brute_force(inst).chosen == {0}
    assert dp_exact(inst).chosen == {0}


def test_duplicates_are_distinct():
    inst = normalize([(1, 1), (1, 1), (1, 1)], 2)
    assert len(dp_exact(inst).chosen) == 2
    assert brute_force(inst).chosen == {0, 1}


def test_greedy_examples(three_items):
    assert greedy_half(three_items).value == Fraction(7, 10)
    inst = KnapsackInstance.from_pairs([(Fraction(1, 10), Fraction(1, 20)), (Fraction(9, 10), 1)], 1)
    res = greedy_half(inst)
    assert res.chosen == {1} and res.value == Fraction(9, 10)


def test_fractional_fixture(three_items):
    assert fractional_greedy_value(three_items) == Fraction(17, 20)


def test_fractional_exact_fill():
    inst = normalize([(3, 1), (2, 1), (1, 2)], 2)
    assert fractional_greedy_value(inst) == dp_exact(inst).value


def test_limits():
    with pytest.raises(OracleLimitError):
        brute_force(normalize([(1, 1)] * 25, 1))
    with pytest.raises(OracleLimitError):
        dp_exact(normalize([(1, 1000)] * 20, 10**6), cell_budget=1000)


@settings(max_examples=300)
@given(raw_instances, st.data())
def test_oracle_properties(raw, data):
    cap = data.draw(st.integers(max(w for _, w in raw), sum(w for _, w in raw)))
    inst = normalize(raw, cap)
    opt = dp_exact(inst)
    brute = brute_force(inst)
    assert opt.value == brute.value
    assert inst.is_feasible(opt.chosen) and opt == SolveResult.of(inst, opt.chosen)
    greedy = greedy_half(inst)
    assert inst.is_feasible(greedy.chosen)
    assert 2 * greedy.value >= opt.value >= greedy.value
    frac = fractional_greedy_value(inst)
    assert opt.value <= frac <= 2 * greedy.value


def _reduced_opt(reduced):
    items = [(it.profit, it.weight) for it in reduced.large] + [(r.profit, r.weight) for r in reduced.small_reps]
    best = Fraction(0)
    for size in range(len(items) + 1):
        for combo in itertools.combinations(range(len(items)), size):
            if sum(items[i][1] for i in combo) <= reduced.capacity:
                value = sum((items[i][0] for i in combo), Fraction(0))
                best = max(best, value)
    return best


@pytest.mark.parametrize("eps", [Fraction(1, 2), Fraction(1, 3)])
def test_reduced_instance_value(eps):
    """OPT(I~) - eps lies within 6 eps of OPT(I) on runs with a verified EPS."""
    checked = 0
    for seed in range(3):
        inst = gen_instance(GeneratorSpec("mixed", 60, seed=seed))
        opt = dp_exact(inst).value
        for nonce in range(4):
            build = build_reduced(inst, eps, RandomnessPlan(bytes([seed]), nonce))
            if not (is_eps(inst, eps, build.eps).valid and sampled_all_large(inst, eps, build)):
                continue
            assert len(build.reduced) <= 16
            value = _reduced_opt(build.reduced)
            assert opt - 6 * eps <= value - eps <= opt + 6 * eps
            checked += 1
    assert checked > 0
