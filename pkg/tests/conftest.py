from fractions import Fraction

import pytest
from hypothesis import HealthCheck, settings

from lcaknap.instance import KnapsackInstance

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture
def twenty_small():
    """20 items of profit 1/20 with efficiencies 20, 19, ..., 1."""
    p = Fraction(1, 20)
    return KnapsackInstance.from_pairs([(p, p / e) for e in range(20, 0, -1)], 1)


@pytest.fixture
def three_items():
    return KnapsackInstance.from_pairs(
        [(Fraction(3, 10), Fraction(2, 10)), (Fraction(4, 10), Fraction(5, 10)), (Fraction(3, 10), Fraction(6, 10))],
        1,
    )
