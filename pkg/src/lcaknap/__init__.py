"""Local computation algorithm for Knapsack under weighted sampling.

Each query for an item is answered independently from a shared random seed,
and all answers agree with a single (1/2, 6 eps)-approximate solution with
high probability. Thresholds come from a reproducible quantile estimator so
that separate runs agree.
"""

from .instance import (
    EfficiencySequence,
    InstanceError,
    Item,
    KnapsackInstance,
    bucketize,
    is_eps,
    load_instance,
    normalize,
    partition,
    save_instance,
)
from .lca import LcaConfig, answer_query, build_reduced, convert_greedy, mapping_greedy, materialize
from .oracles import brute_force, dp_exact, fractional_greedy_value, greedy_half
from .rquantile import DiscreteDomain, QuantileParams, discretize_efficiencies, r_median, r_quantile
from .sampling import RandomnessPlan, WeightedSampler

__all__ = [
    "DiscreteDomain",
    "EfficiencySequence",
    "InstanceError",
    "Item",
    "KnapsackInstance",
    "LcaConfig",
    "QuantileParams",
    "RandomnessPlan",
    "WeightedSampler",
    "answer_query",
    "brute_force",
    "bucketize",
    "build_reduced",
    "convert_greedy",
    "discretize_efficiencies",
    "dp_exact",
    "fractional_greedy_value",
    "greedy_half",
    "is_eps",
    "load_instance",
    "mapping_greedy",
    "materialize",
    "normalize",
    "partition",
    "r_median",
    "r_quantile",
    "save_instance",
]
