"""Instance generators and the batch experiments behind the acceptance suite.

Every experiment is a deterministic function of its configuration and a hex
seed. Per-trial seeds are SHA-256 digests of (seed, label, trial), so rows
can be regenerated individually.
"""

from __future__ import annotations

import hashlib
import json
import math
from bisect import bisect_left, bisect_right
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .hardness import STRATEGIES, HardInstanceSpec, generate, or_value, run_adversary
from .instance import KnapsackInstance, as_fraction, is_eps, normalize, partition
from .lca import build_reduced, materialize, sampled_all_large
from .oracles import (
    OracleLimitError,
    brute_force,
    dp_exact,
    fractional_greedy_value,
    greedy_half,
)
from .rquantile import EmpiricalSample, QuantileParams, r_quantile
from .sampling import RandomnessPlan

SCHEMA_VERSION = 1
DEFAULT_EPSILONS = (Fraction(1, 2), Fraction(1, 3), Fraction(1, 4), Fraction(1, 8))
PROFILES = ("uniform", "many_small", "large_heavy", "mixed")


def trial_seed(seed: bytes, *path) -> bytes:
    text = "/".join(str(p) for p in path).encode("utf-8")
    return hashlib.sha256(seed + b"|" + text).digest()


def sigma(rate: float, trials: int) -> float:
    return math.sqrt(max(rate * (1 - rate), 0.0) / trials)


# ---------------------------------------------------------------- generators


@dataclass(frozen=True)
class GeneratorSpec:
    profile: str
    n: int
    seed: int = 0
    capacity_fraction: Fraction = Fraction(1, 4)

    def __post_init__(self):
        if self.profile not in PROFILES:
            raise ValueError(f"unknown profile {self.profile!r}; choose from {PROFILES}")
        if self.n < 10:
            raise ValueError("generated instances need at least 10 items")
        if not 0 < self.capacity_fraction <= 1:
            raise ValueError("capacity fraction must lie in (0, 1]")

    @property
    def name(self) -> str:
        return f"{self.profile}-n{self.n}-s{self.seed}"


def _capacity(weights: Sequence[int], fraction: Fraction) -> int:
    return max(max(weights), math.floor(sum(weights) * fraction))


def generate_raw(spec: GeneratorSpec) -> tuple[list[tuple[int, int]], int]:
    """Raw integer items and capacity for a profile.

    ``uniform``: profits and weights uniform on 1..100.
    ``many_small``: near-equal profits, log-uniform weights on 1..1000, so the
    small items span three decades of efficiency.
    ``large_heavy``: five items carry 80% of the profit.
    ``mixed``: three large items (30%, 15%, 8% of the profit), 10% garbage
    items (tiny profit, heavy), the rest ordinary small items.
    """
    rng = np.random.default_rng(spec.seed)
    n = spec.n
    if spec.profile == "uniform":
        profits = rng.integers(1, 101, n)
        weights = rng.integers(1, 101, n)
    elif spec.profile == "many_small":
        profits = rng.integers(50, 101, n)
        weights = np.ceil(np.exp(rng.uniform(0, math.log(1000), n))).astype(np.int64)
    elif spec.profile == "large_heavy":
        share = 10**6
        small = rng.integers(1, 101, n - 5)
        small = np.maximum(1, (small * (share // 4) // small.sum()))
        large = np.full(5, 4 * share // 25)
        profits = np.concatenate((large, small))
        weights = np.concatenate((rng.integers(50, 101, 5), rng.integers(1, 101, n - 5)))
    else:
        total = 10**6
        n_garbage = max(1, n // 10)
        n_small = n - 3 - n_garbage
        small = rng.integers(1, 101, n_small)
        small = np.maximum(1, small * (47 * total // 100) // small.sum())
        garbage = rng.integers(1, 11, n_garbage)
        profits = np.concatenate(([30 * total // 100, 15 * total // 100, 8 * total // 100], small, garbage))
        weights = np.concatenate(
            (rng.integers(20, 101, 3), rng.integers(1, 101, n_small), rng.integers(500, 1001, n_garbage))
        )
    profits = [int(p) for p in profits]
    weights = [int(w) for w in weights]
    return list(zip(profits, weights)), _capacity(weights, spec.capacity_fraction)


def gen_instance(spec: GeneratorSpec) -> KnapsackInstance:
    raw, capacity = generate_raw(spec)
    return normalize(raw, capacity)


def gen_instances(specs: Iterable[GeneratorSpec], out_dir) -> list[Path]:
    from .instance import save_instance

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for spec in specs:
        path = out / f"{spec.name}.json"
        save_instance(gen_instance(spec), path)
        paths.append(path)
    return paths


# ------------------------------------------------------------- LCA batches


@dataclass
class LcaCell:
    """Aggregated outcome of paired LCA runs on one (instance, epsilon)."""

    instance_name: str
    n: int
    epsilon: Fraction
    pairs: int
    opt_value: Fraction | None
    runs: int = 0
    feasibility_violations: int = 0
    eps_verified_runs: int = 0
    eps_verified_violations: int = 0
    covered_runs: int = 0
    covered_eps_valid: int = 0
    approx_success: int = 0
    ratio_sum: float = 0.0
    consistent_pairs: int = 0
    disagreeing_answers: int = 0
    short_samples: int = 0
    repaired_sequences: int = 0
    samples_per_query: Counter = field(default_factory=Counter)
    configs: Counter = field(default_factory=Counter)

    @property
    def approx_rate(self) -> float:
        return self.approx_success / self.pairs

    @property
    def consistency_rate(self) -> float:
        return self.consistent_pairs / self.pairs

    @property
    def eps_rate(self) -> float:
        return self.covered_eps_valid / max(self.covered_runs, 1)

    @property
    def feasibility_rate(self) -> float:
        return 1 - self.feasibility_violations / self.runs

    def as_record(self) -> dict:
        config, _ = self.configs.most_common(1)[0]
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "lca",
            "instance": self.instance_name,
            "n": self.n,
            "epsilon": str(self.epsilon),
            "pairs": self.pairs,
            "runs": self.runs,
            "opt": None if self.opt_value is None else str(self.opt_value),
            "consistency_rate": self.consistency_rate,
            "per_query_disagreement": self.disagreeing_answers / (self.pairs * self.n),
            "approx_success_rate": self.approx_rate,
            "mean_ratio": self.ratio_sum / self.pairs,
            "feasibility_violations": self.feasibility_violations,
            "eps_verified_runs": self.eps_verified_runs,
            "eps_verified_violations": self.eps_verified_violations,
            "covered_runs": self.covered_runs,
            "eps_valid_rate_given_coverage": self.eps_rate,
            "short_samples": self.short_samples,
            "repaired_sequences": self.repaired_sequences,
            "samples_per_query": {str(k): v for k, v in sorted(self.samples_per_query.items())},
            "probes_per_query": 0,
            "config": json.loads(config),
            "distinct_configs": len(self.configs),
        }


def run_lca_cell(
    instance: KnapsackInstance,
    epsilon,
    pairs: int,
    seed: bytes,
    *,
    name: str = "instance",
    opt_value: Fraction | None = None,
) -> LcaCell:
    """Paired runs: same shared seed, nonces 0 and 1, fresh seed per pair.

    The first run of each pair is the approximation trial; both runs count
    towards feasibility and threshold validity.
    """
    eps = as_fraction(epsilon)
    cell = LcaCell(name, len(instance), eps, pairs, opt_value)
    bound = None if opt_value is None else opt_value / 2 - 6 * eps
    for pair in range(pairs):
        base = RandomnessPlan(trial_seed(seed, "pair", pair))
        outcomes = []
        for nonce in (0, 1):
            out = materialize(instance, eps, base.with_nonce(nonce))
            outcomes.append(out)
            build = out.build
            cell.runs += 1
            cell.feasibility_violations += not out.feasible
            cell.short_samples += build.short_sample
            cell.repaired_sequences += build.repaired
            cell.samples_per_query[build.account.samples_drawn] += 1
            cell.configs[json.dumps(build.config.as_record(), sort_keys=True)] += 1
            verified = is_eps(instance, eps, build.eps).valid
            if verified:
                cell.eps_verified_runs += 1
                cell.eps_verified_violations += not out.feasible
            if sampled_all_large(instance, eps, build):
                cell.covered_runs += 1
                cell.covered_eps_valid += verified
        first, second = outcomes
        if bound is not None:
            cell.approx_success += first.profit >= bound
            cell.ratio_sum += float(first.profit / opt_value) if opt_value else 1.0
        cell.consistent_pairs += first.solution == second.solution
        cell.disagreeing_answers += len(first.solution ^ second.solution)
    return cell


def lca_cell_violations(cell: LcaCell) -> list[str]:
    """Acceptance thresholds for one cell (empty list when all hold)."""
    eps = float(cell.epsilon)
    out = []
    target = 1 - eps
    if cell.consistency_rate < target - 3 * sigma(target, cell.pairs):
        out.append(f"consistency {cell.consistency_rate:.4f} below 1-eps-3sigma")
    if cell.opt_value is not None and cell.approx_rate < target - 3 * sigma(target, cell.pairs):
        out.append(f"approximation {cell.approx_rate:.4f} below 1-eps-3sigma")
    if cell.eps_verified_violations:
        out.append(f"{cell.eps_verified_violations} infeasible runs with a verified EPS")
    eps_target = 1 - 13 * eps / 36
    if cell.covered_runs and cell.eps_rate < eps_target - 3 * sigma(eps_target, cell.covered_runs):
        out.append(f"EPS validity {cell.eps_rate:.4f} below 1-13eps/36-3sigma")
    return out


# ------------------------------------------------------------ query counts


def query_count_rows(epsilon, ns: Sequence[int], seed: bytes, queries: int = 3, profile: str = "uniform") -> list[dict]:
    """Samples drawn per query for instances of growing size at fixed epsilon."""
    eps = as_fraction(epsilon)
    rows = []
    for n in ns:
        instance = gen_instance(GeneratorSpec(profile, n, seed=n))
        counts, expected = set(), set()
        for q in range(queries):
            build = build_reduced(instance, eps, RandomnessPlan(trial_seed(seed, "qc", n), q))
            counts.add(build.account.samples_drawn)
            expected.add(build.config.m + build.config.a)
        rows.append({
            "schema_version": SCHEMA_VERSION,
            "kind": "querycount",
            "n": n,
            "epsilon": str(eps),
            "samples_per_query": sorted(counts),
            "m_plus_a": sorted(expected),
            "large_items": len(partition(instance, eps).large),
        })
    return rows


# -------------------------------------------------------- quantile contract


@dataclass(frozen=True)
class BenchmarkDistribution:
    name: str
    d: int
    p: Fraction
    codes: tuple[int, ...]
    pmf: tuple[Fraction, ...]

    @property
    def cumulative(self) -> tuple[Fraction, ...]:
        acc, out = Fraction(0), []
        for w in self.pmf:
            acc += w
            out.append(acc)
        return tuple(out)

    def cdf(self, v: int) -> tuple[Fraction, Fraction]:
        """(Pr[X <= v], Pr[X < v])."""
        cum = self.cumulative
        hi = bisect_right(self.codes, v)
        lo = bisect_left(self.codes, v)
        return (cum[hi - 1] if hi else Fraction(0), cum[lo - 1] if lo else Fraction(0))

    def is_accurate(self, v: int, tau) -> bool:
        at_most, below = self.cdf(v)
        tau = as_fraction(tau)
        return at_most >= self.p - tau and 1 - below >= 1 - self.p - tau

    def draw(self, size: int, rng: np.random.Generator) -> EmpiricalSample:
        probs = np.array([float(w) for w in self.pmf])
        counts = rng.multinomial(size, probs / probs.sum())
        return EmpiricalSample.from_histogram(self.codes, counts)


def _expand_distribution(entry: dict) -> BenchmarkDistribution:
    kind = entry["kind"]
    if kind == "point":
        codes, weights = [entry["code"]], [1]
    elif kind == "uniform":
        codes = list(range(entry["low"], entry["high"] + 1, entry.get("step", 1)))
        weights = [1] * len(codes)
    elif kind == "geometric":
        codes = [entry["start"] + i * entry.get("step", 1) for i in range(entry["atoms"])]
        weights = [2 ** (entry["atoms"] - i) for i in range(entry["atoms"])]
    elif kind == "explicit":
        codes = [c for c, _ in entry["pmf"]]
        weights = [as_fraction(w) for _, w in entry["pmf"]]
    else:
        raise ValueError(f"unknown distribution kind {kind!r}")
    total = sum(Fraction(w) for w in weights)
    return BenchmarkDistribution(
        entry["name"], entry.get("d", 32), as_fraction(entry["p"]),
        tuple(codes), tuple(Fraction(w) / total for w in weights),
    )


def load_benchmark_distributions(path=None) -> list[BenchmarkDistribution]:
    if path is None:
        text = resources.files("lcaknap").joinpath("data/benchmark_distributions.json").read_text()
    else:
        text = Path(path).read_text(encoding="utf-8")
    return [_expand_distribution(e) for e in json.loads(text)["distributions"]]


def quantile_contract_row(dist: BenchmarkDistribution, params: QuantileParams, pairs: int, seed: bytes) -> dict:
    """Paired r_quantile runs: shared internal stream, fresh samples and coins."""
    agree = failures = 0
    size = params.n_rq
    for pair in range(pairs):
        shared = trial_seed(seed, dist.name, pair)
        outputs = []
        for run in (0, 1):
            plan = RandomnessPlan(shared, run)
            sample = dist.draw(size, plan.sampling("draw"))
            v = r_quantile(sample, dist.p, params, plan.internal("q"), plan.sampling("pad"))
            outputs.append(v)
            failures += not dist.is_accurate(v, params.tau)
        agree += outputs[0] == outputs[1]
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "quantile",
        "distribution": dist.name,
        "p": str(dist.p),
        "rho": str(params.rho),
        "tau": str(params.tau),
        "beta": str(params.beta),
        "d": params.d,
        "construction": params.construction,
        "n_rq": size,
        "pairs": pairs,
        "agreement_rate": agree / pairs,
        "failure_rate": failures / (2 * pairs),
    }


def quantile_row_violations(row: dict) -> list[str]:
    rho, beta, pairs = float(Fraction(row["rho"])), float(Fraction(row["beta"])), row["pairs"]
    out = []
    if row["agreement_rate"] < 1 - rho - 3 * sigma(rho, pairs):
        out.append(f"agreement {row['agreement_rate']:.4f} below 1-rho-3sigma")
    if row["failure_rate"] > beta + 3 * sigma(beta, 2 * pairs):
        out.append(f"failure {row['failure_rate']:.4f} above beta+3sigma")
    return out


# ------------------------------------------------------------------ oracles


def oracle_crosscheck(trials: int, seed: int, max_n: int = 16, greedy_trials: int | None = None) -> dict:
    """brute vs dp agreement, greedy half-guarantee and fractional dominance."""
    rng = np.random.default_rng(seed)
    mismatches = greedy_bad = fractional_bad = 0
    greedy_trials = trials if greedy_trials is None else greedy_trials
    for t in range(max(trials, greedy_trials)):
        n = int(rng.integers(1, max_n + 1))
        raw = [(int(rng.integers(0, 30)), int(rng.integers(1, 30))) for _ in range(n)]
        if sum(p for p, _ in raw) == 0:
            raw[0] = (1, raw[0][1])
        cap = int(rng.integers(max(w for _, w in raw), sum(w for _, w in raw) + 1))
        instance = normalize(raw, cap)
        opt = dp_exact(instance)
        if t < trials and brute_force(instance).value != opt.value:
            mismatches += 1
        if t < greedy_trials:
            greedy_bad += greedy_half(instance).value * 2 < opt.value
            fractional_bad += fractional_greedy_value(instance) < opt.value
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "oracles",
        "trials": trials,
        "greedy_trials": greedy_trials,
        "brute_dp_mismatches": mismatches,
        "greedy_below_half": greedy_bad,
        "fractional_below_opt": fractional_bad,
    }


# ----------------------------------------------------------------- hardness


def or_family_check(family: str, n: int, beta=Fraction(1, 4), alpha=Fraction(1, 2)) -> dict:
    """Enumerate every x with at most one 1 (and all-ones) and test the s_n claim."""
    vectors = [tuple([0] * (n - 1))]
    vectors += [tuple(int(k == i) for k in range(n - 1)) for i in range(n - 1)]
    vectors.append(tuple([1] * (n - 1)))
    bad = 0
    for x in vectors:
        spec = HardInstanceSpec(family, n, x, as_fraction(beta) if family == "or_approx" else None)
        instance = generate(spec)
        opt = brute_force(instance) if n <= 24 else dp_exact(instance)
        last = instance[n - 1].profit
        if family == "or_optimal":
            claim = opt.value == last and all(instance[i].profit < last for i in range(n - 1))
        else:
            claim = last >= alpha * opt.value
        bad += claim != (or_value(spec) == 0)
    return {"schema_version": SCHEMA_VERSION, "kind": "or_family", "family": family,
            "n": n, "vectors": len(vectors), "violations": bad}


def hardness_row(strategy_name: str, family: str, n: int, trials: int, budget: int | None, seed: int) -> dict:
    strategy = STRATEGIES[strategy_name](n)
    report = run_adversary(strategy, family, n, trials, budget, np.random.default_rng(seed))
    row = report.as_record()
    row.update({"schema_version": SCHEMA_VERSION, "kind": "hardness", "strategy": strategy_name,
                "budget": budget})
    return row


# ----------------------------------------------------------------- driver


@dataclass
class ExperimentConfig:
    kind: str
    epsilons: tuple[Fraction, ...] = DEFAULT_EPSILONS
    trials: int = 200
    seed: str = "00"
    instances: tuple[str, ...] = ()
    generators: tuple[GeneratorSpec, ...] = ()
    ns: tuple[int, ...] = (100, 1000, 10000, 100000)
    output: str | None = None

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        self.epsilons = tuple(as_fraction(e) for e in self.epsilons)
        for e in self.epsilons:
            if not 0 < e <= 1:
                raise ValueError(f"epsilon {e} outside (0, 1]")

    @property
    def seed_bytes(self) -> bytes:
        return bytes.fromhex(self.seed)


def _instances(config: ExperimentConfig):
    from .instance import load_instance

    for path in config.instances:
        yield Path(path).stem, load_instance(path)
    for spec in config.generators:
        yield spec.name, gen_instance(spec)


def run_experiment(config: ExperimentConfig) -> list[dict]:
    """Rows for ``consistency``/``approx`` (paired LCA cells) or ``querycount``."""
    if config.kind == "querycount":
        return [row for eps in config.epsilons for row in query_count_rows(eps, config.ns, config.seed_bytes)]
    if config.kind not in ("consistency", "approx"):
        raise ValueError(f"unknown experiment {config.kind!r}")
    rows = []
    for name, instance in _instances(config):
        try:
            opt = dp_exact(instance).value
        except OracleLimitError:
            opt = None
        for eps in config.epsilons:
            cell = run_lca_cell(instance, eps, config.trials, trial_seed(config.seed_bytes, name, eps),
                                name=name, opt_value=opt)
            row = cell.as_record()
            row["violations"] = lca_cell_violations(cell)
            row["oracle_budget_exceeded"] = opt is None
            rows.append(row)
    return rows


def write_rows(rows: Iterable[dict], path) -> None:
    with open(path, "a", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True) + "\n")


def summarize_csv(jsonl_path, csv_path) -> None:
    import csv

    rows = [json.loads(line) for line in Path(jsonl_path).read_text().splitlines() if line.strip()]
    keys = sorted({k for row in rows for k, v in row.items() if not isinstance(v, (dict, list))})
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=keys, extrasaction="ignore")
        writer.writeheader()
        writer.writerows(rows)
