"""Weighted-sampling access to an instance, probe accounting and seeded streams.

Randomness is split into two families of streams, both derived with
HMAC-SHA256 keyed by the shared seed:

* ``internal`` streams depend on the seed only and feed the reproducible
  quantile thresholds, so every run of the LCA sees the same values;
* ``sampling`` streams additionally mix in the run nonce and feed item
  sampling and the sentinel coins of the quantile padding.

The 32-byte digest seeds a PCG64 generator, which is bit-stable across
platforms and numpy versions that keep the PCG64 stream.
"""

from __future__ import annotations

import hashlib
import hmac
import secrets
from dataclasses import dataclass, field

import numpy as np

from .instance import Item, KnapsackInstance


def derive_stream(seed: bytes, label: str, *path) -> np.random.Generator:
    message = "/".join([label, *(str(part) for part in path)]).encode("utf-8")
    digest = hmac.new(seed, message, hashlib.sha256).digest()
    return np.random.Generator(np.random.PCG64(int.from_bytes(digest, "little")))


@dataclass(frozen=True)
class RandomnessPlan:
    """The shared read-only seed plus the nonce of one logical LCA run."""

    seed: bytes
    run_nonce: int = 0

    @classmethod
    def from_hex(cls, seed_hex: str, run_nonce: int = 0) -> "RandomnessPlan":
        return cls(bytes.fromhex(seed_hex), run_nonce)

    @classmethod
    def fresh(cls, run_nonce: int = 0) -> "RandomnessPlan":
        return cls(secrets.token_bytes(16), run_nonce)

    def with_nonce(self, run_nonce: int) -> "RandomnessPlan":
        return RandomnessPlan(self.seed, run_nonce)

    def internal(self, *path) -> np.random.Generator:
        return derive_stream(self.seed, "internal", *path)

    def sampling(self, *path) -> np.random.Generator:
        return derive_stream(self.seed, "sampling", self.run_nonce, *path)


class ProbeBudgetExceeded(RuntimeError):
    """A budgeted oracle was asked for more point probes than allowed."""


@dataclass
class SampleAccount:
    samples_drawn: int = 0
    point_probes: int = 0

    def merge(self, other: "SampleAccount") -> "SampleAccount":
        return SampleAccount(
            self.samples_drawn + other.samples_drawn, self.point_probes + other.point_probes
        )


def _randbelow(rng: np.random.Generator, bound: int, size: int) -> np.ndarray:
    if bound < 2**62:
        return rng.integers(0, bound, size=size, dtype=np.int64)
    # rejection sampling on raw bytes for huge profit denominators
    nbytes = (bound.bit_length() + 7) // 8
    out = []
    while len(out) < size:
        value = int.from_bytes(rng.bytes(nbytes), "little") >> (8 * nbytes - bound.bit_length())
        if value < bound:
            out.append(value)
    return np.array(out, dtype=object)


@dataclass
class WeightedSampler:
    """Profit-proportional sampling and point probes against one instance.

    ``sample``/``sample_multiset`` are exact: an integer uniform in
    [0, B') is located in the cumulative integer profits. ``sample_counts``
    draws the per-item counts of a large multiset in one multinomial step,
    which has the same distribution up to float rounding of the profits.
    """

    instance: KnapsackInstance
    rng: np.random.Generator
    probe_budget: int | None = None
    account: SampleAccount = field(default_factory=SampleAccount)

    def __post_init__(self):
        if self.instance.feasibility_only:
            self._cumulative = None
        else:
            self._cumulative = np.cumsum(self.instance.profit_numerators)

    def _require_profits(self):
        if self._cumulative is None:
            raise ValueError("weighted sampling needs an instance with positive total profit")

    def sample_indices(self, count: int) -> np.ndarray:
        self._require_profits()
        if count < 0:
            raise ValueError("sample size must be non-negative")
        draws = _randbelow(self.rng, self.instance.profit_denominator, count)
        self.account.samples_drawn += count
        return np.searchsorted(self._cumulative, draws, side="right")

    def sample(self) -> Item:
        return self.instance[int(self.sample_indices(1)[0])]

    def sample_multiset(self, count: int) -> list[Item]:
        return [self.instance[int(i)] for i in self.sample_indices(count)]

    def sample_counts(self, count: int) -> np.ndarray:
        """Per-item occurrence counts of ``count`` independent weighted samples."""
        self._require_profits()
        if count < 0:
            raise ValueError("sample size must be non-negative")
        self.account.samples_drawn += count
        pvals = self.instance.profit_floats
        return self.rng.multinomial(count, pvals / pvals.sum())

    def probe(self, index: int) -> Item:
        if not 0 <= index < len(self.instance):
            raise IndexError(f"item index {index} out of range")
        if self.probe_budget is not None and self.account.point_probes >= self.probe_budget:
            raise ProbeBudgetExceeded(f"probe budget {self.probe_budget} exhausted")
        self.account.point_probes += 1
        return self.instance[index]
