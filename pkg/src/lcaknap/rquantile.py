"""Reproducible approximate medians and quantiles over a finite code domain.

A sample is summarised as an :class:`EmpiricalSample` (sorted distinct codes
with multiplicities), so that very large samples cost O(distinct values).

Two median constructions share one contract (rho-reproducible, tau-accurate
with probability 1 - beta):

``bisect`` (default)
    Binary search over the ``2**bits`` codes. Level j compares the empirical
    CDF at the midpoint with its own threshold alpha_j, drawn uniformly from
    [1/2 - tau/2, 1/2 + tau/2] out of the shared internal stream. Two runs can
    only split at a level whose alpha_j falls between their two empirical CDF
    values, so the disagreement probability is at most
    ``bits * E[sup |F1 - F2|] / tau``.

``threshold``
    A single alpha from the same window and the smallest code whose empirical
    CDF reaches it. Its output commutes with monotone recodings, but it is
    only reproducible when few atom boundaries sit inside the window.

Quantiles reduce to medians by mixing the sample with -inf/+inf sentinels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .instance import KnapsackInstance, as_fraction

CONSTRUCTIONS = ("bisect", "threshold")


class InsufficientSampleError(ValueError):
    pass


def floor_log2(x: Fraction) -> int:
    num, den = x.numerator, x.denominator
    k = num.bit_length() - den.bit_length()
    below = (num < den << k) if k >= 0 else (num << -k) < den
    return k - 1 if below else k


def _floor_scaled(x: Fraction, shift: int) -> int:
    """floor(x * 2**shift) for x >= 0."""
    if shift >= 0:
        return (x.numerator << shift) // x.denominator
    return x.numerator // (x.denominator << -shift)


def _pow2(e: int) -> Fraction:
    return Fraction(1 << e) if e >= 0 else Fraction(1, 1 << -e)


@dataclass(frozen=True)
class DiscreteDomain:
    """Monotone map between non-negative rationals and ``bit_width``-bit codes.

    Codes are laid out like a binary float: an exponent field on top of a
    ``mantissa_bits`` mantissa, with field 0 holding zero and subnormals.
    ``decode`` returns the smallest rational of a code's cell, hence
    ``x >= decode(c)`` exactly when ``encode(x) >= c``.
    """

    bit_width: int
    min_exponent: int
    mantissa_bits: int

    @property
    def exponent_bits(self) -> int:
        return self.bit_width - self.mantissa_bits

    @property
    def max_code(self) -> int:
        return (1 << self.bit_width) - 1

    @property
    def relative_error_bound(self) -> Fraction:
        return Fraction(1, 1 << self.mantissa_bits)

    def encode(self, value) -> int:
        x = as_fraction(value)
        if x < 0:
            raise ValueError(f"cannot encode negative value {x}")
        if x == 0:
            return 0
        m = self.mantissa_bits
        k = floor_log2(x)
        if k < self.min_exponent:
            return _floor_scaled(x, m - self.min_exponent)
        field = k - self.min_exponent + 1
        if field >= 1 << self.exponent_bits:
            raise ValueError(f"value {x} above the representable range")
        return (field << m) | (_floor_scaled(x, m - k) - (1 << m))

    def decode(self, code: int) -> Fraction:
        if not 0 <= code <= self.max_code:
            raise ValueError(f"code {code} outside [0, {self.max_code}]")
        m = self.mantissa_bits
        field, mant = code >> m, code & ((1 << m) - 1)
        if field == 0:
            return mant * _pow2(self.min_exponent - m)
        return ((1 << m) + mant) * _pow2(field - 1 + self.min_exponent - m)


def domain_for_range(low: Fraction, high: Fraction, bit_width: int) -> DiscreteDomain:
    kmin, kmax = floor_log2(low), floor_log2(high)
    exp_bits = (kmax - kmin + 1).bit_length()
    mantissa = bit_width - exp_bits
    if mantissa < 1:
        raise ValueError(f"{bit_width} bits cannot cover efficiencies in [{low}, {high}]")
    return DiscreteDomain(bit_width, kmin, mantissa)


def discretize_efficiencies(instance: KnapsackInstance, d: int = 32) -> DiscreteDomain:
    """Code domain covering every efficiency representable with B' and B.

    Positive efficiencies lie in [1/(B' * capacity), B]; the exponent field is
    sized to that range and the rest of the ``d`` bits form the mantissa.
    """
    if d < 8:
        raise ValueError("domain needs at least 8 bits")
    key = ("domain", d)
    memo = instance._memo
    if key not in memo:
        low = Fraction(1, instance.profit_denominator) / instance.capacity
        high = Fraction(instance.weight_denominator)
        memo[key] = domain_for_range(low, high, d)
    return memo[key]


def efficiency_codes(instance: KnapsackInstance, domain: DiscreteDomain) -> np.ndarray:
    key = ("codes", domain)
    memo = instance._memo
    if key not in memo:
        memo[key] = np.array([domain.encode(item.efficiency) for item in instance.items], np.int64)
    return memo[key]


@dataclass(frozen=True, eq=False)
class EmpiricalSample:
    """Distinct codes in increasing order with their multiplicities."""

    codes: np.ndarray
    counts: np.ndarray

    @classmethod
    def from_codes(cls, codes: Iterable[int]) -> "EmpiricalSample":
        values, counts = np.unique(np.asarray(list(codes), dtype=np.int64), return_counts=True)
        return cls(values, counts.astype(np.int64))

    @classmethod
    def from_histogram(cls, codes: Sequence[int], counts: Sequence[int]) -> "EmpiricalSample":
        codes = np.asarray(codes, dtype=np.int64)
        counts = np.asarray(counts, dtype=np.int64)
        keep = counts > 0
        values, inverse = np.unique(codes[keep], return_inverse=True)
        merged = np.zeros(len(values), dtype=np.int64)
        np.add.at(merged, inverse, counts[keep])
        return cls(values, merged)

    @property
    def size(self) -> int:
        return int(self.counts.sum())


def _as_sample(sample) -> EmpiricalSample:
    return sample if isinstance(sample, EmpiricalSample) else EmpiricalSample.from_codes(sample)


def median_sample_complexity(
    rho: float, accuracy: float, beta: float, bits: int, construction: str = "bisect"
) -> int:
    """Sample size after which the median contract holds.

    Accuracy: the DKW inequality keeps sup|F_hat - F| <= accuracy/2 except with
    probability beta. Reproducibility: E sup|F1 - F2| <= sqrt(2 pi / N), and
    each of the ``levels`` thresholds is hit with probability at most that
    over ``accuracy``.
    """
    if construction not in CONSTRUCTIONS:
        raise ValueError(f"unknown construction {construction!r}")
    levels = bits if construction == "bisect" else 1
    rho, accuracy, beta = float(rho), float(accuracy), float(beta)
    n_accuracy = math.ceil(2 * math.log(2 / beta) / accuracy**2)
    n_repro = math.ceil(2 * math.pi * (levels / (rho * accuracy)) ** 2)
    return max(n_accuracy, n_repro)


@dataclass(frozen=True)
class QuantileParams:
    rho: Fraction
    tau: Fraction
    beta: Fraction
    d: int = 32
    construction: str = "bisect"

    def __post_init__(self):
        if not 0 < self.beta <= self.rho <= 1:
            raise ValueError("need 0 < beta <= rho <= 1")
        if not 0 < self.tau <= Fraction(1, 2):
            raise ValueError("need 0 < tau <= 1/2")
        if self.construction not in CONSTRUCTIONS:
            raise ValueError(f"unknown construction {self.construction!r}")

    @classmethod
    def of(cls, rho, tau, beta, d: int = 32, construction: str = "bisect") -> "QuantileParams":
        return cls(as_fraction(rho), as_fraction(tau), as_fraction(beta), d, construction)

    @property
    def n_median(self) -> int:
        """Sample size needed by :func:`r_median` on a ``d``-bit domain at accuracy tau."""
        return median_sample_complexity(self.rho, self.tau, self.beta, self.d, self.construction)

    @property
    def n_rq(self) -> int:
        """Sample size needed by :func:`r_quantile`: the median on d+1 bits at tau/2."""
        return median_sample_complexity(
            self.rho, self.tau / 2, self.beta, self.d + 1, self.construction
        )


def _median_code(
    sample: EmpiricalSample, accuracy: float, bits: int, stream: np.random.Generator, construction: str
) -> int:
    cum = np.cumsum(sample.counts)
    total = float(cum[-1])
    if construction == "threshold":
        alpha = 0.5 + accuracy * (stream.random() - 0.5)
        return int(sample.codes[np.searchsorted(cum, alpha * total, side="left")])
    alphas = 0.5 + accuracy * (stream.random(bits) - 0.5)
    lo, hi = 0, (1 << bits) - 1
    codes = sample.codes
    for alpha in alphas:
        mid = (lo + hi) // 2
        pos = int(np.searchsorted(codes, mid, side="right"))
        at_most = float(cum[pos - 1]) if pos else 0.0
        if at_most >= alpha * total:
            hi = mid
        else:
            lo = mid + 1
    return lo


def r_median(sample, params: QuantileParams, internal_stream: np.random.Generator, *, strict: bool = True) -> int:
    """rho-reproducible tau-approximate median of a sample over ``2**params.d`` codes.

    ``internal_stream`` must be derived from the shared seed only; two calls
    with equal streams and i.i.d. samples agree with probability >= 1 - rho.
    """
    sample = _as_sample(sample)
    if sample.size == 0:
        raise InsufficientSampleError("empty sample")
    if strict and sample.size < params.n_median:
        raise InsufficientSampleError(f"need {params.n_median} samples, got {sample.size}")
    if sample.codes[-1] >= 1 << params.d or sample.codes[0] < 0:
        raise ValueError("sample codes outside the domain")
    return _median_code(sample, float(params.tau), params.d, internal_stream, params.construction)


def pad_sample(sample, p, padding_rng: np.random.Generator, d: int) -> EmpiricalSample:
    """Mix a sample over d-bit codes with sentinels for the quantile reduction.

    Each point independently becomes a sentinel with probability 1/2; a
    sentinel is -inf (code 0) with probability 1 - p and +inf (code
    2**(d+1) - 1) otherwise. Real codes shift up by one.
    """
    sample = _as_sample(sample)
    p = float(p)
    kept = padding_rng.binomial(sample.counts, 0.5)
    sentinels = int(sample.size - kept.sum())
    low = int(padding_rng.binomial(sentinels, 1.0 - p))
    codes = np.concatenate(([0], sample.codes + 1, [(1 << (d + 1)) - 1]))
    counts = np.concatenate(([low], kept, [sentinels - low]))
    return EmpiricalSample.from_histogram(codes, counts)


def r_quantile(
    sample,
    p,
    params: QuantileParams,
    internal_stream: np.random.Generator,
    padding_rng: np.random.Generator,
    *,
    strict: bool = True,
) -> int:
    """rho-reproducible tau-approximate p-quantile of a sample over d-bit codes.

    The sentinel coins come from ``padding_rng`` (per-run randomness, part of
    the sample); the median thresholds come from ``internal_stream``. A
    sentinel answer is clamped to the nearest end of the domain.
    """
    p = as_fraction(p)
    if not 0 < p < 1:
        raise ValueError(f"quantile level must lie in (0, 1), got {p}")
    sample = _as_sample(sample)
    if sample.size == 0:
        raise InsufficientSampleError("empty sample")
    if strict and sample.size < params.n_rq:
        raise InsufficientSampleError(f"need {params.n_rq} samples, got {sample.size}")
    if sample.codes[-1] >= 1 << params.d or sample.codes[0] < 0:
        raise ValueError("sample codes outside the domain")
    padded = pad_sample(sample, p, padding_rng, params.d)
    top = (1 << (params.d + 1)) - 1
    v = _median_code(padded, float(params.tau) / 2, params.d + 1, internal_stream, params.construction)
    if v == 0:
        return 0
    if v == top:
        return (1 << params.d) - 1
    return min(v - 1, (1 << params.d) - 1)


def is_approx_quantile(cdf_at_most, cdf_below, p, tau) -> bool:
    """tau-approximate p-quantile test given Pr[X <= v] and Pr[X < v]."""
    p, tau = as_fraction(p), as_fraction(tau)
    return cdf_at_most >= p - tau and 1 - cdf_below >= 1 - p - tau
