"""Exponent statistics: histograms, Shannon entropy and the alpha-stable exponent law.

Two notions of "exponent" live here and are kept apart on purpose:

* the ideal integer exponent ``floor(log2|x|)`` with unbounded support, used to
  check the geometric law on real-valued samples, and
* the 4-bit E4M3 exponent field (16 bins), which is what the codec compresses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .fp8 import N_SYMBOLS, split_array

#: Sign bit + one mantissa bit added on top of the exponent entropy ceiling.
_SIGN_AND_MANTISSA_BITS = 2.0


class EmptyInputError(ValueError):
    pass


@dataclass(frozen=True)
class ExponentHistogram:
    counts: np.ndarray = field(default_factory=lambda: np.zeros(N_SYMBOLS, dtype=np.int64))

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.shape != (N_SYMBOLS,):
            raise ValueError(f"expected {N_SYMBOLS} bins, got shape {counts.shape}")
        if (counts < 0).any():
            raise ValueError("negative count")
        object.__setattr__(self, "counts", counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @classmethod
    def from_exponents(cls, exponents) -> "ExponentHistogram":
        return cls(np.bincount(np.asarray(exponents, dtype=np.uint8).ravel(), minlength=N_SYMBOLS))

    @classmethod
    def from_fp8(cls, data) -> "ExponentHistogram":
        exponents, _ = split_array(data)
        return cls.from_exponents(exponents)


def shannon_entropy(h) -> float:
    """Entropy in bits of a histogram (an :class:`ExponentHistogram` or any count vector)."""
    counts = np.asarray(h.counts if isinstance(h, ExponentHistogram) else h, dtype=np.float64)
    total = counts.sum()
    if total <= 0:
        raise EmptyInputError("empty input")
    p = counts[counts > 0] / total
    return float(max(0.0, -(p * np.log2(p)).sum()))


@dataclass(frozen=True)
class StableModel:
    """Symmetric alpha-stable law (beta = 0) and the exponent law it induces."""

    alpha: float
    gamma: float = 1.0
    delta: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.alpha <= 2.0:
            raise ValueError(f"alpha must lie in (0, 2], got {self.alpha}")
        if not self.gamma > 0.0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")

    @property
    def q(self) -> float:
        return 2.0 ** (-self.alpha)


def geometric_pmf(m: StableModel, k) -> float | np.ndarray:
    """P(E = k) = (1 - q)/(1 + q) * q^|k| with q = 2^-alpha."""
    q = m.q
    return (1.0 - q) / (1.0 + q) * q ** np.abs(k)


def entropy_bounds(alpha: float) -> tuple[float, float]:
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    q = 2.0 ** (-alpha)
    return alpha / (1.0 + q), alpha / (1.0 - q)


def closed_form_entropy(m: StableModel | float) -> float:
    """Entropy of the two-sided geometric exponent law, in closed form.

    With ``p0 = (1-q)/(1+q)`` the mass at zero, ``H = -log2 p0 + |log2 q| E|k|``
    and ``E|k| = 2q / ((1+q)(1-q))``. Summing ``-p log2 p`` over the pmf
    gives the same value.
    """
    if not isinstance(m, StableModel):
        m = StableModel(float(m))
    q = m.q
    p0 = (1.0 - q) / (1.0 + q)
    return -math.log2(p0) + 2.0 * q * abs(math.log2(q)) / ((1.0 + q) * (1.0 - q))


def compression_floor_bits() -> float:
    """Exponent entropy ceiling at alpha = 2 plus one sign and one mantissa bit (~4.67)."""
    return entropy_bounds(2.0)[1] + _SIGN_AND_MANTISSA_BITS


def sample_stable(alpha: float, gamma: float, n: int, seed: int) -> np.ndarray:
    """Draw ``n`` symmetric alpha-stable variates with the Chambers-Mallows-Stuck transform.

    Randomness comes from numpy's PCG64 bit generator seeded with ``seed``:
    ``n`` uniforms on (-pi/2, pi/2) are drawn first, then ``n`` unit
    exponentials. With alpha = 2 the result is Gaussian with standard
    deviation ``gamma * sqrt(2)``.
    """
    StableModel(alpha, gamma)
    if n < 0:
        raise ValueError(f"n must be non-negative, got {n}")
    rng = np.random.Generator(np.random.PCG64(seed))
    v = rng.uniform(-np.pi / 2, np.pi / 2, size=n)
    w = rng.standard_exponential(size=n)
    if alpha == 1.0:
        x = np.tan(v)
    else:
        x = (np.sin(alpha * v) / np.cos(v) ** (1.0 / alpha)
             * (np.cos((1.0 - alpha) * v) / w) ** ((1.0 - alpha) / alpha))
    return gamma * x


def ideal_exponent(x: float) -> int:
    if x == 0:
        raise ValueError("zero has no exponent")
    return math.floor(math.log2(abs(x)))


def ideal_exponents(xs) -> np.ndarray:
    """Vectorised ``floor(log2|x|)``; exact at powers of two thanks to frexp."""
    xs = np.asarray(xs, dtype=np.float64)
    _, e = np.frexp(np.abs(xs))
    return e.astype(np.int64) - 1


def empirical_exponent_entropy(xs) -> float:
    xs = np.asarray(xs, dtype=np.float64).ravel()
    xs = xs[xs != 0]
    if xs.size == 0:
        raise EmptyInputError("empty input: no nonzero values")
    _, counts = np.unique(ideal_exponents(xs), return_counts=True)
    return shannon_entropy(counts)


@dataclass
class EntropyReport:
    name: str
    n_elem: int
    entropy_bits: float
    bits_per_symbol: float
    projected_savings: float
    actual_savings: float | None = None
    bound_lower: float = field(default_factory=lambda: entropy_bounds(2.0)[0])
    bound_upper: float = field(default_factory=lambda: entropy_bounds(2.0)[1])
    floor_bits: float = field(default_factory=compression_floor_bits)
    histogram: list[int] = field(default_factory=list)
