"""Length-limited canonical prefix codes over the 16 exponent symbols."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .entropy import EmptyInputError, ExponentHistogram
from .fp8 import N_SYMBOLS

MAX_CODE_LENGTH = 16


class InvalidLengthsError(ValueError):
    pass


@dataclass(frozen=True)
class CodeTable:
    lengths: np.ndarray  # uint8[16], 0 = absent
    codes: np.ndarray    # uint32[16], MSB-first, meaningful where length > 0

    @property
    def present(self) -> np.ndarray:
        return np.flatnonzero(self.lengths)

    @property
    def max_length(self) -> int:
        return int(self.lengths.max())

    def code_string(self, symbol: int) -> str:
        n = int(self.lengths[symbol])
        return format(int(self.codes[symbol]), f"0{n}b") if n else ""


def kraft_sum(lengths) -> float:
    lengths = np.asarray(lengths, dtype=np.int64)
    return float(sum(2.0 ** -int(n) for n in lengths if n > 0))


def canonical_codes(lengths) -> CodeTable:
    """Assign codes in (length, symbol) order, numerically increasing."""
    lengths = np.asarray(lengths, dtype=np.int64)
    if lengths.shape != (N_SYMBOLS,):
        raise InvalidLengthsError(f"invalid length vector: expected {N_SYMBOLS} entries")
    if (lengths < 0).any() or (lengths > MAX_CODE_LENGTH).any():
        raise InvalidLengthsError("invalid length vector: lengths must lie in [0, 16]")
    if not lengths.any():
        raise InvalidLengthsError("invalid length vector: no symbols present")
    # Exact integer Kraft test at 2^-16 resolution.
    if sum(1 << (MAX_CODE_LENGTH - int(n)) for n in lengths if n) > 1 << MAX_CODE_LENGTH:
        raise InvalidLengthsError("invalid length vector: Kraft inequality violated")

    codes = np.zeros(N_SYMBOLS, dtype=np.uint32)
    order = sorted((int(n), s) for s, n in enumerate(lengths) if n)
    code, prev = 0, order[0][0]
    for i, (n, s) in enumerate(order):
        if i:
            code = (code + 1) << (n - prev)
        codes[s] = code
        prev = n
    return CodeTable(lengths.astype(np.uint8), codes)


def package_merge(weights, max_length: int = MAX_CODE_LENGTH) -> list[int]:
    """Optimal code lengths for positive ``weights`` subject to ``max_length``.

    Classic package-merge: at each of ``max_length`` levels the sorted leaf
    list is merged with the pairwise packages of the level below; the
    ``2n - 2`` cheapest items of the final list determine how often each leaf
    is selected, which is its code length. Ties keep packages ahead of leaves
    so equal-cost solutions come out deep rather than balanced.
    """
    n = len(weights)
    if n == 0:
        return []
    if n == 1:
        return [1]
    if (1 << max_length) < n:
        raise ValueError(f"{n} symbols do not fit in codes of at most {max_length} bits")

    leaves = sorted(((w, (i,)) for i, w in enumerate(weights)), key=lambda it: (it[0], it[1]))
    current = list(leaves)
    for _ in range(max_length - 1):
        packages = [(current[k][0] + current[k + 1][0], current[k][1] + current[k + 1][1])
                    for k in range(0, len(current) - 1, 2)]
        merged = []
        i = j = 0
        while i < len(leaves) or j < len(packages):
            if j < len(packages) and (i == len(leaves) or packages[j][0] <= leaves[i][0]):
                merged.append(packages[j])
                j += 1
            else:
                merged.append(leaves[i])
                i += 1
        current = merged

    lengths = [0] * n
    for _, members in current[: 2 * n - 2]:
        for s in members:
            lengths[s] += 1
    return lengths


def build_code(h: ExponentHistogram, max_length: int = MAX_CODE_LENGTH) -> CodeTable:
    if not isinstance(h, ExponentHistogram):
        h = ExponentHistogram(h)
    if h.total == 0:
        raise EmptyInputError("empty input")
    present = np.flatnonzero(h.counts)
    lengths = np.zeros(N_SYMBOLS, dtype=np.int64)
    lengths[present] = package_merge([int(h.counts[s]) for s in present], max_length)
    return canonical_codes(lengths)


def expected_length(t: CodeTable, h: ExponentHistogram) -> float:
    """Average code length in bits per symbol under the histogram's distribution."""
    counts = h.counts if isinstance(h, ExponentHistogram) else np.asarray(h)
    total = counts.sum()
    if total == 0:
        return 0.0
    return float((counts * t.lengths.astype(np.int64)).sum() / total)
