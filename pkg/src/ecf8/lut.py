"""Cascaded byte-indexed decode tables.

Layout of the flat ``entries`` array (``n_luts`` subtables of ``2**width``):

* subtable 0: root, indexed by the first ``width`` bits of the window;
* subtables 1..n_luts-2: deeper levels, reached through pointer entries;
* subtable n_luts-1: code length of each symbol (at least 16 entries, even
  for narrow widths).

A decode entry is either a symbol (0..15) or a pointer ``v >= 240`` meaning
"continue in subtable ``256 - v``".
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .huffman import CodeTable

POINTER_MIN = 240
MAX_SUBTABLES = 256 - POINTER_MIN  # pointer values 255..240 -> subtables 1..16


class PointerSpaceError(ValueError):
    pass


@dataclass(frozen=True)
class CascadedLut:
    entries: np.ndarray  # uint8
    n_luts: int
    width: int = 8

    @property
    def length_base(self) -> int:
        return (self.n_luts - 1) << self.width

    def subtable(self, i: int) -> np.ndarray:
        size = 1 << self.width
        return self.entries[i * size:(i + 1) * size]

    @property
    def lengths(self) -> np.ndarray:
        return self.entries[self.length_base:]


def build_lut(t: CodeTable, width: int = 8) -> CascadedLut:
    """Build the cascaded table for ``t``.

    The codec always uses ``width=8``; smaller widths only exist to make
    hand-sized illustrations checkable. Subtables are numbered breadth-first,
    in ascending order of their prefix within each level. Entries reachable only
    from bit patterns that start no codeword hold the lowest present symbol,
    so decoding never faults on padding.
    """
    size = 1 << width
    present = [int(s) for s in t.present]
    if not present:
        raise ValueError("code table has no symbols")
    fallback = min(present)
    codes = [(int(t.codes[s]), int(t.lengths[s]), s) for s in present]

    # prefix bits (as (value, nbits)) -> subtable index; root is the empty prefix
    tables: dict[tuple[int, int], int] = {(0, 0): 0}
    level = [(0, 0)]
    while level:
        nxt = []
        for prefix, pbits in level:
            for b in range(size):
                key = ((prefix << width) | b, pbits + width)
                if key in tables:
                    continue
                if any(n > key[1] and (c >> (n - key[1])) == key[0] for c, n, _ in codes):
                    tables[key] = len(tables)
                    nxt.append(key)
        level = nxt
    n_decode = len(tables)
    if n_decode - 1 > MAX_SUBTABLES:
        raise PointerSpaceError("pointer space exhausted")

    n_lengths = max(size, len(t.lengths))
    entries = np.full(n_decode * size + n_lengths, fallback, dtype=np.uint8)
    for (prefix, pbits), idx in tables.items():
        base = idx * size
        for code, n, s in codes:
            if n <= pbits or (code >> (n - pbits)) != prefix:
                continue
            rest = n - pbits
            tail = code & ((1 << rest) - 1)
            if rest <= width:
                lo = tail << (width - rest)
                entries[base + lo: base + lo + (1 << (width - rest))] = s
        for (child, cbits), cidx in tables.items():
            if cbits == pbits + width and (child >> width) == prefix:
                entries[base + (child & (size - 1))] = 256 - cidx

    lengths = np.zeros(n_lengths, dtype=np.uint8)
    lengths[:len(t.lengths)] = t.lengths
    entries[n_decode * size:] = lengths
    return CascadedLut(entries, n_decode + 1, width)


def decode_one(lut: CascadedLut, window16: int) -> tuple[int, int]:
    """Decode the codeword at the top of a 16-bit MSB-aligned window -> (symbol, bits)."""
    e = lut.entries
    x = int(e[(window16 >> 8) & 0xFF])
    if x >= POINTER_MIN:
        x = int(e[256 * (256 - x) + (window16 & 0xFF)])
    return x, int(e[lut.length_base + x])
