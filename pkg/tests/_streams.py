"""Stream builders and an independent bit-position scanner shared by the codec tests."""

import numpy as np

from ecf8 import fp8
from ecf8.codec import EncodedTensor, encode
from ecf8.huffman import canonical_codes

# symbols 0..13 have lengths 1..14; symbols 14 and 15 have 16-bit codes
DEEP_LENGTHS = list(range(1, 15)) + [16, 16]


def encode_with(exponents, nibbles, lengths, T, backend=None):
    """Encode with a fixed code instead of the histogram-optimal one."""
    exponents = np.asarray(exponents, dtype=np.uint8)
    e = encode(exponents, canonical_codes(lengths), T, backend)
    return EncodedTensor(e.n_elem, T, e.lengths, e.encoded, e.gaps, e.outpos,
                         fp8.pack_nibbles(np.asarray(nibbles, dtype=np.uint8)), e.bit_length)


def scan_layout(exponents, lengths, n_threads):
    """Per-thread owned counts and gaps, found by walking bit positions one symbol at a time."""
    counts = [0] * n_threads
    gaps = [0] * n_threads
    pos = 0
    for s in exponents:
        tg = pos // 64
        if counts[tg] == 0:
            gaps[tg] = pos - 64 * tg
        counts[tg] += 1
        pos += lengths[int(s)]
    return counts, gaps


def straddle_exponents(rng, n, period=64):
    """Exponent stream where 16-bit codewords begin at bit 63 of many windows."""
    out = []
    pos = 0
    while len(out) < n:
        # pad with 1-bit codes up to the last bit of the current window, then a 16-bit code
        target = (pos // 64) * 64 + 63
        out += [0] * (target - pos)
        out.append(int(rng.integers(14, 16)))
        pos = target + 16
        # some random filler in between
        k = int(rng.integers(0, period))
        filler = rng.integers(0, 16, k)
        out += filler.tolist()
        pos += sum(DEEP_LENGTHS[s] for s in filler)
    return np.array(out[:n], dtype=np.uint8)


def fp8_from(exponents, nibbles):
    return fp8.assemble_array(np.asarray(exponents, dtype=np.uint8), np.asarray(nibbles, dtype=np.uint8))
