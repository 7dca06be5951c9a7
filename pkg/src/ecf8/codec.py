"""Exponent bitstream encoding and block-parallel decoding.

Bitstream: codewords are concatenated MSB-first. The stream is cut into
8-byte thread windows, ``T`` windows per block. A symbol belongs to the
window holding the first bit of its codeword; each window stores a 4-bit gap
(offset of its first owned codeword) and each block the running symbol count
before it (``outpos``). With those, every block decodes on its own.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import fp8, kernels
from .entropy import ExponentHistogram
from .huffman import CodeTable, build_code, canonical_codes
from .lut import CascadedLut, build_lut

BYTES_PER_THREAD = 8
LOOKAHEAD_BYTES = 2
WINDOW_BITS = 8 * BYTES_PER_THREAD
MAX_THREADS_PER_BLOCK = 1024
_MASK64 = (1 << 64) - 1


class TruncatedStreamError(ValueError):
    pass


class CorruptStreamError(ValueError):
    pass


class MissingSymbolError(ValueError):
    pass


def check_threads_per_block(T: int) -> int:
    T = int(T)
    if T < 1 or T > MAX_THREADS_PER_BLOCK or T & (T - 1):
        raise ValueError(f"threads per block must be a power of two in [1, 1024], got {T}")
    return T


@dataclass(frozen=True)
class BlockGeometry:
    threads_per_block: int = 256
    bytes_per_thread: int = BYTES_PER_THREAD

    def __post_init__(self):
        check_threads_per_block(self.threads_per_block)
        if self.bytes_per_thread != BYTES_PER_THREAD:
            raise ValueError("bytes per thread is fixed at 8")

    @property
    def block_bytes(self) -> int:
        return self.threads_per_block * self.bytes_per_thread

    def n_blocks(self, n_stream_bytes: int) -> int:
        return -(-n_stream_bytes // self.block_bytes)


@dataclass(frozen=True)
class EncodedTensor:
    n_elem: int
    threads_per_block: int
    lengths: np.ndarray   # uint8[16]
    encoded: np.ndarray   # uint8, n_blocks*T*8 + 2
    gaps: np.ndarray      # uint8, ceil(n_blocks*T / 2)
    outpos: np.ndarray    # uint64, n_blocks + 1
    packed: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.uint8))
    bit_length: int = 0

    @property
    def n_blocks(self) -> int:
        return self.outpos.size - 1

    @property
    def n_threads(self) -> int:
        return self.n_blocks * self.threads_per_block

    def gap(self, tg: int) -> int:
        tg = int(tg)
        return (int(self.gaps[tg >> 1]) >> (4 - (tg & 1) * 4)) & 0x0F

    def nbytes(self) -> int:
        """Payload bytes: lengths + stream + gaps + outpos + nibbles."""
        return (self.lengths.size + self.encoded.size + self.gaps.size
                + 8 * self.outpos.size + self.packed.size)


def _thread_layout(lens: np.ndarray, n_threads: int):
    n = lens.size
    starts = np.zeros(n, dtype=np.int64)
    if n:
        np.cumsum(lens[:-1], out=starts[1:])
    owner = starts // WINDOW_BITS
    counts = np.bincount(owner, minlength=n_threads).astype(np.int64)
    gaps = np.zeros(n_threads, dtype=np.int64)
    has = counts > 0
    first = np.searchsorted(owner, np.flatnonzero(has))
    gaps[has] = starts[first] - WINDOW_BITS * np.flatnonzero(has)
    return starts, counts, gaps


def encode(exponents, table: CodeTable, geometry: BlockGeometry | int = 256,
           backend: str | None = None) -> EncodedTensor:
    """Encode exponent symbols; the returned tensor has an empty ``packed`` field."""
    if not isinstance(geometry, BlockGeometry):
        geometry = BlockGeometry(geometry)
    T = geometry.threads_per_block
    symbols = np.ascontiguousarray(exponents, dtype=np.uint8).ravel()
    lengths = np.asarray(table.lengths, dtype=np.uint8)
    if symbols.size and (symbols > 15).any():
        raise ValueError("exponent symbols must lie in [0, 15]")
    lens = lengths[symbols].astype(np.int64)
    if symbols.size and (lens == 0).any():
        bad = int(symbols[np.flatnonzero(lens == 0)[0]])
        raise MissingSymbolError(f"symbol absent from code table: {bad}")

    total_bits = int(lens.sum())
    n_stream = -(-total_bits // 8)
    n_blocks = geometry.n_blocks(n_stream)
    n_threads = n_blocks * T

    encoded = np.zeros(n_blocks * geometry.block_bytes + LOOKAHEAD_BYTES, dtype=np.uint8)
    kernels.get_backend(backend).write_bits(symbols, lengths, table.codes.astype(np.uint32), encoded)

    _, counts, gaps = _thread_layout(lens, n_threads)
    assert gaps.size == 0 or gaps.max() < 16
    packed_gaps = fp8.pack_nibbles(gaps.astype(np.uint8))
    outpos = np.zeros(n_blocks + 1, dtype=np.uint64)
    if n_blocks:
        np.cumsum(counts.reshape(n_blocks, T).sum(axis=1), out=outpos[1:])
    return EncodedTensor(symbols.size, T, lengths.copy(), encoded, packed_gaps, outpos,
                         bit_length=total_bits)


def decode_sequential(e: EncodedTensor, lut: CascadedLut, n_elem: int | None = None,
                      backend: str | None = None) -> np.ndarray:
    """Reference decoder: walk the stream from bit 0, one codeword at a time."""
    n = e.n_elem if n_elem is None else int(n_elem)
    out = np.empty(n, dtype=np.uint8)
    if n == 0:
        return out
    got = kernels.get_backend(backend).decode_sequential(
        e.encoded, lut.entries, lut.length_base, n, out)
    if got < n:
        raise TruncatedStreamError(f"truncated stream: decoded {got} of {n} symbols")
    return out


def validate_layout(e: EncodedTensor):
    """Check section sizes and output positions against the block geometry."""
    n_threads = e.n_threads
    if e.encoded.size != n_threads * BYTES_PER_THREAD + LOOKAHEAD_BYTES:
        raise CorruptStreamError("encoded length does not match block geometry")
    if e.gaps.size != -(-n_threads // 2):
        raise CorruptStreamError("gap table length does not match block geometry")
    if e.packed.size != -(-e.n_elem // 2):
        raise CorruptStreamError("packed nibble length does not match element count")
    op = e.outpos.astype(np.int64)
    if op[0] != 0 or op[-1] != e.n_elem or (np.diff(op) < 0).any() \
            or (np.diff(op) > WINDOW_BITS * e.threads_per_block).any():
        raise CorruptStreamError("inconsistent output positions")


def _check_parallel_inputs(e: EncodedTensor, lut: CascadedLut):
    if lut.width != 8:
        raise ValueError("block decoder requires 8-bit subtables")
    validate_layout(e)


def decode_parallel(e: EncodedTensor, lut: CascadedLut, out: np.ndarray | None = None,
                    backend: str | None = None) -> np.ndarray:
    """Block-parallel decode straight to FP8 bytes.

    Writes into ``out[:n_elem]`` when a buffer is given (it must be large
    enough) and returns that slice.
    """
    _check_parallel_inputs(e, lut)
    n = e.n_elem
    if out is None:
        out = np.empty(n, dtype=np.uint8)
    elif out.size < n:
        raise ValueError(f"output buffer holds {out.size} bytes, need {n}")
    view = out[:n]
    if n == 0:
        return view
    bad = kernels.get_backend(backend).decode_blocks(
        e.encoded, e.gaps, e.outpos, e.packed, lut.entries, lut.length_base,
        e.threads_per_block, n, view)
    if bad:
        raise CorruptStreamError("decoded symbol counts disagree with output positions")
    return view


def thread_counts(e: EncodedTensor, lut: CascadedLut, backend: str | None = None) -> np.ndarray:
    """Phase-1 symbol count of every thread window (before clamping)."""
    return kernels.get_backend(backend).thread_counts(
        e.encoded, e.gaps, lut.entries, lut.length_base, e.n_threads)


# --- literal per-thread simulation --------------------------------------------------


def _window(window10) -> tuple[int, int]:
    w = bytes(window10)
    return int.from_bytes(w[:8], "big"), int.from_bytes(w[8:10], "big")


def _lookup(lut: CascadedLut, L: int) -> tuple[int, int]:
    return _decode_top16(lut, (L >> 48) & 0xFFFF)


def _decode_top16(lut, w):
    e = lut.entries
    x = int(e[w >> 8])
    if x >= 240:
        x = int(e[256 * (256 - x) + (w & 0xFF)])
    return x, int(e[lut.length_base + x])


def count_phase(window10, gap: int, lut: CascadedLut) -> int:
    """Number of codewords starting inside a thread's 64-bit window."""
    L, S = _window(window10)
    L = (L << gap) & _MASK64
    f, c = gap, 0
    while f < 16:
        _, bl = _lookup(lut, L)
        L = (L << bl) & _MASK64
        f += bl
        c += 1
    L |= S << (f - 16)
    f -= 16
    while 2 + f // 8 < BYTES_PER_THREAD:
        _, bl = _lookup(lut, L)
        L = (L << bl) & _MASK64
        f += bl
        c += 1
    return c


def emit_phase(window10, gap: int, lut: CascadedLut, n: int) -> list[int]:
    """Decode the first ``n`` codewords of a thread window (phase-2 loop order)."""
    L, S = _window(window10)
    L = (L << gap) & _MASK64
    f = gap
    out = []
    while f < 16 and len(out) < n:
        x, bl = _lookup(lut, L)
        out.append(x)
        L = (L << bl) & _MASK64
        f += bl
    if len(out) < n:
        L |= S << (f - 16)
        f -= 16
    while len(out) < n:
        x, bl = _lookup(lut, L)
        out.append(x)
        L = (L << bl) & _MASK64
        f += bl
    return out


def _blelloch_exclusive(values: list[int]) -> list[int]:
    a = list(values)
    T = len(a)
    d = 1
    while d < T:
        for i in range(2 * d - 1, T, 2 * d):
            a[i] += a[i - d]
        d *= 2
    a[T - 1] = 0
    d = T // 2
    while d >= 1:
        for i in range(2 * d - 1, T, 2 * d):
            a[i - d], a[i] = a[i], a[i] + a[i - d]
        d //= 2
    return a


def decode_parallel_reference(e: EncodedTensor, lut: CascadedLut, rng=None) -> np.ndarray:
    """Slow, literal simulation of the block decoder with explicit phases.

    Blocks and, within each barrier-separated phase, threads are visited in
    the order drawn from ``rng`` (a ``numpy.random.Generator``); ``None``
    keeps natural order. The result must not depend on the order.
    """
    _check_parallel_inputs(e, lut)
    T, n = e.threads_per_block, e.n_elem
    outputs = np.zeros(n, dtype=np.uint8)

    def order(k):
        return [int(i) for i in rng.permutation(k)] if rng is not None else list(range(k))

    enc = e.encoded
    for b in order(e.n_blocks):
        lo, hi = int(e.outpos[b]), int(e.outpos[b + 1])
        windows, counts = {}, [0] * T
        for t in order(T):
            tg = b * T + t
            windows[t] = enc[tg * BYTES_PER_THREAD: tg * BYTES_PER_THREAD + 10]
            counts[t] = count_phase(windows[t], e.gap(tg), lut)
        # barrier
        accum = list(counts)
        accum[0] += lo
        accum = _blelloch_exclusive(accum) + [hi]
        accum[0] = lo
        writebf = bytearray(hi - lo)
        for t in order(T):
            o_start = accum[t]
            o_end = min(o_start + counts[t], n)
            if o_start >= o_end:
                continue
            xs = emit_phase(windows[t], e.gap(b * T + t), lut, o_end - o_start)
            for x in xs:
                q = (int(e.packed[o_start >> 1]) << ((o_start & 1) * 4)) & 0xFF
                writebf[o_start - lo] = fp8.assemble(x, q)
                o_start += 1
        # barrier
        for t in order(T):
            a, z = accum[t] - lo, min(accum[t + 1], hi) - lo
            outputs[lo + a: lo + max(a, z)] = np.frombuffer(bytes(writebf[a:max(a, z)]), dtype=np.uint8)
    return outputs


# --- whole-tensor helpers ------------------------------------------------------------


def encode_fp8(data, threads_per_block: int = 256, backend: str | None = None) -> EncodedTensor:
    """Histogram, build code, encode exponents and pack sign/mantissa nibbles."""
    data = np.ascontiguousarray(data, dtype=np.uint8).ravel()
    exponents, nibbles = fp8.split_array(data)
    if data.size == 0:
        e = encode(exponents, canonical_codes([1] + [0] * 15), threads_per_block, backend)
        lengths = np.zeros(16, dtype=np.uint8)
    else:
        table = build_code(ExponentHistogram.from_exponents(exponents))
        e = encode(exponents, table, threads_per_block, backend)
        lengths = e.lengths
    return EncodedTensor(e.n_elem, e.threads_per_block, lengths, e.encoded, e.gaps, e.outpos,
                         fp8.pack_nibbles(nibbles), e.bit_length)


def lut_for(e: EncodedTensor) -> CascadedLut | None:
    if not e.lengths.any():
        return None
    return build_lut(canonical_codes(e.lengths))


def decode_fp8(e: EncodedTensor, out: np.ndarray | None = None, backend: str | None = None,
               lut: CascadedLut | None = None) -> np.ndarray:
    if e.n_elem == 0:
        return (np.empty(0, dtype=np.uint8) if out is None else out[:0])
    lut = lut or lut_for(e)
    if lut is None:
        raise CorruptStreamError("non-empty tensor without a code table")
    return decode_parallel(e, lut, out, backend)


def decode_fp8_sequential(e: EncodedTensor, backend: str | None = None) -> np.ndarray:
    if e.n_elem == 0:
        return np.empty(0, dtype=np.uint8)
    xs = decode_sequential(e, lut_for(e), backend=backend)
    return fp8.assemble_array(xs, fp8.unpack_nibbles(e.packed, e.n_elem))
