"""numba kernels. Same signatures and results as ``_numpy``."""

import warnings

import numpy as np
from numba import njit, prange
from numba.core.errors import NumbaWarning

# Older system TBB builds only trigger a fallback to another threading layer.
warnings.filterwarnings("ignore", message="The TBB threading layer", category=NumbaWarning)

B = 8
_U56 = np.uint64(56)
_U48 = np.uint64(48)
_U8 = np.uint64(8)
_MASK8 = np.uint64(255)


@njit(cache=True)
def write_bits(symbols, lengths, codes, out):
    acc = np.uint64(0)
    nacc = 0
    pos = 0
    for j in range(symbols.size):
        s = symbols[j]
        n = np.int64(lengths[s])
        acc = (acc << np.uint64(n)) | np.uint64(codes[s])
        nacc += n
        while nacc >= 8:
            nacc -= 8
            out[pos] = np.uint8((acc >> np.uint64(nacc)) & _MASK8)
            pos += 1
    if nacc > 0:
        out[pos] = np.uint8((acc << np.uint64(8 - nacc)) & _MASK8)


@njit(inline="always")
def _decode(lut, length_base, L):
    x = np.int64(lut[np.int64(L >> _U56)])
    if x >= 240:
        x = np.int64(lut[256 * (256 - x) + np.int64((L >> _U48) & _MASK8)])
    return x, np.int64(lut[length_base + x])


@njit(cache=True)
def decode_sequential(encoded, lut, length_base, n_elem, out):
    limit = encoded.size
    pos = 0
    for j in range(n_elem):
        k = pos >> 3
        if k + 2 >= limit:
            return j
        w = (np.uint64(encoded[k]) << np.uint64(16)) | (np.uint64(encoded[k + 1]) << _U8) \
            | np.uint64(encoded[k + 2])
        w = (w << np.uint64(40 + (pos & 7))) & np.uint64(0xFFFFFFFFFFFFFFFF)
        x, bl = _decode(lut, length_base, w)
        out[j] = x
        pos += bl
    return n_elem


@njit(inline="always")
def _load(encoded, tg):
    base = tg * B
    L = np.uint64(0)
    for i in range(B):
        L = (L << _U8) | np.uint64(encoded[base + i])
    S = (np.uint64(encoded[base + B]) << _U8) | np.uint64(encoded[base + B + 1])
    return L, S


@njit(inline="always")
def _gap(gaps, tg):
    return np.int64((gaps[tg >> 1] >> (4 - (tg & 1) * 4)) & 0x0F)


@njit(cache=True)
def count_phase(encoded, tg, g, lut, length_base):
    L, S = _load(encoded, tg)
    L = L << np.uint64(g)
    f = g
    c = 0
    while f < 16:
        x, bl = _decode(lut, length_base, L)
        L = L << np.uint64(bl)
        f += bl
        c += 1
    L = L | (S << np.uint64(f - 16))
    f -= 16
    while 2 + f // 8 < B:
        x, bl = _decode(lut, length_base, L)
        L = L << np.uint64(bl)
        f += bl
        c += 1
    return c


@njit(cache=True)
def thread_counts(encoded, gaps, lut, length_base, n_threads):
    counts = np.zeros(n_threads, dtype=np.int64)
    for tg in range(n_threads):
        counts[tg] = count_phase(encoded, tg, _gap(gaps, tg), lut, length_base)
    return counts


@njit(cache=True, parallel=True)
def decode_blocks(encoded, gaps, outpos, packed, lut, length_base, T, n_elem, out):
    n_blocks = outpos.size - 1
    bad = np.zeros(n_blocks, dtype=np.int64)
    for b in prange(n_blocks):
        # phases 1 + prefix sum
        counts = np.empty(T, dtype=np.int64)
        for t in range(T):
            tg = b * T + t
            counts[t] = count_phase(encoded, tg, _gap(gaps, tg), lut, length_base)
        accum = np.empty(T + 1, dtype=np.int64)
        accum[:T] = counts
        accum[0] += np.int64(outpos[b])
        d = 1
        while d < T:
            for i in range(2 * d - 1, T, 2 * d):
                accum[i] += accum[i - d]
            d *= 2
        accum[T - 1] = 0
        d = T // 2
        while d >= 1:
            for i in range(2 * d - 1, T, 2 * d):
                tmp = accum[i - d]
                accum[i - d] = accum[i]
                accum[i] += tmp
            d //= 2
        if min(np.int64(outpos[b]) + counts.sum(), n_elem) != np.int64(outpos[b + 1]):
            bad[b] = 1
            continue
        accum[0] = np.int64(outpos[b])
        accum[T] = np.int64(outpos[b + 1])
        o_base = accum[0]
        span = accum[T] - o_base
        writebf = np.empty(max(span, 0), dtype=np.uint8)

        # phase 2: decode + assemble into the block staging buffer
        for t in range(T):
            tg = b * T + t
            o = accum[t]
            o_end = min(o + counts[t], n_elem)
            if o >= o_end:
                continue
            g = _gap(gaps, tg)
            L, S = _load(encoded, tg)
            L = L << np.uint64(g)
            f = g
            stitched = False
            while o < o_end:
                if not stitched and f >= 16:
                    L = L | (S << np.uint64(f - 16))
                    f -= 16
                    stitched = True
                x, bl = _decode(lut, length_base, L)
                q = np.int64(packed[o >> 1]) << ((o & 1) * 4)
                k = o - o_base
                if k < 0 or k >= span:
                    bad[b] = 1
                    break
                writebf[k] = np.uint8(((x << 3) | (q & 0x80) | ((q >> 4) & 0x07)) & 0xFF)
                o += 1
                L = L << np.uint64(bl)
                f += bl

        # write-back
        for k in range(span):
            out[o_base + k] = writebf[k]
    return bad.sum()
