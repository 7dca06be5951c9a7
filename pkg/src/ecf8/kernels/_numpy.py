"""Pure-numpy kernels.

The block decoder runs every simulated thread in lockstep: per-thread state
(``L``, ``S``, ``f``, counters) lives in arrays and one loop iteration
advances all still-active threads by one codeword, much like a SIMT warp.
Blocks are processed in fixed-size chunks so scratch memory stays bounded.
"""

import numpy as np

B = 8
CHUNK_THREADS = 1 << 14
_U = np.uint64


def write_bits(symbols, lengths, codes, out):
    n = symbols.size
    if n == 0:
        return
    lens = lengths[symbols].astype(np.int64)
    cw = codes[symbols].astype(np.int64)
    starts = np.zeros(n, dtype=np.int64)
    np.cumsum(lens[:-1], out=starts[1:])
    total = int(starts[-1] + lens[-1])
    bits = np.zeros(total, dtype=np.uint8)
    for j in range(int(lens.max())):
        sel = lens > j
        bits[starts[sel] + j] = (cw[sel] >> (lens[sel] - 1 - j)) & 1
    packed = np.packbits(bits)
    out[:packed.size] = packed


def _decode(lut, length_base, L):
    x = lut[(L >> _U(56)).astype(np.intp)].astype(np.intp)
    ptr = x >= 240
    if ptr.any():
        x[ptr] = lut[256 * (256 - x[ptr]) + ((L[ptr] >> _U(48)) & _U(255)).astype(np.intp)]
    return x, lut[length_base + x].astype(np.int64)


def decode_sequential(encoded, lut, length_base, n_elem, out):
    # Bit cursor walk; inherently serial, so this is plain Python.
    enc = encoded.tobytes()
    limit = len(enc)
    lut_b = lut.tobytes()
    pos = 0
    for j in range(n_elem):
        k = pos >> 3
        if k + 2 >= limit:
            return j
        w = ((enc[k] << 16 | enc[k + 1] << 8 | enc[k + 2]) >> (8 - (pos & 7))) & 0xFFFF
        x = lut_b[w >> 8]
        if x >= 240:
            x = lut_b[256 * (256 - x) + (w & 0xFF)]
        out[j] = x
        pos += lut_b[length_base + x]
    return n_elem


def _load(encoded, tg):
    idx = tg[:, None] * B + np.arange(B + 2)
    win = encoded[idx].astype(np.uint64)
    L = np.zeros(tg.size, dtype=np.uint64)
    for i in range(B):
        L = (L << _U(8)) | win[:, i]
    S = (win[:, B] << _U(8)) | win[:, B + 1]
    return L, S


def _gap(gaps, tg):
    return ((gaps[tg >> 1].astype(np.int64) >> (4 - (tg & 1) * 4)) & 0x0F)


def _advance(L, f, bl, m):
    L[m] = L[m] << bl.astype(np.uint64)
    f[m] += bl


def _count(encoded, gaps, lut, length_base, tg):
    L, S = _load(encoded, tg)
    g = _gap(gaps, tg)
    L <<= g.astype(np.uint64)
    f = g.copy()
    c = np.zeros(tg.size, dtype=np.int64)
    while True:
        m = np.flatnonzero(f < 16)
        if m.size == 0:
            break
        _, bl = _decode(lut, length_base, L[m])
        _advance(L, f, bl, m)
        c[m] += 1
    L |= S << (f - 16).astype(np.uint64)
    f -= 16
    while True:
        m = np.flatnonzero(2 + f // 8 < B)
        if m.size == 0:
            break
        _, bl = _decode(lut, length_base, L[m])
        _advance(L, f, bl, m)
        c[m] += 1
    return c


def thread_counts(encoded, gaps, lut, length_base, n_threads):
    return _count(encoded, gaps, lut, length_base, np.arange(n_threads, dtype=np.int64))


def _exclusive_scan(accum, outpos_lo):
    """Up-sweep / down-sweep over each row of ``accum`` (rows = blocks)."""
    T = accum.shape[1]
    accum[:, 0] += outpos_lo
    d = 1
    while d < T:
        accum[:, 2 * d - 1::2 * d] += accum[:, d - 1::2 * d]
        d *= 2
    accum[:, T - 1] = 0
    d = T // 2
    while d >= 1:
        left = accum[:, d - 1::2 * d].copy()
        accum[:, d - 1::2 * d] = accum[:, 2 * d - 1::2 * d]
        accum[:, 2 * d - 1::2 * d] += left
        d //= 2
    accum[:, 0] = outpos_lo


def decode_blocks(encoded, gaps, outpos, packed, lut, length_base, T, n_elem, out):
    n_blocks = outpos.size - 1
    outpos = outpos.astype(np.int64)
    per_chunk = max(1, CHUNK_THREADS // T)
    bad = 0
    for b0 in range(0, n_blocks, per_chunk):
        b1 = min(b0 + per_chunk, n_blocks)
        tg = np.arange(b0 * T, b1 * T, dtype=np.int64)
        c = _count(encoded, gaps, lut, length_base, tg)

        ends = np.minimum(outpos[b0:b1] + c.reshape(b1 - b0, T).sum(axis=1), n_elem)
        if (ends != outpos[b0 + 1:b1 + 1]).any():
            return bad + 1
        accum = c.reshape(b1 - b0, T).copy()
        _exclusive_scan(accum, outpos[b0:b1])
        o = accum.ravel()
        o_end = np.minimum(o + c, n_elem)

        base = outpos[b0]
        span = outpos[b1] - base
        writebf = np.empty(span, dtype=np.uint8)

        L, S = _load(encoded, tg)
        g = _gap(gaps, tg)
        L <<= g.astype(np.uint64)
        f = g.copy()
        stitched = np.zeros(tg.size, dtype=bool)
        while True:
            m = np.flatnonzero(o < o_end)
            if m.size == 0:
                break
            st = m[(f[m] >= 16) & ~stitched[m]]
            if st.size:
                L[st] |= S[st] << (f[st] - 16).astype(np.uint64)
                f[st] -= 16
                stitched[st] = True
            x, bl = _decode(lut, length_base, L[m])
            om = o[m]
            q = packed[om >> 1].astype(np.int64) << ((om & 1) * 4)
            k = om - base
            if (k < 0).any() or (k >= span).any():
                bad += 1
                break
            writebf[k] = ((x << 3) | (q & 0x80) | ((q >> 4) & 0x07)).astype(np.uint8)
            o[m] += 1
            _advance(L, f, bl, m)
        out[base:base + span] = writebf
    return bad
