"""E4M3 byte layout: exponent / sign-mantissa split, reassembly and nibble packing.

Bit layout of one weight byte (MSB first)::

    7    6..3      2..0
    s    exponent  mantissa

The codec never interprets these values numerically; every one of the 256
patterns (NaN encodings included) round-trips verbatim.
"""

from __future__ import annotations

import numpy as np

EXPONENT_BITS = 4
N_SYMBOLS = 1 << EXPONENT_BITS

# E4M3 (OCP flavour): bias 7, 0x7F/0xFF are NaN, largest finite is 0x7E = 448.
E4M3_BIAS = 7
E4M3_MAX_FINITE = 448.0
_E4M3_MAX_CODE = 0x7E


def split(b: int) -> tuple[int, int]:
    """Return ``(exponent, nibble)`` for one byte; nibble is ``[s, m2, m1, m0]``."""
    b &= 0xFF
    return (b >> 3) & 0x0F, ((b >> 4) & 0x08) | (b & 0x07)


def assemble(x: int, q_high: int) -> int:
    """Rebuild a byte from an exponent symbol and a nibble held in the HIGH half of ``q_high``."""
    return ((x << 3) | (q_high & 0x80) | ((q_high >> 4) & 0x07)) & 0xFF


def split_array(data: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    data = np.asarray(data, dtype=np.uint8)
    exponents = (data >> 3) & 0x0F
    nibbles = ((data >> 4) & 0x08) | (data & 0x07)
    return exponents.astype(np.uint8), nibbles.astype(np.uint8)


def assemble_array(exponents: np.ndarray, nibbles: np.ndarray) -> np.ndarray:
    """Vectorised inverse of :func:`split_array` (nibbles given in the low half)."""
    exponents = np.asarray(exponents, dtype=np.uint8)
    q_high = np.asarray(nibbles, dtype=np.uint8) << 4
    return ((exponents << 3) | (q_high & 0x80) | ((q_high >> 4) & 0x07)).astype(np.uint8)


def pack_nibbles(nibbles) -> np.ndarray:
    """Pack 4-bit values two per byte; element ``2i`` goes to the high half of byte ``i``.

    An odd trailing element is paired with a zero low nibble.
    """
    nib = np.asarray(nibbles, dtype=np.uint8).ravel()
    if nib.size % 2:
        nib = np.concatenate([nib, np.zeros(1, dtype=np.uint8)])
    pairs = nib.reshape(-1, 2)
    return ((pairs[:, 0] << 4) | (pairs[:, 1] & 0x0F)).astype(np.uint8)


def unpack_nibbles(packed, n_elem: int) -> np.ndarray:
    packed = np.asarray(packed, dtype=np.uint8)
    out = np.empty(packed.size * 2, dtype=np.uint8)
    out[0::2] = packed >> 4
    out[1::2] = packed & 0x0F
    return out[:n_elem]


def _finite_table() -> np.ndarray:
    codes = np.arange(_E4M3_MAX_CODE + 1)
    exp = codes >> 3
    man = codes & 7
    normal = (1.0 + man / 8.0) * np.exp2(exp - E4M3_BIAS)
    subnormal = (man / 8.0) * np.exp2(1 - E4M3_BIAS)
    return np.where(exp == 0, subnormal, normal)


# Magnitudes of codes 0x00..0x7E, strictly increasing.
_MAGNITUDES = _finite_table()


def to_e4m3(values) -> np.ndarray:
    """Round reals to E4M3 bytes.

    Round-to-nearest-even on the mantissa, saturating to +-448 on overflow
    (infinities included) and flushing to a signed zero below half the
    smallest subnormal. NaN inputs are rejected rather than encoded.
    """
    x = np.asarray(values, dtype=np.float64).ravel()
    if np.isnan(x).any():
        raise ValueError("NaN cannot be converted to E4M3")
    mag = np.abs(x)
    hi = np.searchsorted(_MAGNITUDES, mag, side="left")
    hi = np.clip(hi, 0, _E4M3_MAX_CODE)
    lo = np.maximum(hi - 1, 0)
    d_lo = mag - _MAGNITUDES[lo]
    d_hi = _MAGNITUDES[hi] - mag
    # On a tie pick the code with an even mantissa LSB.
    pick_hi = (d_hi < d_lo) | ((d_hi == d_lo) & (hi % 2 == 0))
    code = np.where(pick_hi, hi, lo)
    code = np.where(mag >= E4M3_MAX_FINITE, _E4M3_MAX_CODE, code)
    sign = np.signbit(x).astype(np.uint8) << 7
    return (code.astype(np.uint8) | sign).astype(np.uint8)


def from_e4m3(data) -> np.ndarray:
    """Decode E4M3 bytes to float64; 0x7F/0xFF map to NaN."""
    data = np.asarray(data, dtype=np.uint8)
    low = data & 0x7F
    mag = np.where(low == 0x7F, np.nan, _MAGNITUDES[np.minimum(low, _E4M3_MAX_CODE)])
    return np.where(data & 0x80, -mag, mag)
