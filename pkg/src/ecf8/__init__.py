"""Lossless compression of FP8 (E4M3) weight tensors by entropy-coding the exponent field."""

from .codec import (
    BlockGeometry,
    EncodedTensor,
    count_phase,
    decode_fp8,
    decode_parallel,
    decode_sequential,
    encode,
    encode_fp8,
)
from .entropy import (
    ExponentHistogram,
    StableModel,
    closed_form_entropy,
    compression_floor_bits,
    empirical_exponent_entropy,
    entropy_bounds,
    geometric_pmf,
    ideal_exponent,
    sample_stable,
    shannon_entropy,
)
from .fp8 import assemble, pack_nibbles, split, unpack_nibbles
from .huffman import CodeTable, build_code, canonical_codes, expected_length
from .kernels import BACKEND
from .lut import CascadedLut, build_lut, decode_one

__version__ = "0.1.0"
