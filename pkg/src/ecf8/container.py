"""On-disk formats and the file-level operations behind the CLI.

Raw tensor file (little-endian)::

    "FP8R" | u32 version | u32 count
    per tensor: u16 name_len | name (utf-8) | u8 rank | u64 dims[rank] | n_elem bytes

ECF8 container (little-endian)::

    "ECF8" | u32 version | u32 count
    per tensor: u16 name_len | name | u8 rank | u64 dims[rank] | u64 n_elem | u32 T
                | lengths[16] | u64 len + encoded | u64 len + gaps
                | u64 outpos[n_blocks + 1] | u64 len + packed

Code tables are stored only as their 16 lengths; the decode tables are
rebuilt on load.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import BinaryIO, Callable, Iterator

import numpy as np

from . import codec, fp8
from .codec import BYTES_PER_THREAD, LOOKAHEAD_BYTES, EncodedTensor
from .entropy import EntropyReport, ExponentHistogram, sample_stable, shannon_entropy
from .huffman import InvalidLengthsError, build_code, canonical_codes, expected_length

RAW_MAGIC = b"FP8R"
ECF8_MAGIC = b"ECF8"
VERSION = 1


class FormatError(ValueError):
    """Malformed or inconsistent file contents."""


@dataclass
class Tensor:
    name: str
    shape: tuple[int, ...]
    data: np.ndarray  # flat uint8

    @property
    def n_elem(self) -> int:
        return int(self.data.size)


@dataclass
class CompressedTensor:
    name: str
    shape: tuple[int, ...]
    payload: EncodedTensor


# --- low level reading -----------------------------------------------------------------


def _read_exact(fh: BinaryIO, n: int, what: str) -> bytes:
    buf = fh.read(n)
    if len(buf) != n:
        raise FormatError(f"unexpected end of file while reading {what}")
    return buf


def _unpack(fh: BinaryIO, fmt: str, what: str):
    return struct.unpack(fmt, _read_exact(fh, struct.calcsize(fmt), what))


def _read_header(fh: BinaryIO, magic: bytes) -> int:
    got = fh.read(4)
    if got != magic:
        raise FormatError(f"bad magic {got!r}, expected {magic!r}")
    version, count = _unpack(fh, "<II", "header")
    if version != VERSION:
        raise FormatError(f"unsupported version {version}")
    return count


def _read_name_shape(fh: BinaryIO) -> tuple[str, tuple[int, ...]]:
    (nlen,) = _unpack(fh, "<H", "name length")
    try:
        name = _read_exact(fh, nlen, "name").decode("utf-8")
    except UnicodeDecodeError as exc:
        raise FormatError(f"tensor name is not valid UTF-8: {exc}") from None
    (rank,) = _unpack(fh, "<B", "rank")
    dims = _unpack(fh, f"<{rank}Q", "dims") if rank else ()
    return name, tuple(int(d) for d in dims)


def _name_shape_bytes(name: str, shape) -> bytes:
    raw = name.encode("utf-8")
    if len(raw) > 0xFFFF:
        raise ValueError("tensor name too long")
    if len(shape) > 0xFF:
        raise ValueError("tensor rank too large")
    return struct.pack("<H", len(raw)) + raw + struct.pack(f"<B{len(shape)}Q", len(shape), *shape)


def _expect_eof(fh: BinaryIO):
    if fh.read(1):
        raise FormatError("trailing bytes after last tensor")


# --- raw tensor files --------------------------------------------------------------------


def iter_raw(fh: BinaryIO) -> Iterator[Tensor]:
    count = _read_header(fh, RAW_MAGIC)
    for _ in range(count):
        name, shape = _read_name_shape(fh)
        n = math.prod(shape)
        data = np.frombuffer(_read_exact(fh, n, f"data of tensor {name!r}"), dtype=np.uint8)
        yield Tensor(name, shape, data)
    _expect_eof(fh)


def read_raw(path) -> list[Tensor]:
    with open(path, "rb") as fh:
        return list(iter_raw(fh))


def write_raw(path, tensors) -> None:
    tensors = list(tensors)
    with open(path, "wb") as fh:
        fh.write(RAW_MAGIC + struct.pack("<II", VERSION, len(tensors)))
        for t in tensors:
            _write_raw_tensor(fh, t.name, t.shape, t.data)


def _write_raw_tensor(fh: BinaryIO, name: str, shape, data: np.ndarray):
    if math.prod(shape) != data.size:
        raise ValueError(f"tensor {name!r}: shape {shape} does not match {data.size} elements")
    fh.write(_name_shape_bytes(name, shape))
    fh.write(np.ascontiguousarray(data, dtype=np.uint8).tobytes())


# --- ECF8 containers ---------------------------------------------------------------------


def record_bytes(rec: CompressedTensor) -> bytes:
    e = rec.payload
    parts = [
        _name_shape_bytes(rec.name, rec.shape),
        struct.pack("<QI", e.n_elem, e.threads_per_block),
        np.asarray(e.lengths, dtype=np.uint8).tobytes(),
        struct.pack("<Q", e.encoded.size), e.encoded.tobytes(),
        struct.pack("<Q", e.gaps.size), e.gaps.tobytes(),
        e.outpos.astype("<u8").tobytes(),
        struct.pack("<Q", e.packed.size), e.packed.tobytes(),
    ]
    return b"".join(parts)


def write_container(path, records) -> int:
    records = list(records)
    with open(path, "wb") as fh:
        fh.write(ECF8_MAGIC + struct.pack("<II", VERSION, len(records)))
        for rec in records:
            fh.write(record_bytes(rec))
        return fh.tell()


def _validate(name: str, shape, e: EncodedTensor):
    where = f"tensor {name!r}"
    if math.prod(shape) != e.n_elem:
        raise FormatError(f"{where}: n_elem {e.n_elem} does not match dims {shape}")
    try:
        codec.check_threads_per_block(e.threads_per_block)
    except ValueError as exc:
        raise FormatError(f"{where}: {exc}") from None
    if e.n_elem:
        try:
            canonical_codes(e.lengths)
        except InvalidLengthsError as exc:
            raise FormatError(f"{where}: {exc}") from None
    elif e.lengths.any():
        raise FormatError(f"{where}: empty tensor with a code table")
    try:
        codec.validate_layout(e)
    except codec.CorruptStreamError as exc:
        raise FormatError(f"{where}: {exc}") from None


def _read_record(fh: BinaryIO, load: bool = True) -> CompressedTensor | tuple[str, tuple, int]:
    name, shape = _read_name_shape(fh)
    n_elem, T = _unpack(fh, "<QI", f"geometry of tensor {name!r}")
    if T == 0 or T & (T - 1) or T > codec.MAX_THREADS_PER_BLOCK:
        raise FormatError(f"tensor {name!r}: invalid threads per block {T}")
    lengths = np.frombuffer(_read_exact(fh, 16, "code lengths"), dtype=np.uint8)

    (enc_len,) = _unpack(fh, "<Q", "encoded length")
    block = T * BYTES_PER_THREAD
    if enc_len < LOOKAHEAD_BYTES or (enc_len - LOOKAHEAD_BYTES) % block:
        raise FormatError(f"tensor {name!r}: encoded length {enc_len} does not match block geometry")
    n_blocks = (enc_len - LOOKAHEAD_BYTES) // block

    def section(n, what):
        if load:
            return np.frombuffer(_read_exact(fh, n, what), dtype=np.uint8)
        fh.seek(n, io.SEEK_CUR)
        if fh.tell() > os.fstat(fh.fileno()).st_size:
            raise FormatError(f"unexpected end of file while reading {what}")
        return None

    encoded = section(enc_len, "encoded stream")
    (gaps_len,) = _unpack(fh, "<Q", "gaps length")
    if gaps_len != -(-(n_blocks * T) // 2):
        raise FormatError(f"tensor {name!r}: gaps length {gaps_len} does not match block geometry")
    gaps = section(gaps_len, "gaps")
    outpos = np.frombuffer(_read_exact(fh, 8 * (n_blocks + 1), "outpos"), dtype="<u8").astype(np.uint64)
    (packed_len,) = _unpack(fh, "<Q", "packed length")
    if packed_len != -(-n_elem // 2):
        raise FormatError(f"tensor {name!r}: packed length {packed_len} does not match n_elem")
    packed = section(packed_len, "packed nibbles")
    if not load:
        if math.prod(shape) != n_elem:
            raise FormatError(f"tensor {name!r}: n_elem {n_elem} does not match dims {shape}")
        return name, shape, int(n_elem)
    e = EncodedTensor(int(n_elem), int(T), lengths.copy(), encoded, gaps, outpos, packed)
    _validate(name, shape, e)
    return CompressedTensor(name, shape, e)


def iter_container(fh: BinaryIO) -> Iterator[CompressedTensor]:
    count = _read_header(fh, ECF8_MAGIC)
    for _ in range(count):
        yield _read_record(fh)
    _expect_eof(fh)


def read_container(path) -> list[CompressedTensor]:
    with open(path, "rb") as fh:
        return list(iter_container(fh))


def scan_container(fh: BinaryIO) -> list[tuple[str, tuple, int]]:
    """Header-only pass: (name, shape, n_elem) per tensor, skipping payloads."""
    count = _read_header(fh, ECF8_MAGIC)
    out = [_read_record(fh, load=False) for _ in range(count)]
    _expect_eof(fh)
    return out


# --- single reusable decode buffer -------------------------------------------------------

_allocation_hooks: list[Callable[[int], None]] = []


def add_allocation_hook(fn: Callable[[int], None]) -> Callable[[], None]:
    """Register ``fn(nbytes)`` to be called on every decode-buffer allocation."""
    _allocation_hooks.append(fn)
    return lambda: _allocation_hooks.remove(fn)


class ReusableBuffer:
    """One output allocation sized to the largest tensor, reused for every tensor."""

    def __init__(self, capacity: int):
        self.capacity = int(capacity)
        self.array = np.empty(self.capacity, dtype=np.uint8)
        for hook in list(_allocation_hooks):
            hook(self.capacity)

    def view(self, n: int) -> np.ndarray:
        if n > self.capacity:
            raise ValueError(f"tensor of {n} bytes exceeds buffer capacity {self.capacity}")
        return self.array[:n]


# --- operations --------------------------------------------------------------------------


@dataclass
class TensorSummary:
    name: str
    original_bytes: int
    compressed_bytes: int

    @property
    def ratio(self) -> float:
        return self.compressed_bytes / self.original_bytes if self.original_bytes else float("nan")


@dataclass
class CompressSummary:
    tensors: list[TensorSummary]
    file_bytes: int
    input_bytes: int

    @property
    def original_bytes(self) -> int:
        return sum(t.original_bytes for t in self.tensors)

    @property
    def compressed_bytes(self) -> int:
        return sum(t.compressed_bytes for t in self.tensors)

    @property
    def savings(self) -> float:
        orig = self.original_bytes
        return 1.0 - self.compressed_bytes / orig if orig else 0.0


def compress_tensors(tensors, threads_per_block: int = 256, jobs: int = 1,
                     backend: str | None = None) -> list[CompressedTensor]:
    codec.check_threads_per_block(threads_per_block)

    def one(t: Tensor) -> CompressedTensor:
        return CompressedTensor(t.name, t.shape, codec.encode_fp8(t.data, threads_per_block, backend))

    if jobs > 1:
        with ThreadPoolExecutor(jobs) as pool:
            return list(pool.map(one, tensors))
    return [one(t) for t in tensors]


def compress(src, dst, threads_per_block: int = 256, jobs: int = 1,
             backend: str | None = None) -> CompressSummary:
    tensors = read_raw(src)
    input_bytes = sum(len(_name_shape_bytes(t.name, t.shape)) + t.n_elem for t in tensors) + 12
    records = compress_tensors(tensors, threads_per_block, jobs, backend)
    file_bytes = write_container(dst, records)
    summary = [TensorSummary(r.name, r.payload.n_elem, r.payload.nbytes()) for r in records]
    return CompressSummary(summary, file_bytes, input_bytes)


def decompress(src, dst, backend: str | None = None) -> None:
    """Decode tensors one at a time into a single reusable buffer and stream them out."""
    with open(src, "rb") as fh:
        headers = scan_container(fh)
        buf = ReusableBuffer(max((n for _, _, n in headers), default=0))
        fh.seek(0)
        count = _read_header(fh, ECF8_MAGIC)
        with open(dst, "wb") as out:
            out.write(RAW_MAGIC + struct.pack("<II", VERSION, count))
            for _ in range(count):
                rec = _read_record(fh)
                try:
                    data = codec.decode_fp8(rec.payload, out=buf.array, backend=backend)
                except codec.CorruptStreamError as exc:
                    raise FormatError(f"tensor {rec.name!r}: {exc}") from None
                _write_raw_tensor(out, rec.name, rec.shape, data)


@dataclass
class VerifyResult:
    name: str
    threads_per_block: int
    ok: bool
    first_mismatch: int | None = None
    decoder: str = ""


def _first_diff(a: np.ndarray, b: np.ndarray) -> int | None:
    if a.size != b.size:
        return min(a.size, b.size)
    idx = np.flatnonzero(a != b)
    return int(idx[0]) if idx.size else None


def verify_tensors(tensors, threads_list=(1, 2, 32, 256), backend: str | None = None) -> list[VerifyResult]:
    results = []
    for t in tensors:
        for T in threads_list:
            e = codec.encode_fp8(t.data, T, backend)
            seq = codec.decode_fp8_sequential(e, backend)
            par = codec.decode_fp8(e, backend=backend)
            res = VerifyResult(t.name, T, True)
            for label, got in (("sequential", seq), ("parallel", par)):
                d = _first_diff(t.data, got)
                if d is not None:
                    res = VerifyResult(t.name, T, False, d, label)
                    break
            if res.ok:
                d = _first_diff(seq, par)
                if d is not None:
                    res = VerifyResult(t.name, T, False, d, "parallel-vs-sequential")
            results.append(res)
    return results


def verify(src, threads_list=(1, 2, 32, 256), backend: str | None = None) -> list[VerifyResult]:
    return verify_tensors(read_raw(src), threads_list, backend)


def tensor_report(t: Tensor, threads_per_block: int | None = 256) -> EntropyReport:
    h = ExponentHistogram.from_fp8(t.data)
    if h.total == 0:
        return EntropyReport(t.name, 0, float("nan"), float("nan"), float("nan"),
                             histogram=h.counts.tolist())
    bps = expected_length(build_code(h), h)
    actual = None
    if threads_per_block:
        e = codec.encode_fp8(t.data, threads_per_block)
        actual = 1.0 - e.nbytes() / t.n_elem
    return EntropyReport(
        name=t.name,
        n_elem=t.n_elem,
        entropy_bits=shannon_entropy(h),
        bits_per_symbol=bps,
        projected_savings=(8.0 - (1.0 + 3.0 + bps)) / 8.0,
        actual_savings=actual,
        histogram=h.counts.tolist(),
    )


def stats(src, threads_per_block: int | None = 256) -> list[EntropyReport]:
    return [tensor_report(t, threads_per_block) for t in read_raw(src)]


CSV_COLUMNS = ("name", "n_elem", "entropy_bits", "bits_per_symbol", "projected_savings", "actual_savings")


def _json_safe(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def format_reports(reports, fmt: str = "csv") -> str:
    if fmt == "json":
        rows = [{k: _json_safe(v) for k, v in asdict(r).items()} for r in reports]
        return json.dumps(rows, indent=2) + "\n"
    if fmt != "csv":
        raise ValueError(f"unknown format {fmt!r}")
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in reports:
        row = []
        for col in CSV_COLUMNS:
            v = getattr(r, col)
            if v is None or (isinstance(v, float) and not math.isfinite(v)):
                row.append("")
            elif isinstance(v, float):
                row.append(f"{v:.6f}")
            else:
                row.append(v)
        w.writerow(row)
    return out.getvalue()


def synth_tensor(alpha: float, gamma: float, n: int, seed: int, name: str = "synthetic") -> Tensor:
    xs = sample_stable(alpha, gamma, n, seed)
    return Tensor(name, (int(n),), fp8.to_e4m3(xs))


def synth(alpha: float, gamma: float, n: int, seed: int, dst, name: str = "synthetic") -> Tensor:
    t = synth_tensor(alpha, gamma, n, seed, name)
    write_raw(dst, [t])
    return t


__all__ = [
    "FormatError", "Tensor", "CompressedTensor", "ReusableBuffer", "add_allocation_hook",
    "read_raw", "write_raw", "iter_raw", "read_container", "write_container", "iter_container",
    "compress", "decompress", "verify", "verify_tensors", "stats", "format_reports",
    "synth", "synth_tensor",
]
