"""``ecf8`` command line tool.

Exit codes: 0 success, 1 verification mismatch, 2 format error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import logging
import sys

from . import container
from .codec import check_threads_per_block
from .entropy import compression_floor_bits

EXIT_OK, EXIT_MISMATCH, EXIT_FORMAT, EXIT_IO = 0, 1, 2, 3

log = logging.getLogger("ecf8")


def _threads(value: str) -> int:
    try:
        return check_threads_per_block(int(value))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _threads_list(value: str) -> list[int]:
    return [_threads(v) for v in value.split(",") if v.strip()]


def cmd_compress(args) -> int:
    s = container.compress(args.input, args.output, args.threads_per_block, jobs=args.jobs)
    for t in s.tensors:
        print(f"{t.name}\t{t.original_bytes}\t{t.compressed_bytes}\t{t.ratio:.4f}")
    print(f"total\t{s.original_bytes}\t{s.compressed_bytes}\tsavings={s.savings:.4%}"
          f"\tfile={s.file_bytes}")
    return EXIT_OK


def cmd_decompress(args) -> int:
    container.decompress(args.input, args.output)
    return EXIT_OK


def cmd_verify(args) -> int:
    status = EXIT_OK
    for r in container.verify(args.input, args.threads_per_block_list):
        if r.ok:
            print(f"PASS\t{r.name}\tT={r.threads_per_block}")
        else:
            print(f"FAIL\t{r.name}\tT={r.threads_per_block}\t{r.decoder}"
                  f"\tfirst mismatch at index {r.first_mismatch}")
            status = EXIT_MISMATCH
    return status


def cmd_stats(args) -> int:
    reports = container.stats(args.input, args.threads_per_block)
    sys.stdout.write(container.format_reports(reports, args.format))
    if args.format == "csv":
        log.info("theoretical floor: %.3f bits/weight", compression_floor_bits())
    return EXIT_OK


def cmd_synth(args) -> int:
    t = container.synth(args.alpha, args.gamma, args.n, args.seed, args.output, args.name)
    log.info("wrote %d elements to %s", t.n_elem, args.output)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ecf8", description="Lossless exponent coding for FP8 (E4M3) tensors.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("compress", help="raw FP8 tensor file -> ECF8 container")
    c.add_argument("input")
    c.add_argument("output")
    c.add_argument("--threads-per-block", type=_threads, default=256)
    c.add_argument("--jobs", type=int, default=1, help="tensors compressed concurrently")
    c.set_defaults(func=cmd_compress)

    d = sub.add_parser("decompress", help="ECF8 container -> raw FP8 tensor file")
    d.add_argument("input")
    d.add_argument("output")
    d.set_defaults(func=cmd_decompress)

    v = sub.add_parser("verify", help="check both decoders against the input, per tensor and T")
    v.add_argument("input")
    v.add_argument("--threads-per-block-list", type=_threads_list, default=[1, 2, 32, 256])
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("stats", help="per-tensor exponent entropy report")
    s.add_argument("input")
    s.add_argument("--format", choices=("csv", "json"), default="csv")
    s.add_argument("--threads-per-block", type=_threads, default=256)
    s.set_defaults(func=cmd_stats)

    y = sub.add_parser("synth", help="write an alpha-stable synthetic FP8 tensor")
    y.add_argument("--alpha", type=float, required=True)
    y.add_argument("--gamma", type=float, required=True)
    y.add_argument("--n", type=int, required=True)
    y.add_argument("--seed", type=int, required=True)
    y.add_argument("--name", default="synthetic")
    y.add_argument("output")
    y.set_defaults(func=cmd_synth)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except container.FormatError as exc:
        print(f"ecf8: format error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except OSError as exc:
        print(f"ecf8: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"ecf8: invalid input: {exc}", file=sys.stderr)
        return EXIT_FORMAT


if __name__ == "__main__":
    sys.exit(main())
