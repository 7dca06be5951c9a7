"""Time encode and both decoders on each kernel backend.

    python3 benchmarks/bench_decode.py [--n 1000000] [--alpha 2.0] [--repeat 5]
"""

import argparse
import time

import numpy as np

from ecf8 import kernels
from ecf8.codec import decode_fp8, decode_fp8_sequential, encode_fp8, lut_for
from ecf8.container import synth_tensor


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--n", type=int, default=1_000_000)
    p.add_argument("--alpha", type=float, default=2.0)
    p.add_argument("--gamma", type=float, default=2 ** -0.5)
    p.add_argument("--threads-per-block", type=int, default=256)
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--skip-sequential-numpy", action="store_true",
                   help="the pure-Python sequential walk is slow for large n")
    args = p.parse_args()

    data = synth_tensor(args.alpha, args.gamma, args.n, 0).data
    backends = ["numpy"] + (["numba"] if kernels.numba_backend is not None else [])
    print(f"n={args.n} alpha={args.alpha} T={args.threads_per_block}")
    print(f"{'backend':8} {'op':18} {'ms':>9} {'MB/s':>8}")
    for name in backends:
        e = encode_fp8(data, args.threads_per_block, name)  # also warms up the JIT
        lut = lut_for(e)
        out = np.empty(args.n, dtype=np.uint8)
        assert (decode_fp8(e, out, name, lut) == data).all()
        ops = {
            "encode": lambda: encode_fp8(data, args.threads_per_block, name),
            "decode_parallel": lambda: decode_fp8(e, out, name, lut),
        }
        if not (name == "numpy" and args.skip_sequential_numpy):
            ops["decode_sequential"] = lambda: decode_fp8_sequential(e, name)
        for op, fn in ops.items():
            reps = 1 if (name == "numpy" and op == "decode_sequential") else args.repeat
            t = best_of(fn, reps)
            print(f"{name:8} {op:18} {t * 1e3:9.1f} {args.n / t / 1e6:8.1f}")
    print(f"compressed size: {e.nbytes() / args.n:.4f} of original")


if __name__ == "__main__":
    main()
