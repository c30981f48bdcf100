#!/usr/bin/env python3
"""Compare the compiled kernel core against the numpy fallback.

Runs the STREAM kernels and a small GEMM with each available backend and
prints a side-by-side table.  Useful for judging what the extension buys on
a given machine (and for catching a broken build: the numbers differ, the
results must not).

Usage: python benchmarks/compare_backends.py [--stream-n 8388608] [--gemm-n 256]
"""

import argparse
import time

import numpy as np

from unibench import kernels
from unibench.gemm import generate_matrix
from unibench.stream import KERNELS, bytes_moved


def time_stream(mod, n: int, reps: int) -> dict[str, float]:
    a = np.full(n, 1.0, dtype=np.float32)
    b = np.full(n, 2.0, dtype=np.float32)
    c = np.zeros(n, dtype=np.float32)
    best = {}
    for kind in KERNELS:
        fn = getattr(mod, f"stream_{kind}")
        times = []
        for _ in range(reps + 1):
            t0 = time.perf_counter_ns()
            fn(a, b, c, 3.0, 0, n)
            times.append((time.perf_counter_ns() - t0) / 1e9)
        best[kind] = bytes_moved(kind, n, 4) / min(times[1:]) / 1e9
    return best


def time_gemm(mod, n: int, reps: int) -> tuple[float, float]:
    a = generate_matrix(n, 42).as_2d()
    b = generate_matrix(n, 43).as_2d()
    c = np.zeros((n, n), dtype=np.float32)

    def run(fn):
        times = []
        for _ in range(reps):
            c[:] = 0.0
            t0 = time.perf_counter_ns()
            fn()
            times.append((time.perf_counter_ns() - t0) / 1e9)
        return (2 * n**3 - n**2) / min(times) / 1e9

    naive = run(lambda: mod.gemm_naive(a, b, c))
    tiled = run(lambda: mod.gemm_tiled_rows(a, b, c, 64, 0, n))
    return naive, tiled


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--stream-n", type=int, default=2**23)
    parser.add_argument("--gemm-n", type=int, default=256)
    parser.add_argument("--reps", type=int, default=5)
    args = parser.parse_args()

    backends = kernels.available_backends()
    print(f"backends: {', '.join(backends)} (active: {kernels.BACKEND})")
    print(f"stream n={args.stream_n} (single thread), gemm n={args.gemm_n}\n")

    stream_rows = {name: time_stream(kernels.get_backend(name), args.stream_n, args.reps)
                   for name in backends}
    header = "kernel".ljust(8) + "".join(name.rjust(14) for name in backends)
    print(header)
    for kind in KERNELS:
        row = kind.ljust(8)
        for name in backends:
            row += f"{stream_rows[name][kind]:12.2f} GB/s"[-14:].rjust(14)
        print(row)

    print()
    gemm_rows = {name: time_gemm(kernels.get_backend(name), args.gemm_n, args.reps)
                 for name in backends}
    print("gemm".ljust(8) + "".join(name.rjust(14) for name in backends))
    for i, label in enumerate(("naive", "tiled")):
        row = label.ljust(8)
        for name in backends:
            row += f"{gemm_rows[name][i]:10.3f} GF/s"[-14:].rjust(14)
        print(row)

    if len(backends) > 1:
        a = generate_matrix(args.gemm_n, 1).as_2d()
        b = generate_matrix(args.gemm_n, 2).as_2d()
        outs = []
        for name in backends:
            c = np.zeros((args.gemm_n, args.gemm_n), dtype=np.float32)
            kernels.get_backend(name).gemm_naive(a, b, c)
            outs.append(c)
        identical = all(np.array_equal(outs[0], o) for o in outs[1:])
        print(f"\nbackend outputs bit-identical: {identical}")
        return 0 if identical else 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
