"""Pure-numpy kernel backend.

Drop-in replacement for the compiled extension.  Every kernel preserves the
exact per-element operation order of the compiled code (FP32 multiply then
FP32 add, k ascending for GEMM), so the two backends produce bit-identical
results.
"""

import numpy as np

NAME = "numpy"


def stream_copy(a, b, c, q, i0, i1):
    c[i0:i1] = a[i0:i1]


def stream_scale(a, b, c, q, i0, i1):
    np.multiply(c[i0:i1], c.dtype.type(q), out=b[i0:i1])


def stream_add(a, b, c, q, i0, i1):
    np.add(a[i0:i1], b[i0:i1], out=c[i0:i1])


def stream_triad(a, b, c, q, i0, i1):
    np.multiply(c[i0:i1], c.dtype.type(q), out=a[i0:i1])
    np.add(a[i0:i1], b[i0:i1], out=a[i0:i1])


def gemm_naive(a, b, c):
    """c[i,j] = sum_k a[i,k]*b[k,j], FP32, k ascending (the oracle order)."""
    n = a.shape[0]
    for i in range(n):
        row = c[i]
        row[:] = 0.0
        ai = a[i]
        for k in range(n):
            # One FP32 multiply and one FP32 add per element, k ascending:
            # identical rounding to the scalar triple loop.
            row += ai[k] * b[k]


def gemm_tiled_rows(a, b, c, tile, r0, r1):
    """Tiled update of output rows [r0, r1); c must be pre-zeroed."""
    n = a.shape[0]
    for kk in range(0, n, tile):
        kend = min(kk + tile, n)
        for i in range(r0, r1):
            row = c[i]
            ai = a[i]
            for k in range(kk, kend):
                row += ai[k] * b[k]
