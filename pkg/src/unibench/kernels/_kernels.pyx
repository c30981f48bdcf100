# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernel backend.

All loops run with the GIL released so the worker pool gets real parallelism.
Accumulation order is part of the contract: the naive GEMM is the oracle the
other implementations are verified against, so nothing here may reassociate
(build uses -O3 without -ffast-math).
"""

NAME = "compiled"

ctypedef fused real:
    float
    double


def stream_copy(real[::1] a, real[::1] b, real[::1] c, double q, Py_ssize_t i0, Py_ssize_t i1):
    cdef Py_ssize_t i
    with nogil:
        for i in range(i0, i1):
            c[i] = a[i]


def stream_scale(real[::1] a, real[::1] b, real[::1] c, double q, Py_ssize_t i0, Py_ssize_t i1):
    cdef real qr = <real> q
    cdef Py_ssize_t i
    with nogil:
        for i in range(i0, i1):
            b[i] = qr * c[i]


def stream_add(real[::1] a, real[::1] b, real[::1] c, double q, Py_ssize_t i0, Py_ssize_t i1):
    cdef Py_ssize_t i
    with nogil:
        for i in range(i0, i1):
            c[i] = a[i] + b[i]


def stream_triad(real[::1] a, real[::1] b, real[::1] c, double q, Py_ssize_t i0, Py_ssize_t i1):
    cdef real qr = <real> q
    cdef Py_ssize_t i
    with nogil:
        for i in range(i0, i1):
            a[i] = b[i] + qr * c[i]


def gemm_naive(float[:, ::1] a, float[:, ::1] b, float[:, ::1] c):
    """c[i,j] = sum_k a[i,k]*b[k,j], FP32 accumulation, k ascending."""
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t i, j, k
    cdef float acc
    with nogil:
        for i in range(n):
            for j in range(n):
                acc = 0.0
                for k in range(n):
                    acc = acc + a[i, k] * b[k, j]
                c[i, j] = acc


def gemm_tiled_rows(float[:, ::1] a, float[:, ::1] b, float[:, ::1] c,
                    Py_ssize_t tile, Py_ssize_t r0, Py_ssize_t r1):
    """Tiled update of output rows [r0, r1); c must be pre-zeroed.

    Block order kk ascending with k ascending inside keeps the global k
    order ascending per output element, matching gemm_naive bit for bit.
    """
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t ii, kk, jj, i, j, k, iend, kend, jend
    cdef float aik
    with nogil:
        ii = r0
        while ii < r1:
            iend = min(ii + tile, r1)
            kk = 0
            while kk < n:
                kend = min(kk + tile, n)
                jj = 0
                while jj < n:
                    jend = min(jj + tile, n)
                    for i in range(ii, iend):
                        for k in range(kk, kend):
                            aik = a[i, k]
                            for j in range(jj, jend):
                                c[i, j] = c[i, j] + aik * b[k, j]
                    jj += tile
                kk += tile
            ii += tile
