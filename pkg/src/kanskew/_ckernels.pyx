# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled orbit kernels for basin rasters (exact integer base, double fiber)."""

from libc.math cimport cos, M_PI
from libc.stdint cimport uint64_t, int64_t


def skew_averages(const uint64_t[:] x1, const uint64_t[:] x2, const double[:] t0,
                  long n, long burn, int64_t a, int64_t b, int64_t c, int64_t d,
                  int64_t w1, int64_t w2, double amp, int bits, double[:] out,
                  Py_ssize_t start, Py_ssize_t stop):
    """Mean of t over steps burn..n-1 of t -> t + amp cos(2 pi w.x) t (1-t), x -> A x mod 1."""
    cdef uint64_t mask = (<uint64_t>1 << bits) - 1
    cdef double scale = 2.0 * M_PI / <double>(<uint64_t>1 << bits)
    cdef uint64_t ua = <uint64_t>a, ub = <uint64_t>b, uc = <uint64_t>c, ud = <uint64_t>d
    cdef uint64_t uw1 = <uint64_t>w1, uw2 = <uint64_t>w2
    cdef uint64_t n1, n2, m1
    cdef double t, acc, k
    cdef Py_ssize_t i
    cdef long s
    with nogil:
        for i in range(start, stop):
            n1 = x1[i]
            n2 = x2[i]
            t = t0[i]
            acc = 0.0
            for s in range(n):
                if s >= burn:
                    acc = acc + t
                k = amp * cos(scale * <double>((uw1 * n1 + uw2 * n2) & mask))
                t = t + k * t * (1.0 - t)
                m1 = (ua * n1 + ub * n2) & mask
                n2 = (uc * n1 + ud * n2) & mask
                n1 = m1
            out[i] = acc / <double>(n - burn)
