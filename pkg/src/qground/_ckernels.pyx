# cython: boundscheck=False, wraparound=False, cdivision=True
"""Cython implementations of the hot numeric kernels.

Mirrors qground._pykernels.  All reductions run in fixed index order, so a
given backend is deterministic, and every output row of linear_fwd is
accumulated in the same order regardless of row position (needed for exact
invariance under the network's canonical operand sorting).
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, log

cnp.import_array()

name = "cython"


def linear_fwd(cnp.float64_t[:, ::1] x, cnp.float64_t[:, ::1] W, cnp.float64_t[::1] b):
    cdef Py_ssize_t n = x.shape[0], i_dim = x.shape[1], o_dim = W.shape[0]
    out_arr = np.empty((n, o_dim), dtype=np.float64)
    cdef cnp.float64_t[:, ::1] out = out_arr
    cdef Py_ssize_t r, o, i
    cdef double acc
    for r in range(n):
        for o in range(o_dim):
            acc = b[o]
            for i in range(i_dim):
                acc += x[r, i] * W[o, i]
            out[r, o] = acc
    return out_arr


def linear_bwd(cnp.float64_t[:, ::1] x, cnp.float64_t[:, ::1] W, cnp.float64_t[:, ::1] gy):
    cdef Py_ssize_t n = x.shape[0], i_dim = x.shape[1], o_dim = W.shape[0]
    gx_arr = np.zeros((n, i_dim), dtype=np.float64)
    gW_arr = np.zeros((o_dim, i_dim), dtype=np.float64)
    gb_arr = np.zeros(o_dim, dtype=np.float64)
    cdef cnp.float64_t[:, ::1] gx = gx_arr
    cdef cnp.float64_t[:, ::1] gW = gW_arr
    cdef cnp.float64_t[::1] gb = gb_arr
    cdef Py_ssize_t r, o, i
    cdef double g
    for r in range(n):
        for o in range(o_dim):
            g = gy[r, o]
            gb[o] += g
            for i in range(i_dim):
                gx[r, i] += g * W[o, i]
                gW[o, i] += g * x[r, i]
    return gx_arr, gW_arr, gb_arr


cdef inline double _sigmoid(double v) nogil:
    if v >= 0.0:
        return 1.0 / (1.0 + exp(-v))
    return exp(v) / (1.0 + exp(v))


cdef inline double _tanh_softplus(double v) nogil:
    # tanh(ln(1+e^v)) = ((1+e^v)^2 - 1) / ((1+e^v)^2 + 1), one exp instead
    # of three; for v > 20 the result is 1 to double precision.
    cdef double u, w
    if v > 20.0:
        return 1.0
    u = exp(v)
    w = (1.0 + u) * (1.0 + u)
    return (w - 1.0) / (w + 1.0)


def mish_fwd(cnp.float64_t[:, ::1] x):
    # Returns (value, tanh(softplus(x))); the latter is reused by backward.
    cdef Py_ssize_t n = x.shape[0], k = x.shape[1]
    out_arr = np.empty((n, k), dtype=np.float64)
    t_arr = np.empty((n, k), dtype=np.float64)
    cdef cnp.float64_t[:, ::1] out = out_arr
    cdef cnp.float64_t[:, ::1] tv = t_arr
    cdef Py_ssize_t r, c
    cdef double t
    for r in range(n):
        for c in range(k):
            t = _tanh_softplus(x[r, c])
            tv[r, c] = t
            out[r, c] = x[r, c] * t
    return out_arr, t_arr


def mish_bwd(cnp.float64_t[:, ::1] x, cnp.float64_t[:, ::1] tv, cnp.float64_t[:, ::1] gy):
    cdef Py_ssize_t n = x.shape[0], k = x.shape[1]
    out_arr = np.empty((n, k), dtype=np.float64)
    cdef cnp.float64_t[:, ::1] out = out_arr
    cdef Py_ssize_t r, c
    cdef double t, v
    for r in range(n):
        for c in range(k):
            v = x[r, c]
            t = tv[r, c]
            out[r, c] = gy[r, c] * (t + v * (1.0 - t * t) * _sigmoid(v))
    return out_arr


def scatter_add_rows(cnp.float64_t[:, ::1] out, cnp.int64_t[::1] idx, cnp.float64_t[:, ::1] src):
    cdef Py_ssize_t n = src.shape[0], k = src.shape[1]
    cdef Py_ssize_t r, c, dst
    for r in range(n):
        dst = idx[r]
        for c in range(k):
            out[dst, c] += src[r, c]


def seg_lse_fwd(cnp.float64_t[:, ::1] sorted_vals, cnp.int64_t[::1] starts,
                cnp.int64_t[::1] seg_of_row, double alpha):
    cdef Py_ssize_t m = sorted_vals.shape[0], k = sorted_vals.shape[1]
    cdef Py_ssize_t s_count = starts.shape[0]
    out_arr = np.empty((s_count, k), dtype=np.float64)
    expm_arr = np.empty((m, k), dtype=np.float64)
    segsum_arr = np.zeros((s_count, k), dtype=np.float64)
    cdef cnp.float64_t[:, ::1] out = out_arr
    cdef cnp.float64_t[:, ::1] expm = expm_arr
    cdef cnp.float64_t[:, ::1] segsum = segsum_arr
    cdef Py_ssize_t s, r, c, lo, hi
    cdef double mx, e
    for s in range(s_count):
        lo = starts[s]
        hi = starts[s + 1] if s + 1 < s_count else m
        for c in range(k):
            mx = sorted_vals[lo, c]
            for r in range(lo + 1, hi):
                if sorted_vals[r, c] > mx:
                    mx = sorted_vals[r, c]
            out[s, c] = mx
        for r in range(lo, hi):
            for c in range(k):
                e = exp(alpha * (sorted_vals[r, c] - out[s, c]))
                expm[r, c] = e
                segsum[s, c] += e
        for c in range(k):
            out[s, c] = out[s, c] + log(segsum[s, c]) / alpha
    return out_arr, expm_arr, segsum_arr


def seg_lse_bwd(cnp.float64_t[:, ::1] gout, cnp.float64_t[:, ::1] expm,
                cnp.float64_t[:, ::1] segsum, cnp.int64_t[::1] seg_of_row):
    cdef Py_ssize_t m = expm.shape[0], k = expm.shape[1]
    out_arr = np.empty((m, k), dtype=np.float64)
    cdef cnp.float64_t[:, ::1] out = out_arr
    cdef Py_ssize_t r, c, s
    for r in range(m):
        s = seg_of_row[r]
        for c in range(k):
            out[r, c] = gout[s, c] * (expm[r, c] / segsum[s, c])
    return out_arr
