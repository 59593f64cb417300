# cython: boundscheck=False, wraparound=False, cdivision=True
# cython: initializedcheck=False, language_level=3

"""Compiled LSTM sequence kernels.

Same contract and cache layout as kernel_numpy; the recurrence matmuls go
through BLAS dgemm and the gate nonlinearities run as fused C loops.
"""

import numpy as np

from libc.math cimport exp, tanh
from libc.string cimport memcpy
from scipy.linalg.cython_blas cimport dgemm

BACKEND_NAME = "cython"


cdef inline double _sig(double z) noexcept nogil:
    return 1.0 / (1.0 + exp(-z))


cdef void _gemm_nn(int m, int n, int k, double* a, int lda, double* b,
                   int ldb, double beta, double* c, int ldc) noexcept nogil:
    # row-major C(m,n) = beta*C + A(m,k) @ B(k,n); ld* are row strides
    cdef char tn = b'N'
    cdef double one = 1.0
    dgemm(&tn, &tn, &n, &m, &k, &one, b, &ldb, a, &lda, &beta, c, &ldc)


cdef void _gemm_nt(int m, int n, int k, double* a, int lda, double* b,
                   int ldb, double beta, double* c, int ldc) noexcept nogil:
    # row-major C(m,n) = beta*C + A(m,k) @ B(n,k)^T
    cdef char tt = b'T'
    cdef char tn = b'N'
    cdef double one = 1.0
    dgemm(&tt, &tn, &n, &m, &k, &one, b, &ldb, a, &lda, &beta, c, &ldc)


cdef void _gemm_tn(int m, int n, int k, double* a, int lda, double* b,
                   int ldb, double beta, double* c, int ldc) noexcept nogil:
    # row-major C(m,n) = beta*C + A(k,m)^T @ B(k,n)
    cdef char tn = b'N'
    cdef char tt = b'T'
    cdef double one = 1.0
    dgemm(&tn, &tt, &n, &m, &k, &one, b, &ldb, a, &lda, &beta, c, &ldc)


def lstm_layer_forward(double[:, :, ::1] zx, double[:, ::1] wh,
                       double[:, ::1] h0, double[:, ::1] c0):
    cdef Py_ssize_t b_n = zx.shape[0]
    cdef Py_ssize_t t_len = zx.shape[1]
    cdef Py_ssize_t h4 = zx.shape[2]
    cdef Py_ssize_t h = h4 // 4

    h_all_arr = np.empty((b_n, t_len + 1, h))
    c_all_arr = np.empty((b_n, t_len + 1, h))
    gates_arr = np.empty((b_n, t_len, h4))
    z_arr = np.empty((b_n, h4))
    cdef double[:, :, ::1] h_all = h_all_arr
    cdef double[:, :, ::1] c_all = c_all_arr
    cdef double[:, :, ::1] gates = gates_arr
    cdef double[:, ::1] z = z_arr

    cdef Py_ssize_t t, bi, j
    cdef double gi, gf, gg, go, cc
    cdef int ld_h_all = <int> ((t_len + 1) * h)
    with nogil:
        for bi in range(b_n):
            for j in range(h):
                h_all[bi, 0, j] = h0[bi, j]
                c_all[bi, 0, j] = c0[bi, j]
        for t in range(t_len):
            for bi in range(b_n):
                memcpy(&z[bi, 0], &zx[bi, t, 0], h4 * sizeof(double))
            _gemm_nn(<int> b_n, <int> h4, <int> h,
                     &h_all[0, t, 0], ld_h_all, &wh[0, 0], <int> h4,
                     1.0, &z[0, 0], <int> h4)
            for bi in range(b_n):
                for j in range(h):
                    gi = _sig(z[bi, j])
                    gf = _sig(z[bi, h + j])
                    gg = tanh(z[bi, 2 * h + j])
                    go = _sig(z[bi, 3 * h + j])
                    cc = gf * c_all[bi, t, j] + gi * gg
                    gates[bi, t, j] = gi
                    gates[bi, t, h + j] = gf
                    gates[bi, t, 2 * h + j] = gg
                    gates[bi, t, 3 * h + j] = go
                    c_all[bi, t + 1, j] = cc
                    h_all[bi, t + 1, j] = go * tanh(cc)
    return h_all_arr, c_all_arr, gates_arr


def lstm_layer_backward(double[:, :, ::1] dh_out, double[:, ::1] wh,
                        double[:, :, ::1] h_all, double[:, :, ::1] c_all,
                        double[:, :, ::1] gates):
    cdef Py_ssize_t b_n = dh_out.shape[0]
    cdef Py_ssize_t t_len = dh_out.shape[1]
    cdef Py_ssize_t h = dh_out.shape[2]
    cdef Py_ssize_t h4 = 4 * h

    dzx_arr = np.empty((b_n, t_len, h4))
    dwh_arr = np.zeros((h, h4))
    dh_arr = np.zeros((b_n, h))
    dc_arr = np.zeros((b_n, h))
    cdef double[:, :, ::1] dzx = dzx_arr
    cdef double[:, ::1] dwh = dwh_arr
    cdef double[:, ::1] dh = dh_arr
    cdef double[:, ::1] dc = dc_arr

    cdef Py_ssize_t t, bi, j
    cdef double gi, gf, gg, go, tc, dh_t, dct
    cdef int ld_h_all = <int> ((t_len + 1) * h)
    cdef int ld_dzx = <int> (t_len * h4)
    with nogil:
        for t in range(t_len - 1, -1, -1):
            for bi in range(b_n):
                for j in range(h):
                    gi = gates[bi, t, j]
                    gf = gates[bi, t, h + j]
                    gg = gates[bi, t, 2 * h + j]
                    go = gates[bi, t, 3 * h + j]
                    tc = tanh(c_all[bi, t + 1, j])
                    dh_t = dh[bi, j] + dh_out[bi, t, j]
                    dct = dc[bi, j] + dh_t * go * (1.0 - tc * tc)
                    dzx[bi, t, j] = dct * gg * gi * (1.0 - gi)
                    dzx[bi, t, h + j] = dct * c_all[bi, t, j] * gf * (1.0 - gf)
                    dzx[bi, t, 2 * h + j] = dct * gi * (1.0 - gg * gg)
                    dzx[bi, t, 3 * h + j] = dh_t * tc * go * (1.0 - go)
                    dc[bi, j] = dct * gf
            _gemm_nt(<int> b_n, <int> h, <int> h4,
                     &dzx[0, t, 0], ld_dzx, &wh[0, 0], <int> h4,
                     0.0, &dh[0, 0], <int> h)
            _gemm_tn(<int> h, <int> h4, <int> b_n,
                     &h_all[0, t, 0], ld_h_all, &dzx[0, t, 0], ld_dzx,
                     1.0, &dwh[0, 0], <int> h4)
    return dzx_arr, dwh_arr, dh_arr, dc_arr
