# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled dense-MLP kernels: batched forward/backward for small nets.

Matmuls go through BLAS dgemm; bias add, activations and their derivatives
are fused loops. The pure-numpy twin is motiac._kernels_py.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport tanh as c_tanh
from scipy.linalg.cython_blas cimport dgemm

cnp.import_array()

ACT_IDENTITY = 0
ACT_TANH = 1
ACT_RELU = 2

cdef char CH_N = b'N'
cdef char CH_T = b'T'


cdef void _gemm_nn(double[:, ::1] a, double[:, ::1] b, double[:, ::1] out) noexcept nogil:
    # out(m,n) = a(m,k) @ b(k,n), row-major via the column-major identity
    # out^T = b^T @ a^T.
    cdef int m = a.shape[0], k = a.shape[1], n = b.shape[1]
    cdef double alpha = 1.0, beta = 0.0
    dgemm(&CH_N, &CH_N, &n, &m, &k, &alpha, &b[0, 0], &n, &a[0, 0], &k,
          &beta, &out[0, 0], &n)


cdef void _gemm_tn(double[:, ::1] a, double[:, ::1] b, double[:, ::1] out) noexcept nogil:
    # out(p,q) = a(n,p)^T @ b(n,q)
    cdef int n = a.shape[0], p = a.shape[1], q = b.shape[1]
    cdef double alpha = 1.0, beta = 0.0
    dgemm(&CH_N, &CH_T, &q, &p, &n, &alpha, &b[0, 0], &q, &a[0, 0], &p,
          &beta, &out[0, 0], &q)


cdef void _gemm_nt(double[:, ::1] a, double[:, ::1] b, double[:, ::1] out) noexcept nogil:
    # out(n,p) = a(n,q) @ b(p,q)^T
    cdef int n = a.shape[0], q = a.shape[1], p = b.shape[0]
    cdef double alpha = 1.0, beta = 0.0
    dgemm(&CH_T, &CH_N, &p, &n, &q, &alpha, &b[0, 0], &q, &a[0, 0], &q,
          &beta, &out[0, 0], &p)


cdef void _bias_act(double[:, ::1] z, double[::1] b, int code) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef Py_ssize_t n = z.shape[0], d = z.shape[1]
    cdef double v
    for i in range(n):
        for j in range(d):
            v = z[i, j] + b[j]
            if code == 1:
                v = c_tanh(v)
            elif code == 2:
                v = v if v > 0.0 else 0.0
            z[i, j] = v


cdef void _act_grad(double[:, ::1] d, double[:, ::1] a_out, int code,
                    double[:, ::1] dz) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef Py_ssize_t n = d.shape[0], m = d.shape[1]
    cdef double a
    for i in range(n):
        for j in range(m):
            a = a_out[i, j]
            if code == 1:
                dz[i, j] = d[i, j] * (1.0 - a * a)
            elif code == 2:
                dz[i, j] = d[i, j] if a > 0.0 else 0.0
            else:
                dz[i, j] = d[i, j]


def mlp_forward(list weights, list biases, act_codes, x):
    """Batched forward pass; see motiac._kernels_py.mlp_forward."""
    cdef list acts = [x]
    cdef double[:, ::1] a = x
    cdef double[:, ::1] w
    cdef double[::1] b
    cdef double[:, ::1] z
    cdef int code
    cdef Py_ssize_t layer, n_layers = len(weights)
    codes = np.asarray(act_codes, dtype=np.int32)
    for layer in range(n_layers):
        w = weights[layer]
        b = biases[layer]
        code = codes[layer]
        out = np.empty((a.shape[0], w.shape[1]), dtype=np.float64)
        z = out
        with nogil:
            _gemm_nn(a, w, z)
            _bias_act(z, b, code)
        acts.append(out)
        a = z
    return acts


def mlp_backward(list weights, act_codes, list activations, d_out):
    """Batched backward pass; see motiac._kernels_py.mlp_backward."""
    cdef Py_ssize_t layer, n_layers = len(weights)
    cdef list d_ws = [None] * n_layers
    cdef list d_bs = [None] * n_layers
    cdef double[:, ::1] d = d_out
    cdef double[:, ::1] dz_v, a_out, a_in, w, dw_v, d_prev_v
    cdef double[::1] db_v
    cdef int code
    cdef Py_ssize_t i, j
    codes = np.asarray(act_codes, dtype=np.int32)
    for layer in range(n_layers - 1, -1, -1):
        a_out = activations[layer + 1]
        a_in = activations[layer]
        w = weights[layer]
        code = codes[layer]
        dz = np.empty((d.shape[0], d.shape[1]), dtype=np.float64)
        dz_v = dz
        dw = np.empty((w.shape[0], w.shape[1]), dtype=np.float64)
        dw_v = dw
        db = np.zeros(w.shape[1], dtype=np.float64)
        db_v = db
        with nogil:
            _act_grad(d, a_out, code, dz_v)
            _gemm_tn(a_in, dz_v, dw_v)
            for i in range(dz_v.shape[0]):
                for j in range(dz_v.shape[1]):
                    db_v[j] += dz_v[i, j]
        d_ws[layer] = dw
        d_bs[layer] = db
        if layer:
            d_prev = np.empty((dz_v.shape[0], w.shape[0]), dtype=np.float64)
            d_prev_v = d_prev
            with nogil:
                _gemm_nt(dz_v, w, d_prev_v)
            d = d_prev_v
    return d_ws, d_bs
