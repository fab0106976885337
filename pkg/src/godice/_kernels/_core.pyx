# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernel backend.

Same contract as ``pyback``; dense float64 loops with a fixed summation
order (i-k-j for products, sequential over k), so results are bitwise
reproducible run to run.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport pow, sqrt

cnp.import_array()

NAME = "compiled"


cdef double[:, ::1] _c2d(obj):
    return np.ascontiguousarray(obj, dtype=np.float64)


def matmul(a_in not None, b_in not None):
    cdef double[:, ::1] a = _c2d(a_in)
    cdef double[:, ::1] b = _c2d(b_in)
    cdef Py_ssize_t m = a.shape[0], k = a.shape[1], n = b.shape[1]
    if b.shape[0] != k:
        raise ValueError("matmul: inner dimensions differ")
    out = np.zeros((m, n), dtype=np.float64)
    cdef double[:, ::1] c = out
    cdef Py_ssize_t i, j, p
    cdef double aik
    for i in range(m):
        for p in range(k):
            aik = a[i, p]
            for j in range(n):
                c[i, j] += aik * b[p, j]
    return out


def matmul_nt(a_in not None, b_in not None):
    cdef double[:, ::1] a = _c2d(a_in)
    cdef double[:, ::1] b = _c2d(b_in)
    cdef Py_ssize_t m = a.shape[0], k = a.shape[1], n = b.shape[0]
    if b.shape[1] != k:
        raise ValueError("matmul_nt: inner dimensions differ")
    out = np.zeros((m, n), dtype=np.float64)
    cdef double[:, ::1] c = out
    cdef Py_ssize_t i, j, p
    cdef double acc
    for i in range(m):
        for j in range(n):
            acc = 0.0
            for p in range(k):
                acc += a[i, p] * b[j, p]
            c[i, j] = acc
    return out


def matmul_tn(a_in not None, b_in not None):
    cdef double[:, ::1] a = _c2d(a_in)
    cdef double[:, ::1] b = _c2d(b_in)
    cdef Py_ssize_t k = a.shape[0], m = a.shape[1], n = b.shape[1]
    if b.shape[0] != k:
        raise ValueError("matmul_tn: inner dimensions differ")
    out = np.zeros((m, n), dtype=np.float64)
    cdef double[:, ::1] c = out
    cdef Py_ssize_t i, j, p
    cdef double api
    for p in range(k):
        for i in range(m):
            api = a[p, i]
            for j in range(n):
                c[i, j] += api * b[p, j]
    return out


def adam_step(cnp.ndarray param, cnp.ndarray grad, cnp.ndarray m,
              cnp.ndarray v, long t, double lr, double beta1, double beta2,
              double eps):
    cdef double[::1] p1 = param.reshape(-1)
    cdef double[::1] g1 = np.ascontiguousarray(grad, dtype=np.float64).reshape(-1)
    cdef double[::1] m1 = m.reshape(-1)
    cdef double[::1] v1 = v.reshape(-1)
    cdef Py_ssize_t n = p1.shape[0], i
    cdef double c1 = 1.0 - pow(beta1, t)
    cdef double c2 = 1.0 - pow(beta2, t)
    cdef double g, mhat, vhat
    for i in range(n):
        g = g1[i]
        m1[i] = beta1 * m1[i] + (1.0 - beta1) * g
        v1[i] = beta2 * v1[i] + (1.0 - beta2) * (g * g)
        mhat = m1[i] / c1
        vhat = v1[i] / c2
        p1[i] -= lr * mhat / (sqrt(vhat) + eps)


def viterbi_dp(init_in not None, trans_in not None, emit_in not None):
    cdef double[::1] init = np.ascontiguousarray(init_in, dtype=np.float64)
    cdef double[:, :, ::1] trans = np.ascontiguousarray(trans_in, dtype=np.float64)
    cdef double[:, ::1] emit = _c2d(emit_in)
    cdef Py_ssize_t T = emit.shape[0], K = init.shape[0]
    cdef cnp.ndarray[double, ndim=1] alpha = np.empty(K, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] nxt = np.empty(K, dtype=np.float64)
    cdef cnp.ndarray[long, ndim=2] back = np.zeros((T, K), dtype=np.int64)
    cdef cnp.ndarray[long, ndim=1] labels = np.zeros(T, dtype=np.int64)
    cdef Py_ssize_t t, c, cp, best
    cdef double cand, bestval
    for c in range(K):
        alpha[c] = init[c]
    for t in range(1, T):
        for c in range(K):
            best = 0
            bestval = alpha[0] + trans[t - 1, 0, c]
            for cp in range(1, K):
                cand = alpha[cp] + trans[t - 1, cp, c]
                if cand > bestval:
                    bestval = cand
                    best = cp
            nxt[c] = bestval + emit[t, c]
            back[t, c] = best
        alpha, nxt = nxt, alpha
    best = 0
    bestval = alpha[0]
    for c in range(1, K):
        if alpha[c] > bestval:
            bestval = alpha[c]
            best = c
    labels[T - 1] = best
    for t in range(T - 1, 0, -1):
        labels[t - 1] = back[t, labels[t]]
    return labels, float(bestval)
