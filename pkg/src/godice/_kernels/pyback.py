"""Pure-numpy kernel backend.

Reference implementations of the hot kernels. The compiled backend in
``_core.pyx`` mirrors these signatures exactly; either one is selected at
import time by ``godice._kernels``.
"""

import numpy as np

NAME = "python"


def matmul(a, b):
    """C = A @ B."""
    return a @ b


def matmul_nt(a, b):
    """C = A @ B.T"""
    return a @ b.T


def matmul_tn(a, b):
    """C = A.T @ B"""
    return a.T @ b


def adam_step(param, grad, m, v, t, lr, beta1, beta2, eps):
    """In-place bias-corrected Adam update on one parameter array."""
    m *= beta1
    m += (1.0 - beta1) * grad
    v *= beta2
    v += (1.0 - beta2) * (grad * grad)
    mhat = m / (1.0 - beta1**t)
    vhat = v / (1.0 - beta2**t)
    param -= lr * mhat / (np.sqrt(vhat) + eps)


def viterbi_dp(init, trans, emit):
    """Max-sum decode of an option sequence.

    init:  (K,) score of each option at t=0 (emission already folded in).
    trans: (T-1, K, K) score of moving from option row to option column at t.
    emit:  (T, K) per-step emission scores; emit[0] is ignored (in init).

    Returns (labels int64 (T,), best_score). Ties break toward the lowest
    option index at every step.
    """
    T = emit.shape[0]
    K = init.shape[0]
    alpha = init.copy()
    back = np.zeros((T, K), dtype=np.int64)
    for t in range(1, T):
        cand = alpha[:, None] + trans[t - 1]  # cand[c_prev, c]
        best_prev = np.argmax(cand, axis=0)  # ties -> lowest index
        alpha = cand[best_prev, np.arange(K)] + emit[t]
        back[t] = best_prev
    labels = np.zeros(T, dtype=np.int64)
    labels[T - 1] = int(np.argmax(alpha))
    for t in range(T - 1, 0, -1):
        labels[t - 1] = back[t, labels[t]]
    return labels, float(alpha[labels[T - 1]])
