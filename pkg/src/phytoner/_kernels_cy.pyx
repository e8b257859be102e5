# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled training step kernel; semantics mirror ``_kernels_py``."""

from libc.math cimport exp, log, sqrt

import numpy as np


def train_epoch(
    double[:, ::1] w,
    double[::1] b,
    double[:, ::1] mw,
    double[::1] mb,
    double[:, ::1] vw,
    double[::1] vb,
    double[:, ::1] x,
    long[::1] y,
    long[::1] offsets,
    long[:, ::1] batches,
    long t,
    double lr,
    double beta1,
    double beta2,
    double eps,
):
    """Run one epoch of Adam steps over pre-drawn sentence batches.

    Same contract as the numpy fallback: ``batches`` indexes sentences,
    sentence s covers rows offsets[s]:offsets[s+1]; arrays update in place;
    returns (advanced step counter, mean per-step loss).
    """
    cdef Py_ssize_t n_classes = w.shape[0]
    cdef Py_ssize_t d = w.shape[1]
    cdef Py_ssize_t n_steps = batches.shape[0]
    cdef Py_ssize_t batch_size = batches.shape[1]

    gw_arr = np.zeros((n_classes, d), dtype=np.float64)
    gb_arr = np.zeros(n_classes, dtype=np.float64)
    cdef double[:, ::1] gw = gw_arr
    cdef double[::1] gb = gb_arr
    cdef double logits[64]

    cdef Py_ssize_t step, i, s, row, c, j, n_rows
    cdef long row_start, row_end
    cdef double total_loss = 0.0, step_loss, zmax, zy, denom, p, g, inv_n
    cdef double c1, c2

    if n_classes > 64:
        raise ValueError("kernel supports at most 64 classes")

    for step in range(n_steps):
        for c in range(n_classes):
            gb[c] = 0.0
            for j in range(d):
                gw[c, j] = 0.0
        step_loss = 0.0
        n_rows = 0
        for i in range(batch_size):
            s = batches[step, i]
            n_rows += offsets[s + 1] - offsets[s]
        inv_n = 1.0 / n_rows

        for i in range(batch_size):
            s = batches[step, i]
            row_start = offsets[s]
            row_end = offsets[s + 1]
            for row in range(row_start, row_end):
                zmax = -1e300
                for c in range(n_classes):
                    logits[c] = b[c]
                    for j in range(d):
                        logits[c] += w[c, j] * x[row, j]
                    if logits[c] > zmax:
                        zmax = logits[c]
                zy = logits[y[row]] - zmax
                denom = 0.0
                for c in range(n_classes):
                    logits[c] = exp(logits[c] - zmax)
                    denom += logits[c]
                step_loss += log(denom) - zy
                for c in range(n_classes):
                    p = logits[c] / denom
                    g = (p - (1.0 if c == y[row] else 0.0)) * inv_n
                    gb[c] += g
                    for j in range(d):
                        gw[c, j] += g * x[row, j]
        total_loss += step_loss * inv_n

        t += 1
        c1 = 1.0 - beta1 ** t
        c2 = 1.0 - beta2 ** t
        for c in range(n_classes):
            for j in range(d):
                mw[c, j] = beta1 * mw[c, j] + (1.0 - beta1) * gw[c, j]
                vw[c, j] = beta2 * vw[c, j] + (1.0 - beta2) * gw[c, j] * gw[c, j]
                w[c, j] -= lr * (mw[c, j] / c1) / (sqrt(vw[c, j] / c2) + eps)
            mb[c] = beta1 * mb[c] + (1.0 - beta1) * gb[c]
            vb[c] = beta2 * vb[c] + (1.0 - beta2) * gb[c] * gb[c]
            b[c] -= lr * (mb[c] / c1) / (sqrt(vb[c] / c2) + eps)

    return t, total_loss / n_steps
