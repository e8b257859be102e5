"""Numpy implementation of the training step kernel.

Mirror of ``_kernels_cy``; both must keep identical semantics.  All arrays
are float64, updated in place.
"""

from __future__ import annotations

import numpy as np


def train_epoch(
    w: np.ndarray,
    b: np.ndarray,
    mw: np.ndarray,
    mb: np.ndarray,
    vw: np.ndarray,
    vb: np.ndarray,
    x: np.ndarray,
    y: np.ndarray,
    offsets: np.ndarray,
    batches: np.ndarray,
    t: int,
    lr: float,
    beta1: float,
    beta2: float,
    eps: float,
) -> tuple[int, float]:
    """Run one epoch of Adam steps over pre-drawn sentence batches.

    ``batches`` is (steps, batch_size) sentence indexes; sentence s covers
    rows offsets[s]:offsets[s+1] of x/y.  Returns the advanced step counter
    and the mean per-step loss.
    """
    total_loss = 0.0
    n_steps = batches.shape[0]
    for step in range(n_steps):
        rows = np.concatenate(
            [np.arange(offsets[s], offsets[s + 1]) for s in batches[step]]
        )
        xb = x[rows]
        yb = y[rows]
        n = rows.size

        logits = xb @ w.T + b
        logits -= logits.max(axis=1, keepdims=True)
        ex = np.exp(logits)
        denom = ex.sum(axis=1)
        total_loss += float(np.mean(np.log(denom) - logits[np.arange(n), yb]))

        g = ex / denom[:, None]
        g[np.arange(n), yb] -= 1.0
        g /= n
        gw = g.T @ xb
        gb = g.sum(axis=0)

        t += 1
        c1 = 1.0 - beta1 ** t
        c2 = 1.0 - beta2 ** t
        mw *= beta1
        mw += (1.0 - beta1) * gw
        vw *= beta2
        vw += (1.0 - beta2) * gw * gw
        w -= lr * (mw / c1) / (np.sqrt(vw / c2) + eps)
        mb *= beta1
        mb += (1.0 - beta1) * gb
        vb *= beta2
        vb += (1.0 - beta2) * gb * gb
        b -= lr * (mb / c1) / (np.sqrt(vb / c2) + eps)
    return t, total_loss / n_steps
