"""Compare the compiled training kernel against the numpy fallback.

Times repeated `train_epoch` calls on synthetic batches at a few problem
sizes and prints a small table.  Run after an editable install:

    python3 benchmarks/bench_kernels.py [--repeats 30]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from phytoner import kernels


def make_problem(n_sentences: int, pieces_per_sentence: int, dim: int, seed: int):
    rng = np.random.Generator(np.random.PCG64(seed))
    n = n_sentences * pieces_per_sentence
    x = rng.standard_normal((n, dim))
    y = rng.integers(0, 5, size=n).astype(np.int64)
    offsets = np.arange(n_sentences + 1, dtype=np.int64) * pieces_per_sentence
    batch_size = max(1, n_sentences // 16)
    batches = rng.integers(0, n_sentences, size=(16, batch_size)).astype(np.int64)
    return x, y, offsets, batches


def run_once(kernel: str, x, y, offsets, batches, repeats: int) -> float:
    kernels.use_kernel(kernel)
    d = x.shape[1]
    rng = np.random.Generator(np.random.PCG64(0))
    w = rng.uniform(-0.02, 0.02, (5, d))
    b = rng.uniform(-0.02, 0.02, 5)
    mw, vw = np.zeros_like(w), np.zeros_like(w)
    mb, vb = np.zeros_like(b), np.zeros_like(b)
    t = 0
    start = time.perf_counter()
    for _ in range(repeats):
        t, _ = kernels.train_epoch(
            w, b, mw, mb, vw, vb, x, y, offsets, batches, t, 1e-2, 0.9, 0.999, 1e-8
        )
    return (time.perf_counter() - start) / repeats


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeats", type=int, default=30)
    args = ap.parse_args()

    available = kernels.available_kernels()
    print(f"kernels available: {', '.join(available)}")
    if "compiled" not in available:
        print("compiled kernel missing; timing the fallback only")

    cases = [
        ("small  (16 sents x 12 pieces, d=64)", 16, 12, 64),
        ("medium (128 sents x 12 pieces, d=64)", 128, 12, 64),
        ("large  (512 sents x 16 pieces, d=128)", 512, 16, 128),
    ]
    print(f"{'case':40s} {'python':>12s} {'compiled':>12s} {'speedup':>9s}")
    for label, n_sent, ppw, dim in cases:
        problem = make_problem(n_sent, ppw, dim, seed=1)
        t_py = run_once("python", *problem, args.repeats)
        row = f"{label:40s} {t_py * 1e3:>10.3f}ms"
        if "compiled" in available:
            t_cy = run_once("compiled", *problem, args.repeats)
            row += f" {t_cy * 1e3:>10.3f}ms {t_py / t_cy:>8.2f}x"
        print(row)
    kernels.use_kernel("auto")


if __name__ == "__main__":
    main()
