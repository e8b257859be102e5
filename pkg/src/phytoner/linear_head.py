"""The trainable classifier: a linear layer plus softmax over the five tags.

Embeddings are frozen inputs; only the 5xd weight matrix and bias train,
with Adam over sentence-level batches.  Checkpoints use the ``PWLIN001``
binary layout (u32 dim, then 5*d+5 little-endian float32: W row-major,
then the bias).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import kernels
from .corpus import LABELS
from .embeddings import SentencePieces
from .errors import DataError, FormatError, SizingError

N_CLASSES = len(LABELS)
CHECKPOINT_MAGIC = b"PWLIN001"

PRESETS = {
    # verbatim fine-tuning rate from the reference setup
    "paper": 5e-5,
    # sized for a frozen-encoder linear head
    "head": 1e-2,
}


@dataclass
class ModelParams:
    """Weights (5, d) and bias (5,), float64."""

    weights: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        if self.weights.ndim != 2 or self.weights.shape[0] != N_CLASSES:
            raise ValueError(f"weights must be ({N_CLASSES}, d), got {self.weights.shape}")
        if self.bias.shape != (N_CLASSES,):
            raise ValueError(f"bias must be ({N_CLASSES},), got {self.bias.shape}")
        if not (np.isfinite(self.weights).all() and np.isfinite(self.bias).all()):
            raise DataError("non-finite model parameters")

    @property
    def dim(self) -> int:
        return self.weights.shape[1]

    def copy(self) -> "ModelParams":
        return ModelParams(self.weights.copy(), self.bias.copy())


@dataclass(frozen=True)
class TrainConfig:
    """Optimization settings; the defaults follow the reference recipe."""

    learning_rate: float = PRESETS["paper"]
    epochs: int = 20
    steps_per_epoch: int = 16
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        # zero is legal (a no-op optimizer is a useful control); negative is not
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be >= 0")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.steps_per_epoch < 1:
            raise ValueError("steps_per_epoch must be >= 1")

    @classmethod
    def preset(cls, name: str, **overrides) -> "TrainConfig":
        try:
            lr = PRESETS[name]
        except KeyError:
            raise ValueError(f"unknown preset {name!r}, have {sorted(PRESETS)}") from None
        overrides.setdefault("learning_rate", lr)
        return cls(**overrides)

    @staticmethod
    def batch_size_for(n_train_sentences: int) -> int:
        """Batch size rule: floor(train size / 16), never below 1."""
        return max(1, n_train_sentences // 16)


@dataclass(frozen=True)
class Prediction:
    """Per-piece probabilities (rows on the simplex) and argmax labels."""

    probs: np.ndarray  # (n, 5) float64
    labels: np.ndarray  # (n,) int64, ties broken toward the lowest index


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    train_loss: float


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    ex = np.exp(shifted)
    return ex / ex.sum(axis=1, keepdims=True)


def loss_and_gradient(
    params: ModelParams, x: np.ndarray, y: np.ndarray
) -> tuple[float, np.ndarray, np.ndarray]:
    """Mean cross-entropy over pieces and its exact analytic gradient.

    Returns (loss, dW, db) with gradient shapes matching the parameters.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ValueError("batch must be a non-empty (n, d) matrix")
    if x.shape[0] != y.shape[0]:
        raise ValueError("embeddings and labels differ in length")
    if x.shape[1] != params.dim:
        raise ValueError(f"embedding dim {x.shape[1]} != model dim {params.dim}")
    if not np.isfinite(x).all():
        raise DataError("non-finite embedding values")
    n = x.shape[0]
    logits = x @ params.weights.T + params.bias
    shifted = logits - logits.max(axis=1, keepdims=True)
    ex = np.exp(shifted)
    denom = ex.sum(axis=1)
    loss = float(np.mean(np.log(denom) - shifted[np.arange(n), y]))
    g = ex / denom[:, None]
    g[np.arange(n), y] -= 1.0
    g /= n
    return loss, g.T @ x, g.sum(axis=0)


def predict(params: ModelParams, embeddings: np.ndarray) -> Prediction:
    """Softmax probabilities and argmax labels for a (n, d) matrix."""
    x = np.asarray(embeddings, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != params.dim:
        raise ValueError(f"expected (n, {params.dim}) embeddings, got {x.shape}")
    probs = _softmax(x @ params.weights.T + params.bias)
    return Prediction(probs=probs, labels=np.argmax(probs, axis=1))


def predict_labels(params: ModelParams, embeddings: np.ndarray) -> np.ndarray:
    """Argmax labels only; skips the softmax normalization."""
    x = np.asarray(embeddings, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != params.dim:
        raise ValueError(f"expected (n, {params.dim}) embeddings, got {x.shape}")
    return np.argmax(x @ params.weights.T + params.bias, axis=1)


def train(
    train_data: Sequence[SentencePieces],
    config: TrainConfig,
    eval_hook: Callable[[int, ModelParams], None] | None = None,
) -> tuple[ModelParams, list[EpochStats]]:
    """Train a fresh head over seeded sentence-level batches.

    Each step draws ``batch_size`` sentences (batch size derived from the
    train size); all pieces of a drawn sentence enter the batch.  Sentences
    may recur across steps within an epoch.  ``eval_hook`` runs after every
    epoch with a copy of the current parameters.
    """
    if not train_data:
        raise SizingError("no training sentences")
    dims = {sp.x.shape[1] for sp in train_data}
    if len(dims) != 1:
        raise DataError(f"inconsistent embedding dims {sorted(dims)}")
    d = dims.pop()

    x = np.ascontiguousarray(
        np.concatenate([sp.x for sp in train_data], axis=0), dtype=np.float64
    )
    if x.shape[0] == 0:
        raise SizingError("no trainable pieces")
    if not np.isfinite(x).all():
        raise DataError("non-finite embedding values")
    y = np.concatenate([sp.y for sp in train_data]).astype(np.int64)
    counts = [sp.x.shape[0] for sp in train_data]
    offsets = np.zeros(len(counts) + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])

    n_sentences = len(train_data)
    batch_size = TrainConfig.batch_size_for(n_sentences)
    init_ss, batch_ss = np.random.SeedSequence(config.seed).spawn(2)
    init_rng = np.random.Generator(np.random.PCG64(init_ss))
    batch_rng = np.random.Generator(np.random.PCG64(batch_ss))

    w = init_rng.uniform(-0.02, 0.02, size=(N_CLASSES, d))
    b = init_rng.uniform(-0.02, 0.02, size=N_CLASSES)
    mw = np.zeros_like(w)
    vw = np.zeros_like(w)
    mb = np.zeros_like(b)
    vb = np.zeros_like(b)

    history: list[EpochStats] = []
    t = 0
    for epoch in range(1, config.epochs + 1):
        batches = np.stack(
            [
                batch_rng.choice(n_sentences, size=batch_size, replace=False)
                for _ in range(config.steps_per_epoch)
            ]
        ).astype(np.int64)
        t, mean_loss = kernels.train_epoch(
            w, b, mw, mb, vw, vb, x, y, offsets, batches, t,
            config.learning_rate, config.beta1, config.beta2, config.eps,
        )
        history.append(EpochStats(epoch=epoch, train_loss=mean_loss))
        if eval_hook is not None:
            eval_hook(epoch, ModelParams(w.copy(), b.copy()))
    return ModelParams(w, b), history


def save_params(params: ModelParams, path) -> None:
    payload = np.concatenate([params.weights.ravel(), params.bias]).astype("<f4")
    with open(path, "wb") as f:
        f.write(CHECKPOINT_MAGIC)
        f.write(struct.pack("<I", params.dim))
        f.write(payload.tobytes())


def load_params(path) -> ModelParams:
    with open(path, "rb") as f:
        data = f.read()
    if data[: len(CHECKPOINT_MAGIC)] != CHECKPOINT_MAGIC:
        raise FormatError(f"bad magic, expected {CHECKPOINT_MAGIC!r}")
    (d,) = struct.unpack_from("<I", data, len(CHECKPOINT_MAGIC))
    expected = len(CHECKPOINT_MAGIC) + 4 + (N_CLASSES * d + N_CLASSES) * 4
    if len(data) != expected:
        raise FormatError(f"checkpoint is {len(data)} bytes, expected {expected}")
    values = np.frombuffer(data, dtype="<f4", offset=len(CHECKPOINT_MAGIC) + 4)
    return ModelParams(
        values[: N_CLASSES * d].reshape(N_CLASSES, d).astype(np.float64),
        values[N_CLASSES * d :].astype(np.float64),
    )
