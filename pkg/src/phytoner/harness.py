"""Few-shot experiment grid: models x folds x training-set sizes.

Each cell trains a fresh head on a nested subsample of one fold's
training split and scores every epoch on both the fold's validation set
and the held-out unseen-hazard test set.  Records land in a JSONL file;
``summarize`` picks each cell's best epoch by validation weighted F1 and
averages over folds; ``emit_curves`` writes the three learning-curve CSVs
(weighted, pest, disease).

Seeds derive from one master seed.  The subsample seed depends only on
the fold, so every model sees identical few-shot subsets and smaller
sizes are prefixes of larger ones; the training seed covers the full
cell so independent cells get independent initializations and batches.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from hashlib import blake2b
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .corpus import Corpus, EntitySpan
from .embeddings import EmbeddingFile, join_embeddings, load_embeddings, synthesize_embeddings
from .errors import JoinError, SizingError, ToolError
from .evaluation import (
    EntityReport,
    EvalReport,
    decode_entities,
    entity_metrics,
    token_metrics,
)
from .linear_head import PRESETS, ModelParams, TrainConfig, predict_labels, train
from .splitting import SplitResult, sample_few_shot
from .tokenization import TokenizedSentence

logger = logging.getLogger(__name__)

DEFAULT_SIZES = (16, 32, 64, 128, 256, 512)


def derive_seed(master_seed: int, *parts) -> int:
    """Stable 64-bit seed from a master seed and a role path."""
    h = blake2b(digest_size=8)
    h.update(str(master_seed).encode("utf-8"))
    for part in parts:
        h.update(b"|")
        h.update(str(part).encode("utf-8"))
    return int.from_bytes(h.digest(), "little")


@dataclass(frozen=True)
class ModelSpec:
    """One embedding source: either a stored file or the synthetic embedder."""

    model_id: str
    dim: int = 64
    separability: float = 0.9
    embeddings_path: str | None = None

    def __post_init__(self):
        if not self.model_id:
            raise ValueError("model_id must be non-empty")

    def to_dict(self) -> dict:
        d = {"model_id": self.model_id}
        if self.embeddings_path is not None:
            d["embeddings_path"] = self.embeddings_path
        else:
            d.update(dim=self.dim, separability=self.separability)
        return d

    @classmethod
    def from_dict(cls, obj: Mapping) -> "ModelSpec":
        return cls(
            model_id=obj["model_id"],
            dim=int(obj.get("dim", 64)),
            separability=float(obj.get("separability", 0.9)),
            embeddings_path=obj.get("embeddings_path"),
        )


@dataclass(frozen=True)
class GridSpec:
    models: tuple[ModelSpec, ...]
    sizes: tuple[int, ...] = DEFAULT_SIZES
    epochs: int = 20
    learning_rate: float = PRESETS["head"]
    master_seed: int = 0

    def __post_init__(self):
        if not self.models:
            raise ValueError("grid needs at least one model")
        if not self.sizes or any(s < 1 for s in self.sizes):
            raise ValueError("sizes must be positive")
        if any(a >= b for a, b in zip(self.sizes, self.sizes[1:])):
            raise ValueError("sizes must be sorted strictly ascending")
        if len({m.model_id for m in self.models}) != len(self.models):
            raise ValueError("duplicate model ids")


@dataclass(frozen=True)
class RunRecord:
    """One epoch of one cell, scored on one split."""

    model_id: str
    fold: int
    size: int
    epoch: int
    split: str  # "validation" or "test"
    train_loss: float
    tokens: EvalReport
    entities: EntityReport

    def to_dict(self) -> dict:
        return {
            "kind": "record",
            "model_id": self.model_id,
            "fold": self.fold,
            "size": self.size,
            "epoch": self.epoch,
            "split": self.split,
            "train_loss": self.train_loss,
            "tokens": self.tokens.to_dict(),
            "entities": self.entities.to_dict(),
        }

    @classmethod
    def from_dict(cls, obj: Mapping) -> "RunRecord":
        return cls(
            model_id=obj["model_id"],
            fold=int(obj["fold"]),
            size=int(obj["size"]),
            epoch=int(obj["epoch"]),
            split=obj["split"],
            train_loss=float(obj["train_loss"]),
            tokens=EvalReport.from_dict(obj["tokens"]),
            entities=EntityReport.from_dict(obj["entities"]),
        )


@dataclass(frozen=True)
class CellFailure:
    model_id: str
    fold: int
    size: int
    error: str

    def to_dict(self) -> dict:
        return {
            "kind": "failure",
            "model_id": self.model_id,
            "fold": self.fold,
            "size": self.size,
            "error": self.error,
        }

    @classmethod
    def from_dict(cls, obj: Mapping) -> "CellFailure":
        return cls(
            model_id=obj["model_id"],
            fold=int(obj["fold"]),
            size=int(obj["size"]),
            error=obj["error"],
        )


@dataclass(frozen=True)
class GridResult:
    records: tuple[RunRecord, ...]
    failures: tuple[CellFailure, ...]


@dataclass
class _EvalPack:
    """Precomputed per-(model, corpus) evaluation inputs."""

    ts_list: list[TokenizedSentence]
    x: np.ndarray  # (n, d) float64, all sentences concatenated
    gold: np.ndarray  # (n,) int64
    offsets: np.ndarray  # (len+1,) int64 sentence boundaries in x
    gold_spans: list[list[EntitySpan]]


def _ordered_tokenized(
    corpus: Corpus, tokenized: Mapping[str, TokenizedSentence]
) -> list[TokenizedSentence]:
    missing = [s.id for s in corpus if s.id not in tokenized]
    if missing:
        raise JoinError(f"{len(missing)} sentences lack tokenization, first {missing[0]!r}")
    return [tokenized[s.id] for s in corpus]


def _make_pack(
    corpus: Corpus, tokenized: Mapping[str, TokenizedSentence], emb: EmbeddingFile
) -> _EvalPack:
    ts_list = _ordered_tokenized(corpus, tokenized)
    joined = join_embeddings(ts_list, emb)
    x = np.concatenate([sp.x for sp in joined]).astype(np.float64)
    gold = np.concatenate([sp.y for sp in joined])
    offsets = np.zeros(len(joined) + 1, dtype=np.int64)
    np.cumsum([sp.x.shape[0] for sp in joined], out=offsets[1:])
    gold_spans = [decode_entities(ts, ts.piece_labels) for ts in ts_list]
    return _EvalPack(ts_list, x, gold, offsets, gold_spans)


def _score(params: ModelParams, pack: _EvalPack) -> tuple[EvalReport, EntityReport]:
    labels = predict_labels(params, pack.x)
    tokens = token_metrics(pack.gold, labels)
    predicted_spans = [
        decode_entities(ts, labels[pack.offsets[i] : pack.offsets[i + 1]])
        for i, ts in enumerate(pack.ts_list)
    ]
    return tokens, entity_metrics(pack.gold_spans, predicted_spans)


def _model_embeddings(
    model: ModelSpec,
    split: SplitResult,
    tokenized: Mapping[str, TokenizedSentence],
    master_seed: int,
) -> EmbeddingFile:
    if model.embeddings_path is not None:
        return load_embeddings(model.embeddings_path)
    needed: dict[str, TokenizedSentence] = {}
    for corpus in [split.test, *(f.train for f in split.folds), *(f.validation for f in split.folds)]:
        for ts in _ordered_tokenized(corpus, tokenized):
            needed.setdefault(ts.sentence_id, ts)
    seed = derive_seed(master_seed, "embed", model.model_id)
    entries = synthesize_embeddings(
        (needed[k] for k in sorted(needed)), model.dim, seed, model.separability
    )
    return EmbeddingFile(dim=model.dim, entries=entries)


def run_grid(
    split: SplitResult,
    tokenized: Mapping[str, TokenizedSentence],
    spec: GridSpec,
) -> GridResult:
    """Run every cell; a failing cell logs and records the error, the rest run on."""
    smallest_train = min(len(f.train) for f in split.folds)
    if max(spec.sizes) > smallest_train:
        raise SizingError(
            f"largest size {max(spec.sizes)} exceeds fold train size {smallest_train}"
        )
    records: list[RunRecord] = []
    failures: list[CellFailure] = []
    for model in spec.models:
        emb = _model_embeddings(model, split, tokenized, spec.master_seed)
        test_pack: _EvalPack | None = None
        for fold_idx, fold in enumerate(split.folds):
            val_pack: _EvalPack | None = None
            sample_seed = derive_seed(spec.master_seed, "sample", fold_idx)
            for size in spec.sizes:
                try:
                    # built lazily so a bad join aborts the cell, not the grid
                    if test_pack is None:
                        test_pack = _make_pack(split.test, tokenized, emb)
                    if val_pack is None:
                        val_pack = _make_pack(fold.validation, tokenized, emb)
                    few = sample_few_shot(fold.train, size, sample_seed)
                    train_data = join_embeddings(_ordered_tokenized(few, tokenized), emb)
                    config = TrainConfig(
                        learning_rate=spec.learning_rate,
                        epochs=spec.epochs,
                        seed=derive_seed(
                            spec.master_seed, "train", model.model_id, fold_idx, size
                        ),
                    )
                    scored: list[tuple[int, tuple, tuple]] = []

                    def eval_hook(
                        epoch: int,
                        params: ModelParams,
                        _scored=scored,
                        _val=val_pack,
                        _test=test_pack,
                    ) -> None:
                        _scored.append(
                            (epoch, _score(params, _val), _score(params, _test))
                        )

                    _, history = train(train_data, config, eval_hook=eval_hook)
                    loss_by_epoch = {h.epoch: h.train_loss for h in history}
                    for epoch, val_scored, test_scored in scored:
                        for split_name, (tokens, entities) in (
                            ("validation", val_scored),
                            ("test", test_scored),
                        ):
                            records.append(
                                RunRecord(
                                    model_id=model.model_id,
                                    fold=fold_idx,
                                    size=size,
                                    epoch=epoch,
                                    split=split_name,
                                    train_loss=loss_by_epoch[epoch],
                                    tokens=tokens,
                                    entities=entities,
                                )
                            )
                except (ToolError, ValueError, OSError) as exc:
                    message = f"{type(exc).__name__}: {exc}"
                    logger.warning(
                        "cell failed model=%s fold=%d size=%d: %s",
                        model.model_id,
                        fold_idx,
                        size,
                        message,
                    )
                    failures.append(
                        CellFailure(model.model_id, fold_idx, size, message)
                    )
    # canonical key order, so output never depends on execution order
    records.sort(key=lambda r: (r.model_id, r.fold, r.size, r.epoch, r.split))
    failures.sort(key=lambda f: (f.model_id, f.fold, f.size))
    return GridResult(records=tuple(records), failures=tuple(failures))


@dataclass(frozen=True)
class SummaryRow:
    """Fold-averaged best-epoch scores for one (model, size, split)."""

    model_id: str
    size: int
    split: str
    n_folds: int
    weighted_mean: float
    weighted_std: float
    pest_mean: float
    pest_std: float
    disease_mean: float
    disease_std: float


@dataclass(frozen=True)
class ResultsTable:
    rows: tuple[SummaryRow, ...]


def summarize(
    records: Iterable[RunRecord], epoch_window: int | None = None
) -> ResultsTable:
    """Average each cell's best epoch over folds.

    The best epoch maximizes validation weighted F1 (earliest epoch wins
    ties); ``epoch_window`` restricts the search to the first N epochs,
    which makes reruns with longer training comparable to shorter ones.
    Standard deviations are population (ddof=0) over folds.
    """
    by_cell: dict[tuple[str, int, int], dict[int, dict[str, RunRecord]]] = {}
    for record in records:
        cell = by_cell.setdefault((record.model_id, record.size, record.fold), {})
        cell.setdefault(record.epoch, {})[record.split] = record

    triples: dict[tuple[str, int, str], list[tuple[float, float, float]]] = {}
    for (model_id, size, fold), epochs in sorted(by_cell.items()):
        candidates = [
            e
            for e in sorted(epochs)
            if "validation" in epochs[e]
            and (epoch_window is None or e <= epoch_window)
        ]
        if not candidates:
            logger.warning(
                "no scoreable epochs for model=%s size=%d fold=%d", model_id, size, fold
            )
            continue
        best = max(candidates, key=lambda e: (epochs[e]["validation"].tokens.weighted.f1, -e))
        for split, record in epochs[best].items():
            triples.setdefault((model_id, size, split), []).append(
                (
                    record.tokens.weighted.f1,
                    record.tokens.entity_class["ravageur"].f1,
                    record.tokens.entity_class["maladie"].f1,
                )
            )

    rows = []
    for (model_id, size, split), values in sorted(triples.items()):
        arr = np.asarray(values, dtype=np.float64)
        means = arr.mean(axis=0)
        stds = arr.std(axis=0, ddof=0)
        rows.append(
            SummaryRow(
                model_id=model_id,
                size=size,
                split=split,
                n_folds=arr.shape[0],
                weighted_mean=float(means[0]),
                weighted_std=float(stds[0]),
                pest_mean=float(means[1]),
                pest_std=float(stds[1]),
                disease_mean=float(means[2]),
                disease_std=float(stds[2]),
            )
        )
    return ResultsTable(rows=tuple(rows))


_CURVE_FIELDS = {
    "weighted_f1": ("weighted_mean", "weighted_std"),
    "pest_f1": ("pest_mean", "pest_std"),
    "disease_f1": ("disease_mean", "disease_std"),
}


def curve_csv(table: ResultsTable, metric: str) -> str:
    """Render one learning-curve CSV (columns model_id,size,split,mean,std)."""
    try:
        mean_field, std_field = _CURVE_FIELDS[metric]
    except KeyError:
        raise ValueError(f"unknown curve metric {metric!r}, have {sorted(_CURVE_FIELDS)}") from None
    lines = ["model_id,size,split,mean,std"]
    for row in sorted(table.rows, key=lambda r: (r.model_id, r.size, r.split)):
        lines.append(
            f"{row.model_id},{row.size},{row.split},"
            f"{getattr(row, mean_field):.6f},{getattr(row, std_field):.6f}"
        )
    return "\n".join(lines) + "\n"


def emit_curves(table: ResultsTable, out_dir) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {}
    for metric in _CURVE_FIELDS:
        path = out / f"{metric}.csv"
        path.write_text(curve_csv(table, metric), encoding="utf-8")
        paths[metric] = path
    return paths


def write_records(result: GridResult, path) -> None:
    """One sorted-key JSON object per line; reruns are byte-identical."""
    with open(path, "w", encoding="utf-8") as f:
        for record in result.records:
            f.write(json.dumps(record.to_dict(), sort_keys=True) + "\n")
        for failure in result.failures:
            f.write(json.dumps(failure.to_dict(), sort_keys=True) + "\n")


def read_records(path) -> GridResult:
    records, failures = [], []
    with open(path, encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            obj = json.loads(line)
            kind = obj.get("kind")
            if kind == "record":
                records.append(RunRecord.from_dict(obj))
            elif kind == "failure":
                failures.append(CellFailure.from_dict(obj))
            else:
                raise ValueError(f"line {line_no}: unknown record kind {kind!r}")
    return GridResult(records=tuple(records), failures=tuple(failures))
