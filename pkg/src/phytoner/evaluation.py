"""Token- and entity-level scoring for the five-tag scheme.

Token metrics come from a 5x5 confusion matrix (rows = gold) and include
per-tag precision/recall/F1 plus micro, macro, support-weighted, and
O-excluded weighted aggregates.  Entity-class metrics pool each kind's
B and I columns before scoring, so a B-maladie/I-maladie confusion does
not count against the disease class.

Entity metrics decode label sequences into spans and match strictly:
a predicted span scores only when kind, start, and end all agree.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .corpus import LABELS, EntityKind, EntitySpan, Label
from .tokenization import TokenizedSentence, collapse_to_words

N_CLASSES = len(LABELS)

# tag index -> pooled group (0 = outside, 1 = maladie, 2 = ravageur)
_ENTITY_GROUP = np.array([0, 1, 1, 2, 2], dtype=np.int64)
_GROUP_NAMES = {1: "maladie", 2: "ravageur"}


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int

    def to_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "support": self.support,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "ClassMetrics":
        return cls(
            precision=float(d["precision"]),
            recall=float(d["recall"]),
            f1=float(d["f1"]),
            support=int(d["support"]),
        )


def _prf(tp: float, fp: float, fn: float, support: int) -> ClassMetrics:
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return ClassMetrics(precision, recall, f1, support)


@dataclass(frozen=True)
class EvalReport:
    """Everything token_metrics can say about one (gold, predicted) pair."""

    confusion: np.ndarray  # (5, 5) int64, rows = gold
    per_class: dict[str, ClassMetrics]  # keyed by tag string
    entity_class: dict[str, ClassMetrics]  # keyed by kind value, B+I pooled
    accuracy: float
    micro: ClassMetrics
    macro: ClassMetrics
    weighted: ClassMetrics
    o_excluded_weighted: ClassMetrics

    @property
    def weighted_f1(self) -> float:
        return self.weighted.f1

    def to_dict(self) -> dict:
        return {
            "confusion": self.confusion.tolist(),
            "per_class": {k: v.to_dict() for k, v in self.per_class.items()},
            "entity_class": {k: v.to_dict() for k, v in self.entity_class.items()},
            "accuracy": self.accuracy,
            "micro": self.micro.to_dict(),
            "macro": self.macro.to_dict(),
            "weighted": self.weighted.to_dict(),
            "o_excluded_weighted": self.o_excluded_weighted.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "EvalReport":
        return cls(
            confusion=np.asarray(d["confusion"], dtype=np.int64),
            per_class={k: ClassMetrics.from_dict(v) for k, v in d["per_class"].items()},
            entity_class={
                k: ClassMetrics.from_dict(v) for k, v in d["entity_class"].items()
            },
            accuracy=float(d["accuracy"]),
            micro=ClassMetrics.from_dict(d["micro"]),
            macro=ClassMetrics.from_dict(d["macro"]),
            weighted=ClassMetrics.from_dict(d["weighted"]),
            o_excluded_weighted=ClassMetrics.from_dict(d["o_excluded_weighted"]),
        )


def confusion_matrix(gold: Sequence[int], predicted: Sequence[int]) -> np.ndarray:
    """(5, 5) count matrix with gold on rows, predictions on columns."""
    g = np.asarray(gold, dtype=np.int64)
    p = np.asarray(predicted, dtype=np.int64)
    if g.shape != p.shape or g.ndim != 1:
        raise ValueError("gold and predicted must be 1-d and the same length")
    if g.size == 0:
        raise ValueError("cannot score an empty label sequence")
    for name, arr in (("gold", g), ("predicted", p)):
        if arr.min() < 0 or arr.max() >= N_CLASSES:
            raise ValueError(f"{name} labels outside 0..{N_CLASSES - 1}")
    return np.bincount(N_CLASSES * g + p, minlength=N_CLASSES * N_CLASSES).reshape(
        N_CLASSES, N_CLASSES
    )


def _per_class(conf: np.ndarray) -> list[ClassMetrics]:
    out = []
    for i in range(conf.shape[0]):
        tp = float(conf[i, i])
        fp = float(conf[:, i].sum() - conf[i, i])
        fn = float(conf[i, :].sum() - conf[i, i])
        out.append(_prf(tp, fp, fn, int(conf[i, :].sum())))
    return out


def _support_weighted(metrics: Sequence[ClassMetrics]) -> ClassMetrics:
    total = sum(m.support for m in metrics)
    if total == 0:
        return ClassMetrics(0.0, 0.0, 0.0, 0)
    precision = sum(m.precision * m.support for m in metrics) / total
    recall = sum(m.recall * m.support for m in metrics) / total
    f1 = sum(m.f1 * m.support for m in metrics) / total
    return ClassMetrics(precision, recall, f1, total)


def token_metrics(gold: Sequence[int], predicted: Sequence[int]) -> EvalReport:
    """Score one flat pair of label sequences (pieces or words alike)."""
    conf = confusion_matrix(gold, predicted)
    n = int(conf.sum())
    per_class_list = _per_class(conf)
    per_class = {LABELS[i].tag: per_class_list[i] for i in range(N_CLASSES)}

    accuracy = float(np.trace(conf)) / n
    # with exactly one gold and one predicted tag per token, micro-averaged
    # precision, recall, and F1 all collapse to accuracy
    micro = ClassMetrics(accuracy, accuracy, accuracy, n)
    macro = ClassMetrics(
        sum(m.precision for m in per_class_list) / N_CLASSES,
        sum(m.recall for m in per_class_list) / N_CLASSES,
        sum(m.f1 for m in per_class_list) / N_CLASSES,
        n,
    )
    weighted = _support_weighted(per_class_list)
    o_excluded = _support_weighted(per_class_list[1:])

    grouped = np.zeros((3, 3), dtype=np.int64)
    np.add.at(grouped, (_ENTITY_GROUP[:, None], _ENTITY_GROUP[None, :]), conf)
    entity_class = {}
    for g, name in _GROUP_NAMES.items():
        tp = float(grouped[g, g])
        fp = float(grouped[:, g].sum() - grouped[g, g])
        fn = float(grouped[g, :].sum() - grouped[g, g])
        entity_class[name] = _prf(tp, fp, fn, int(grouped[g, :].sum()))

    return EvalReport(
        confusion=conf,
        per_class=per_class,
        entity_class=entity_class,
        accuracy=accuracy,
        micro=micro,
        macro=macro,
        weighted=weighted,
        o_excluded_weighted=o_excluded,
    )


def decode_word_entities(
    labels: Sequence[Label | int], words: Sequence[str] | None = None
) -> list[EntitySpan]:
    """Read coherent entity spans off a word-level label sequence.

    A span opens at B-kind and extends over contiguous I-kind of the same
    kind.  Inside tags that lack a compatible open span (sequence-initial,
    after O, or after the other kind) are ignored rather than promoted, so
    noisy predictions cannot invent a mention without a begin tag.
    """
    spans: list[EntitySpan] = []
    start = None
    kind = None

    def close(end: int):
        surface = " ".join(words[start : end + 1]) if words is not None else ""
        spans.append(EntitySpan(kind=kind, start_word=start, end_word=end, surface=surface))

    for i, raw in enumerate(labels):
        label = Label(raw)
        if label.is_begin:
            if start is not None:
                close(i - 1)
            start, kind = i, label.kind
        elif label.is_inside and start is not None and label.kind == kind:
            continue
        else:
            # O, or an inside tag with no coherent open span
            if start is not None:
                close(i - 1)
            start, kind = None, None
    if start is not None:
        close(len(labels) - 1)
    return spans


def decode_entities(
    tokenized: TokenizedSentence, piece_labels: Sequence[Label | int]
) -> list[EntitySpan]:
    """Collapse piece labels to words, then decode spans."""
    if len(piece_labels) != tokenized.n_pieces:
        raise ValueError(
            f"{len(piece_labels)} labels for {tokenized.n_pieces} pieces "
            f"({tokenized.sentence_id})"
        )
    word_labels = collapse_to_words(
        [Label(v) for v in piece_labels], tokenized.word_of_piece
    )
    return decode_word_entities(word_labels)


@dataclass(frozen=True)
class EntityReport:
    """Strict span matching, per kind and pooled."""

    per_kind: dict[str, ClassMetrics]
    micro: ClassMetrics

    def to_dict(self) -> dict:
        return {
            "per_kind": {k: v.to_dict() for k, v in self.per_kind.items()},
            "micro": self.micro.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "EntityReport":
        return cls(
            per_kind={k: ClassMetrics.from_dict(v) for k, v in d["per_kind"].items()},
            micro=ClassMetrics.from_dict(d["micro"]),
        )


def entity_metrics(
    gold: Sequence[Sequence[EntitySpan]], predicted: Sequence[Sequence[EntitySpan]]
) -> EntityReport:
    """Score parallel per-sentence span lists under exact-boundary matching."""
    if len(gold) != len(predicted):
        raise ValueError("gold and predicted sentence counts differ")
    tp = {k: 0 for k in EntityKind}
    fp = {k: 0 for k in EntityKind}
    fn = {k: 0 for k in EntityKind}
    for g_spans, p_spans in zip(gold, predicted):
        g_keys = {(s.kind, s.start_word, s.end_word) for s in g_spans}
        p_keys = {(s.kind, s.start_word, s.end_word) for s in p_spans}
        for kind, start, end in p_keys:
            if (kind, start, end) in g_keys:
                tp[kind] += 1
            else:
                fp[kind] += 1
        for kind, start, end in g_keys - p_keys:
            fn[kind] += 1
    per_kind = {
        k.value: _prf(tp[k], fp[k], fn[k], tp[k] + fn[k]) for k in EntityKind
    }
    micro = _prf(
        sum(tp.values()),
        sum(fp.values()),
        sum(fn.values()),
        sum(tp.values()) + sum(fn.values()),
    )
    return EntityReport(per_kind=per_kind, micro=micro)
