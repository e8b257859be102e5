"""Unseen-hazard test split, 5-fold train/validation folds, few-shot sampling.

The test set takes every tweet containing a held-out hazard term; a fixed-
size pool sampled from the remainder forms the cross-validation folds and
whatever is left over is appended verbatim to every validation set.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path

from .corpus import Corpus, dump_corpus, load_corpus
from .errors import SizingError
from .gazetteer import _contains_term, _normalized_words, normalize_term

# Held-out hazard names (normalized); spelling variants fold together.
DEFAULT_HOLDOUT_TERMS: tuple[str, ...] = (
    "cousin",
    "mosaique",
    "mouche",
    "oidium",
    "pourriture",
    "rouille",
    "taupe",
    "taupin",
    "teigne",
    "tipule",
)

SPLIT_MANIFEST_NAME = "split_manifest.json"


@dataclass(frozen=True)
class SplitSpec:
    """Parameters of the whole split; defaults mirror the reference setup."""

    holdout_terms: tuple[str, ...] = DEFAULT_HOLDOUT_TERMS
    cv_pool_size: int = 640
    n_folds: int = 5
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(
            self, "holdout_terms", tuple(normalize_term(t) for t in self.holdout_terms)
        )
        if not self.holdout_terms or any(not t for t in self.holdout_terms):
            raise ValueError("holdout_terms must be non-empty")
        if self.n_folds < 2:
            raise SizingError("need at least 2 folds")
        if self.cv_pool_size < self.n_folds or self.cv_pool_size % self.n_folds:
            raise SizingError(
                f"cv_pool_size {self.cv_pool_size} not divisible by n_folds {self.n_folds}"
            )


@dataclass(frozen=True)
class Fold:
    train: Corpus
    validation: Corpus


@dataclass(frozen=True)
class SplitResult:
    test: Corpus
    folds: tuple[Fold, ...]
    appendix_ids: tuple[str, ...]

    @property
    def appendix_size(self) -> int:
        return len(self.appendix_ids)


def build_unseen_test(
    corpus: Corpus, holdout_terms: tuple[str, ...] = DEFAULT_HOLDOUT_TERMS
) -> tuple[Corpus, Corpus]:
    """Split off every sentence containing a held-out term as an n-gram."""
    terms = tuple(normalize_term(t) for t in holdout_terms)
    if not terms or any(not t for t in terms):
        raise ValueError("holdout term list must be non-empty")
    test, remainder = [], []
    for sentence in corpus:
        norm = _normalized_words(sentence)
        if any(_contains_term(norm, t) for t in terms):
            test.append(sentence)
        else:
            remainder.append(sentence)
    return (
        Corpus(tuple(test), source=f"{corpus.source}#test"),
        Corpus(tuple(remainder), source=f"{corpus.source}#remainder"),
    )


def build_folds(remainder: Corpus, spec: SplitSpec) -> tuple[tuple[Fold, ...], tuple[str, ...]]:
    """Sample the CV pool, cut it into equal blocks and assemble the folds.

    Fold i validates on block i plus the shared appendix (everything the
    pool sampling left out) and trains on the other blocks.
    """
    if len(remainder) < spec.cv_pool_size:
        raise SizingError(
            f"remainder has {len(remainder)} sentences, pool needs {spec.cv_pool_size}"
        )
    all_ids = sorted(remainder.ids())
    rng = random.Random(spec.seed)
    pool_ids = rng.sample(all_ids, spec.cv_pool_size)
    appendix_ids = tuple(sorted(set(all_ids) - set(pool_ids)))
    by_id = remainder.by_id()
    block_size = spec.cv_pool_size // spec.n_folds
    blocks = [
        pool_ids[i * block_size : (i + 1) * block_size] for i in range(spec.n_folds)
    ]
    appendix = [by_id[sid] for sid in appendix_ids]
    folds = []
    for i in range(spec.n_folds):
        train_ids = [sid for j, block in enumerate(blocks) if j != i for sid in block]
        folds.append(
            Fold(
                train=Corpus(
                    tuple(by_id[sid] for sid in train_ids),
                    source=f"{remainder.source}#fold{i}.train",
                ),
                validation=Corpus(
                    tuple([by_id[sid] for sid in blocks[i]] + appendix),
                    source=f"{remainder.source}#fold{i}.val",
                ),
            )
        )
    return tuple(folds), appendix_ids


def make_split(corpus: Corpus, spec: SplitSpec) -> SplitResult:
    test, remainder = build_unseen_test(corpus, spec.holdout_terms)
    folds, appendix_ids = build_folds(remainder, spec)
    return SplitResult(test=test, folds=folds, appendix_ids=appendix_ids)


def sample_few_shot(train: Corpus, size: int, seed: int) -> Corpus:
    """Uniform subsample of ``size`` sentences, prefix-stable across sizes.

    Under one seed the sample of a smaller size is always a subset of the
    sample of a larger one, which keeps learning curves nested.
    """
    if size < 1 or size > len(train):
        raise SizingError(f"cannot sample {size} of {len(train)} sentences")
    rng = random.Random(seed)
    order = rng.sample(sorted(train.ids()), len(train))
    chosen = set(order[:size])
    return Corpus(
        tuple(s for s in train if s.id in chosen), source=f"{train.source}#few{size}"
    )


def write_split(split: SplitResult, spec: SplitSpec, out_dir) -> Path:
    """Write test/fold TSVs plus a JSON manifest; returns the manifest path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    dump_corpus(split.test, out / "test.tsv")
    fold_files = []
    for i, fold in enumerate(split.folds):
        train_name, val_name = f"fold{i}.train.tsv", f"fold{i}.val.tsv"
        dump_corpus(fold.train, out / train_name)
        dump_corpus(fold.validation, out / val_name)
        fold_files.append({"train": train_name, "validation": val_name})
    manifest = {
        "seed": spec.seed,
        "cv_pool_size": spec.cv_pool_size,
        "n_folds": spec.n_folds,
        "holdout_terms": list(spec.holdout_terms),
        "sizes": {
            "test": len(split.test),
            "appendix": split.appendix_size,
            "fold_train": len(split.folds[0].train),
            "fold_validation": len(split.folds[0].validation),
        },
        "appendix_ids": list(split.appendix_ids),
        "files": {"test": "test.tsv", "folds": fold_files},
    }
    manifest_path = out / SPLIT_MANIFEST_NAME
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return manifest_path


def load_split(manifest_path) -> SplitResult:
    """Reload a written split from its manifest."""
    manifest_path = Path(manifest_path)
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    base = manifest_path.parent
    test = load_corpus(base / manifest["files"]["test"])
    folds = tuple(
        Fold(
            train=load_corpus(base / entry["train"]),
            validation=load_corpus(base / entry["validation"]),
        )
        for entry in manifest["files"]["folds"]
    )
    return SplitResult(test=test, folds=folds, appendix_ids=tuple(manifest["appendix_ids"]))
