"""Domain model for labelled tweets: tags, sentences, corpora and file IO.

A corpus is a sequence of whitespace-tokenized tweets whose words carry one
of five IOB2 tags (disease/pest entities, French annotation labels).  The
on-disk format is a plain TSV: one header line with the tweet id, one
``word<TAB>tag`` line per word, one blank line after each sentence.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from typing import Iterable, Iterator, NamedTuple

from .errors import IntegrityError, ParseError, ValidationError


class EntityKind(enum.Enum):
    """The two annotated hazard categories."""

    MALADIE = "maladie"
    RAVAGEUR = "ravageur"

    @property
    def begin_label(self) -> "Label":
        return _BEGIN_OF_KIND[self]

    @property
    def inside_label(self) -> "Label":
        return _INSIDE_OF_KIND[self]


class Label(enum.IntEnum):
    """The five token tags in their canonical index order (0..4).

    The integer value doubles as the row/column index of every matrix
    keyed by label (confusion matrices, classifier weights), so the order
    must never change.
    """

    O = 0
    B_MALADIE = 1
    I_MALADIE = 2
    B_RAVAGEUR = 3
    I_RAVAGEUR = 4

    @property
    def tag(self) -> str:
        """Surface form used in corpus files, e.g. ``B-maladie``."""
        return _TAGS[self]

    @property
    def kind(self) -> EntityKind | None:
        """Entity kind for B-/I- tags, None for O."""
        return _KINDS[self]

    @property
    def is_begin(self) -> bool:
        return self in (Label.B_MALADIE, Label.B_RAVAGEUR)

    @property
    def is_inside(self) -> bool:
        return self in (Label.I_MALADIE, Label.I_RAVAGEUR)

    @classmethod
    def from_tag(cls, tag: str) -> "Label":
        try:
            return _TAG_TO_LABEL[tag]
        except KeyError:
            raise ValueError(f"unknown label {tag!r}") from None


_TAGS = {
    Label.O: "O",
    Label.B_MALADIE: "B-maladie",
    Label.I_MALADIE: "I-maladie",
    Label.B_RAVAGEUR: "B-ravageur",
    Label.I_RAVAGEUR: "I-ravageur",
}
_TAG_TO_LABEL = {tag: label for label, tag in _TAGS.items()}
_KINDS = {
    Label.O: None,
    Label.B_MALADIE: EntityKind.MALADIE,
    Label.I_MALADIE: EntityKind.MALADIE,
    Label.B_RAVAGEUR: EntityKind.RAVAGEUR,
    Label.I_RAVAGEUR: EntityKind.RAVAGEUR,
}
_BEGIN_OF_KIND = {EntityKind.MALADIE: Label.B_MALADIE, EntityKind.RAVAGEUR: Label.B_RAVAGEUR}
_INSIDE_OF_KIND = {EntityKind.MALADIE: Label.I_MALADIE, EntityKind.RAVAGEUR: Label.I_RAVAGEUR}

LABELS: tuple[Label, ...] = tuple(Label)


class Violation(NamedTuple):
    """One IOB2 scheme violation at a 0-based position."""

    position: int
    reason: str


def validate_iob2(labels: Iterable[Label]) -> list[Violation]:
    """Check that every I-tag continues a B-/I-tag of the same kind.

    Returns the (possibly empty) list of violations; never raises.
    """
    violations = []
    prev: Label = Label.O
    for i, label in enumerate(labels):
        if label.is_inside:
            if prev is Label.O:
                violations.append(Violation(i, f"{label.tag} without a preceding entity tag"))
            elif prev.kind is not label.kind:
                violations.append(
                    Violation(i, f"{label.tag} continues a {prev.kind.value} entity")
                )
        prev = label
    return violations


@dataclass(frozen=True)
class Sentence:
    """One tweet, tokenized into words with word-level tags."""

    id: str
    words: tuple[str, ...]
    labels: tuple[Label, ...]
    raw_text: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "words", tuple(self.words))
        object.__setattr__(self, "labels", tuple(self.labels))
        if not self.id:
            raise ValueError("sentence id must be non-empty")
        if len(self.words) != len(self.labels):
            raise ValueError(
                f"sentence {self.id!r}: {len(self.words)} words vs {len(self.labels)} labels"
            )
        if not self.words:
            raise ValueError(f"sentence {self.id!r} has no words")
        if any(not w for w in self.words):
            raise ValueError(f"sentence {self.id!r} contains an empty word")

    def __len__(self) -> int:
        return len(self.words)


@dataclass(frozen=True)
class EntitySpan:
    """An inclusive word-index span covering one entity mention."""

    kind: EntityKind
    start_word: int
    end_word: int
    surface: str

    def __post_init__(self):
        if not 0 <= self.start_word <= self.end_word:
            raise ValueError(f"bad span bounds ({self.start_word}, {self.end_word})")


@dataclass(frozen=True)
class Corpus:
    """An ordered collection of sentences with unique ids."""

    sentences: tuple[Sentence, ...]
    source: str = ""

    def __post_init__(self):
        object.__setattr__(self, "sentences", tuple(self.sentences))
        seen = set()
        for s in self.sentences:
            if s.id in seen:
                raise IntegrityError(f"duplicate sentence id {s.id!r}")
            seen.add(s.id)

    def __len__(self) -> int:
        return len(self.sentences)

    def __iter__(self) -> Iterator[Sentence]:
        return iter(self.sentences)

    def ids(self) -> tuple[str, ...]:
        return tuple(s.id for s in self.sentences)

    def by_id(self) -> dict[str, Sentence]:
        return {s.id: s for s in self.sentences}


@dataclass(frozen=True)
class CorpusStats:
    """Aggregate tag and entity counts for a corpus."""

    label_counts: dict[Label, int]
    entity_counts: dict[EntityKind, int]
    sentence_count: int
    word_count: int

    def to_dict(self) -> dict:
        return {
            "sentence_count": self.sentence_count,
            "word_count": self.word_count,
            "label_counts": {label.tag: self.label_counts[label] for label in LABELS},
            "entity_counts": {kind.value: self.entity_counts[kind] for kind in EntityKind},
        }


def corpus_stats(corpus: Corpus) -> CorpusStats:
    """Count tags, entities (one per B-tag), sentences and words."""
    label_counts = {label: 0 for label in LABELS}
    entity_counts = {kind: 0 for kind in EntityKind}
    word_count = 0
    for sentence in corpus:
        word_count += len(sentence)
        for label in sentence.labels:
            label_counts[label] += 1
            if label.is_begin:
                entity_counts[label.kind] += 1
    return CorpusStats(label_counts, entity_counts, len(corpus), word_count)


def read_corpus(lines: Iterable[str], source: str = "", strict: bool = True) -> Corpus:
    """Parse the sentence-block TSV format.

    ``lines`` is any iterable of text lines (an open file works).  With
    ``strict`` (the default, intended for gold data) every sentence must
    pass IOB2 validation; predictions should be read with ``strict=False``.
    """
    sentences: list[Sentence] = []
    sid: str | None = None
    words: list[str] = []
    labels: list[Label] = []
    header_line = 0

    def flush(line_no: int):
        nonlocal sid, words, labels
        if not words:
            raise ParseError(f"sentence {sid!r} has no word lines", header_line)
        sentence = Sentence(sid, tuple(words), tuple(labels))
        if strict:
            violations = validate_iob2(sentence.labels)
            if violations:
                v = violations[0]
                raise ValidationError(
                    f"sentence {sid!r}: invalid IOB2 at word {v.position}: {v.reason}"
                )
        sentences.append(sentence)
        sid, words, labels = None, [], []

    line_no = 0
    for line_no, raw in enumerate(lines, start=1):
        line = raw.rstrip("\n")
        if sid is None:
            if not line:
                raise ParseError("empty sentence block", line_no)
            if "\t" in line:
                raise ParseError("expected a sentence id header, found a TAB", line_no)
            sid = line
            header_line = line_no
            continue
        if not line:
            flush(line_no)
            continue
        columns = line.split("\t")
        if len(columns) != 2:
            raise ParseError(f"expected 2 tab-separated columns, found {len(columns)}", line_no)
        word, tag = columns
        if not word:
            raise ParseError("empty word", line_no)
        try:
            labels.append(Label.from_tag(tag))
        except ValueError as exc:
            raise ParseError(str(exc), line_no) from None
        words.append(word)
    if sid is not None:
        # final blank line is optional at EOF
        flush(line_no)
    return Corpus(tuple(sentences), source=source)


def write_corpus(corpus: Corpus) -> str:
    """Serialize to the sentence-block TSV format (inverse of read_corpus)."""
    blocks = []
    for sentence in corpus:
        lines = [sentence.id]
        lines.extend(f"{w}\t{l.tag}" for w, l in zip(sentence.words, sentence.labels))
        blocks.append("\n".join(lines) + "\n\n")
    return "".join(blocks)


def load_corpus(path, strict: bool = True) -> Corpus:
    with open(path, encoding="utf-8") as f:
        return read_corpus(f, source=str(path), strict=strict)


def dump_corpus(corpus: Corpus, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(write_corpus(corpus))


def read_tweets_jsonl(lines: Iterable[str], source: str = "") -> Corpus:
    """Ingest raw unlabeled tweets (one ``{"id", "text"}`` object per line).

    Words come from whitespace splitting and every word is tagged O; the
    original string is kept in ``raw_text``.
    """
    sentences = []
    for line_no, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc.msg}", line_no) from None
        if not isinstance(obj, dict) or "id" not in obj or "text" not in obj:
            raise ParseError("expected an object with 'id' and 'text' fields", line_no)
        tweet_id, text = str(obj["id"]), str(obj["text"])
        words = text.split()
        if not words:
            raise ParseError(f"tweet {tweet_id!r} has no words", line_no)
        sentences.append(
            Sentence(tweet_id, tuple(words), (Label.O,) * len(words), raw_text=text)
        )
    return Corpus(tuple(sentences), source=source)
