"""Reference wordpiece tokenizer and word-label/piece-label projection.

The tokenizer is a deterministic greedy longest-match over an explicit
vocabulary; it exists so the whole pipeline runs without an external
encoder.  Real encoder tokenizations enter through the pre-tokenized
corpus variant, where each word line carries its piece list verbatim.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .corpus import Corpus, Label, Sentence, validate_iob2
from .errors import OverlongWordError, ParseError, ValidationError

WORD_MARKER = "_"
DEFAULT_UNK = "<unk>"
DEFAULT_MAX_PIECES = 128


@dataclass(frozen=True)
class Vocab:
    """Immutable wordpiece inventory.

    Word-initial pieces carry the ``_`` marker; continuation pieces do not.
    The unknown piece is always a member.
    """

    pieces: frozenset[str]
    unk_piece: str = DEFAULT_UNK

    def __post_init__(self):
        object.__setattr__(self, "pieces", frozenset(self.pieces) | {self.unk_piece})

    def __contains__(self, piece: str) -> bool:
        return piece in self.pieces

    def __len__(self) -> int:
        return len(self.pieces)


def read_vocab(lines: Iterable[str]) -> Vocab:
    """Read one piece per line; an optional first line ``#unk=X`` names the
    unknown piece."""
    unk = DEFAULT_UNK
    pieces = set()
    for line_no, raw in enumerate(lines, start=1):
        line = raw.rstrip("\n")
        if line_no == 1 and line.startswith("#unk="):
            unk = line[len("#unk=") :]
            if not unk:
                raise ParseError("empty unk piece declaration", line_no)
            continue
        if not line:
            continue
        pieces.add(line)
    return Vocab(frozenset(pieces), unk_piece=unk)


def write_vocab(vocab: Vocab) -> str:
    lines = [f"#unk={vocab.unk_piece}"]
    lines.extend(sorted(vocab.pieces))
    return "\n".join(lines) + "\n"


def load_vocab(path) -> Vocab:
    with open(path, encoding="utf-8") as f:
        return read_vocab(f)


def wordpiece_tokenize(word: str, vocab: Vocab) -> list[str]:
    """Split one word into pieces by greedy longest match.

    The first piece is looked up with the word-initial marker prefixed.
    Material matching nothing degrades to the unk piece one character at
    a time, so the result is never empty.
    """
    if not word:
        raise ValueError("cannot tokenize an empty word")
    pieces: list[str] = []
    pos = 0
    n = len(word)
    while pos < n:
        prefix = WORD_MARKER if pos == 0 else ""
        match = None
        for end in range(n, pos, -1):
            candidate = prefix + word[pos:end]
            if candidate in vocab:
                match = candidate
                break
        if match is None:
            pieces.append(vocab.unk_piece)
            pos += 1
        else:
            pieces.append(match)
            pos += len(match) - len(prefix)
    return pieces


def detokenize_word(pieces: Sequence[str]) -> str:
    """Concatenate pieces of one word, stripping the word-initial marker."""
    if not pieces:
        return ""
    first = pieces[0]
    if first.startswith(WORD_MARKER):
        first = first[len(WORD_MARKER) :]
    return first + "".join(pieces[1:])


@dataclass(frozen=True)
class TokenizedSentence:
    """A sentence's pieces plus the word alignment and projected labels.

    ``word_of_piece[i]`` is the word index piece ``i`` came from; it is
    non-decreasing and covers the kept word prefix contiguously.  When the
    piece budget forced dropping trailing words, ``truncated`` is set.
    """

    sentence_id: str
    pieces: tuple[str, ...]
    word_of_piece: tuple[int, ...]
    piece_labels: tuple[Label, ...]
    truncated: bool = False

    def __post_init__(self):
        object.__setattr__(self, "pieces", tuple(self.pieces))
        object.__setattr__(self, "word_of_piece", tuple(self.word_of_piece))
        object.__setattr__(self, "piece_labels", tuple(self.piece_labels))
        if not (len(self.pieces) == len(self.word_of_piece) == len(self.piece_labels)):
            raise ValueError(f"sentence {self.sentence_id!r}: misaligned piece arrays")
        if not self.pieces:
            raise ValueError(f"sentence {self.sentence_id!r}: no pieces")
        expected = 0
        for w in self.word_of_piece:
            if w == expected:
                continue
            if w == expected + 1:
                expected = w
            else:
                raise ValueError(
                    f"sentence {self.sentence_id!r}: word_of_piece not contiguous at word {w}"
                )

    @property
    def n_pieces(self) -> int:
        return len(self.pieces)

    @property
    def n_words_kept(self) -> int:
        return self.word_of_piece[-1] + 1


def project_labels(
    word_labels: Sequence[Label], word_of_piece: Sequence[int]
) -> list[Label]:
    """Copy each word's label onto every one of its pieces.

    B-tags replicate onto all pieces of the word, not only the first;
    collapse_to_words undoes this by keeping first pieces.
    """
    n_words = len(word_labels)
    out = []
    for w in word_of_piece:
        if not 0 <= w < n_words:
            raise ValueError(f"alignment references word {w}, have {n_words} labels")
        out.append(word_labels[w])
    return out


def collapse_to_words(
    piece_labels: Sequence[Label], word_of_piece: Sequence[int]
) -> list[Label]:
    """Inverse of project_labels: each word takes its first piece's label."""
    if len(piece_labels) != len(word_of_piece):
        raise ValueError("piece_labels and alignment differ in length")
    out: list[Label] = []
    prev = None
    for label, w in zip(piece_labels, word_of_piece):
        if w != prev:
            out.append(label)
            prev = w
    return out


def _assemble(
    sentence: Sentence, pieces_per_word: Sequence[Sequence[str]], max_pieces: int
) -> TokenizedSentence:
    """Shared truncate-at-word-boundary assembly for both tokenization paths."""
    if max_pieces < 1:
        raise ValueError("max_pieces must be >= 1")
    if len(pieces_per_word) != len(sentence.words):
        raise ValueError(
            f"sentence {sentence.id!r}: {len(pieces_per_word)} piece lists "
            f"for {len(sentence.words)} words"
        )
    pieces: list[str] = []
    alignment: list[int] = []
    kept = 0
    for w, word_pieces in enumerate(pieces_per_word):
        if not word_pieces:
            raise ValueError(f"sentence {sentence.id!r}: word {w} has no pieces")
        if len(pieces) + len(word_pieces) > max_pieces:
            break
        pieces.extend(word_pieces)
        alignment.extend([w] * len(word_pieces))
        kept += 1
    if kept == 0:
        raise OverlongWordError(
            f"sentence {sentence.id!r}: first word needs {len(pieces_per_word[0])} pieces, "
            f"budget is {max_pieces}"
        )
    labels = project_labels(sentence.labels, alignment)
    return TokenizedSentence(
        sentence_id=sentence.id,
        pieces=tuple(pieces),
        word_of_piece=tuple(alignment),
        piece_labels=tuple(labels),
        truncated=kept < len(sentence.words),
    )


def tokenize_sentence(
    sentence: Sentence, vocab: Vocab, max_pieces: int = DEFAULT_MAX_PIECES
) -> TokenizedSentence:
    """Tokenize with the reference tokenizer, truncating at word boundaries."""
    return _assemble(
        sentence, [wordpiece_tokenize(w, vocab) for w in sentence.words], max_pieces
    )


def tokenize_from_pieces(
    sentence: Sentence,
    pieces_per_word: Sequence[Sequence[str]],
    max_pieces: int = DEFAULT_MAX_PIECES,
) -> TokenizedSentence:
    """Build a TokenizedSentence from externally supplied piece lists."""
    return _assemble(sentence, pieces_per_word, max_pieces)


def tokenize_corpus(
    corpus: Corpus, vocab: Vocab, max_pieces: int = DEFAULT_MAX_PIECES
) -> dict[str, TokenizedSentence]:
    return {s.id: tokenize_sentence(s, vocab, max_pieces) for s in corpus}


def read_pretokenized(
    lines: Iterable[str], source: str = "", strict: bool = True
) -> tuple[Corpus, dict[str, tuple[tuple[str, ...], ...]]]:
    """Parse the 3-column TSV variant carrying external tokenizations.

    Returns the corpus plus, per sentence id, one piece tuple per word.
    """
    sentences: list[Sentence] = []
    pieces_by_id: dict[str, tuple[tuple[str, ...], ...]] = {}
    sid: str | None = None
    words: list[str] = []
    labels: list[Label] = []
    word_pieces: list[tuple[str, ...]] = []
    header_line = 0

    def flush():
        nonlocal sid, words, labels, word_pieces
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
        pieces_by_id[sentence.id] = tuple(word_pieces)
        sid, words, labels, word_pieces = None, [], [], []

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
            flush()
            continue
        columns = line.split("\t")
        if len(columns) != 3:
            raise ParseError(f"expected 3 tab-separated columns, found {len(columns)}", line_no)
        word, tag, piece_field = columns
        if not word:
            raise ParseError("empty word", line_no)
        pieces = tuple(piece_field.split(" ")) if piece_field else ()
        if not pieces or any(not p for p in pieces):
            raise ParseError(f"word {word!r} has an empty piece list entry", line_no)
        try:
            labels.append(Label.from_tag(tag))
        except ValueError as exc:
            raise ParseError(str(exc), line_no) from None
        words.append(word)
        word_pieces.append(pieces)
    if sid is not None:
        flush()
    return Corpus(tuple(sentences), source=source), pieces_by_id


def write_pretokenized(
    corpus: Corpus, pieces_by_id: Mapping[str, Sequence[Sequence[str]]]
) -> str:
    """Serialize the 3-column variant (inverse of read_pretokenized)."""
    blocks = []
    for sentence in corpus:
        word_pieces = pieces_by_id[sentence.id]
        if len(word_pieces) != len(sentence.words):
            raise ValueError(f"sentence {sentence.id!r}: piece lists do not cover all words")
        lines = [sentence.id]
        for word, label, pieces in zip(sentence.words, sentence.labels, word_pieces):
            lines.append(f"{word}\t{label.tag}\t{' '.join(pieces)}")
        blocks.append("\n".join(lines) + "\n\n")
    return "".join(blocks)


def tokenized_corpus_from_pretokenized(
    corpus: Corpus,
    pieces_by_id: Mapping[str, Sequence[Sequence[str]]],
    max_pieces: int = DEFAULT_MAX_PIECES,
) -> dict[str, TokenizedSentence]:
    return {
        s.id: tokenize_from_pieces(s, pieces_by_id[s.id], max_pieces) for s in corpus
    }
