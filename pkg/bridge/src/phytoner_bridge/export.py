"""Export per-wordpiece hidden states from a pre-trained encoder.

phytoner consumes token representations from embedding files and treats
whatever tokenizer produced them as the authority on word/piece
alignment.  This module is that producer for real encoders: it runs a
Hugging Face checkpoint over a labelled corpus and writes two artifacts
side by side --- the ``PWEMB001`` embedding file and the pre-tokenized
corpus recording exactly which pieces each matrix row belongs to.

Alignment comes from the encoder's own fast tokenizer (word ids over
pieces).  Sentences are truncated at word boundaries under a piece
budget, special begin/end positions never reach the output, and
inference runs without gradients on a model in eval mode, so
re-exporting produces byte-identical files.
"""

from __future__ import annotations

import contextlib
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from phytoner.corpus import Corpus, Sentence, load_corpus
from phytoner.embeddings import write_embeddings
from phytoner.tokenization import write_pretokenized

DEFAULT_MAX_PIECES = 128
BATCH_SENTENCES = 32


class BridgeError(Exception):
    """Base class for export failures; the CLI maps these to exit code 1."""


class AlignmentError(BridgeError):
    """The encoder's tokenization cannot be aligned with the corpus."""


class EncoderError(BridgeError):
    """The encoder checkpoint cannot be loaded, or a sentence cannot fit it."""


@dataclass(frozen=True)
class ExportJob:
    """One export run: corpus in, embedding file plus pre-tokenized corpus out."""

    corpus_path: str | Path
    encoder_name: str
    output_path: str | Path
    layer: int | str = "last"
    max_pieces: int = DEFAULT_MAX_PIECES


@dataclass(frozen=True)
class ExportReport:
    """What an export wrote and how much of the corpus it kept."""

    output_path: Path
    pretokenized_path: Path
    dim: int
    n_sentences: int
    truncated_sentences: int


def pretokenized_path(output_path) -> Path:
    """Where the pre-tokenized corpus lands for a given embedding path."""
    out = Path(output_path)
    return out.with_name(out.stem + ".pretok.tsv")


def _load_encoder(name: str):
    # torch/transformers are imported late so --help and argument errors do
    # not pay their startup cost.
    from transformers import AutoModel, AutoTokenizer

    try:
        tokenizer = AutoTokenizer.from_pretrained(name)
        model = AutoModel.from_pretrained(name)
    except Exception as exc:  # the loaders raise a wide mix of types
        raise EncoderError(f"cannot load encoder {name!r}: {exc}") from exc
    if not getattr(tokenizer, "is_fast", False):
        raise EncoderError(
            f"encoder {name!r} provides no fast tokenizer; word alignment needs one"
        )
    model.eval()
    return tokenizer, model


def _resolve_layer(layer: int | str, n_layers: int) -> int:
    """Map the job's layer onto a hidden-states index (0 = embedding output)."""
    if layer == "last":
        return n_layers
    if isinstance(layer, bool) or not isinstance(layer, int):
        raise BridgeError(f"layer must be 'last' or an integer, got {layer!r}")
    if not 0 <= layer <= n_layers:
        raise BridgeError(f"layer {layer} out of range; encoder exposes layers 0..{n_layers}")
    return layer


def _pieces_per_word(tokenizer, sentence: Sentence) -> list[list[str]]:
    """One piece list per word, taken from the encoder's own tokenizer."""
    enc = tokenizer(
        [list(sentence.words)], is_split_into_words=True, add_special_tokens=False
    )
    per_word: list[list[str]] = [[] for _ in sentence.words]
    for piece, w in zip(enc.tokens(0), enc.word_ids(0)):
        if w is None:
            raise AlignmentError(f"sentence {sentence.id!r}: piece {piece!r} belongs to no word")
        per_word[w].append(piece)
    for w, pieces in enumerate(per_word):
        if not pieces:
            raise AlignmentError(
                f"sentence {sentence.id!r}: word {w} ({sentence.words[w]!r}) produced no pieces"
            )
        for piece in pieces:
            # pieces are stored space-separated in the pre-tokenized corpus
            if not piece or any(ch.isspace() for ch in piece):
                raise AlignmentError(
                    f"sentence {sentence.id!r}: piece {piece!r} cannot be stored "
                    "in the pre-tokenized corpus"
                )
    return per_word


def _kept_words(sentence: Sentence, per_word: list[list[str]], max_pieces: int) -> int:
    """Longest whole-word prefix whose pieces fit the budget."""
    kept = total = 0
    for pieces in per_word:
        if total + len(pieces) > max_pieces:
            break
        total += len(pieces)
        kept += 1
    if kept == 0:
        raise AlignmentError(
            f"sentence {sentence.id!r}: first word needs {len(per_word[0])} pieces, "
            f"budget is {max_pieces}"
        )
    return kept


def _encode_batch(tokenizer, model, batch, pieces_by_id, layer_index) -> dict[str, np.ndarray]:
    """Forward one batch and pull out the non-special rows, sentence by sentence."""
    import torch

    enc = tokenizer(
        [list(s.words) for s in batch],
        is_split_into_words=True,
        padding=True,
        return_tensors="pt",
    )
    with torch.no_grad():
        hidden = model(**enc, output_hidden_states=True).hidden_states[layer_index]
    out: dict[str, np.ndarray] = {}
    for i, sentence in enumerate(batch):
        expected = [p for word in pieces_by_id[sentence.id] for p in word]
        tokens = enc.tokens(i)
        positions = [pos for pos, w in enumerate(enc.word_ids(i)) if w is not None]
        if [tokens[pos] for pos in positions] != expected:
            raise AlignmentError(
                f"sentence {sentence.id!r}: tokenization changed between the "
                "alignment and inference passes"
            )
        out[sentence.id] = np.ascontiguousarray(hidden[i, positions].numpy(), dtype=np.float32)
    return out


def _atomic_write(path: Path, data: bytes) -> None:
    """Write via a sibling temp file + rename so readers never see partial output."""
    fd, tmp = tempfile.mkstemp(dir=str(path.parent) or ".", prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(OSError):
            os.unlink(tmp)
        raise


def export_embeddings(job: ExportJob) -> ExportReport:
    """Run the encoder over the corpus and write both artifacts atomically.

    Nothing is written until every sentence has been embedded, so a failure
    part-way through leaves no output behind.
    """
    if job.max_pieces < 1:
        raise BridgeError("max_pieces must be >= 1")
    corpus = load_corpus(job.corpus_path)
    tokenizer, model = _load_encoder(job.encoder_name)
    layer_index = _resolve_layer(job.layer, int(model.config.num_hidden_layers))
    window = getattr(model.config, "max_position_embeddings", None)
    specials = tokenizer.num_special_tokens_to_add()

    kept_sentences: list[Sentence] = []
    pieces_by_id: dict[str, tuple[tuple[str, ...], ...]] = {}
    truncated = 0
    for sentence in corpus:
        per_word = _pieces_per_word(tokenizer, sentence)
        kept = _kept_words(sentence, per_word, job.max_pieces)
        n_pieces = sum(len(pieces) for pieces in per_word[:kept])
        if window is not None and n_pieces + specials > window:
            raise EncoderError(
                f"sentence {sentence.id!r}: {n_pieces} pieces plus {specials} special "
                f"tokens exceed the encoder's {window}-position window; lower max_pieces"
            )
        if kept < len(sentence.words):
            truncated += 1
        kept_sentences.append(
            Sentence(sentence.id, sentence.words[:kept], sentence.labels[:kept])
        )
        pieces_by_id[sentence.id] = tuple(tuple(pieces) for pieces in per_word[:kept])

    entries: dict[str, np.ndarray] = {}
    for start in range(0, len(kept_sentences), BATCH_SENTENCES):
        entries.update(
            _encode_batch(
                tokenizer,
                model,
                kept_sentences[start : start + BATCH_SENTENCES],
                pieces_by_id,
                layer_index,
            )
        )

    dim = int(model.config.hidden_size)
    out_path = Path(job.output_path)
    pre_path = pretokenized_path(out_path)
    payload = write_embeddings(entries, dim=dim)
    pretok = write_pretokenized(
        Corpus(tuple(kept_sentences), source=str(job.corpus_path)), pieces_by_id
    )
    _atomic_write(out_path, payload)
    _atomic_write(pre_path, pretok.encode("utf-8"))
    return ExportReport(
        output_path=out_path,
        pretokenized_path=pre_path,
        dim=dim,
        n_sentences=len(kept_sentences),
        truncated_sentences=truncated,
    )
