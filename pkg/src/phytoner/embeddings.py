"""Per-wordpiece embedding files and the deterministic synthetic embedder.

File layout (little-endian throughout): the 8-byte magic ``PWEMB001``,
u32 dim, u32 entry count, then per entry a u16 id length, the UTF-8 id,
u32 piece count and piece_count*dim IEEE-754 float32 values, row-major.
Round trips are bit-exact.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DataError, FormatError, IntegrityError, JoinError
from .tokenization import TokenizedSentence

MAGIC = b"PWEMB001"
MIN_SYNTH_DIM = 8


@dataclass
class EmbeddingFile:
    """Decoded embedding file: dim plus one float32 matrix per sentence."""

    dim: int
    entries: dict[str, np.ndarray]


def write_embeddings(entries: Mapping[str, np.ndarray], dim: int | None = None) -> bytes:
    """Encode matrices in mapping order; returns the complete byte string."""
    matrices = []
    for sid, matrix in entries.items():
        m = np.ascontiguousarray(matrix, dtype=np.float32)
        if m.ndim != 2:
            raise DataError(f"entry {sid!r}: expected a 2-d matrix, got shape {m.shape}")
        if not np.isfinite(m).all():
            raise DataError(f"entry {sid!r}: non-finite values")
        if dim is None:
            dim = m.shape[1]
        elif m.shape[1] != dim:
            raise DataError(f"entry {sid!r}: dim {m.shape[1]} != {dim}")
        matrices.append((sid, m))
    if dim is None:
        raise DataError("cannot write an embedding file without a dim")
    out = [MAGIC, struct.pack("<II", dim, len(matrices))]
    for sid, m in matrices:
        sid_bytes = sid.encode("utf-8")
        if len(sid_bytes) > 0xFFFF:
            raise DataError(f"sentence id too long ({len(sid_bytes)} bytes)")
        out.append(struct.pack("<H", len(sid_bytes)))
        out.append(sid_bytes)
        out.append(struct.pack("<I", m.shape[0]))
        out.append(m.astype("<f4", copy=False).tobytes())
    return b"".join(out)


def read_embeddings(data: bytes) -> EmbeddingFile:
    """Decode and validate a PWEMB001 byte string."""
    if data[: len(MAGIC)] != MAGIC:
        raise FormatError(f"bad magic {data[:len(MAGIC)]!r}, expected {MAGIC!r}")
    offset = len(MAGIC)

    def take(fmt: str):
        nonlocal offset
        size = struct.calcsize(fmt)
        if offset + size > len(data):
            raise FormatError("truncated embedding file")
        values = struct.unpack_from(fmt, data, offset)
        offset += size
        return values

    dim, count = take("<II")
    if dim == 0:
        raise FormatError("dim must be positive")
    entries: dict[str, np.ndarray] = {}
    for _ in range(count):
        (id_len,) = take("<H")
        if offset + id_len > len(data):
            raise FormatError("truncated embedding file")
        sid = data[offset : offset + id_len].decode("utf-8")
        offset += id_len
        (n_pieces,) = take("<I")
        n_bytes = n_pieces * dim * 4
        if offset + n_bytes > len(data):
            raise FormatError(f"entry {sid!r}: truncated matrix payload")
        matrix = (
            np.frombuffer(data, dtype="<f4", count=n_pieces * dim, offset=offset)
            .reshape(n_pieces, dim)
            .copy()
        )
        offset += n_bytes
        if not np.isfinite(matrix).all():
            raise FormatError(f"entry {sid!r}: non-finite values")
        if sid in entries:
            raise IntegrityError(f"duplicate sentence id {sid!r} in embedding file")
        entries[sid] = matrix
    if offset != len(data):
        raise FormatError(f"{len(data) - offset} trailing bytes after last entry")
    return EmbeddingFile(dim=dim, entries=entries)


def save_embeddings(entries: Mapping[str, np.ndarray], path, dim: int | None = None) -> None:
    with open(path, "wb") as f:
        f.write(write_embeddings(entries, dim))


def load_embeddings(path) -> EmbeddingFile:
    with open(path, "rb") as f:
        return read_embeddings(f.read())


# --- synthetic embedder -------------------------------------------------

_SPLITMIX_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_SPLITMIX_M1 = np.uint64(0xBF58476D1CE4E5B9)
_SPLITMIX_M2 = np.uint64(0x94D049BB133111EB)


def _piece_noise(seed: int, piece: str, d: int) -> np.ndarray:
    """Uniform [-1, 1) vector keyed by (seed, piece); platform-stable."""
    digest = hashlib.blake2b(f"{seed}|{piece}".encode("utf-8"), digest_size=8).digest()
    state = np.uint64(int.from_bytes(digest, "little"))
    z = state + np.arange(1, d + 1, dtype=np.uint64) * _SPLITMIX_GAMMA
    z = (z ^ (z >> np.uint64(30))) * _SPLITMIX_M1
    z = (z ^ (z >> np.uint64(27))) * _SPLITMIX_M2
    z = z ^ (z >> np.uint64(31))
    return ((z >> np.uint64(11)).astype(np.float64) / float(1 << 53)) * 2.0 - 1.0


def synthetic_embed(
    ts: TokenizedSentence, d: int, seed: int, separability: float
) -> np.ndarray:
    """Deterministic stand-in for an encoder's per-piece representations.

    Each row depends only on (piece string, gold piece label, d, seed,
    separability).  At separability 1 the five labels occupy disjoint
    coordinate blocks with small piece-keyed noise; at 0 the label term
    vanishes and rows are a pure function of the piece string.
    """
    if d < MIN_SYNTH_DIM:
        raise ValueError(f"d must be >= {MIN_SYNTH_DIM}")
    if not 0.0 <= separability <= 1.0:
        raise ValueError("separability must lie in [0, 1]")
    block = d // 8
    noise_amp = 1.0 - 0.9 * separability
    rows = np.empty((ts.n_pieces, d), dtype=np.float64)
    cache: dict[tuple[str, int], np.ndarray] = {}
    for i, (piece, label) in enumerate(zip(ts.pieces, ts.piece_labels)):
        key = (piece, int(label))
        row = cache.get(key)
        if row is None:
            row = noise_amp * _piece_noise(seed, piece, d)
            if separability > 0.0:
                start = int(label) * block
                row[start : start + block] += separability
            cache[key] = row
        rows[i] = row
    return rows.astype(np.float32)


def synthesize_embeddings(
    tokenized: Iterable[TokenizedSentence], d: int, seed: int, separability: float
) -> dict[str, np.ndarray]:
    """Synthetic matrices for a whole tokenized corpus, in input order."""
    return {ts.sentence_id: synthetic_embed(ts, d, seed, separability) for ts in tokenized}


# --- joining ------------------------------------------------------------


@dataclass(frozen=True)
class SentencePieces:
    """One sentence's training view: piece embeddings and gold label indexes."""

    sentence_id: str
    x: np.ndarray  # (n_pieces, dim) float32
    y: np.ndarray  # (n_pieces,) int64 label indexes


def join_embeddings(
    tokenized: Sequence[TokenizedSentence], emb: EmbeddingFile
) -> list[SentencePieces]:
    """Pair each tokenized sentence with its matrix; any mismatch is fatal."""
    joined = []
    for ts in tokenized:
        matrix = emb.entries.get(ts.sentence_id)
        if matrix is None:
            raise JoinError(f"sentence {ts.sentence_id!r} missing from embedding file")
        if matrix.shape[0] != ts.n_pieces:
            raise JoinError(
                f"sentence {ts.sentence_id!r}: {matrix.shape[0]} embedding rows "
                f"for {ts.n_pieces} pieces"
            )
        y = np.fromiter((int(l) for l in ts.piece_labels), dtype=np.int64, count=ts.n_pieces)
        joined.append(SentencePieces(ts.sentence_id, matrix, y))
    return joined
