"""Run a pre-trained encoder over labelled corpora and export per-piece embeddings.

Each export pairs the embedding file with the pre-tokenized corpus that
records the encoder's own word/piece alignment --- the pair the phytoner
pipeline joins against.
"""

from .export import (
    DEFAULT_MAX_PIECES,
    AlignmentError,
    BridgeError,
    EncoderError,
    ExportJob,
    ExportReport,
    export_embeddings,
    pretokenized_path,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
