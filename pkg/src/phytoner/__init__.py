"""Few-shot NER toolkit for plant-health hazard mentions in French tweets.

The pipeline: TSV/JSONL corpora with IOB2 labels over two hazard kinds
(diseases and pests), gazetteer matching and weak labelling, an
unseen-hazard test split with 5-fold cross-validation, wordpiece
tokenization with label projection, per-piece embeddings (stored or
synthetic), a linear softmax head trained with Adam, token- and
entity-level evaluation, and a grid harness producing learning curves.
"""

from .corpus import (
    Corpus,
    CorpusStats,
    EntityKind,
    EntitySpan,
    Label,
    LABELS,
    Sentence,
    corpus_stats,
    load_corpus,
    read_corpus,
    read_tweets_jsonl,
    validate_iob2,
    write_corpus,
)
from .errors import (
    DataError,
    FormatError,
    IntegrityError,
    JoinError,
    OverlongWordError,
    ParseError,
    SizingError,
    ToolError,
    ValidationError,
)
from .evaluation import (
    EntityReport,
    EvalReport,
    decode_entities,
    decode_word_entities,
    entity_metrics,
    token_metrics,
)
from .gazetteer import (
    HazardLexicon,
    TermMatch,
    baseline_tag,
    load_lexicon,
    load_lexicon_files,
    match_terms,
    normalize_term,
    sample_per_hazard,
)
from .linear_head import (
    ModelParams,
    Prediction,
    TrainConfig,
    load_params,
    predict,
    save_params,
    train,
)
from .splitting import (
    DEFAULT_HOLDOUT_TERMS,
    Fold,
    SplitResult,
    SplitSpec,
    build_unseen_test,
    load_split,
    make_split,
    sample_few_shot,
    write_split,
)
from .tokenization import (
    TokenizedSentence,
    Vocab,
    collapse_to_words,
    load_vocab,
    project_labels,
    tokenize_corpus,
    tokenize_sentence,
    wordpiece_tokenize,
)
from .embeddings import (
    EmbeddingFile,
    SentencePieces,
    join_embeddings,
    load_embeddings,
    save_embeddings,
    synthesize_embeddings,
)
from .harness import (
    GridResult,
    GridSpec,
    ModelSpec,
    ResultsTable,
    RunRecord,
    emit_curves,
    read_records,
    run_grid,
    summarize,
    write_records,
)
from .kernels import active_kernel, available_kernels, use_kernel

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
