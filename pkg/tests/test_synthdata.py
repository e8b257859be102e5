import pytest

from phytoner.corpus import validate_iob2
from phytoner.gazetteer import normalize_term, sentence_contains_term
from phytoner.splitting import DEFAULT_HOLDOUT_TERMS
from phytoner.synthdata import (
    HOLDOUT_KIND,
    HOLDOUT_SURFACES,
    SEEN_DISEASES,
    SEEN_PESTS,
    demo_lexicon,
    make_synthetic_corpus,
    make_vocab,
    write_demo,
)
from phytoner.tokenization import tokenize_corpus


def test_holdout_tables_cover_the_default_terms():
    assert set(HOLDOUT_SURFACES) == set(DEFAULT_HOLDOUT_TERMS)
    assert set(HOLDOUT_KIND) == set(DEFAULT_HOLDOUT_TERMS)
    for term, surfaces in HOLDOUT_SURFACES.items():
        assert all(normalize_term(s) == term for s in surfaces)


def test_seen_pools_never_collide_with_holdout():
    seen = {normalize_term(t) for t in SEEN_DISEASES + SEEN_PESTS}
    for term in DEFAULT_HOLDOUT_TERMS:
        for surface in seen:
            assert term not in surface.split()


def test_exact_holdout_count():
    corpus = make_synthetic_corpus(n_sentences=1028, n_holdout=207, seed=0)
    assert len(corpus) == 1028
    carriers = [
        s
        for s in corpus
        if any(sentence_contains_term(s, t) for t in DEFAULT_HOLDOUT_TERMS)
    ]
    assert len(carriers) == 207


def test_every_holdout_term_represented():
    corpus = make_synthetic_corpus(n_sentences=300, n_holdout=60, seed=2)
    for term in DEFAULT_HOLDOUT_TERMS:
        assert any(sentence_contains_term(s, term) for s in corpus), term


def test_labels_always_valid_iob2():
    corpus = make_synthetic_corpus(n_sentences=500, n_holdout=100, seed=3)
    for s in corpus:
        assert validate_iob2(s.labels) == []


def test_corpus_is_seed_deterministic():
    a = make_synthetic_corpus(n_sentences=100, n_holdout=20, seed=5)
    b = make_synthetic_corpus(n_sentences=100, n_holdout=20, seed=5)
    assert a.sentences == b.sentences
    c = make_synthetic_corpus(n_sentences=100, n_holdout=20, seed=6)
    assert a.sentences != c.sentences


def test_ids_unique_and_ordered():
    corpus = make_synthetic_corpus(n_sentences=50, n_holdout=10, seed=0)
    ids = list(corpus.ids())
    assert len(set(ids)) == 50
    assert ids == sorted(ids)


def test_bounds_checked():
    with pytest.raises(ValueError):
        make_synthetic_corpus(n_sentences=10, n_holdout=11, seed=0)
    with pytest.raises(ValueError):
        make_synthetic_corpus(n_sentences=0, n_holdout=0, seed=0)


def test_generated_vocab_covers_corpus_without_unk():
    corpus = make_synthetic_corpus(n_sentences=200, n_holdout=40, seed=1)
    vocab = make_vocab(corpus)
    tokenized = tokenize_corpus(corpus, vocab)
    for ts in tokenized.values():
        assert vocab.unk_piece not in ts.pieces
        assert not ts.truncated
    # some words do split, so the pieces/word ratio is strictly above 1
    total_pieces = sum(ts.n_pieces for ts in tokenized.values())
    total_words = sum(len(s.words) for s in corpus)
    assert total_pieces > total_words


def test_demo_lexicon_matches_pools():
    diseases, pests = demo_lexicon()
    assert {normalize_term(t) for t in SEEN_DISEASES} <= {
        normalize_term(t) for t in diseases
    }
    assert {normalize_term(t) for t in SEEN_PESTS} <= {normalize_term(t) for t in pests}


def test_write_demo_lays_out_files(tmp_path):
    paths = write_demo(tmp_path, n_sentences=40, n_holdout=8, seed=0)
    for key in ("corpus", "vocab", "diseases", "pests"):
        assert paths[key].exists(), key
    from phytoner.corpus import load_corpus
    from phytoner.tokenization import read_vocab

    corpus = load_corpus(paths["corpus"])
    assert len(corpus) == 40
    with open(paths["vocab"], encoding="utf-8") as f:
        vocab = read_vocab(f)
    assert len(vocab.pieces) > 10
