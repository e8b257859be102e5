import itertools

import pytest

from phytoner.errors import SizingError
from phytoner.gazetteer import sentence_contains_term
from phytoner.splitting import (
    DEFAULT_HOLDOUT_TERMS,
    SplitSpec,
    build_unseen_test,
    load_split,
    make_split,
    sample_few_shot,
    write_split,
)
from phytoner.synthdata import make_synthetic_corpus


@pytest.fixture(scope="module")
def corpus1028():
    return make_synthetic_corpus(n_sentences=1028, n_holdout=207, seed=0)


@pytest.fixture(scope="module")
def split1028(corpus1028):
    return make_split(corpus1028, SplitSpec(seed=0))


# --- unseen-hazard test set ------------------------------------------------------


def test_reference_sizes(corpus1028, split1028):
    assert len(corpus1028) == 1028
    assert len(split1028.test) == 207
    assert split1028.appendix_size == 181
    for fold in split1028.folds:
        assert len(fold.train) == 512
        assert len(fold.validation) == 309
    assert len(split1028.test) + 640 + split1028.appendix_size == 1028


def test_test_set_is_exactly_the_carriers(corpus1028, split1028):
    carriers = {
        s.id
        for s in corpus1028
        if any(sentence_contains_term(s, t) for t in DEFAULT_HOLDOUT_TERMS)
    }
    assert set(split1028.test.ids()) == carriers


def test_no_holdout_term_outside_test(split1028):
    for fold in split1028.folds:
        for corpus in (fold.train, fold.validation):
            for s in corpus:
                assert not any(
                    sentence_contains_term(s, t) for t in DEFAULT_HOLDOUT_TERMS
                )


def test_holdout_matching_is_word_level_not_substring():
    # "taupin" in a sentence must not drag "taupinière"-style supersets along;
    # matching is on whole normalized words.
    from phytoner.corpus import Corpus, Label, Sentence

    s1 = Sentence("a", ("taupin",), (Label.B_RAVAGEUR,))
    s2 = Sentence("b", ("taupinambour",), (Label.O,))
    test, remainder = build_unseen_test(Corpus((s1, s2), source="x"))
    assert [s.id for s in test] == ["a"]
    assert [s.id for s in remainder] == ["b"]


def test_diacritics_fold_into_holdout():
    from phytoner.corpus import Corpus, Label, Sentence

    s = Sentence("a", ("Oïdium",), (Label.B_MALADIE,))
    test, _ = build_unseen_test(Corpus((s,), source="x"))
    assert len(test) == 1


# --- folds -----------------------------------------------------------------------


def test_fold_partition_properties(split1028):
    folds = split1028.folds
    appendix = set(split1028.appendix_ids)
    val_cores = [set(f.validation.ids()) - appendix for f in folds]
    # the validation cores tile the 640-tweet pool
    assert all(len(core) == 128 for core in val_cores)
    pool = set().union(*val_cores)
    assert len(pool) == 640
    for a, b in itertools.combinations(val_cores, 2):
        assert not a & b
    # each fold trains on the other four blocks
    for fold, core in zip(folds, val_cores):
        assert set(fold.train.ids()) == pool - core
    # hence every pool tweet appears in exactly 4 train sets
    seen = {sid: 0 for sid in pool}
    for fold in folds:
        for sid in fold.train.ids():
            seen[sid] += 1
    assert set(seen.values()) == {4}


def test_pairwise_train_intersections(split1028):
    trains = [set(f.train.ids()) for f in split1028.folds]
    for a, b in itertools.combinations(trains, 2):
        assert len(a & b) == 384


def test_appendix_shared_by_every_validation(split1028):
    appendix = set(split1028.appendix_ids)
    assert len(appendix) == 181
    for fold in split1028.folds:
        assert appendix <= set(fold.validation.ids())


def test_train_and_validation_disjoint(split1028):
    for fold in split1028.folds:
        assert not set(fold.train.ids()) & set(fold.validation.ids())


def test_split_deterministic(corpus1028):
    a = make_split(corpus1028, SplitSpec(seed=0))
    b = make_split(corpus1028, SplitSpec(seed=0))
    assert [s.id for s in a.test] == [s.id for s in b.test]
    for fa, fb in zip(a.folds, b.folds):
        assert list(fa.train.ids()) == list(fb.train.ids())
        assert list(fa.validation.ids()) == list(fb.validation.ids())


def test_seed_changes_pool(corpus1028):
    a = make_split(corpus1028, SplitSpec(seed=0))
    b = make_split(corpus1028, SplitSpec(seed=1))
    assert set(a.folds[0].train.ids()) != set(b.folds[0].train.ids())
    # the test set never depends on the seed
    assert list(a.test.ids()) == list(b.test.ids())


# --- sizing errors -----------------------------------------------------------------


def test_pool_larger_than_remainder_rejected(corpus1028):
    with pytest.raises(SizingError):
        make_split(corpus1028, SplitSpec(cv_pool_size=900, n_folds=5))


def test_pool_must_divide_evenly():
    with pytest.raises(SizingError):
        SplitSpec(cv_pool_size=641, n_folds=5)


def test_at_least_two_folds():
    with pytest.raises(SizingError):
        SplitSpec(cv_pool_size=640, n_folds=1)


def test_empty_holdout_rejected():
    with pytest.raises(ValueError):
        SplitSpec(holdout_terms=())


# --- few-shot sampling --------------------------------------------------------------


def test_samples_nest_across_sizes(split1028):
    train = split1028.folds[0].train
    sizes = (16, 32, 64, 128, 256, 512)
    samples = [set(sample_few_shot(train, n, seed=7).ids()) for n in sizes]
    for small, large in zip(samples, samples[1:]):
        assert small < large
    for n, sample in zip(sizes, samples):
        assert len(sample) == n


def test_full_size_sample_is_whole_fold(split1028):
    train = split1028.folds[0].train
    assert set(sample_few_shot(train, 512, seed=7).ids()) == set(train.ids())


def test_sample_preserves_corpus_order(split1028):
    train = split1028.folds[0].train
    sample = sample_few_shot(train, 64, seed=7)
    positions = {sid: i for i, sid in enumerate(train.ids())}
    ranks = [positions[s.id] for s in sample]
    assert ranks == sorted(ranks)


def test_sample_size_bounds(split1028):
    train = split1028.folds[0].train
    with pytest.raises(SizingError):
        sample_few_shot(train, 0, seed=7)
    with pytest.raises(SizingError):
        sample_few_shot(train, 513, seed=7)


def test_sample_seed_sensitivity(split1028):
    train = split1028.folds[0].train
    a = set(sample_few_shot(train, 32, seed=1).ids())
    b = set(sample_few_shot(train, 32, seed=2).ids())
    assert a != b


# --- persistence ---------------------------------------------------------------------


def test_write_load_round_trip(tmp_path, split1028):
    manifest = write_split(split1028, SplitSpec(seed=0), tmp_path)
    again = load_split(manifest)
    assert [s.id for s in again.test] == [s.id for s in split1028.test]
    assert again.appendix_ids == split1028.appendix_ids
    assert len(again.folds) == 5
    def persisted(corpus):
        # raw_text is an ingestion convenience and is not stored in the TSVs
        return [(s.id, s.words, s.labels) for s in corpus]

    for fa, fb in zip(again.folds, split1028.folds):
        assert persisted(fa.train) == persisted(fb.train)
        assert persisted(fa.validation) == persisted(fb.validation)
