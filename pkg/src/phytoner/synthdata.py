"""Deterministic synthetic tweet corpus for demos and end-to-end tests.

Everything the pipeline consumes can be generated here: a corpus whose
hazard mentions split cleanly into held-out and seen vocabularies, a
wordpiece inventory that tokenizes every generated word without unks,
and matching lexicon files.  Sizes default to the real collection's
shape: 1028 tweets of which 207 mention a held-out hazard.
"""

from __future__ import annotations

import random
from hashlib import blake2b
from pathlib import Path

from .corpus import Corpus, EntityKind, Label, Sentence, write_corpus
from .gazetteer import normalize_term
from .tokenization import Vocab, wordpiece_tokenize, write_vocab

# surface variants per held-out hazard; all normalize back to the key
HOLDOUT_SURFACES: dict[str, tuple[str, ...]] = {
    "cousin": ("cousin", "Cousin"),
    "mosaique": ("mosaïque", "Mosaïque", "mosaique"),
    "mouche": ("mouche", "Mouche"),
    "oidium": ("oïdium", "Oïdium", "oidium"),
    "pourriture": ("pourriture", "Pourriture"),
    "rouille": ("rouille", "Rouille"),
    "taupe": ("taupe", "Taupe"),
    "taupin": ("taupin", "Taupin"),
    "teigne": ("teigne", "Teigne"),
    "tipule": ("tipule", "Tipule"),
}

HOLDOUT_KIND: dict[str, EntityKind] = {
    "mosaique": EntityKind.MALADIE,
    "oidium": EntityKind.MALADIE,
    "pourriture": EntityKind.MALADIE,
    "rouille": EntityKind.MALADIE,
    "cousin": EntityKind.RAVAGEUR,
    "mouche": EntityKind.RAVAGEUR,
    "taupe": EntityKind.RAVAGEUR,
    "taupin": EntityKind.RAVAGEUR,
    "teigne": EntityKind.RAVAGEUR,
    "tipule": EntityKind.RAVAGEUR,
}

SEEN_DISEASES = (
    "mildiou", "septoriose", "fusariose", "phoma", "sclérotinia",
    "helminthosporiose", "rhynchosporiose", "anthracnose", "ergot", "charbon",
)
SEEN_PESTS = (
    "puceron", "altise", "limace", "doryphore", "charançon",
    "cicadelle", "pyrale", "noctuelle", "bruche", "thrips",
)

# optional continuation words for multiword mentions; none of these may
# normalize to a held-out term or the split would leak
_ENTITY_TAILS = (
    (),
    (),
    ("du", "colza"),
    ("du", "blé"),
    ("de", "la", "vigne"),
)

_FILLER = (
    "le", "la", "les", "un", "une", "des", "dans", "sur", "avec", "pour",
    "forte", "faible", "pression", "attaque", "parcelle", "champ", "secteur",
    "traitement", "conseil", "alerte", "risque", "semaine", "matin", "pluie",
    "humidité", "météo", "observée", "signalée", "présence", "stade",
    "floraison", "levée", "bio", "nord", "sud", "blé", "colza", "vigne",
    "orge", "maïs", "tournesol", "betterave", "#bsv", "#agriculture", "RT",
)


def _check_pools() -> None:
    holdout = set(HOLDOUT_SURFACES)
    others = {normalize_term(w) for w in SEEN_DISEASES + SEEN_PESTS + _FILLER}
    others |= {normalize_term(w) for tail in _ENTITY_TAILS for w in tail}
    leak = holdout & others
    if leak:  # would corrupt the seen/unseen split
        raise AssertionError(f"holdout terms leak into other pools: {sorted(leak)}")


_check_pools()


def _emit_entity(rng: random.Random, head: str, kind: EntityKind,
                 words: list[str], labels: list[Label]) -> None:
    words.append(head)
    labels.append(kind.begin_label)
    for w in rng.choice(_ENTITY_TAILS):
        words.append(w)
        labels.append(kind.inside_label)


def _emit_filler(rng: random.Random, count: int,
                 words: list[str], labels: list[Label]) -> None:
    for _ in range(count):
        words.append(rng.choice(_FILLER))
        labels.append(Label.O)


def make_synthetic_corpus(
    n_sentences: int = 1028, n_holdout: int = 207, seed: int = 0
) -> Corpus:
    """Generate tweets where exactly ``n_holdout`` mention a held-out hazard.

    Held-out mentions appear only in those sentences, so a containment
    split recovers the target test size exactly.  The rest mix seen-hazard
    mentions (one, two, or none) with filler; roughly a fifth of the
    held-out tweets also carry a seen mention.
    """
    if n_sentences < 1:
        raise ValueError("n_sentences must be >= 1")
    if not 0 <= n_holdout <= n_sentences:
        raise ValueError("need 0 <= n_holdout <= n_sentences")
    rng = random.Random(seed)
    holdout_rows = set(rng.sample(range(n_sentences), n_holdout))
    holdout_terms = sorted(HOLDOUT_SURFACES)
    seen_pool = [(h, EntityKind.MALADIE) for h in SEEN_DISEASES] + [
        (h, EntityKind.RAVAGEUR) for h in SEEN_PESTS
    ]

    sentences = []
    n_holdout_emitted = 0
    for i in range(n_sentences):
        words: list[str] = []
        labels: list[Label] = []
        _emit_filler(rng, rng.randint(2, 5), words, labels)
        if i in holdout_rows:
            # cycle terms so each appears even for small corpora
            term = holdout_terms[n_holdout_emitted % len(holdout_terms)]
            n_holdout_emitted += 1
            surface = rng.choice(HOLDOUT_SURFACES[term])
            _emit_entity(rng, surface, HOLDOUT_KIND[term], words, labels)
            if rng.random() < 0.2:
                _emit_filler(rng, rng.randint(1, 2), words, labels)
                head, kind = rng.choice(seen_pool)
                _emit_entity(rng, head, kind, words, labels)
        else:
            draw = rng.random()
            n_entities = 1 if draw < 0.55 else (2 if draw < 0.7 else 0)
            for j in range(n_entities):
                if j:
                    _emit_filler(rng, rng.randint(1, 2), words, labels)
                head, kind = rng.choice(seen_pool)
                _emit_entity(rng, head, kind, words, labels)
        _emit_filler(rng, rng.randint(1, 4), words, labels)
        text = " ".join(words)
        sentences.append(
            Sentence(
                id=f"tw{i:04d}",
                words=tuple(words),
                labels=tuple(labels),
                raw_text=text,
            )
        )
    return Corpus(tuple(sentences), source=f"synthetic(seed={seed})")


def _word_digest(word: str) -> int:
    return int.from_bytes(blake2b(word.encode("utf-8"), digest_size=4).digest(), "little")


def make_vocab(corpus: Corpus) -> Vocab:
    """Build a wordpiece inventory covering every word in the corpus.

    About half the longer words get a two-piece split for realism; a
    repair pass then adds whole-word entries wherever greedy matching
    would otherwise fall back to the unk piece, so tokenization of the
    generating corpus is always unk-free.
    """
    words = sorted({w for s in corpus.sentences for w in s.words})
    pieces: set[str] = set()
    for w in words:
        if len(w) >= 5 and _word_digest(w) % 2 == 0:
            half = (len(w) + 1) // 2
            pieces.add("_" + w[:half])
            pieces.add(w[half:])
        else:
            pieces.add("_" + w)
    vocab = Vocab(frozenset(pieces))
    for _ in range(len(words)):
        bad = [w for w in words if vocab.unk_piece in wordpiece_tokenize(w, vocab)]
        if not bad:
            break
        pieces.update("_" + w for w in bad)
        vocab = Vocab(frozenset(pieces))
    return vocab


def demo_lexicon() -> tuple[list[str], list[str]]:
    """Disease and pest term lists matching the generated mentions."""
    diseases = sorted(SEEN_DISEASES) + sorted(
        t for t, k in HOLDOUT_KIND.items() if k is EntityKind.MALADIE
    )
    pests = sorted(SEEN_PESTS) + sorted(
        t for t, k in HOLDOUT_KIND.items() if k is EntityKind.RAVAGEUR
    )
    return diseases, pests


def write_demo(outdir, n_sentences: int = 1028, n_holdout: int = 207,
               seed: int = 0) -> dict[str, Path]:
    """Write corpus.tsv, vocab.txt, and lexicon files into ``outdir``."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    corpus = make_synthetic_corpus(n_sentences, n_holdout, seed)
    vocab = make_vocab(corpus)
    diseases, pests = demo_lexicon()
    paths = {
        "corpus": outdir / "corpus.tsv",
        "vocab": outdir / "vocab.txt",
        "diseases": outdir / "diseases.txt",
        "pests": outdir / "pests.txt",
    }
    paths["corpus"].write_text(write_corpus(corpus), encoding="utf-8")
    paths["vocab"].write_text(write_vocab(vocab), encoding="utf-8")
    paths["diseases"].write_text("\n".join(diseases) + "\n", encoding="utf-8")
    paths["pests"].write_text("\n".join(pests) + "\n", encoding="utf-8")
    return paths


if __name__ == "__main__":
    import argparse

    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("outdir")
    ap.add_argument("--sentences", type=int, default=1028)
    ap.add_argument("--holdout", type=int, default=207)
    ap.add_argument("--seed", type=int, default=0)
    ns = ap.parse_args()
    for name, path in write_demo(ns.outdir, ns.sentences, ns.holdout, ns.seed).items():
        print(f"{name}\t{path}")
