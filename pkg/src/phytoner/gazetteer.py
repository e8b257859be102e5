"""Hazard term lexicon: normalized matching, per-term sampling, rule tagger.

Matching is diacritic-insensitive because the hazard lists spell several
names both ways (oïdium/oidium, mosaïque/mosaique).
"""

from __future__ import annotations

import hashlib
import random
import unicodedata
from dataclasses import dataclass
from typing import Iterable

from .corpus import Corpus, EntityKind, Label, Sentence
from .errors import IntegrityError


def normalize_term(text: str) -> str:
    """Lowercase, fold diacritics and collapse internal whitespace."""
    decomposed = unicodedata.normalize("NFKD", text)
    stripped = "".join(c for c in decomposed if not unicodedata.combining(c))
    return " ".join(stripped.lower().split())


@dataclass(frozen=True)
class HazardLexicon:
    """Normalized hazard term -> entity kind, with no term in both kinds."""

    entries: dict[str, EntityKind]

    def __post_init__(self):
        object.__setattr__(self, "entries", dict(self.entries))

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, normalized_term: str) -> bool:
        return normalized_term in self.entries

    @property
    def max_term_words(self) -> int:
        return max((len(t.split()) for t in self.entries), default=0)

    def terms(self) -> list[str]:
        return sorted(self.entries)


@dataclass(frozen=True)
class TermMatch:
    """A lexicon hit over an inclusive word-index range."""

    start_word: int
    end_word: int
    term: str
    kind: EntityKind


def load_lexicon(disease_lines: Iterable[str], pest_lines: Iterable[str]) -> HazardLexicon:
    """Build a lexicon from two term-per-line files (``#`` comments allowed).

    A term normalizing into both lists is a data error and is reported by
    name.
    """
    entries: dict[str, EntityKind] = {}
    conflicts = []
    for kind, lines in ((EntityKind.MALADIE, disease_lines), (EntityKind.RAVAGEUR, pest_lines)):
        for raw in lines:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            term = normalize_term(line)
            if not term:
                continue
            existing = entries.get(term)
            if existing is not None and existing is not kind:
                conflicts.append(term)
            else:
                entries[term] = kind
    if conflicts:
        raise IntegrityError(
            "terms present in both lists: " + ", ".join(sorted(set(conflicts)))
        )
    return HazardLexicon(entries)


def load_lexicon_files(disease_path, pest_path) -> HazardLexicon:
    with open(disease_path, encoding="utf-8") as d, open(pest_path, encoding="utf-8") as p:
        return load_lexicon(d, p)


def _normalized_words(sentence: Sentence) -> list[str]:
    return [normalize_term(w) for w in sentence.words]


def _contains_term(norm_words: list[str], term: str) -> bool:
    term_words = term.split()
    span = len(term_words)
    if span == 0 or span > len(norm_words):
        return False
    return any(
        norm_words[i : i + span] == term_words for i in range(len(norm_words) - span + 1)
    )


def sentence_contains_term(sentence: Sentence, normalized_term: str) -> bool:
    """True if the term occurs as a normalized word n-gram, overlap-blind."""
    return _contains_term(_normalized_words(sentence), normalized_term)


def match_terms(sentence: Sentence, lexicon: HazardLexicon) -> list[TermMatch]:
    """All non-overlapping matches, longest first, ties to the leftmost.

    Returned matches are sorted by start position.
    """
    norm = _normalized_words(sentence)
    n = len(norm)
    candidates = []
    for span in range(1, min(lexicon.max_term_words, n) + 1):
        for start in range(n - span + 1):
            key = " ".join(norm[start : start + span])
            kind = lexicon.entries.get(key)
            if kind is not None:
                candidates.append((span, start, key, kind))
    candidates.sort(key=lambda c: (-c[0], c[1]))
    taken = [False] * n
    matches = []
    for span, start, key, kind in candidates:
        if any(taken[start : start + span]):
            continue
        for i in range(start, start + span):
            taken[i] = True
        matches.append(TermMatch(start, start + span - 1, key, kind))
    matches.sort(key=lambda m: m.start_word)
    return matches


def _term_rng(seed: int, term: str) -> random.Random:
    digest = hashlib.blake2b(f"{seed}|{term}".encode("utf-8"), digest_size=8).digest()
    return random.Random(int.from_bytes(digest, "little"))


def sample_per_hazard(pool: Corpus, lexicon: HazardLexicon, k: int, seed: int) -> Corpus:
    """Draw up to ``k`` tweets per lexicon term, deduplicated across terms.

    Candidate tweets are keyed and sorted by sentence id before drawing, so
    the result is invariant to the pool's ordering; each term uses its own
    seed-derived generator.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    norm_by_id = {s.id: _normalized_words(s) for s in pool}
    selected: set[str] = set()
    for term in lexicon.terms():
        candidates = sorted(
            sid for sid, norm in norm_by_id.items() if _contains_term(norm, term)
        )
        if len(candidates) <= k:
            selected.update(candidates)
        else:
            selected.update(_term_rng(seed, term).sample(candidates, k))
    chosen = sorted(selected)
    by_id = pool.by_id()
    return Corpus(tuple(by_id[sid] for sid in chosen), source=f"{pool.source}#sampled")


def baseline_tag(sentence: Sentence, lexicon: HazardLexicon) -> list[Label]:
    """Rule-based tagger: B- on the first word of each match, I- inside."""
    labels = [Label.O] * len(sentence)
    for match in match_terms(sentence, lexicon):
        labels[match.start_word] = match.kind.begin_label
        for i in range(match.start_word + 1, match.end_word + 1):
            labels[i] = match.kind.inside_label
    return labels
