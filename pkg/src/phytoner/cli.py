"""Command-line frontend.

Machine-readable results go to stdout (JSON, JSONL, TSV, or CSV depending
on the subcommand); anything diagnostic goes to stderr.  Exit status is 0
on success, 1 on a data problem (bad files, failed validation, size
mismatches), 2 on usage errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .corpus import (
    Corpus,
    Label,
    Sentence,
    corpus_stats,
    read_corpus,
    read_tweets_jsonl,
    validate_iob2,
    write_corpus,
)
from .embeddings import (
    join_embeddings,
    load_embeddings,
    save_embeddings,
    synthesize_embeddings,
)
from .errors import JoinError, ToolError
from .evaluation import decode_word_entities, entity_metrics, token_metrics
from .gazetteer import baseline_tag, load_lexicon_files, match_terms, sample_per_hazard
from .harness import (
    GridSpec,
    ModelSpec,
    emit_curves,
    read_records,
    run_grid,
    summarize,
    write_records,
)
from .kernels import active_kernel
from .linear_head import (
    PRESETS,
    TrainConfig,
    load_params,
    predict_labels,
    save_params,
    train,
)
from .splitting import (
    DEFAULT_HOLDOUT_TERMS,
    SplitSpec,
    load_split,
    make_split,
    write_split,
)
from .tokenization import (
    DEFAULT_MAX_PIECES,
    collapse_to_words,
    load_vocab,
    read_pretokenized,
    tokenize_corpus,
    tokenized_corpus_from_pretokenized,
)

_FORMATS = ("PWEMB001", "PWLIN001")


def _print_json(obj) -> None:
    print(json.dumps(obj, sort_keys=True, ensure_ascii=False, indent=2))


def _load_input(path: str, fmt: str, strict: bool = True) -> Corpus:
    with open(path, encoding="utf-8") as f:
        if fmt == "jsonl":
            return read_tweets_jsonl(f, source=path)
        return read_corpus(f, source=path, strict=strict)


def _add_format(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--format",
        choices=("tsv", "jsonl"),
        default="tsv",
        help="input format: labelled TSV blocks or raw {id, text} JSON lines",
    )


def _add_lexicon(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--diseases", required=True, help="disease term list, one per line")
    parser.add_argument("--pests", required=True, help="pest term list, one per line")


def _tokenized_for(args, corpus: Corpus):
    """Tokenize via a vocab or take external piece lists, per the flags."""
    if getattr(args, "pretokenized", False):
        with open(args.corpus, encoding="utf-8") as f:
            pre_corpus, pieces_by_id = read_pretokenized(f, source=args.corpus)
        return pre_corpus, tokenized_corpus_from_pretokenized(
            pre_corpus, pieces_by_id, args.max_pieces
        )
    if not args.vocab:
        raise ValueError("--vocab is required unless --pretokenized is set")
    vocab = load_vocab(args.vocab)
    return corpus, tokenize_corpus(corpus, vocab, args.max_pieces)


# --- subcommand bodies ----------------------------------------------------


def _word_line_numbers(path: str) -> dict[str, list[int]]:
    """Map each sentence id to the file line number of each of its word lines.

    Assumes the file already parsed cleanly as corpus TSV.
    """
    mapping: dict[str, list[int]] = {}
    sid = None
    with open(path, encoding="utf-8") as f:
        for line_no, raw in enumerate(f, start=1):
            line = raw.rstrip("\n")
            if sid is None:
                if line:
                    sid = line
                    mapping[sid] = []
            elif not line:
                sid = None
            else:
                mapping[sid].append(line_no)
    return mapping


def cmd_validate(args) -> int:
    corpus = _load_input(args.corpus, args.format, strict=False)
    lines_of = _word_line_numbers(args.corpus) if args.format == "tsv" else {}
    violations = []
    for sentence in corpus:
        for v in validate_iob2(sentence.labels):
            word_lines = lines_of.get(sentence.id)
            violations.append(
                {
                    "sentence": sentence.id,
                    "position": v.position,
                    "line": word_lines[v.position] if word_lines else None,
                    "reason": v.reason,
                }
            )
    _print_json(
        {
            "sentences": len(corpus),
            "words": sum(len(s) for s in corpus),
            "violations": violations,
            "ok": not violations,
        }
    )
    return 0 if not violations else 1


def cmd_stats(args) -> int:
    corpus = _load_input(args.corpus, args.format)
    _print_json(corpus_stats(corpus).to_dict())
    return 0


def cmd_match(args) -> int:
    corpus = _load_input(args.corpus, args.format)
    lexicon = load_lexicon_files(args.diseases, args.pests)
    for sentence in corpus:
        matches = [
            {
                "start_word": m.start_word,
                "end_word": m.end_word,
                "term": m.term,
                "kind": m.kind.value,
            }
            for m in match_terms(sentence, lexicon)
        ]
        print(json.dumps({"id": sentence.id, "matches": matches}, sort_keys=True, ensure_ascii=False))
    return 0


def cmd_sample(args) -> int:
    corpus = _load_input(args.corpus, args.format)
    lexicon = load_lexicon_files(args.diseases, args.pests)
    sampled = sample_per_hazard(corpus, lexicon, args.per_hazard, args.seed)
    text = write_corpus(sampled)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(json.dumps({"sentences": len(sampled), "out": args.out}, sort_keys=True))
    else:
        sys.stdout.write(text)
    return 0


def cmd_baseline_tag(args) -> int:
    corpus = _load_input(args.corpus, args.format)
    lexicon = load_lexicon_files(args.diseases, args.pests)
    tagged = Corpus(
        tuple(
            Sentence(s.id, s.words, tuple(baseline_tag(s, lexicon)), s.raw_text)
            for s in corpus
        ),
        source=f"{corpus.source}#baseline",
    )
    sys.stdout.write(write_corpus(tagged))
    return 0


def cmd_split(args) -> int:
    corpus = _load_input(args.corpus, "tsv")
    holdout = DEFAULT_HOLDOUT_TERMS
    if args.holdout_file:
        lines = Path(args.holdout_file).read_text(encoding="utf-8").splitlines()
        holdout = tuple(t.strip() for t in lines if t.strip() and not t.startswith("#"))
    spec = SplitSpec(
        holdout_terms=holdout,
        cv_pool_size=args.cv_pool,
        n_folds=args.folds,
        seed=args.seed,
    )
    split = make_split(corpus, spec)
    manifest_path = write_split(split, spec, args.out)
    _print_json(
        {
            "manifest": str(manifest_path),
            "test": len(split.test),
            "folds": len(split.folds),
            "fold_train": len(split.folds[0].train),
            "fold_validation": len(split.folds[0].validation),
            "appendix": split.appendix_size,
        }
    )
    return 0


def cmd_embed_synth(args) -> int:
    corpus = _load_input(args.corpus, "tsv") if not args.pretokenized else None
    corpus, tokenized = _tokenized_for(args, corpus)
    entries = synthesize_embeddings(
        (tokenized[s.id] for s in corpus), args.dim, args.seed, args.separability
    )
    save_embeddings(entries, args.out, dim=args.dim)
    _print_json(
        {
            "sentences": len(entries),
            "dim": args.dim,
            "truncated_sentences": sum(t.truncated for t in tokenized.values()),
            "out": args.out,
        }
    )
    return 0


def cmd_train(args) -> int:
    corpus = _load_input(args.corpus, "tsv") if not args.pretokenized else None
    corpus, tokenized = _tokenized_for(args, corpus)
    emb = load_embeddings(args.embeddings)
    data = join_embeddings([tokenized[s.id] for s in corpus], emb)
    lr = args.lr if args.lr is not None else PRESETS[args.lr_preset]
    config = TrainConfig(learning_rate=lr, epochs=args.epochs, seed=args.seed)
    params, history = train(data, config)
    save_params(params, args.out)
    _print_json(
        {
            "sentences": len(data),
            "dim": params.dim,
            "epochs": config.epochs,
            "final_loss": history[-1].train_loss,
            "truncated_sentences": sum(t.truncated for t in tokenized.values()),
            "out": args.out,
        }
    )
    return 0


def cmd_predict(args) -> int:
    corpus = _load_input(args.corpus, "tsv") if not args.pretokenized else None
    corpus, tokenized = _tokenized_for(args, corpus)
    emb = load_embeddings(args.embeddings)
    params = load_params(args.params)
    data = join_embeddings([tokenized[s.id] for s in corpus], emb)
    sentences = []
    for sentence, sp in zip(corpus, data):
        ts = tokenized[sentence.id]
        piece_labels = predict_labels(params, sp.x)
        word_labels = collapse_to_words(
            [Label(int(v)) for v in piece_labels], ts.word_of_piece
        )
        # words the piece budget dropped were never classified; tag them O
        padded = list(word_labels) + [Label.O] * (len(sentence.words) - len(word_labels))
        sentences.append(
            Sentence(sentence.id, sentence.words, tuple(padded), sentence.raw_text)
        )
    out_corpus = Corpus(tuple(sentences), source=f"{corpus.source}#predicted")
    truncated = sum(t.truncated for t in tokenized.values())
    if truncated:
        print(f"note: {truncated} sentences were truncated at the piece budget", file=sys.stderr)
    text = write_corpus(out_corpus)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(
            json.dumps(
                {"sentences": len(out_corpus), "truncated_sentences": truncated, "out": args.out},
                sort_keys=True,
            )
        )
    else:
        sys.stdout.write(text)
    return 0


def cmd_eval(args) -> int:
    gold = _load_input(args.gold, "tsv")
    predicted = _load_input(args.predicted, "tsv", strict=False)
    gold_by_id = gold.by_id()
    if sorted(gold_by_id) != sorted(predicted.ids()):
        raise JoinError("gold and predicted corpora cover different sentence ids")
    gold_flat: list[int] = []
    pred_flat: list[int] = []
    gold_spans = []
    pred_spans = []
    for p_sentence in predicted:
        g_sentence = gold_by_id[p_sentence.id]
        if g_sentence.words != p_sentence.words:
            raise JoinError(f"sentence {p_sentence.id!r}: word sequences differ")
        gold_flat.extend(int(l) for l in g_sentence.labels)
        pred_flat.extend(int(l) for l in p_sentence.labels)
        gold_spans.append(decode_word_entities(g_sentence.labels, g_sentence.words))
        pred_spans.append(decode_word_entities(p_sentence.labels, p_sentence.words))
    _print_json(
        {
            "tokens": token_metrics(gold_flat, pred_flat).to_dict(),
            "entities": entity_metrics(gold_spans, pred_spans).to_dict(),
        }
    )
    return 0


def _grid_spec_from_manifest(manifest: dict) -> GridSpec:
    models = tuple(ModelSpec.from_dict(m) for m in manifest["models"])
    lr = manifest.get("learning_rate")
    if lr is None:
        lr = PRESETS[manifest.get("lr_preset", "head")]
    return GridSpec(
        models=models,
        sizes=tuple(manifest.get("sizes", GridSpec.sizes)),
        epochs=int(manifest.get("epochs", GridSpec.epochs)),
        learning_rate=float(lr),
        master_seed=int(manifest.get("master_seed", 0)),
    )


def cmd_grid(args) -> int:
    manifest_path = Path(args.manifest)
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    base = manifest_path.parent

    def resolve(p: str) -> str:
        path = Path(p)
        return str(path if path.is_absolute() else base / path)

    for model_obj in manifest.get("models", []):
        if "embeddings_path" in model_obj:
            model_obj["embeddings_path"] = resolve(model_obj["embeddings_path"])

    split = load_split(resolve(manifest["split_manifest"]))
    max_pieces = int(manifest.get("max_pieces", DEFAULT_MAX_PIECES))

    union: dict[str, Sentence] = {}
    for corpus in [split.test, *(c for f in split.folds for c in (f.train, f.validation))]:
        for sentence in corpus:
            union.setdefault(sentence.id, sentence)
    union_corpus = Corpus(tuple(union[k] for k in sorted(union)), source="grid")

    if "pretokenized" in manifest:
        with open(resolve(manifest["pretokenized"]), encoding="utf-8") as f:
            pre_corpus, pieces_by_id = read_pretokenized(f)
        missing = [sid for sid in union if sid not in pieces_by_id]
        if missing:
            raise JoinError(
                f"pretokenized file lacks {len(missing)} split sentences, first {missing[0]!r}"
            )
        tokenized = tokenized_corpus_from_pretokenized(union_corpus, pieces_by_id, max_pieces)
    else:
        vocab = load_vocab(resolve(manifest["vocab"]))
        tokenized = tokenize_corpus(union_corpus, vocab, max_pieces)

    spec = _grid_spec_from_manifest(manifest)
    result = run_grid(split, tokenized, spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    records_path = out / "records.jsonl"
    write_records(result, records_path)
    table = summarize(result.records, epoch_window=args.epoch_window)
    curves = emit_curves(table, out)
    _print_json(
        {
            "records": str(records_path),
            "curves": {k: str(v) for k, v in curves.items()},
            "n_records": len(result.records),
            "n_failures": len(result.failures),
        }
    )
    return 0


def cmd_report(args) -> int:
    result = read_records(args.records)
    table = summarize(result.records, epoch_window=args.epoch_window)
    out = Path(args.out)
    curves = emit_curves(table, out)
    _print_json(
        {
            "curves": {k: str(v) for k, v in curves.items()},
            "rows": [row.__dict__ for row in table.rows],
            "n_failures": len(result.failures),
        }
    )
    return 0


# --- parser ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="phytoner",
        description="few-shot NER pipeline for plant-health hazards in tweets",
    )
    parser.add_argument(
        "--version",
        action="version",
        version=f"phytoner {__version__} (formats {', '.join(_FORMATS)}; kernel {active_kernel()})",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="parse a corpus and report IOB2 violations")
    p.add_argument("--corpus", required=True)
    _add_format(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("stats", help="tag and entity counts")
    p.add_argument("--corpus", required=True)
    _add_format(p)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("match", help="gazetteer matches per sentence (JSONL)")
    p.add_argument("--corpus", required=True)
    _add_format(p)
    _add_lexicon(p)
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("sample", help="sample up to K tweets per hazard term")
    p.add_argument("--corpus", required=True)
    _add_format(p)
    _add_lexicon(p)
    p.add_argument("--per-hazard", type=int, required=True, metavar="K")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("baseline-tag", help="rule-based tagging from the lexicon")
    p.add_argument("--corpus", required=True)
    _add_format(p)
    _add_lexicon(p)
    p.set_defaults(func=cmd_baseline_tag)

    p = sub.add_parser("split", help="unseen-hazard test split plus CV folds")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cv-pool", type=int, default=640)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--holdout-file", help="override held-out terms, one per line")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("embed-synth", help="write synthetic per-piece embeddings")
    p.add_argument("--corpus", required=True)
    p.add_argument("--vocab")
    p.add_argument("--pretokenized", action="store_true")
    p.add_argument("--max-pieces", type=int, default=DEFAULT_MAX_PIECES)
    p.add_argument("--dim", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--separability", type=float, default=0.9)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_embed_synth)

    p = sub.add_parser("train", help="train a linear head on stored embeddings")
    p.add_argument("--corpus", required=True)
    p.add_argument("--vocab")
    p.add_argument("--pretokenized", action="store_true")
    p.add_argument("--max-pieces", type=int, default=DEFAULT_MAX_PIECES)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--lr", type=float)
    p.add_argument("--lr-preset", choices=sorted(PRESETS), default="head")
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="tag a corpus with a trained head")
    p.add_argument("--corpus", required=True)
    p.add_argument("--vocab")
    p.add_argument("--pretokenized", action="store_true")
    p.add_argument("--max-pieces", type=int, default=DEFAULT_MAX_PIECES)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--params", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("eval", help="score predicted labels against gold")
    p.add_argument("--gold", required=True)
    p.add_argument("--predicted", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("grid", help="run a manifest-described experiment grid")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--epoch-window", type=int)
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("report", help="summarize records.jsonl into curves")
    p.add_argument("--records", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--epoch-window", type=int)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ToolError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
