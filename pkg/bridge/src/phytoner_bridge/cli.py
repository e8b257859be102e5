"""Command-line frontend for the embedding exporter.

The result summary goes to stdout as JSON; diagnostics go to stderr.
Exit status is 0 on success, 1 on a data or environment problem
(unreadable corpus, missing checkpoint, alignment failure), 2 on usage
errors.
"""

from __future__ import annotations

import argparse
import json
import sys

from phytoner.errors import ToolError

from . import __version__
from .export import DEFAULT_MAX_PIECES, BridgeError, ExportJob, export_embeddings


def _layer(value: str):
    if value == "last":
        return value
    try:
        return int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected 'last' or a layer index, got {value!r}"
        ) from None


def cmd_export(args) -> int:
    try:
        # keep stderr for genuine diagnostics, not weight-loading progress bars
        from transformers.utils import logging as hf_logging

        hf_logging.disable_progress_bar()
    except ImportError:
        pass
    try:
        report = export_embeddings(
            ExportJob(
                corpus_path=args.corpus,
                encoder_name=args.encoder,
                output_path=args.out,
                layer=args.layer,
                max_pieces=args.max_pieces,
            )
        )
    except (BridgeError, ToolError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    json.dump(
        {
            "out": str(report.output_path),
            "pretokenized": str(report.pretokenized_path),
            "dim": report.dim,
            "sentences": report.n_sentences,
            "truncated_sentences": report.truncated_sentences,
        },
        sys.stdout,
        indent=2,
        sort_keys=True,
    )
    print()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="phytoner-bridge",
        description="Export per-wordpiece encoder embeddings in phytoner's file format.",
    )
    parser.add_argument(
        "--version",
        action="version",
        version=f"phytoner-bridge {__version__} (format PWEMB001)",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("export", help="embed a labelled corpus with a pre-trained encoder")
    p.add_argument("--corpus", required=True, help="labelled corpus TSV")
    p.add_argument("--encoder", required=True, help="checkpoint name or local directory")
    p.add_argument("--out", required=True, help="embedding file to write")
    p.add_argument(
        "--layer",
        type=_layer,
        default="last",
        help="hidden layer to export: 'last' or an index, 0 being the embedding layer",
    )
    p.add_argument(
        "--max-pieces",
        type=int,
        default=DEFAULT_MAX_PIECES,
        help="piece budget per sentence; truncation happens at word boundaries",
    )
    p.set_defaults(func=cmd_export)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
