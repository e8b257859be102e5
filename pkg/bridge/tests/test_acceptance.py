"""The conformance gate: exported artifacts feed the primary pipeline.

The primary toolkit is driven through its installed console script, the
same way an operator would chain the two packages together.
"""

import json
import shutil
import subprocess

import pytest

from phytoner.embeddings import load_embeddings
from phytoner.tokenization import read_pretokenized

from phytoner_bridge.export import ExportJob, export_embeddings


def _phytoner(*argv):
    exe = shutil.which("phytoner")
    assert exe, "the phytoner console script is not on PATH"
    proc = subprocess.run([exe, *argv], capture_output=True, text=True)
    assert proc.returncode == 0, f"phytoner {argv[0]} failed:\n{proc.stderr}"
    return proc.stdout


@pytest.mark.acceptance("bridge-conformance")
def test_bridge_conformance(encoder_dir, sample_corpus, tmp_path):
    out = tmp_path / "bridge.bin"
    report = export_embeddings(ExportJob(sample_corpus, encoder_dir, out))
    assert report.n_sentences == 20
    assert report.truncated_sentences == 0

    # the exported file validates, and its row counts agree with the
    # pre-tokenized corpus sentence by sentence
    filed = load_embeddings(out)
    with open(report.pretokenized_path, encoding="utf-8") as f:
        corpus, pieces_by_id = read_pretokenized(f)
    assert set(filed.entries) == set(corpus.ids())
    for sentence in corpus:
        expected = sum(len(pieces) for pieces in pieces_by_id[sentence.id])
        assert filed.entries[sentence.id].shape == (expected, report.dim)

    # the primary pipeline trains, predicts, and scores on the pair without
    # any join errors
    head = tmp_path / "head.bin"
    predicted = tmp_path / "predicted.tsv"
    trained = json.loads(
        _phytoner(
            "train", "--corpus", str(report.pretokenized_path), "--pretokenized",
            "--embeddings", str(out), "--lr-preset", "head", "--epochs", "5",
            "--seed", "0", "--out", str(head),
        )
    )
    assert trained["sentences"] == 20
    assert trained["dim"] == report.dim
    _phytoner(
        "predict", "--corpus", str(report.pretokenized_path), "--pretokenized",
        "--embeddings", str(out), "--params", str(head), "--out", str(predicted),
    )
    # nothing was truncated, so the original corpus doubles as gold
    scored = json.loads(
        _phytoner("eval", "--gold", str(sample_corpus), "--predicted", str(predicted))
    )
    tokens = scored["tokens"]
    assert tokens["micro"]["support"] == sum(len(s.words) for s in corpus)
    assert 0.0 <= tokens["accuracy"] <= 1.0
    assert tokens["micro"]["f1"] == pytest.approx(tokens["accuracy"])
    assert set(scored["entities"]["per_kind"]) == {"maladie", "ravageur"}
