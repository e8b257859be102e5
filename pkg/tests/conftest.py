import pytest

from phytoner.corpus import Corpus, Label, Sentence
from phytoner.gazetteer import load_lexicon
from phytoner.tokenization import Vocab

O = Label.O
BM = Label.B_MALADIE
IM = Label.I_MALADIE
BR = Label.B_RAVAGEUR
IR = Label.I_RAVAGEUR


@pytest.fixture
def tiny_corpus() -> Corpus:
    return Corpus(
        (
            Sentence("t1", ("le", "mildiou", "arrive"), (O, BM, O)),
            Sentence("t2", ("phoma", "du", "colza"), (BM, IM, IM)),
            Sentence("t3", ("attaque", "de", "taupin"), (O, O, BR)),
            Sentence("t4", ("rien", "ici"), (O, O)),
        ),
        source="tiny",
    )


@pytest.fixture
def small_vocab() -> Vocab:
    return Vocab(
        frozenset(
            {
                "_pho", "ma", "_du", "_colza", "_le", "_mildiou", "_arrive",
                "_attaque", "_de", "_taupin", "_rien", "_ici",
            }
        )
    )


@pytest.fixture
def tiny_lexicon():
    return load_lexicon(
        ["mildiou\n", "phoma du colza\n"],
        ["taupin\n", "mouche du chou\n"],
    )


# --- acceptance checklist rendering -------------------------------------------
#
# Tests marked @pytest.mark.acceptance("<name>") get one PASS/FAIL line in a
# terminal section at the end of the run, so the gate reads as a checklist.


def pytest_collection_modifyitems(config, items):
    mapping = {}
    for item in items:
        marker = item.get_closest_marker("acceptance")
        if marker and marker.args:
            mapping[item.nodeid] = marker.args[0]
    config._acceptance_names = mapping


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    mapping = getattr(config, "_acceptance_names", {})
    if not mapping:
        return
    outcomes = {}
    for reports in terminalreporter.stats.values():
        for report in reports:
            nodeid = getattr(report, "nodeid", None)
            when = getattr(report, "when", None)
            if nodeid not in mapping or when is None:
                continue
            if getattr(report, "failed", False):
                outcomes[nodeid] = "FAIL"
            elif getattr(report, "skipped", False):
                outcomes.setdefault(nodeid, "SKIP")
            elif when == "call" and report.passed:
                outcomes.setdefault(nodeid, "PASS")
    shown = [(mapping[n], o) for n, o in outcomes.items()]
    if shown:
        terminalreporter.section("acceptance checklist")
        for name, outcome in sorted(shown):
            terminalreporter.write_line(f"{name}: {outcome}")
