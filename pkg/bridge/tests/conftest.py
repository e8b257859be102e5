"""Shared fixtures: a fabricated miniature encoder and a labelled sample corpus.

The encoder is a randomly initialised 2-layer, 32-dimensional BERT with a
hand-picked wordpiece vocabulary, saved to disk once per session.  It is
small enough for CPU inference in milliseconds yet exercises every
alignment case a production checkpoint would: multi-piece words,
punctuation splitting, unknown words, and case/accent normalization.
"""

import pytest

torch = pytest.importorskip("torch")
transformers = pytest.importorskip("transformers")

# Lowercase on purpose: the tokenizer is built with do_lower_case=True, so
# capitalised or accented corpus words normalize onto these entries.
VOCAB = [
    "[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]",
    ",", ".", "!",
    "le", "la", "les", "du", "de", "des", "un", "une", "et", "sur", "dans",
    "au", "ce", "mon", "nord", "champ", "parcelle", "culture", "traitement",
    "degats", "attaque", "pression", "semaine", "observe", "signale",
    "colza", "ble", "mais", "vigne", "tomate", "pomme", "terre",
    "pho", "##ma", "mild", "##iou", "rou", "##ille", "oid", "##ium",
    "septoriose", "fusariose",
    "altise", "puceron", "taupin", "charancon", "limace", "noctuelle",
    "##s", "##x",
]

HIDDEN_SIZE = 32
N_LAYERS = 2
POSITION_WINDOW = 48

# 20 labelled tweets covering both hazard kinds, multi-piece hazard words
# (phoma, mildiou, rouille, oidium), attached punctuation, capitalisation,
# accents, and out-of-vocabulary words.
SAMPLE_TWEETS = [
    ("t01", "le phoma du colza inquiete", "O B-maladie I-maladie I-maladie O"),
    ("t02", "mildiou observe sur la vigne", "B-maladie O O O O"),
    ("t03", "attaque de puceron dans le ble", "O O B-ravageur O O O"),
    ("t04", "la rouille progresse sur ble tendre", "O B-maladie O O O O"),
    ("t05", "taupin signale dans mon champ de mais", "B-ravageur O O O O O O"),
    ("t06", "traitement contre la septoriose du ble", "O O O B-maladie I-maladie I-maladie"),
    ("t07", "Oïdium sur tomate , pression forte", "B-maladie O O O O O"),
    ("t08", "des altises sur le colza ce matin", "O B-ravageur O O O O O"),
    ("t09", "le charancon du colza est de retour", "O B-ravageur I-ravageur I-ravageur O O O"),
    ("t10", "fusariose observee sur une parcelle de ble", "B-maladie O O O O O O"),
    ("t11", "degats de limace dans les semis", "O O B-ravageur O O O"),
    ("t12", "la noctuelle attaque la tomate au sud", "O B-ravageur O O O O O"),
    ("t13", "phoma et mildiou sur la meme parcelle", "B-maladie O B-maladie O O O O"),
    ("t14", "rien a signaler cette semaine au nord", "O O O O O O O"),
    ("t15", "pression de rouille jaune sur ble dur", "O O B-maladie I-maladie O O O"),
    ("t16", "le xylophage reste introuvable ici", "O B-ravageur O O O"),
    ("t17", "surveillance du taupin et de la limace", "O O B-ravageur O O O B-ravageur"),
    ("t18", "colza, un champ touche par le phoma", "O O O O O O B-maladie"),
    ("t19", "oidium declare sur vigne malgre le traitement", "B-maladie O O O O O O"),
    ("t20", "la culture de pomme de terre va bien", "O O O O O O O O"),
]


def corpus_tsv(rows) -> str:
    blocks = []
    for sid, words, tags in rows:
        lines = [sid] + [f"{w}\t{t}" for w, t in zip(words.split(), tags.split())]
        blocks.append("\n".join(lines) + "\n\n")
    return "".join(blocks)


@pytest.fixture(scope="session")
def encoder_dir(tmp_path_factory):
    from transformers import BertConfig, BertModel, BertTokenizerFast

    out = tmp_path_factory.mktemp("tiny-encoder")
    vocab = {piece: i for i, piece in enumerate(VOCAB)}
    assert len(vocab) == len(VOCAB), "vocabulary contains duplicates"
    tokenizer = BertTokenizerFast(vocab=vocab, do_lower_case=True)
    tokenizer.save_pretrained(out)
    config = BertConfig(
        vocab_size=len(vocab),
        hidden_size=HIDDEN_SIZE,
        num_hidden_layers=N_LAYERS,
        num_attention_heads=4,
        intermediate_size=64,
        max_position_embeddings=POSITION_WINDOW,
    )
    torch.manual_seed(0)
    model = BertModel(config)
    model.eval()
    model.save_pretrained(out)
    return str(out)


@pytest.fixture(scope="session")
def sample_corpus(tmp_path_factory):
    path = tmp_path_factory.mktemp("sample") / "tweets.tsv"
    path.write_text(corpus_tsv(SAMPLE_TWEETS), encoding="utf-8")
    return path


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
