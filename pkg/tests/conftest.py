import time
from pathlib import Path

import pytest

from lpglem.corpus_io import (
    PredictionKind,
    attach_translations,
    read_corpus,
    read_predictions,
    read_translations,
)
from lpglem.clustering import load_cluster_model
from lpglem.embeddings import load_vectors
from lpglem.lexicon import load_lexicon
from lpglem.probmodel import train
from lpglem.selection import Resources

FIXTURES = Path(__file__).parent / "fixtures"
PIPELINES = FIXTURES / "pipelines"

PREDICTION_FILES = {
    PredictionKind.POS_TOPSET: "topset.tsv",
    PredictionKind.S2S_LEMMA: "s2s.tsv",
    PredictionKind.LEXC_LPG: "lexc.tsv",
    PredictionKind.CLUSTER_ID: "cluster_ids.tsv",
}


@pytest.fixture(scope="session")
def lexicon():
    return load_lexicon(FIXTURES / "lexicon.tsv")


@pytest.fixture(scope="session")
def train_corpus():
    return read_corpus(FIXTURES / "train.tsv")


@pytest.fixture(scope="session")
def dev_corpus():
    corpus = read_corpus(FIXTURES / "dev.tsv")
    return attach_translations(corpus, read_translations(FIXTURES / "translations.tsv"))


@pytest.fixture(scope="session")
def model(train_corpus):
    return train(train_corpus)


@pytest.fixture(scope="session")
def predictions():
    return {kind: read_predictions(FIXTURES / name, kind) for kind, name in PREDICTION_FILES.items()}


@pytest.fixture(scope="session")
def resources(lexicon, model, predictions):
    return Resources(
        lexicon=lexicon,
        model=model,
        provider=load_vectors(FIXTURES / "vectors.txt"),
        predictions=predictions,
        assignments=load_cluster_model(FIXTURES / "clusters.tsv").assignments,
    )


SUITE_BUDGET_S = 60.0
_session_start = []


def pytest_sessionstart(session):
    _session_start.append(time.perf_counter())


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _session_start:
        return
    elapsed = time.perf_counter() - _session_start[0]
    verdict = "PASS" if elapsed < SUITE_BUDGET_S else "FAIL"
    terminalreporter.write_line(f"[acceptance 12, suite] {verdict}  full suite runtime {elapsed:.1f}s (budget {SUITE_BUDGET_S:.0f}s)")


def pytest_sessionfinish(session, exitstatus):
    if _session_start and time.perf_counter() - _session_start[0] >= SUITE_BUDGET_S and exitstatus == 0:
        session.exitstatus = 1
