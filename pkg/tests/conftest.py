import pathlib

import numpy as np
import pytest

FIXTURES = pathlib.Path(__file__).parent / "fixtures"

# One "[PASS] ..."/"[FAIL] ..." line per acceptance criterion, printed in the
# terminal summary where pytest's output capture cannot swallow them.
ACCEPTANCE_RESULTS: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_RESULTS:
            terminalreporter.write_line(line)


def random_unit_vectors(n, dim, seed):
    rng = np.random.default_rng(seed)
    data = rng.standard_normal((n, dim))
    return (data / np.linalg.norm(data, axis=1, keepdims=True)).astype(np.float32)


@pytest.fixture(scope="session")
def fixture_corpus_path():
    return FIXTURES / "corpus.jsonl"


@pytest.fixture(scope="session")
def fixture_emb_path():
    return FIXTURES / "corpus.emb1"


@pytest.fixture(scope="session")
def fixture_exclusions_path():
    return FIXTURES / "exclusions.txt"
