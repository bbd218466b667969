import pytest

from _gates import VERDICTS
from spinemtl import synth


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if VERDICTS:
        terminalreporter.write_sep("-", "acceptance verdicts")
        for line in VERDICTS:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def small_corpus():
    """A 60-report corpus shared by tests that only need plausible data."""
    return synth.generate_corpus(synth.GeneratorConfig(n_reports=60, seed=3))


@pytest.fixture(scope="session")
def small_corpus_dir(small_corpus, tmp_path_factory):
    out = tmp_path_factory.mktemp("corpus")
    paths = synth.write_corpus(small_corpus, out)
    return paths
