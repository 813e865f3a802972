import subprocess

import pytest

from breathkit_trainer.data import load_corpus


def _generate(path, n_per_class, separation, seed):
    subprocess.run(
        ["breathkit", "synth", "--labeled", str(n_per_class),
         "--separation", str(separation), "--seed", str(seed), "--out", str(path)],
        check=True, capture_output=True,
    )
    return path


@pytest.fixture(scope="session")
def corpus_sep1(tmp_path_factory):
    """Separable corpus (200/class, separation 1.0) from the primary CLI."""
    return _generate(tmp_path_factory.mktemp("sep1"), 200, 1.0, 0)


@pytest.fixture(scope="session")
def corpus_sep0(tmp_path_factory):
    """Chance-level corpus (100/class, separation 0.0)."""
    return _generate(tmp_path_factory.mktemp("sep0"), 100, 0.0, 1)


@pytest.fixture(scope="session")
def corpus_tiny(tmp_path_factory):
    """Small separable corpus for fast structural tests (20/class)."""
    return _generate(tmp_path_factory.mktemp("tiny"), 20, 1.0, 2)


@pytest.fixture(scope="session")
def dataset_sep1(corpus_sep1):
    return load_corpus(corpus_sep1)


@pytest.fixture(scope="session")
def dataset_sep0(corpus_sep0):
    return load_corpus(corpus_sep0)


@pytest.fixture(scope="session")
def dataset_tiny(corpus_tiny):
    return load_corpus(corpus_tiny)
