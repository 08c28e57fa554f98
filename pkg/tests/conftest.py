import pytest

from speechlevel.audio import synth_corpus
from speechlevel.experiment import read_manifest


@pytest.fixture(scope="session")
def small_corpus(tmp_path_factory):
    """27 utterances (3 classes x 3 speakers x 3 each), shared read-only."""
    root = tmp_path_factory.mktemp("corpus27")
    synth_corpus(root, n_speakers=3, utt_per_speaker=3, seed=404)
    return root


@pytest.fixture(scope="session")
def small_records(small_corpus):
    return read_manifest(small_corpus / "manifest.csv")
