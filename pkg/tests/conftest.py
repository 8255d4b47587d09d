import pytest

from citeintent.corpus import SCICITE
from citeintent.pipeline import train_ensemble
from citeintent.synthetic import vocab_driven_corpus
from citeintent.training import TrainConfig

# Small but real: enough epochs for the experts to separate the synthetic
# classes, small enough to keep the suite quick.
FAST_CONFIG = TrainConfig(max_epochs=4, eval_every=5, patience=25, seed=3)


@pytest.fixture(scope="session")
def small_corpus():
    return vocab_driven_corpus(420, 11)


@pytest.fixture(scope="session")
def small_ensemble(small_corpus):
    return train_ensemble(small_corpus, SCICITE, "WS", FAST_CONFIG)


@pytest.fixture(scope="session")
def small_bundle(small_ensemble):
    return small_ensemble[0]
