import os

import numpy as np
import pytest
from scipy.special import log_softmax

from app.corpus.synth import synth_corpus
from app.ctc.alphabet import Alphabet


@pytest.fixture
def rng():
    return np.random.Generator(np.random.PCG64(20240611))


@pytest.fixture
def small_alphabet():
    """Seven letters plus space, the alphabet of the overfit run."""
    return Alphabet.from_string('ABCDEFG ')


@pytest.fixture
def random_log_probs(rng):
    def make(steps: int, classes: int, scale: float = 1.0) -> np.ndarray:
        return log_softmax(scale * rng.standard_normal((steps, classes)), axis=1)
    return make


@pytest.fixture
def corpus_dir(tmp_path, small_alphabet):
    """A small synthetic corpus on disk: returns the manifest path."""
    out = os.path.join(str(tmp_path), 'corpus')
    synth_corpus(out, 4, (2, 3), small_alphabet, seed=3)
    return os.path.join(out, 'manifest.jsonl')
