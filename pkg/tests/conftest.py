import numpy as np
import pytest

from nertagger.crf import CrfParams
from nertagger.data import Sentence
from nertagger.encoder import EncoderParams


def make_sentence(word_ids, char_ids, gold=None, aux=None):
    s = Sentence([f"w{i}" for i in word_ids])
    s.word_ids = list(word_ids)
    s.char_ids = [list(c) for c in char_ids]
    s.gold_labels = gold
    s.aux = aux
    return s


def tiny_encoder(seed=0, n_words=6, n_chars=7, word_dim=3, char_dim=2, char_hidden=2,
                 hidden=3, aux_dim=0):
    rng = np.random.default_rng(seed)
    enc = EncoderParams.init(n_words, n_chars, word_dim, char_dim, char_hidden, hidden, rng,
                             aux_dim=aux_dim)
    # spread biases so no gradient entry is structurally tiny
    for _, p in enc.parameters():
        p.data += rng.uniform(-0.3, 0.3, size=p.shape)
    return enc


def tiny_crf(num_labels=3, input_size=6, seed=1):
    rng = np.random.default_rng(seed)
    crf = CrfParams.init(num_labels, input_size, rng)
    for _, p in crf.parameters():
        p.data += rng.normal(scale=0.5, size=p.shape)
    return crf


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def toy_sentence():
    return make_sentence([2, 3, 2], [[1, 2, 3], [4], [1, 5, 6, 2]], gold=[0, 2, 1])
