"""biLSTM-CRF named-entity tagger with confidence penalty, gradient noise and zoneout."""
from .crf import (CrfParams, emissions_from_encoding, log_likelihood, log_partition,
                  penalized_loss, score_sequence, viterbi_decode)
from .data import (LabelSet, Sentence, Vocab, convert_scheme, load_aux_vectors,
                   load_embeddings, read_conll, write_conll)
from .encoder import (EncoderParams, LstmCell, ZoneoutConfig, encode_tokens, lstm_sequence,
                      lstm_step, zoneout_step)
from .evaluation import EntitySpan, EvalReport, extract_entities, f1_score, randomization_test
from .optim import NoisySGD
from .tensor import Tensor, no_grad
from .trainer import Checkpoint, Tagger, TrainConfig, predict, train

__version__ = "0.1.0"

__all__ = [
    "CrfParams", "emissions_from_encoding", "log_likelihood", "log_partition", "penalized_loss",
    "score_sequence", "viterbi_decode",
    "LabelSet", "Sentence", "Vocab", "convert_scheme", "load_aux_vectors", "load_embeddings",
    "read_conll", "write_conll",
    "EncoderParams", "LstmCell", "ZoneoutConfig", "encode_tokens", "lstm_sequence", "lstm_step",
    "zoneout_step",
    "EntitySpan", "EvalReport", "extract_entities", "f1_score", "randomization_test",
    "NoisySGD", "Tensor", "no_grad",
    "Checkpoint", "Tagger", "TrainConfig", "predict", "train",
]
