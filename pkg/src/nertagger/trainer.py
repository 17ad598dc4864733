"""Tagger model, training loop with dev-set model selection, and prediction.

All randomness in a run flows from one ``numpy.random.Generator`` seeded by
``TrainConfig.seed`` and is consumed in this order: parameter
initialization (including embedding rows missing from a pretrained file),
then for every epoch a shuffle permutation followed, per training sentence,
by the zoneout masks of the forward pass and the gradient noise of the
optimizer step.  Evaluation draws nothing.
"""
import logging
import math
from dataclasses import asdict, dataclass, field, fields
from typing import Optional

import numpy as np

from . import crf as crf_ops
from .data import LabelSet, build_vocabs, embedding_matrix, index_sentences
from .encoder import EncoderParams, ZoneoutConfig, encode_tokens
from .errors import CompatibilityError, ConfigError, DataError, DivergenceError
from .evaluation import f1_score
from .optim import NoisySGD
from .tensor import no_grad

logger = logging.getLogger(__name__)

BETA_GRID = (0.0, 0.1, 1.0, 2.0)
ETA_GRID = (0.0, 0.01, 0.3, 1.0)
ZONEOUT_GRID = ((0.0, 0.0), (0.15, 0.15), (0.5, 0.05))


@dataclass
class TrainConfig:
    lr: float = 0.005
    momentum: float = 0.9
    epochs: int = 50
    patience: int = 10
    beta: float = 0.0
    eta: float = 0.0
    gamma: float = 0.55
    zc: float = 0.0
    zh: float = 0.0
    hidden: int = 100
    word_dim: int = 100
    char_dim: int = 25
    char_hidden: int = 25
    seed: int = 1
    clip: Optional[float] = None
    scheme: str = "iob2"
    lowercase: bool = True
    normalize_digits: bool = False

    def validate(self):
        """Raise :class:`ConfigError` on invalid values; log off-grid ones."""
        if not self.lr > 0:
            raise ConfigError(f"lr must be positive, got {self.lr}")
        if not 0 <= self.momentum < 1:
            raise ConfigError(f"momentum must lie in [0, 1), got {self.momentum}")
        for name in ("epochs", "patience", "hidden", "word_dim", "char_dim", "char_hidden"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        for name in ("beta", "eta", "gamma"):
            value = getattr(self, name)
            if not (value >= 0 and math.isfinite(value)):
                raise ConfigError(f"{name} must be a non-negative real, got {value}")
        ZoneoutConfig(self.zc, self.zh)
        if self.clip is not None and not self.clip > 0:
            raise ConfigError(f"clip must be positive, got {self.clip}")
        if self.scheme not in ("iob1", "iob2"):
            raise ConfigError(f"scheme must be iob1 or iob2, got {self.scheme!r}")
        if self.beta not in BETA_GRID:
            logger.warning("beta=%s is outside the evaluated grid %s", self.beta, BETA_GRID)
        if self.eta not in ETA_GRID:
            logger.warning("eta=%s is outside the evaluated grid %s", self.eta, ETA_GRID)
        if (self.zc, self.zh) not in ZONEOUT_GRID:
            logger.warning("zoneout (zc=%s, zh=%s) is outside the evaluated grid %s",
                           self.zc, self.zh, ZONEOUT_GRID)
        return self

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, values):
        known = {f.name for f in fields(cls)}
        unknown = set(values) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**values)


class Tagger:
    """Encoder + CRF with the vocabularies needed to index raw sentences."""

    def __init__(self, words, chars, labels, encoder, crf):
        self.words = words
        self.chars = chars
        self.labels = labels
        self.encoder = encoder
        self.crf = crf

    @classmethod
    def init(cls, config, words, chars, labels, rng, aux_dim=0, word_table=None):
        encoder = EncoderParams.init(len(words), len(chars), config.word_dim, config.char_dim,
                                     config.char_hidden, config.hidden, rng, aux_dim=aux_dim,
                                     word_table=word_table)
        crf = crf_ops.CrfParams.init(len(labels), encoder.output_size, rng)
        return cls(words, chars, labels, encoder, crf)

    @property
    def aux_dim(self):
        return self.encoder.aux_dim

    def parameters(self):
        return ([(f"encoder.{n}", p) for n, p in self.encoder.parameters()]
                + [(f"crf.{n}", p) for n, p in self.crf.parameters()])

    def state(self):
        return [p.data.copy() for _, p in self.parameters()]

    def load_state(self, arrays):
        params = self.parameters()
        if len(arrays) != len(params):
            raise CompatibilityError(f"expected {len(params)} arrays, got {len(arrays)}")
        for (name, p), arr in zip(params, arrays):
            if arr.shape != p.shape:
                raise CompatibilityError(f"{name}: shape {arr.shape} != {p.shape}")
            p.data[...] = arr

    def prepare(self, sentences, with_labels=True):
        """Index sentences with this model's vocabularies (in place)."""
        for k, sent in enumerate(sentences):
            aux = sent.aux
            width = 0 if aux is None else np.asarray(aux).shape[1]
            if width != self.aux_dim:
                raise CompatibilityError(
                    f"sentence {k}: auxiliary width {width}, model expects {self.aux_dim}")
            if with_labels and sent.labels is not None:
                unknown = [lab for lab in sent.labels if lab not in self.labels.stoi]
                if unknown:
                    raise CompatibilityError(
                        f"sentence {k}: labels {sorted(set(unknown))} unknown to the model")
        index_sentences(sentences, self.words, self.chars,
                        self.labels if with_labels else None)
        return sentences

    def emissions(self, sentence, zcfg=None, rng=None):
        zcfg = zcfg or ZoneoutConfig()
        enc = encode_tokens(self.encoder, sentence, zcfg, rng)
        return crf_ops.emissions_from_encoding(self.crf, enc)

    def loss(self, sentence, beta=0.0, zcfg=None, rng=None):
        em = self.emissions(sentence, zcfg, rng)
        return crf_ops.penalized_loss(self.crf, em, sentence.gold_labels, beta)

    def decode(self, sentence, zcfg=None):
        """Viterbi label indices in eval mode (zoneout replaced by its expectation)."""
        zcfg = (zcfg or ZoneoutConfig()).eval()
        with no_grad():
            em = self.emissions(sentence, zcfg)
        return crf_ops.viterbi_decode(self.crf, em)[0]

    def predict(self, sentences, zcfg=None):
        """IOB2 label strings for each (indexed) sentence."""
        return [[self.labels.itos[i] for i in self.decode(s, zcfg)] for s in sentences]


@dataclass
class EpochRecord:
    epoch: int
    loss: float
    precision: float
    recall: float
    f1: float
    sigma: float
    best_f1: float

    def format(self):
        return (f"epoch {self.epoch} loss {self.loss:.6f} dev_p {100 * self.precision:.2f} "
                f"dev_r {100 * self.recall:.2f} dev_f1 {100 * self.f1:.2f} "
                f"sigma {self.sigma:.6f} best_f1 {100 * self.best_f1:.2f}")


@dataclass
class Checkpoint:
    """Best-on-dev model with the config that produced it."""

    model: Tagger
    config: TrainConfig
    dev_f1: float
    epoch: int
    history: list = field(default_factory=list)


def evaluate(model, sentences, zcfg=None):
    return f1_score([s.labels for s in sentences], model.predict(sentences, zcfg))


def build_model(config, train_set, rng, embeddings=None, extra_sentences=()):
    """Vocabularies, label set and freshly initialized :class:`Tagger`."""
    words, chars = build_vocabs(train_set, embeddings.keys() if embeddings else (),
                                config.lowercase, config.normalize_digits)
    labels = LabelSet.from_sentences(list(train_set) + list(extra_sentences))
    table = None
    if embeddings is not None:
        table, coverage = embedding_matrix(words, embeddings, config.word_dim, rng)
        logger.info("pretrained vectors cover %.2f%% of the vocabulary", 100 * coverage)
    widths = {0 if s.aux is None else np.asarray(s.aux).shape[1] for s in train_set}
    if len(widths) > 1:
        raise DataError(f"training sentences mix auxiliary widths {sorted(widths)}")
    return Tagger.init(config, words, chars, labels, rng, aux_dim=widths.pop(),
                       word_table=table)


def train(config, train_set, dev_set, embeddings=None, log=None):
    """Train with per-sentence updates and keep the best dev-F1 parameters.

    ``train_set``/``dev_set`` are :class:`~nertagger.data.Sentence` lists
    with IOB2 string labels.  ``log`` receives one formatted line per epoch.
    Stops after ``patience`` epochs without dev improvement or after
    ``epochs`` epochs.
    """
    config.validate()
    if not train_set or not dev_set:
        raise DataError("training and development sets must be non-empty")
    rng = np.random.default_rng(config.seed)
    model = build_model(config, train_set, rng, embeddings, extra_sentences=dev_set)
    model.prepare(train_set)
    model.prepare(dev_set)
    params = model.parameters()
    opt = NoisySGD(params, lr=config.lr, momentum=config.momentum, eta=config.eta,
                   gamma=config.gamma, rng=rng, clip=config.clip)
    zcfg = ZoneoutConfig(config.zc, config.zh, "train")

    best = None
    history = []
    stale = 0
    for epoch in range(1, config.epochs + 1):
        total = 0.0
        for k in rng.permutation(len(train_set)):
            # overflow shows up as a non-finite loss, reported below
            with np.errstate(over="ignore", invalid="ignore"):
                loss = model.loss(train_set[k], config.beta, zcfg, rng)
                value = loss.item()
                if not math.isfinite(value):
                    raise DivergenceError(
                        f"non-finite loss {value} on training sentence {k} "
                        f"(epoch {epoch}, optimizer step {opt.t})")
                loss.backward()
                opt.step()
            opt.zero_grad()
            total += value
        report = evaluate(model, dev_set, zcfg)
        improved = best is None or report.f1 > best.dev_f1
        if improved:
            best = Checkpoint(None, config, report.f1, epoch, history)
            best_state = model.state()
            stale = 0
        else:
            stale += 1
        record = EpochRecord(epoch, total / len(train_set), report.precision, report.recall,
                             report.f1, opt.noise_std(), best.dev_f1)
        history.append(record)
        if log is not None:
            log(record.format())
        if stale >= config.patience:
            break

    model.load_state(best_state)
    best.model = model
    return best


def predict(checkpoint, sentences):
    """Label strings (IOB2) for raw sentences using a trained checkpoint."""
    if not sentences:
        return []
    model = checkpoint.model if isinstance(checkpoint, Checkpoint) else checkpoint
    model.prepare(sentences, with_labels=False)
    config = checkpoint.config if isinstance(checkpoint, Checkpoint) else None
    zcfg = ZoneoutConfig(config.zc, config.zh, "eval") if config else None
    return model.predict(sentences, zcfg)
