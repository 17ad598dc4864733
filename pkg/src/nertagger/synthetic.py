"""Deterministic synthetic NER corpus for desk-scale experiments.

The language has exactly ``vocab_size`` word types (200 by default) and two
entity types, giving the five IOB2 labels ``O, B-PER, I-PER, B-LOC, I-LOC``.

* Lexical cues: person names and place names come from disjoint,
  capitalized word lists.
* Positional cues: a small set of ambiguous capitalized words is a person
  after a title word ("dr", "ms", ...) and a location after a locative
  preposition ("in", "near", ...); place names may be followed by a
  location head word ("City", "Bay", ...) that belongs to the entity.
"""
import numpy as np

from .data import Sentence

_ONSETS = ["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z",
           "br", "dr", "gr", "st", "tr", "sh", "ch", "kl"]
_VOWELS = ["a", "e", "i", "o", "u", "ai", "ou", "ea"]
_CODAS = ["", "", "n", "r", "s", "l", "th", "x", "nd"]

TITLES = ["mr", "ms", "dr", "prof", "sir"]
PREPOSITIONS = ["in", "near", "from", "to", "at"]
LOC_HEADS = ["City", "Bay", "Valley", "Port"]


def _pseudo_words(rng, n, taken):
    words = []
    while len(words) < n:
        syllables = rng.integers(1, 4)
        w = "".join(rng.choice(_ONSETS) + rng.choice(_VOWELS) + rng.choice(_CODAS)
                    for _ in range(syllables))
        if len(w) >= 3 and w not in taken:
            taken.add(w)
            words.append(w)
    return words


class Lexicon:
    """Word lists of the synthetic language (built once per seed)."""

    def __init__(self, seed=0, vocab_size=200, n_first=25, n_last=25, n_places=30,
                 n_ambiguous=10):
        rng = np.random.default_rng(seed)
        fixed = TITLES + PREPOSITIONS + [h.lower() for h in LOC_HEADS]
        taken = set(fixed)
        self.first = [w.capitalize() for w in _pseudo_words(rng, n_first, taken)]
        self.last = [w.capitalize() for w in _pseudo_words(rng, n_last, taken)]
        self.places = [w.capitalize() for w in _pseudo_words(rng, n_places, taken)]
        self.ambiguous = [w.capitalize() for w in _pseudo_words(rng, n_ambiguous, taken)]
        n_filler = vocab_size - len(fixed) - n_first - n_last - n_places - n_ambiguous
        if n_filler < 10:
            raise ValueError("vocab_size too small for the requested word lists")
        self.filler = _pseudo_words(rng, n_filler, taken)

    @property
    def vocabulary(self):
        return (TITLES + PREPOSITIONS + LOC_HEADS + self.first + self.last + self.places
                + self.ambiguous + self.filler)


def _person(rng, lex):
    tokens, labels = [], []
    if rng.random() < 0.5:
        tokens.append(str(rng.choice(TITLES)))
        labels.append("O")
        names = [str(rng.choice(lex.ambiguous if rng.random() < 0.4 else lex.first))]
    else:
        names = [str(rng.choice(lex.first))]
    if rng.random() < 0.6:
        names.append(str(rng.choice(lex.last)))
    tokens += names
    labels += ["B-PER"] + ["I-PER"] * (len(names) - 1)
    return tokens, labels


def _location(rng, lex):
    tokens = [str(rng.choice(PREPOSITIONS))]
    labels = ["O"]
    head = str(rng.choice(lex.ambiguous if rng.random() < 0.4 else lex.places))
    names = [head]
    if rng.random() < 0.3:
        names.append(str(rng.choice(LOC_HEADS)))
    tokens += names
    labels += ["B-LOC"] + ["I-LOC"] * (len(names) - 1)
    return tokens, labels


def make_sentence(rng, lex):
    tokens, labels = [], []
    n_chunks = int(rng.integers(2, 5))
    for _ in range(n_chunks):
        r = rng.random()
        if r < 0.3:
            chunk = _person(rng, lex)
        elif r < 0.55:
            chunk = _location(rng, lex)
        else:
            k = int(rng.integers(1, 4))
            chunk = ([str(w) for w in rng.choice(lex.filler, size=k)], ["O"] * k)
        tokens += chunk[0]
        labels += chunk[1]
    return Sentence(tokens, labels)


def make_corpus(n_sentences, seed=0, lexicon=None):
    """``n_sentences`` random sentences with IOB2 labels."""
    lex = lexicon or Lexicon()
    rng = np.random.default_rng(seed)
    return [make_sentence(rng, lex) for _ in range(n_sentences)]


def toy_splits(n_train=500, n_dev=100, n_test=100, seed=0):
    """Train/dev/test splits drawn from one lexicon with independent streams."""
    lex = Lexicon(seed)
    return (make_corpus(n_train, seed + 1, lex), make_corpus(n_dev, seed + 2, lex),
            make_corpus(n_test, seed + 3, lex))
