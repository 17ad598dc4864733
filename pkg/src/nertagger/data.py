"""CoNLL column files, tagging schemes, vocabularies and vector files.

CoNLL files hold one token per line with whitespace-separated columns, the
token first and the NER label last; a blank line ends a sentence and
``-DOCSTART-`` lines are skipped.  Labels are kept internally in IOB2.
"""
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, ParseError

PAD = "<pad>"
UNK = "<unk>"
_DIGITS = re.compile(r"\d")
_LABEL = re.compile(r"^(?:O|[BI]-\S+)$")


@dataclass
class Sentence:
    """One sentence: surface tokens, string labels and model indices.

    ``columns`` keeps every input column of every line so files can be
    echoed back with an extra prediction column.  ``word_ids``, ``char_ids``
    and ``gold_labels`` are filled by :func:`index_sentences`.
    """

    tokens: list
    labels: list = None
    columns: list = None
    word_ids: list = None
    char_ids: list = None
    gold_labels: list = None
    aux: np.ndarray = None

    def __post_init__(self):
        if self.labels is not None and len(self.labels) != len(self.tokens):
            raise DataError("tokens and labels differ in length")
        if self.columns is None:
            if self.labels is None:
                self.columns = [[tok] for tok in self.tokens]
            else:
                self.columns = [[tok, lab] for tok, lab in zip(self.tokens, self.labels)]

    def __len__(self):
        return len(self.tokens)


def read_conll(path, label_column=-1):
    """Parse a CoNLL file into :class:`Sentence` objects with string labels.

    Single-column files yield sentences whose ``labels`` is None.  All lines
    of a sentence must have the same number of columns.
    """
    sentences = []
    block = []

    def flush():
        if not block:
            return
        widths = {len(cols) for _, cols in block}
        if len(widths) > 1:
            first = block[0][1]
            for lineno, cols in block:
                if len(cols) != len(first):
                    raise ParseError(
                        f"expected {len(first)} columns, found {len(cols)}", lineno, path)
        cols = [c for _, c in block]
        labels = None if len(cols[0]) == 1 else [c[label_column] for c in cols]
        sentences.append(Sentence([c[0] for c in cols], labels, cols))
        block.clear()

    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            cols = line.split()
            if not cols:
                flush()
            elif cols[0] == "-DOCSTART-":
                flush()
            else:
                block.append((lineno, cols))
    flush()
    return sentences


def write_conll(path, sentences, predictions=None):
    """Write sentences back in CoNLL layout.

    Each line repeats the sentence's stored columns; ``predictions`` (one
    label list per sentence) is appended as a final column when given.
    """
    with open(path, "w", encoding="utf-8") as fh:
        for k, sent in enumerate(sentences):
            for t, cols in enumerate(sent.columns):
                row = list(cols)
                if predictions is not None:
                    row.append(predictions[k][t])
                fh.write(" ".join(row) + "\n")
            fh.write("\n")


# tagging schemes --------------------------------------------------------------

def _split(label):
    if not _LABEL.match(label):
        raise DataError(f"invalid label {label!r}")
    if label == "O":
        return "O", None
    return label[0], label[2:]


def spans_from_labels(labels):
    """``(type, start, end)`` spans; an ``I-`` that cannot continue opens a span.

    This reading is correct for both IOB1 and IOB2 input.
    """
    spans = []
    kind = start = None
    for t, label in enumerate(labels):
        prefix, typ = _split(label)
        if kind is not None and (prefix != "I" or typ != kind):
            spans.append((kind, start, t))
            kind = None
        if prefix != "O" and kind is None:
            kind, start = typ, t
    if kind is not None:
        spans.append((kind, start, len(labels)))
    return spans


def labels_from_spans(spans, length, scheme="iob2"):
    labels = ["O"] * length
    prev_end, prev_type = None, None
    for typ, start, end in sorted(spans, key=lambda s: s[1]):
        if scheme == "iob2" or (prev_end == start and prev_type == typ):
            labels[start] = f"B-{typ}"
        else:
            labels[start] = f"I-{typ}"
        for t in range(start + 1, end):
            labels[t] = f"I-{typ}"
        prev_end, prev_type = end, typ
    return labels


def convert_labels(labels, source, target):
    """Re-encode one label sequence between ``"iob1"`` and ``"iob2"``."""
    for s in (source, target):
        if s not in ("iob1", "iob2"):
            raise DataError(f"unknown tagging scheme {s!r}")
    return labels_from_spans(spans_from_labels(labels), len(labels), target)


def convert_scheme(sentences, source="iob1", target="iob2"):
    """Return copies of ``sentences`` with labels re-encoded; spans unchanged."""
    out = []
    for sent in sentences:
        if sent.labels is None:
            out.append(sent)
            continue
        labels = convert_labels(sent.labels, source, target)
        out.append(Sentence(list(sent.tokens), labels, [list(c) for c in sent.columns],
                            aux=sent.aux))
    return out


# vocabularies -----------------------------------------------------------------

@dataclass
class Vocab:
    """String-to-index map with ``<pad>`` at 0 and ``<unk>`` at 1.

    ``lowercase`` and ``normalize_digits`` are applied on insertion and on
    lookup alike, so train and test see the same policy.
    """

    lowercase: bool = False
    normalize_digits: bool = False
    itos: list = field(default_factory=lambda: [PAD, UNK])

    def __post_init__(self):
        self.stoi = {}
        for i, tok in enumerate(self.itos):
            if tok in self.stoi:
                raise DataError(f"duplicate vocabulary entry {tok!r}")
            self.stoi[tok] = i
        if self.itos[:2] != [PAD, UNK]:
            raise DataError("vocabulary must start with <pad>, <unk>")

    pad_index = 0
    unk_index = 1

    def normalize(self, token):
        if self.lowercase:
            token = token.lower()
        if self.normalize_digits:
            token = _DIGITS.sub("0", token)
        return token

    def add(self, token):
        key = self.normalize(token)
        if key not in self.stoi:
            self.stoi[key] = len(self.itos)
            self.itos.append(key)
        return self.stoi[key]

    def __getitem__(self, token):
        return self.stoi.get(self.normalize(token), self.unk_index)

    def __contains__(self, token):
        return self.normalize(token) in self.stoi

    def __len__(self):
        return len(self.itos)


class LabelSet:
    """Bijection between label strings and indices; always contains ``O``."""

    def __init__(self, labels=("O",)):
        self.itos = []
        self.stoi = {}
        for lab in ["O", *labels]:
            self.add(lab)

    def add(self, label):
        _split(label)
        if label not in self.stoi:
            self.stoi[label] = len(self.itos)
            self.itos.append(label)
        return self.stoi[label]

    @classmethod
    def from_sentences(cls, sentences):
        found = sorted({lab for s in sentences for lab in (s.labels or [])},
                       key=lambda lab: (lab[2:], lab))
        return cls(found)

    def __getitem__(self, label):
        try:
            return self.stoi[label]
        except KeyError:
            raise DataError(f"label {label!r} not in label set {self.itos}") from None

    def __len__(self):
        return len(self.itos)


def build_vocabs(sentences, embedding_tokens=(), lowercase=True, normalize_digits=False):
    """Word vocabulary (training tokens plus embedding-file tokens) and the
    character vocabulary (training characters, case preserved)."""
    words = Vocab(lowercase, normalize_digits)
    chars = Vocab(False, False)
    for sent in sentences:
        for tok in sent.tokens:
            words.add(tok)
            for ch in tok:
                chars.add(ch)
    for tok in embedding_tokens:
        words.add(tok)
    return words, chars


def index_sentences(sentences, words, chars, labels=None):
    """Fill ``word_ids``, ``char_ids`` and (if ``labels``) ``gold_labels``."""
    for sent in sentences:
        if not sent.tokens:
            raise DataError("empty sentence")
        sent.word_ids = [words[tok] for tok in sent.tokens]
        sent.char_ids = [[chars[ch] for ch in tok] for tok in sent.tokens]
        if labels is not None and sent.labels is not None:
            sent.gold_labels = [labels[lab] for lab in sent.labels]
    return sentences


# vector files -----------------------------------------------------------------

def read_embedding_file(path, dim):
    """``token -> vector`` from a text file of ``token f1 ... f_dim`` lines.

    The first occurrence of a token wins.  A line with the wrong number of
    floats raises :class:`ParseError`.
    """
    vectors = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").split(" ")
            parts = [p for p in parts if p]
            if not parts:
                continue
            if len(parts) - 1 != dim:
                raise ParseError(f"expected {dim} values, found {len(parts) - 1}", lineno, path)
            try:
                vec = np.array([float(x) for x in parts[1:]])
            except ValueError as exc:
                raise ParseError(str(exc), lineno, path) from None
            vectors.setdefault(parts[0], vec)
    return vectors


def embedding_matrix(vocab, vectors, dim, rng):
    """Rows for ``vocab``: pretrained where available, else Uniform(-0.25, 0.25).

    Returns ``(matrix, coverage)`` where ``coverage`` is the fraction of
    non-reserved vocabulary entries found in ``vectors``.
    """
    lookup = {}
    for tok, vec in vectors.items():
        lookup.setdefault(vocab.normalize(tok), vec)
    table = rng.uniform(-0.25, 0.25, size=(len(vocab), dim))
    found = 0
    for i, tok in enumerate(vocab.itos):
        if i < 2:
            continue
        if tok in lookup:
            table[i] = lookup[tok]
            found += 1
    total = len(vocab) - 2
    return table, (found / total if total else 0.0)


def load_embeddings(path, dim, train_sentences, rng, lowercase=True, normalize_digits=False):
    """Vocabularies plus the initial word table for a training run.

    Returns ``(words, chars, table, coverage)``; ``coverage`` is the share of
    *training* vocabulary found in the file.
    """
    vectors = read_embedding_file(path, dim)
    words, chars = build_vocabs(train_sentences, vectors.keys(), lowercase, normalize_digits)
    table, _ = embedding_matrix(words, vectors, dim, rng)
    train_words = {words.normalize(t) for s in train_sentences for t in s.tokens}
    known = {words.normalize(t) for t in vectors}
    coverage = len(train_words & known) / len(train_words) if train_words else 0.0
    return words, chars, table, coverage


def read_aux_vectors(path):
    """Per-sentence auxiliary matrices from a block file.

    Each block starts with ``# sentence <i>`` and is followed by one row of
    floats per token.  Returns ``{i: array (T_i, width)}``; all rows in the
    file must share one width.
    """
    blocks = {}
    current = None
    width = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text:
                continue
            if text.startswith("#"):
                m = re.match(r"#\s*sentence\s+(\d+)\s*$", text)
                if not m:
                    raise ParseError(f"bad block header {text!r}", lineno, path)
                current = int(m.group(1))
                if current in blocks:
                    raise ParseError(f"duplicate block for sentence {current}", lineno, path)
                blocks[current] = []
                continue
            if current is None:
                raise ParseError("vector row before any '# sentence' header", lineno, path)
            try:
                row = [float(x) for x in text.split()]
            except ValueError as exc:
                raise ParseError(str(exc), lineno, path) from None
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise ParseError(f"row width {len(row)} differs from {width}", lineno, path)
            blocks[current].append(row)
    return {k: np.array(rows, dtype=np.float64).reshape(len(rows), width or 0)
            for k, rows in blocks.items()}


def attach_aux(sentences, blocks):
    """Set ``sentence.aux`` from :func:`read_aux_vectors` output; returns the width."""
    width = None
    for i, sent in enumerate(sentences):
        if i not in blocks:
            raise DataError(f"no auxiliary vectors for sentence {i}")
        mat = blocks[i]
        if mat.shape[0] != len(sent):
            raise DataError(
                f"sentence {i} has {len(sent)} tokens but {mat.shape[0]} auxiliary rows")
        if width is not None and mat.shape[1] != width:
            raise DataError("auxiliary vectors differ in width")
        width = mat.shape[1]
        sent.aux = mat
    return width or 0


def load_aux_vectors(path, sentences=None):
    """Read an aux file and, if ``sentences`` is given, attach it; returns width.

    ``path=None`` (no file) leaves the pipeline unchanged and returns 0.
    """
    if path is None:
        return 0
    blocks = read_aux_vectors(path)
    if sentences is None:
        widths = {m.shape[1] for m in blocks.values()}
        return widths.pop() if widths else 0
    return attach_aux(sentences, blocks)
