"""Entity-level precision/recall/F1 and an approximate randomization test."""
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .data import spans_from_labels


class EntitySpan(NamedTuple):
    type: str
    start: int
    end: int


def extract_entities(labels):
    """Entity spans (end exclusive) sorted by start.

    A ``B-X`` opens a span and following ``I-X`` extend it.  An ``I-X`` after
    ``O`` or after a different type opens a new span, as conlleval does.
    """
    return [EntitySpan(*s) for s in spans_from_labels(list(labels))]


def _prf(correct, predicted, gold):
    precision = correct / predicted if predicted else 0.0
    recall = correct / gold if gold else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


@dataclass
class EvalReport:
    """Micro-averaged scores as fractions in ``[0, 1]``.

    ``per_type`` maps an entity type to ``(precision, recall, f1, gold,
    predicted, correct)``.
    """

    precision: float
    recall: float
    f1: float
    n_gold: int
    n_predicted: int
    n_correct: int
    n_tokens: int = 0
    per_type: dict = field(default_factory=dict)

    def format_text(self):
        lines = [
            f"processed {self.n_tokens} tokens with {self.n_gold} phrases; "
            f"found: {self.n_predicted} phrases; correct: {self.n_correct}.",
            f"precision: {100 * self.precision:6.2f}%; recall: {100 * self.recall:6.2f}%; "
            f"FB1: {100 * self.f1:6.2f}",
        ]
        for typ in sorted(self.per_type):
            p, r, f, _, npred, _ = self.per_type[typ]
            lines.append(f"{typ:>17}: precision: {100 * p:6.2f}%; recall: {100 * r:6.2f}%; "
                         f"FB1: {100 * f:6.2f}  {npred}")
        return "\n".join(lines)

    def format_kv(self):
        rows = [("precision", repr(self.precision)), ("recall", repr(self.recall)),
                ("f1", repr(self.f1)), ("gold", self.n_gold),
                ("predicted", self.n_predicted), ("correct", self.n_correct)]
        for typ in sorted(self.per_type):
            p, r, f, ng, npred, nc = self.per_type[typ]
            rows += [(f"{typ}.precision", repr(p)), (f"{typ}.recall", repr(r)),
                     (f"{typ}.f1", repr(f)), (f"{typ}.gold", ng),
                     (f"{typ}.predicted", npred), (f"{typ}.correct", nc)]
        return "\n".join(f"{k}={v}" for k, v in rows)


def _label_lists(seqs):
    return [list(s.labels) if hasattr(s, "labels") else list(s) for s in seqs]


def _check_aligned(gold, pred):
    if len(gold) != len(pred):
        raise ValueError(f"{len(gold)} gold sentences but {len(pred)} predicted")
    for k, (g, p) in enumerate(zip(gold, pred)):
        if len(g) != len(p):
            raise ValueError(f"sentence {k}: {len(g)} gold labels but {len(p)} predicted")


def f1_score(gold, pred):
    """Exact-match entity scores over all sentences.

    ``gold`` and ``pred`` are parallel sequences of label lists (or objects
    with a ``labels`` attribute).
    """
    gold, pred = _label_lists(gold), _label_lists(pred)
    _check_aligned(gold, pred)
    counts = {}
    n_gold = n_pred = n_corr = n_tok = 0
    for g, p in zip(gold, pred):
        gs, ps = set(extract_entities(g)), set(extract_entities(p))
        n_tok += len(g)
        n_gold += len(gs)
        n_pred += len(ps)
        n_corr += len(gs & ps)
        for span in gs:
            counts.setdefault(span.type, [0, 0, 0])[0] += 1
        for span in ps:
            counts.setdefault(span.type, [0, 0, 0])[1] += 1
        for span in gs & ps:
            counts[span.type][2] += 1
    per_type = {typ: (*_prf(c, np_, ng), ng, np_, c) for typ, (ng, np_, c) in counts.items()}
    return EvalReport(*_prf(n_corr, n_pred, n_gold), n_gold, n_pred, n_corr, n_tok, per_type)


_TIE_EPS = 1e-12


class RandomizationResult(NamedTuple):
    f1_a: float
    f1_b: float
    delta: float
    p_value: float
    iterations: int


def _f1_vec(correct, predicted, gold):
    correct = np.asarray(correct, dtype=np.float64)
    predicted = np.asarray(predicted, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        p = np.where(predicted > 0, correct / predicted, 0.0)
        r = correct / gold if gold else np.zeros_like(correct)
        return np.where(p + r > 0, 2 * p * r / (p + r), 0.0)


def randomization_test(gold, pred_a, pred_b, iterations=10000, rng=None, chunk=1000):
    """Paired approximate randomization test on entity F1.

    Each round swaps the two systems' outputs for every sentence
    independently with probability 1/2 and recomputes ``|F1_a - F1_b|``.
    ``p = (1 + #{rounds with delta >= observed}) / (1 + iterations)``.
    """
    if iterations < 1:
        raise ValueError(f"iterations must be >= 1, got {iterations}")
    gold, pred_a, pred_b = _label_lists(gold), _label_lists(pred_a), _label_lists(pred_b)
    _check_aligned(gold, pred_a)
    _check_aligned(gold, pred_b)
    rng = np.random.default_rng(rng)

    n_gold = 0
    ca, pa, cb, pb = [], [], [], []
    for g, a, b in zip(gold, pred_a, pred_b):
        gs, as_, bs = set(extract_entities(g)), set(extract_entities(a)), set(extract_entities(b))
        n_gold += len(gs)
        ca.append(len(gs & as_))
        pa.append(len(as_))
        cb.append(len(gs & bs))
        pb.append(len(bs))
    ca, pa, cb, pb = (np.array(x, dtype=np.float64) for x in (ca, pa, cb, pb))

    f1_a = float(_f1_vec(ca.sum(), pa.sum(), n_gold))
    f1_b = float(_f1_vec(cb.sum(), pb.sum(), n_gold))
    observed = abs(f1_a - f1_b)

    hits = 0
    done = 0
    while done < iterations:
        n = min(chunk, iterations - done)
        swap = rng.random((n, len(gold))) < 0.5
        sa = _f1_vec(np.where(swap, cb, ca).sum(1), np.where(swap, pb, pa).sum(1), n_gold)
        sb = _f1_vec(np.where(swap, ca, cb).sum(1), np.where(swap, pa, pb).sum(1), n_gold)
        # ties that differ only by rounding still count as hits
        hits += int(np.count_nonzero(np.abs(sa - sb) >= observed - _TIE_EPS))
        done += n
    return RandomizationResult(f1_a, f1_b, observed, (1 + hits) / (1 + iterations), iterations)
