"""Linear-chain CRF on top of per-token emission scores.

A label sequence ``y`` of length ``T`` scores

    start[y0] + sum_t em[t, y_t] + sum_{t>=1} A[y_{t-1}, y_t] + stop[y_{T-1}]

and its probability is ``exp(score - log Z)`` where ``log Z`` sums over all
``K**T`` sequences (forward algorithm).  Losses returned here are meant to
be *minimized*.
"""
from dataclasses import dataclass

import numpy as np

from . import tensor as tn
from .errors import ConfigError, DimensionError
from .tensor import Tensor, record


@dataclass
class CrfParams:
    """Transition scores ``A[i, j]`` (label j after label i), start/stop
    scores, and the projection from encoder states to emissions."""

    transitions: Tensor
    start: Tensor
    stop: Tensor
    proj_W: Tensor
    proj_b: Tensor

    def __post_init__(self):
        K = self.transitions.shape[0]
        if (self.transitions.shape != (K, K) or self.start.shape != (K,)
                or self.stop.shape != (K,) or self.proj_W.ndim != 2
                or self.proj_W.shape[0] != K or self.proj_b.shape != (K,)):
            raise DimensionError("inconsistent CRF parameter shapes")

    @property
    def num_labels(self):
        return self.transitions.shape[0]

    @property
    def input_size(self):
        return self.proj_W.shape[1]

    @classmethod
    def init(cls, num_labels, input_size, rng):
        """Zero transition/start/stop scores; Uniform(+-sqrt(1/D)) projection."""
        bound = np.sqrt(1.0 / input_size)
        K = num_labels
        return cls(Tensor(np.zeros((K, K)), True), Tensor(np.zeros(K), True),
                   Tensor(np.zeros(K), True),
                   Tensor(rng.uniform(-bound, bound, size=(K, input_size)), True),
                   Tensor(np.zeros(K), True))

    @classmethod
    def zeros(cls, num_labels, input_size):
        K = num_labels
        return cls(Tensor(np.zeros((K, K)), True), Tensor(np.zeros(K), True),
                   Tensor(np.zeros(K), True), Tensor(np.zeros((K, input_size)), True),
                   Tensor(np.zeros(K), True))

    def parameters(self):
        return [("transitions", self.transitions), ("start", self.start),
                ("stop", self.stop), ("proj_W", self.proj_W), ("proj_b", self.proj_b)]


def _check_emissions(crf, em):
    if em.ndim != 2 or em.shape[0] < 1 or em.shape[1] != crf.num_labels:
        raise DimensionError(
            f"emissions must be T x {crf.num_labels} with T >= 1, got {em.shape}")


def _check_labels(labels, T, K):
    labels = np.asarray(labels, dtype=np.intp)
    if labels.shape != (T,):
        raise ValueError(f"expected {T} labels, got {labels.shape[0] if labels.ndim else 0}")
    if labels.size and (labels.min() < 0 or labels.max() >= K):
        raise ValueError(f"label index out of range [0, {K}): {labels.tolist()}")
    return labels


def emissions_from_encoding(crf, enc):
    """Per-token label scores ``enc @ proj_W.T + proj_b`` (``T x K``)."""
    enc = tn.tensor(enc)
    if enc.ndim != 2 or enc.shape[1] != crf.input_size:
        raise DimensionError(
            f"encoding of shape {enc.shape} does not match projection width {crf.input_size}")
    return tn.linear(enc, crf.proj_W, crf.proj_b)


def score_sequence(crf, em, labels):
    """Unnormalized score of one label sequence (scalar Tensor)."""
    em = tn.tensor(em)
    _check_emissions(crf, em)
    T = em.shape[0]
    y = _check_labels(labels, T, crf.num_labels)
    score = crf.start[int(y[0])] + tn.sum(em[np.arange(T), y])
    if T > 1:
        score = score + tn.sum(crf.transitions[y[:-1], y[1:]])
    return score + crf.stop[int(y[-1])]


def _lse(x, axis):
    m = x.max(axis=axis, keepdims=True)
    return (m + np.log(np.exp(x - m).sum(axis=axis, keepdims=True))).squeeze(axis)


def forward_scores(transitions, start, stop, E):
    """Forward-algorithm table ``alpha`` (``T x K``) and ``log Z`` on raw arrays."""
    T, K = E.shape
    alpha = np.empty((T, K))
    alpha[0] = start + E[0]
    for t in range(1, T):
        alpha[t] = E[t] + _lse(alpha[t - 1][:, None] + transitions, axis=0)
    return alpha, float(_lse(alpha[-1] + stop, axis=0))


def backward_scores(transitions, stop, E):
    """``beta[t, i]``: log-sum of scores of all continuations after label i at t."""
    T, K = E.shape
    beta = np.empty((T, K))
    beta[-1] = stop
    for t in range(T - 2, -1, -1):
        beta[t] = _lse(transitions + (E[t + 1] + beta[t + 1])[None, :], axis=1)
    return beta


def log_partition(crf, em):
    """``log Z``: log-sum-exp of the scores of every label sequence.

    Computed by the forward recursion; the gradient is obtained from the
    forward-backward marginals (emission grad = node marginals, transition
    grad = summed edge marginals).
    """
    em = tn.tensor(em)
    _check_emissions(crf, em)
    E = em.data
    A, s, e = crf.transitions.data, crf.start.data, crf.stop.data
    alpha, logz = forward_scores(A, s, e, E)

    def backward(g):
        beta = backward_scores(A, e, E)
        node = np.exp(alpha + beta - logz)
        if E.shape[0] > 1:
            edge = np.exp(alpha[:-1, :, None] + A[None] + (E[1:] + beta[1:])[:, None, :] - logz)
            dA = edge.sum(axis=0)
        else:
            dA = np.zeros_like(A)
        return g * node, g * dA, g * node[0], g * node[-1]

    return record(np.asarray(logz), (em, crf.transitions, crf.start, crf.stop), backward,
                  "log_partition")


def log_likelihood(crf, em, gold):
    """``log P(gold | sentence) = score(gold) - log Z``; never positive."""
    return score_sequence(crf, em, gold) - log_partition(crf, em)


def penalized_loss(crf, em, gold, beta):
    """Negative log-likelihood with the gold-sequence confidence penalty.

    Returns ``-(LL + beta * (-P * LL))`` with ``LL = log P(gold)`` and
    ``P = exp(LL)``, i.e. ``-LL + beta * P * LL``.  Both factors of the
    penalty come from the same differentiable ``LL``, so no second partition
    pass is needed.  ``beta == 0`` returns ``-LL`` itself.
    """
    if beta < 0:
        raise ConfigError(f"confidence penalty weight must be >= 0, got {beta}")
    ll = log_likelihood(crf, em, gold)
    if beta == 0:
        return -ll
    return -ll + beta * (tn.exp(ll) * ll)


def viterbi_decode(crf, em):
    """Best label sequence and its score.

    Every max breaks ties toward the lowest label index, so among equally
    scoring sequences the one returned is smallest when compared from the
    last position backwards.
    """
    E = em.data if isinstance(em, Tensor) else np.asarray(em, dtype=np.float64)
    _check_emissions(crf, E)
    A, s, e = crf.transitions.data, crf.start.data, crf.stop.data
    T, K = E.shape
    delta = s + E[0]
    back = np.zeros((T, K), dtype=np.intp)
    for t in range(1, T):
        cand = delta[:, None] + A
        back[t] = cand.argmax(axis=0)
        delta = E[t] + cand[back[t], np.arange(K)]
    final = delta + e
    best = int(final.argmax())
    path = [best]
    for t in range(T - 1, 0, -1):
        best = int(back[t, best])
        path.append(best)
    return path[::-1], float(final.max())
