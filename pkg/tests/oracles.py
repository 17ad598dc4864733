"""Independent reference computations used as test oracles.

Nothing here imports the package's numerical code: CRF quantities come from
explicit enumeration of all label sequences, the LSTM from a per-gate
transcription of the cell equations, spans from a quadratic scan.
"""
import itertools
import math

import numpy as np


def enumerate_scores(E, A, start, stop):
    """Score of every label sequence, accumulated left to right.

    The association order (start + em0, then + A, then + em) mirrors a
    max-product recursion so that maxima compare exactly.
    """
    T, K = E.shape
    out = {}
    for seq in itertools.product(range(K), repeat=T):
        s = start[seq[0]] + E[0, seq[0]]
        for t in range(1, T):
            s = s + A[seq[t - 1], seq[t]] + E[t, seq[t]]
        out[seq] = s + stop[seq[-1]]
    return out


def brute_log_partition(E, A, start, stop):
    scores = np.array(list(enumerate_scores(E, A, start, stop).values()))
    m = scores.max()
    return m + math.log(np.exp(scores - m).sum())


def brute_best(E, A, start, stop):
    """Max score and the optimal sequence smallest when read right-to-left."""
    scores = enumerate_scores(E, A, start, stop)
    best = max(scores.values())
    winners = [seq for seq, s in scores.items() if s == best]
    return best, list(min(winners, key=lambda seq: seq[::-1]))


def brute_marginals(E, A, start, stop):
    """Per-position label marginals by summing sequence probabilities."""
    T, K = E.shape
    scores = enumerate_scores(E, A, start, stop)
    logz = brute_log_partition(E, A, start, stop)
    marg = np.zeros((T, K))
    for seq, s in scores.items():
        p = math.exp(s - logz)
        for t, y in enumerate(seq):
            marg[t, y] += p
    return marg


def _sig(x):
    return 1.0 / (1.0 + np.exp(-x))


def lstm_step_ref(Wx, Wh, b, x, h, c):
    """Cell equations written gate by gate (rows ordered i, f, o, g)."""
    H = Wh.shape[1]
    Wxi, Wxf, Wxo, Wxg = (Wx[k * H:(k + 1) * H] for k in range(4))
    Whi, Whf, Who, Whg = (Wh[k * H:(k + 1) * H] for k in range(4))
    bi, bf, bo, bg = (b[k * H:(k + 1) * H] for k in range(4))
    i = _sig(Wxi @ x + Whi @ h + bi)
    f = _sig(Wxf @ x + Whf @ h + bf)
    o = _sig(Wxo @ x + Who @ h + bo)
    g = np.tanh(Wxg @ x + Whg @ h + bg)
    c_new = f * c + i * g
    return o * np.tanh(c_new), c_new


def lstm_run_ref(Wx, Wh, b, xs):
    H = Wh.shape[1]
    h, c = np.zeros(H), np.zeros(H)
    out = []
    for x in xs:
        h, c = lstm_step_ref(Wx, Wh, b, x, h, c)
        out.append(h)
    return np.array(out)


def spans_quadratic(labels):
    """Spans by testing every (start, end) pair for maximality."""
    n = len(labels)
    spans = set()
    for s in range(n):
        lab = labels[s]
        if lab == "O":
            continue
        typ = lab[2:]
        opens = lab.startswith("B-") or s == 0 or labels[s - 1] == "O" \
            or labels[s - 1][2:] != typ
        if not opens:
            continue
        for e in range(s + 1, n + 1):
            inside = all(labels[k] == f"I-{typ}" for k in range(s + 1, e))
            closes = e == n or labels[e] != f"I-{typ}"
            if inside and closes:
                spans.add((typ, s, e))
    return spans
