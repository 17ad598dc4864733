"""Token encoder: embeddings, character biLSTM and a residual 3-layer biLSTM.

Two LSTM code paths live here.  :func:`lstm_step` and :func:`zoneout_step`
build one timestep out of generic tensor ops and serve as the readable
reference.  :func:`lstm_sequence` runs a whole (optionally batched) sequence
as a single graph node with hand-written backpropagation through time; the
encoder uses it because recording ~20 nodes per timestep is slow in pure
Python.  The test suite holds the two paths equal in value and gradient.

Gate rows of the packed weight matrices are ordered ``i, f, o, g``.
"""
from dataclasses import dataclass, field, replace

import numpy as np

from . import tensor as tn
from .errors import ConfigError, DataError, DimensionError
from .tensor import Tensor, record

NUM_LAYERS = 3


@dataclass
class LstmCell:
    """Packed LSTM parameters: ``W_x`` (4H x D), ``W_h`` (4H x H), ``b`` (4H)."""

    W_x: Tensor
    W_h: Tensor
    b: Tensor

    def __post_init__(self):
        four_h, d = self.W_x.shape
        if four_h % 4 or self.W_h.shape != (four_h, four_h // 4) or self.b.shape != (four_h,):
            raise DimensionError(
                f"inconsistent LSTM shapes W_x={self.W_x.shape} "
                f"W_h={self.W_h.shape} b={self.b.shape}")

    @property
    def hidden_size(self):
        return self.W_h.shape[1]

    @property
    def input_size(self):
        return self.W_x.shape[1]

    @classmethod
    def init(cls, input_size, hidden_size, rng):
        """Uniform(-sqrt(1/H), sqrt(1/H)) weights; forget-gate bias set to 1."""
        bound = np.sqrt(1.0 / hidden_size)
        w_x = rng.uniform(-bound, bound, size=(4 * hidden_size, input_size))
        w_h = rng.uniform(-bound, bound, size=(4 * hidden_size, hidden_size))
        b = np.zeros(4 * hidden_size)
        b[hidden_size:2 * hidden_size] = 1.0
        return cls(Tensor(w_x, True), Tensor(w_h, True), Tensor(b, True))

    @classmethod
    def zeros(cls, input_size, hidden_size):
        return cls(Tensor(np.zeros((4 * hidden_size, input_size)), True),
                   Tensor(np.zeros((4 * hidden_size, hidden_size)), True),
                   Tensor(np.zeros(4 * hidden_size), True))

    def parameters(self):
        return [("W_x", self.W_x), ("W_h", self.W_h), ("b", self.b)]


@dataclass(frozen=True)
class ZoneoutConfig:
    """Zoneout probabilities for the cell (``zc``) and hidden (``zh``) state.

    In ``"train"`` mode each unit keeps its previous value with probability
    ``zc``/``zh`` (fresh Bernoulli draw per unit and timestep).  In ``"eval"``
    mode the update is the expectation ``z * prev + (1 - z) * new`` and no
    random numbers are drawn.
    """

    zc: float = 0.0
    zh: float = 0.0
    mode: str = "train"

    def __post_init__(self):
        for name in ("zc", "zh"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ConfigError(f"{name}={value} is not a probability in [0, 1]")
        if self.mode not in ("train", "eval"):
            raise ConfigError(f"zoneout mode must be 'train' or 'eval', got {self.mode!r}")

    def eval(self):
        return replace(self, mode="eval")

    def train(self):
        return replace(self, mode="train")


NO_ZONEOUT = ZoneoutConfig()


def _check_step_shapes(cell, x_t, h_prev, c_prev):
    H, D = cell.hidden_size, cell.input_size
    if x_t.shape != (D,) or h_prev.shape != (H,) or c_prev.shape != (H,):
        raise DimensionError(
            f"LSTM step expects x ({D},), h ({H},), c ({H},); got "
            f"{x_t.shape}, {h_prev.shape}, {c_prev.shape}")


def _gates(cell, x_t, h_prev):
    H, D = cell.hidden_size, cell.input_size
    z = (tn.matmul(cell.W_x, x_t.reshape(D, 1))
         + tn.matmul(cell.W_h, h_prev.reshape(H, 1))).reshape(4 * H) + cell.b
    i = tn.sigmoid(z[0:H])
    f = tn.sigmoid(z[H:2 * H])
    o = tn.sigmoid(z[2 * H:3 * H])
    g = tn.tanh(z[3 * H:])
    return i, f, o, g


def lstm_step(cell, x_t, h_prev, c_prev):
    """One LSTM timestep from generic tensor ops; returns ``(h_t, c_t)``."""
    x_t, h_prev, c_prev = tn.tensor(x_t), tn.tensor(h_prev), tn.tensor(c_prev)
    _check_step_shapes(cell, x_t, h_prev, c_prev)
    i, f, o, g = _gates(cell, x_t, h_prev)
    c_t = f * c_prev + i * g
    h_t = o * tn.tanh(c_t)
    return h_t, c_t


def sample_keep_mask(rng, shape, prob):
    """Bernoulli(prob) keep-mask; ``True`` means "carry the previous value"."""
    return rng.random(shape) < prob


def _zone(prev, new, prob, mode, rng):
    if prob == 0.0:
        return new
    if mode == "eval":
        return prob * prev + (1.0 - prob) * new
    return tn.where(sample_keep_mask(rng, new.shape, prob), prev, new)


def zoneout_step(cell, zcfg, x_t, h_prev, c_prev, rng=None):
    """LSTM timestep with zoneout on both state vectors; returns ``(h_t, c_t)``.

    The candidate hidden state uses the *candidate* cell state,
    ``h_hat = o * tanh(f * c_prev + i * g)``, and the masks pick per unit
    between previous and candidate values.  In train mode the cell mask is
    drawn before the hidden mask.
    """
    x_t, h_prev, c_prev = tn.tensor(x_t), tn.tensor(h_prev), tn.tensor(c_prev)
    _check_step_shapes(cell, x_t, h_prev, c_prev)
    if zcfg.mode == "train" and (zcfg.zc > 0 or zcfg.zh > 0) and rng is None:
        raise ConfigError("train-mode zoneout needs a random generator")
    i, f, o, g = _gates(cell, x_t, h_prev)
    c_hat = f * c_prev + i * g
    h_hat = o * tn.tanh(c_hat)
    c_t = _zone(c_prev, c_hat, zcfg.zc, zcfg.mode, rng)
    h_t = _zone(h_prev, h_hat, zcfg.zh, zcfg.mode, rng)
    return h_t, c_t


def _sigmoid(x):
    e = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def lstm_sequence(cell, inputs, keep_c=None, keep_h=None, interp_c=0.0, interp_h=0.0,
                  reverse=False, h0=None, c0=None):
    """Run ``cell`` over a whole sequence as one differentiable node.

    Parameters
    ----------
    cell : LstmCell
    inputs : Tensor
        ``T x D`` or batched ``T x B x D``.
    keep_c, keep_h : bool arrays broadcastable to ``T x B x H``, optional
        Where true the unit keeps its previous value at that step (zoneout
        masks, or padding so that a short sequence freezes its state).
    interp_c, interp_h : float
        Deterministic zoneout: ``z * prev + (1 - z) * candidate``.
    reverse : bool
        Process positions ``T-1 .. 0``; outputs stay at their own positions.
    h0, c0 : arrays, optional
        Constant initial state, zeros by default.

    Returns
    -------
    Tensor
        Hidden states ``T x H`` (or ``T x B x H``).
    """
    X = inputs.data
    squeeze = X.ndim == 2
    if squeeze:
        X = X[:, None, :]
    if X.ndim != 3 or X.shape[2] != cell.input_size:
        raise DimensionError(
            f"LSTM with input size {cell.input_size} got inputs of shape {inputs.shape}")
    T, B, D = X.shape
    H = cell.hidden_size
    Wx, Wh = cell.W_x.data, cell.W_h.data
    kc = None if keep_c is None else np.broadcast_to(keep_c, (T, B, H))
    kh = None if keep_h is None else np.broadcast_to(keep_h, (T, B, H))

    XW = (X.reshape(T * B, D) @ Wx.T + cell.b.data).reshape(T, B, 4 * H)
    h = np.zeros((B, H)) if h0 is None else np.broadcast_to(h0, (B, H)).astype(np.float64)
    c = np.zeros((B, H)) if c0 is None else np.broadcast_to(c0, (B, H)).astype(np.float64)
    hs = np.empty((T, B, H))
    cache = [None] * T
    order = range(T - 1, -1, -1) if reverse else range(T)
    for t in order:
        z = XW[t] + h @ Wh.T
        ifo = _sigmoid(z[:, :3 * H])
        g = np.tanh(z[:, 3 * H:])
        c_hat = ifo[:, H:2 * H] * c + ifo[:, :H] * g
        tc = np.tanh(c_hat)
        h_hat = ifo[:, 2 * H:] * tc
        c_new, h_new = c_hat, h_hat
        if interp_c:
            c_new = interp_c * c + (1.0 - interp_c) * c_new
        if interp_h:
            h_new = interp_h * h + (1.0 - interp_h) * h_new
        if kc is not None:
            c_new = np.where(kc[t], c, c_new)
        if kh is not None:
            h_new = np.where(kh[t], h, h_new)
        cache[t] = (h, c, ifo, g, tc)
        h, c = h_new, c_new
        hs[t] = h

    def backward(gH):
        gH = gH.reshape(T, B, H)
        dXW = np.empty((T, B, 4 * H))
        dWh = np.zeros_like(Wh)
        dh = np.zeros((B, H))
        dc = np.zeros((B, H))
        for t in reversed(order):
            h_prev, c_prev, ifo, g, tc = cache[t]
            i, f, o = ifo[:, :H], ifo[:, H:2 * H], ifo[:, 2 * H:]
            dh = dh + gH[t]
            dh_prev = 0.0
            dc_prev = 0.0
            if kh is not None:
                dh_prev = np.where(kh[t], dh, 0.0)
                dh = np.where(kh[t], 0.0, dh)
            if kc is not None:
                dc_prev = np.where(kc[t], dc, 0.0)
                dc = np.where(kc[t], 0.0, dc)
            if interp_h:
                dh_prev = dh_prev + interp_h * dh
                dh = (1.0 - interp_h) * dh
            if interp_c:
                dc_prev = dc_prev + interp_c * dc
                dc = (1.0 - interp_c) * dc
            do = dh * tc
            dc_hat = dc + dh * o * (1.0 - tc * tc)
            dz = np.concatenate([
                dc_hat * g * i * (1.0 - i),
                dc_hat * c_prev * f * (1.0 - f),
                do * o * (1.0 - o),
                dc_hat * i * (1.0 - g * g),
            ], axis=1)
            dXW[t] = dz
            dWh += dz.T @ h_prev
            dh = dh_prev + dz @ Wh
            dc = dc_prev + dc_hat * f
        flat = dXW.reshape(T * B, 4 * H)
        dX = (flat @ Wx).reshape(inputs.shape)
        dWx = flat.T @ X.reshape(T * B, D)
        return dX, dWx, dWh, flat.sum(axis=0)

    out = hs[:, 0, :] if squeeze else hs
    return record(out, (inputs, cell.W_x, cell.W_h, cell.b), backward, "lstm_sequence")


def bilstm(fw, bw, inputs, zcfg=NO_ZONEOUT, rng=None):
    """Bidirectional layer over ``T x D`` inputs; returns ``T x 2H``.

    Train-mode masks are drawn in the order forward-cell, forward-hidden,
    backward-cell, backward-hidden, each for the whole sequence.
    """
    T = inputs.shape[0]
    outs = []
    for cell, reverse in ((fw, False), (bw, True)):
        kwargs = {}
        shape = (T, 1, cell.hidden_size)
        if zcfg.mode == "eval":
            kwargs.update(interp_c=zcfg.zc, interp_h=zcfg.zh)
        else:
            if (zcfg.zc > 0 or zcfg.zh > 0) and rng is None:
                raise ConfigError("train-mode zoneout needs a random generator")
            if zcfg.zc > 0:
                kwargs["keep_c"] = sample_keep_mask(rng, shape, zcfg.zc)
            if zcfg.zh > 0:
                kwargs["keep_h"] = sample_keep_mask(rng, shape, zcfg.zh)
        outs.append(lstm_sequence(cell, inputs, reverse=reverse, **kwargs))
    return tn.concat(outs, axis=1)


@dataclass
class EncoderParams:
    """All encoder parameters.

    ``layers`` holds exactly three ``(forward, backward)`` cell pairs.  Layer
    one reads ``word_dim + 2 * char_hidden + aux_dim`` features per token;
    layers two and three read the ``2H`` output of the layer below and add it
    back onto their own output.
    """

    word_table: Tensor
    char_table: Tensor
    char_fw: LstmCell
    char_bw: LstmCell
    layers: list = field(default_factory=list)
    aux_dim: int = 0

    def __post_init__(self):
        if len(self.layers) != NUM_LAYERS:
            raise ConfigError(f"encoder needs {NUM_LAYERS} stacked layers, got {len(self.layers)}")
        H = self.hidden_size
        expected = self.word_dim + 2 * self.char_fw.hidden_size + self.aux_dim
        for k, (fw, bw) in enumerate(self.layers):
            want = expected if k == 0 else 2 * H
            for cell in (fw, bw):
                if cell.input_size != want or cell.hidden_size != H:
                    raise DimensionError(
                        f"layer {k + 1}: cell ({cell.input_size}->{cell.hidden_size}) "
                        f"does not fit input {want}, hidden {H}")
        if self.char_fw.input_size != self.char_table.shape[1] or \
                self.char_bw.input_size != self.char_table.shape[1]:
            raise DimensionError("character LSTM input size differs from char_table width")

    @property
    def word_dim(self):
        return self.word_table.shape[1]

    @property
    def hidden_size(self):
        return self.layers[0][0].hidden_size

    @property
    def output_size(self):
        return 2 * self.hidden_size

    @classmethod
    def init(cls, n_words, n_chars, word_dim, char_dim, char_hidden, hidden, rng,
             aux_dim=0, word_table=None):
        """Random initialization, drawing from ``rng`` in a fixed order.

        Embedding tables are Uniform(-0.25, 0.25) unless ``word_table`` (e.g.
        pretrained vectors) is given; LSTM cells follow :meth:`LstmCell.init`.
        """
        if word_table is None:
            word_table = rng.uniform(-0.25, 0.25, size=(n_words, word_dim))
        elif word_table.shape != (n_words, word_dim):
            raise DimensionError(
                f"word_table has shape {word_table.shape}, expected {(n_words, word_dim)}")
        char_table = rng.uniform(-0.25, 0.25, size=(n_chars, char_dim))
        char_fw = LstmCell.init(char_dim, char_hidden, rng)
        char_bw = LstmCell.init(char_dim, char_hidden, rng)
        layers = []
        width = word_dim + 2 * char_hidden + aux_dim
        for _ in range(NUM_LAYERS):
            layers.append((LstmCell.init(width, hidden, rng), LstmCell.init(width, hidden, rng)))
            width = 2 * hidden
        return cls(Tensor(word_table, True), Tensor(char_table, True), char_fw, char_bw,
                   layers, aux_dim)

    def parameters(self):
        params = [("word_table", self.word_table), ("char_table", self.char_table)]
        for prefix, cell in (("char_fw", self.char_fw), ("char_bw", self.char_bw)):
            params += [(f"{prefix}.{n}", p) for n, p in cell.parameters()]
        for k, (fw, bw) in enumerate(self.layers, start=1):
            params += [(f"layer{k}.fw.{n}", p) for n, p in fw.parameters()]
            params += [(f"layer{k}.bw.{n}", p) for n, p in bw.parameters()]
        return params


def _char_batch(char_ids):
    lengths = np.array([len(c) for c in char_ids], dtype=np.intp)
    L = max(int(lengths.max()), 1)
    fw = np.zeros((L, len(char_ids)), dtype=np.intp)
    bw = np.zeros_like(fw)
    for k, chars in enumerate(char_ids):
        fw[:len(chars), k] = chars
        bw[:len(chars), k] = chars[::-1]
    pad = (np.arange(L)[:, None] >= lengths[None, :])[:, :, None]
    return fw, bw, pad


def char_features(params, char_ids):
    """Final forward and backward character-LSTM states, ``T x 2 * char_hidden``."""
    fw_ids, bw_ids, pad = _char_batch(char_ids)
    finals = []
    for cell, ids in ((params.char_fw, fw_ids), (params.char_bw, bw_ids)):
        states = lstm_sequence(cell, tn.rows(params.char_table, ids), keep_c=pad, keep_h=pad)
        finals.append(states[-1])
    return tn.concat(finals, axis=1)


def _check_ids(ids, size, what):
    ids = np.asarray(ids)
    if ids.size and (ids.min() < 0 or ids.max() >= size):
        bad = ids[(ids < 0) | (ids >= size)][0]
        raise DataError(f"{what} index {bad} outside table of size {size} (no UNK mapping?)")


def encode_tokens(params, sentence, zcfg=NO_ZONEOUT, rng=None):
    """Contextual token representations for one sentence, ``T x 2H``.

    ``sentence`` needs ``word_ids``, ``char_ids`` and (when the encoder was
    built with ``aux_dim > 0``) an ``aux`` matrix of shape ``T x aux_dim``.
    """
    word_ids = np.asarray(sentence.word_ids, dtype=np.intp)
    if word_ids.ndim != 1 or word_ids.size == 0:
        raise DataError("sentence must have at least one token")
    _check_ids(word_ids, params.word_table.shape[0], "word")
    for chars in sentence.char_ids:
        _check_ids(chars, params.char_table.shape[0], "character")
    if len(sentence.char_ids) != len(word_ids):
        raise DataError("char_ids and word_ids differ in length")

    parts = [tn.rows(params.word_table, word_ids), char_features(params, sentence.char_ids)]
    aux = getattr(sentence, "aux", None)
    if params.aux_dim:
        if aux is None:
            raise DataError(f"encoder expects {params.aux_dim}-dim auxiliary vectors")
        aux = np.asarray(aux, dtype=np.float64)
        if aux.shape != (len(word_ids), params.aux_dim):
            raise DataError(
                f"auxiliary vectors have shape {aux.shape}, expected "
                f"{(len(word_ids), params.aux_dim)}")
        parts.append(Tensor(aux))
    x = tn.concat(parts, axis=1)

    out = bilstm(*params.layers[0], x, zcfg, rng)
    for fw, bw in params.layers[1:]:
        out = bilstm(fw, bw, out, zcfg, rng) + out
    return out
