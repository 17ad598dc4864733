"""Dense float64 tensors with tape-based reverse-mode differentiation.

Every operation on tensors that require gradients records its inputs and a
backward closure on the output tensor.  Calling :meth:`Tensor.backward` on a
scalar result walks the recorded graph once in reverse topological order and
accumulates ``d loss / d leaf`` into ``leaf.grad``.

Only what the tagger needs is here: elementwise arithmetic with scalar
broadcasting, the two LSTM nonlinearities, ``exp``/``log``, 2-D matrix
products, a stable ``logsumexp``, gathering, slicing and concatenation.

Examples
--------
>>> w = Tensor([1.0, -2.0, 3.0], requires_grad=True)
>>> loss = (w * w).sum()
>>> loss.backward()
>>> w.grad
array([ 2., -4.,  6.])
"""
import contextlib
import numbers
import threading

import numpy as np

from .errors import DimensionError, DomainError

__all__ = [
    "Tensor", "tensor", "no_grad", "is_grad_enabled", "record",
    "add", "sub", "mul", "neg", "tanh", "sigmoid", "exp", "log",
    "elementwise", "matmul", "linear", "logsumexp", "sum", "rows",
    "concat", "stack", "reshape", "transpose", "where",
]

_state = threading.local()


def is_grad_enabled():
    return getattr(_state, "enabled", True)


@contextlib.contextmanager
def no_grad():
    """Disable graph recording inside the block (inference only)."""
    previous = is_grad_enabled()
    _state.enabled = False
    try:
        yield
    finally:
        _state.enabled = previous


class Tensor:
    """A float64 array plus an optional gradient buffer.

    Parameters
    ----------
    data : array_like
        Values; copied into a C-contiguous float64 array.
    requires_grad : bool
        Whether ``backward`` should populate ``grad`` for this tensor.
    """

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "op")
    __array_priority__ = 100

    def __init__(self, data, requires_grad=False):
        self.data = np.array(data, dtype=np.float64, order="C")
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self._parents = ()
        self._backward = None
        self.op = "leaf"

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    @property
    def is_leaf(self):
        return not self._parents

    def item(self):
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else self.data.item()

    def numpy(self):
        return self.data

    def zero_grad(self):
        self.grad = None

    def detach(self):
        return Tensor(self.data)

    def __repr__(self):
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor({np.array2string(self.data, precision=6)}{flag})"

    def __len__(self):
        return len(self.data)

    # operators -------------------------------------------------------------
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, index):
        return _getitem(self, index)

    @property
    def T(self):
        return transpose(self)

    def tanh(self):
        return tanh(self)

    def sigmoid(self):
        return sigmoid(self)

    def exp(self):
        return exp(self)

    def log(self):
        return log(self)

    def sum(self):
        return sum(self)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    # differentiation -------------------------------------------------------
    def backward(self):
        """Accumulate ``d self / d x`` into ``x.grad`` for every ancestor ``x``.

        Leaf gradients add onto whatever is already stored, so parameters used
        by several losses (or several times in one loss) sum their
        contributions; callers zero them between optimizer steps.
        """
        if self.data.size != 1:
            raise ValueError(f"backward() needs a scalar loss, got shape {self.shape}")
        order = _topological_order(self)
        grads = {id(self): np.ones_like(self.data)}
        for node in reversed(order):
            g = grads.pop(id(node), None)
            if node._parents:
                node.grad = g
                if g is None:
                    continue
                for parent, pg in zip(node._parents, node._backward(g)):
                    if pg is None or not parent.requires_grad:
                        continue
                    key = id(parent)
                    if key in grads:
                        grads[key] = grads[key] + pg
                    else:
                        grads[key] = pg
            else:
                if g is None:
                    g = np.zeros_like(node.data)
                node.grad = g.copy() if node.grad is None else node.grad + g


def _topological_order(root):
    order, seen = [], set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if parent.requires_grad and id(parent) not in seen:
                stack.append((parent, False))
    return order


def tensor(data, requires_grad=False):
    return data if isinstance(data, Tensor) else Tensor(data, requires_grad)


def record(data, parents, backward, op):
    """Wrap an op result, attaching ``backward`` when any parent needs grads.

    ``backward(g)`` receives the output gradient and returns one gradient
    array (or None) per parent, in order.
    """
    out = Tensor.__new__(Tensor)
    out.data = data
    out.grad = None
    out.op = op
    if is_grad_enabled() and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward = backward
    else:
        out.requires_grad = False
        out._parents = ()
        out._backward = None
    return out


def _as_tensor(x):
    if isinstance(x, Tensor):
        return x
    if isinstance(x, numbers.Real):
        return Tensor(float(x))
    return Tensor(x)


def _unbroadcast(g, shape):
    # scalar-to-tensor broadcast only
    if g.shape == shape:
        return g
    return np.asarray(g.sum()).reshape(shape)


def _check_binary(a, b, name):
    if a.shape != b.shape and a.size != 1 and b.size != 1:
        raise DimensionError(f"{name}: shapes {a.shape} and {b.shape} differ")


def add(a, b):
    a, b = _as_tensor(a), _as_tensor(b)
    _check_binary(a, b, "add")

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return record(a.data + b.data, (a, b), backward, "add")


def sub(a, b):
    a, b = _as_tensor(a), _as_tensor(b)
    _check_binary(a, b, "sub")

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return record(a.data - b.data, (a, b), backward, "sub")


def mul(a, b):
    a, b = _as_tensor(a), _as_tensor(b)
    _check_binary(a, b, "mul")

    def backward(g):
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    return record(a.data * b.data, (a, b), backward, "mul")


def neg(a):
    a = _as_tensor(a)
    return record(-a.data, (a,), lambda g: (-g,), "neg")


def tanh(a):
    a = _as_tensor(a)
    y = np.tanh(a.data)
    return record(y, (a,), lambda g: (g * (1.0 - y * y),), "tanh")


def _sigmoid(x):
    e = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def sigmoid(a):
    a = _as_tensor(a)
    y = _sigmoid(a.data)
    return record(y, (a,), lambda g: (g * y * (1.0 - y),), "sigmoid")


def exp(a):
    a = _as_tensor(a)
    y = np.exp(a.data)
    return record(y, (a,), lambda g: (g * y,), "exp")


def log(a):
    a = _as_tensor(a)
    if np.any(a.data <= 0):
        raise DomainError("log of a non-positive value")
    x = a.data
    return record(np.log(x), (a,), lambda g: (g / x,), "log")


_ELEMENTWISE = {
    "add": add, "sub": sub, "mul": mul, "neg": neg,
    "tanh": tanh, "sigmoid": sigmoid, "log": log, "exp": exp,
}


def elementwise(op, *args):
    """Apply a named pointwise operation, e.g. ``elementwise("tanh", x)``."""
    try:
        fn = _ELEMENTWISE[op]
    except KeyError:
        raise ValueError(f"unknown elementwise op {op!r}") from None
    return fn(*args)


def matmul(a, b):
    """Product of an ``m x k`` and a ``k x n`` tensor."""
    a, b = _as_tensor(a), _as_tensor(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise DimensionError(f"matmul: cannot multiply {a.shape} by {b.shape}")
    A, B = a.data, b.data

    def backward(g):
        return g @ B.T, A.T @ g

    return record(A @ B, (a, b), backward, "matmul")


def linear(x, weight, bias):
    """Row-wise affine map ``x @ weight.T + bias`` for ``x`` of shape ``N x D``."""
    x, weight, bias = _as_tensor(x), _as_tensor(weight), _as_tensor(bias)
    if (x.ndim != 2 or weight.ndim != 2 or x.shape[1] != weight.shape[1]
            or bias.shape != (weight.shape[0],)):
        raise DimensionError(
            f"linear: input {x.shape}, weight {weight.shape}, bias {bias.shape} disagree")
    X, W = x.data, weight.data

    def backward(g):
        return g @ W, g.T @ X, g.sum(axis=0)

    return record(X @ W.T + bias.data, (x, weight, bias), backward, "linear")


def logsumexp(x):
    """``log(sum(exp(x)))`` over all entries, shifted by the max for stability."""
    x = _as_tensor(x)
    if x.size == 0:
        raise ValueError("logsumexp of an empty tensor")
    v = x.data
    m = v.max()
    s = np.exp(v - m).sum()
    y = m + np.log(s)

    def backward(g):
        return (g * np.exp(v - y),)

    return record(np.asarray(y, dtype=np.float64), (x,), backward, "logsumexp")


def sum(x):
    x = _as_tensor(x)
    shape = x.shape
    return record(np.asarray(x.data.sum()), (x,),
                  lambda g: (np.broadcast_to(g, shape).copy(),), "sum")


def rows(table, ids):
    """Gather rows ``table[ids]``; ``ids`` may have any integer shape."""
    ids = np.asarray(ids, dtype=np.intp)
    shape = table.shape

    def backward(g):
        full = np.zeros(shape)
        np.add.at(full, ids, g)
        return (full,)

    return record(table.data[ids], (table,), backward, "rows")


def _is_basic_index(index):
    parts = index if isinstance(index, tuple) else (index,)
    return all(isinstance(p, (numbers.Integral, slice)) or p is None or p is Ellipsis
               for p in parts)


def _getitem(x, index):
    shape = x.shape
    basic = _is_basic_index(index)

    def backward(g):
        full = np.zeros(shape)
        if basic:
            full[index] += g
        else:
            np.add.at(full, index, g)
        return (full,)

    return record(np.array(x.data[index]), (x,), backward, "getitem")


def concat(tensors, axis=0):
    tensors = [_as_tensor(t) for t in tensors]
    sizes = [t.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]
    try:
        data = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError as exc:
        raise DimensionError(f"concat: {[t.shape for t in tensors]}: {exc}") from None

    def backward(g):
        return tuple(np.split(g, splits, axis=axis))

    return record(data, tensors, backward, "concat")


def stack(tensors, axis=0):
    tensors = [_as_tensor(t) for t in tensors]
    try:
        data = np.stack([t.data for t in tensors], axis=axis)
    except ValueError as exc:
        raise DimensionError(f"stack: {[t.shape for t in tensors]}: {exc}") from None

    def backward(g):
        return tuple(np.take(g, i, axis=axis) for i in range(len(tensors)))

    return record(data, tensors, backward, "stack")


def reshape(x, shape):
    x = _as_tensor(x)
    old = x.shape
    try:
        data = x.data.reshape(shape)
    except ValueError:
        raise DimensionError(f"reshape: cannot view {old} as {shape}") from None
    return record(data, (x,), lambda g: (g.reshape(old),), "reshape")


def transpose(x):
    x = _as_tensor(x)
    if x.ndim != 2:
        raise DimensionError(f"transpose needs a matrix, got {x.shape}")
    return record(np.ascontiguousarray(x.data.T), (x,), lambda g: (g.T,), "transpose")


def where(mask, a, b):
    """Select ``a`` where ``mask`` is true, else ``b``; the mask is a constant."""
    a, b = _as_tensor(a), _as_tensor(b)
    mask = np.asarray(mask, dtype=bool)
    if a.shape != b.shape or mask.shape != a.shape:
        raise DimensionError(f"where: mask {mask.shape}, operands {a.shape}, {b.shape}")

    def backward(g):
        return np.where(mask, g, 0.0), np.where(mask, 0.0, g)

    return record(np.where(mask, a.data, b.data), (a, b), backward, "where")
