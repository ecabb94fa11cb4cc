"""Reverse-mode automatic differentiation over dense numpy arrays.

Implements exactly the operation set the trajectory network needs:
broadcasting arithmetic, matmul, reductions, elementwise nonlinearities,
masked softmax, shape manipulation, and scalar `backward()`. No GPU, no
fusion, no broadcasting rules beyond numpy's.
"""

from __future__ import annotations

import numpy as np


class ShapeMismatch(ValueError):
    """Operand shapes are incompatible for the requested operation."""


class Tensor:
    """Dense array node of a reverse-mode computation graph.

    `values` is the forward array, `grad` (same shape) is filled by
    `backward()`. Graph edges are held in `_parents`; `_backward` pushes the
    node's output gradient to its parents.
    """

    __slots__ = ("values", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, values, requires_grad: bool = False):
        self.values = np.asarray(values)
        self.grad = None
        self.requires_grad = requires_grad
        self._parents = ()
        self._backward = None

    @property
    def shape(self):
        return self.values.shape

    @property
    def ndim(self):
        return self.values.ndim

    @property
    def dtype(self):
        return self.values.dtype

    def item(self) -> float:
        return float(self.values)

    def detach(self) -> "Tensor":
        """Constant copy of this node's values, cut off from the graph."""
        return Tensor(self.values.copy())

    def __repr__(self):
        return f"Tensor(shape={self.values.shape}, dtype={self.values.dtype}, requires_grad={self.requires_grad})"

    def backward(self):
        """Accumulate d(self)/d(parent) into `.grad` over the whole graph.

        Only defined for scalar outputs; grads of reachable nodes with
        `requires_grad` are summed into their `.grad` (initialized lazily).
        """
        if self.values.size != 1:
            raise ShapeMismatch(f"backward() needs a scalar, got shape {self.values.shape}")
        topo = _toposort(self)
        self.grad = np.ones_like(self.values)
        for node in reversed(topo):
            if node._backward is not None:
                node._backward(node.grad)

    # -- operator sugar -------------------------------------------------

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(_coerce(other, self.dtype), self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(self, other)

    def __truediv__(self, other):
        return div(self, other)

    def __neg__(self):
        return neg(self)

    def __pow__(self, p):
        return power(self, p)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, idx):
        return getitem(self, idx)


class Parameter(Tensor):
    """Named, trainable leaf tensor; the name is the checkpoint identity."""

    __slots__ = ("name", "trainable")

    def __init__(self, name: str, values, trainable: bool = True):
        super().__init__(np.asarray(values), requires_grad=trainable)
        self.name = name
        self.trainable = trainable

    def __repr__(self):
        return f"Parameter({self.name!r}, shape={self.values.shape})"


def _toposort(root: Tensor):
    """Iterative post-order over the requiring subgraph (no recursion limit)."""
    topo = []
    visited = set()
    stack = [(root, False)]
    while stack:
        node, done = stack.pop()
        if done:
            topo.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if p.requires_grad and id(p) not in visited:
                stack.append((p, False))
    return topo


def _coerce(x, dtype) -> Tensor:
    """Wrap scalars/arrays as constant tensors without dtype promotion."""
    if isinstance(x, Tensor):
        return x
    return Tensor(np.asarray(x, dtype=dtype))


def _accum(t: Tensor, g: np.ndarray):
    if t.requires_grad:
        t.grad = g if t.grad is None else t.grad + g


def _make(values: np.ndarray, parents, backward) -> Tensor:
    out = Tensor(values)
    if any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward = backward
    return out


def _unbroadcast(g: np.ndarray, shape) -> np.ndarray:
    """Sum a broadcast gradient back down to `shape`."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and g.shape[i] > 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


# -- arithmetic ----------------------------------------------------------


def add(a, b) -> Tensor:
    a = _coerce(a, getattr(b, "dtype", None) or np.asarray(a).dtype)
    b = _coerce(b, a.dtype)
    out_v = a.values + b.values

    def bk(g):
        _accum(a, _unbroadcast(g, a.values.shape))
        _accum(b, _unbroadcast(g, b.values.shape))

    return _make(out_v, (a, b), bk)


def sub(a, b) -> Tensor:
    a = _coerce(a, getattr(b, "dtype", None) or np.asarray(a).dtype)
    b = _coerce(b, a.dtype)
    out_v = a.values - b.values

    def bk(g):
        _accum(a, _unbroadcast(g, a.values.shape))
        _accum(b, _unbroadcast(-g, b.values.shape))

    return _make(out_v, (a, b), bk)


def mul(a, b) -> Tensor:
    a = _coerce(a, getattr(b, "dtype", None) or np.asarray(a).dtype)
    b = _coerce(b, a.dtype)
    out_v = a.values * b.values

    def bk(g):
        _accum(a, _unbroadcast(g * b.values, a.values.shape))
        _accum(b, _unbroadcast(g * a.values, b.values.shape))

    return _make(out_v, (a, b), bk)


def div(a, b) -> Tensor:
    a = _coerce(a, getattr(b, "dtype", None) or np.asarray(a).dtype)
    b = _coerce(b, a.dtype)
    out_v = a.values / b.values

    def bk(g):
        _accum(a, _unbroadcast(g / b.values, a.values.shape))
        _accum(b, _unbroadcast(-g * a.values / (b.values * b.values), b.values.shape))

    return _make(out_v, (a, b), bk)


def neg(a: Tensor) -> Tensor:
    def bk(g):
        _accum(a, -g)

    return _make(-a.values, (a,), bk)


def power(a: Tensor, p) -> Tensor:
    p = float(p)
    out_v = a.values ** p

    def bk(g):
        _accum(a, g * p * a.values ** (p - 1.0))

    return _make(out_v, (a,), bk)


def matmul(a: Tensor, b) -> Tensor:
    b = _coerce(b, a.dtype)
    if a.values.ndim < 2 or b.values.ndim < 2:
        raise ShapeMismatch("matmul needs operands with ndim >= 2")
    if a.values.shape[-1] != b.values.shape[-2]:
        raise ShapeMismatch(f"matmul inner dims differ: {a.values.shape} @ {b.values.shape}")
    out_v = a.values @ b.values

    def bk(g):
        if a.requires_grad:
            _accum(a, _unbroadcast(g @ np.swapaxes(b.values, -1, -2), a.values.shape))
        if b.requires_grad:
            _accum(b, _unbroadcast(np.swapaxes(a.values, -1, -2) @ g, b.values.shape))

    return _make(out_v, (a, b), bk)


# -- elementwise ----------------------------------------------------------


def exp(a: Tensor) -> Tensor:
    out_v = np.exp(a.values)

    def bk(g):
        _accum(a, g * out_v)

    return _make(out_v, (a,), bk)


def log(a: Tensor) -> Tensor:
    def bk(g):
        _accum(a, g / a.values)

    return _make(np.log(a.values), (a,), bk)


def sqrt(a: Tensor) -> Tensor:
    out_v = np.sqrt(a.values)

    def bk(g):
        # subgradient 0 at exactly zero keeps displacement norms finite
        _accum(a, g * 0.5 / np.maximum(out_v, np.finfo(out_v.dtype).tiny))

    return _make(out_v, (a,), bk)


def absolute(a: Tensor) -> Tensor:
    def bk(g):
        _accum(a, g * np.sign(a.values))

    return _make(np.abs(a.values), (a,), bk)


def tanh(a: Tensor) -> Tensor:
    out_v = np.tanh(a.values)

    def bk(g):
        _accum(a, g * (1.0 - out_v * out_v))

    return _make(out_v, (a,), bk)


def sigmoid(a: Tensor) -> Tensor:
    out_v = 1.0 / (1.0 + np.exp(-a.values))

    def bk(g):
        _accum(a, g * out_v * (1.0 - out_v))

    return _make(out_v, (a,), bk)


def softplus(a: Tensor) -> Tensor:
    out_v = np.logaddexp(np.zeros((), dtype=a.values.dtype), a.values)

    def bk(g):
        _accum(a, g / (1.0 + np.exp(-a.values)))

    return _make(out_v, (a,), bk)


def leaky_relu(a: Tensor, slope: float = 0.1) -> Tensor:
    out_v = np.where(a.values > 0, a.values, slope * a.values)

    def bk(g):
        _accum(a, g * np.where(a.values > 0, 1.0, slope).astype(a.values.dtype))

    return _make(out_v, (a,), bk)


def clamp_min(a: Tensor, floor: float) -> Tensor:
    """Elementwise max(a, floor); the gradient is zero at the floor."""
    out_v = np.maximum(a.values, floor)

    def bk(g):
        _accum(a, g * (a.values > floor).astype(a.values.dtype))

    return _make(out_v, (a,), bk)


# -- reductions ------------------------------------------------------------


def _expand_reduced(g, axis, keepdims):
    if axis is None or keepdims:
        return g
    return np.expand_dims(g, axis)


def tensor_sum(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    out_v = a.values.sum(axis=axis, keepdims=keepdims)

    def bk(g):
        _accum(a, np.broadcast_to(_expand_reduced(g, axis, keepdims), a.values.shape).copy())

    return _make(out_v, (a,), bk)


def mean(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    out_v = a.values.mean(axis=axis, keepdims=keepdims)
    scale = a.values.size / out_v.size

    def bk(g):
        _accum(a, np.broadcast_to(_expand_reduced(g, axis, keepdims), a.values.shape) / scale)

    return _make(out_v, (a,), bk)


def cumsum(a: Tensor, axis: int) -> Tensor:
    """Running sum along one axis; gradient is the reversed running sum."""

    def bk(g):
        flipped = np.flip(g, axis=axis)
        _accum(a, np.flip(np.cumsum(flipped, axis=axis), axis=axis))

    return _make(np.cumsum(a.values, axis=axis), (a,), bk)


# -- shape ops --------------------------------------------------------------


def reshape(a: Tensor, shape) -> Tensor:
    def bk(g):
        _accum(a, g.reshape(a.values.shape))

    return _make(a.values.reshape(shape), (a,), bk)


def swapaxes(a: Tensor, ax1: int, ax2: int) -> Tensor:
    def bk(g):
        _accum(a, np.swapaxes(g, ax1, ax2))

    return _make(np.swapaxes(a.values, ax1, ax2), (a,), bk)


def broadcast_to(a: Tensor, shape) -> Tensor:
    def bk(g):
        _accum(a, _unbroadcast(g, a.values.shape))

    return _make(np.broadcast_to(a.values, shape), (a,), bk)


def getitem(a: Tensor, idx) -> Tensor:
    def bk(g):
        gx = np.zeros_like(a.values)
        np.add.at(gx, idx, g)
        _accum(a, gx)

    return _make(a.values[idx], (a,), bk)


def concat(tensors, axis: int = 0) -> Tensor:
    tensors = list(tensors)
    out_v = np.concatenate([t.values for t in tensors], axis=axis)
    sizes = [t.values.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def bk(g):
        for t, piece in zip(tensors, np.split(g, splits, axis=axis)):
            _accum(t, piece)

    return _make(out_v, tensors, bk)


def stack(tensors, axis: int = 0) -> Tensor:
    tensors = list(tensors)
    out_v = np.stack([t.values for t in tensors], axis=axis)

    def bk(g):
        for i, t in enumerate(tensors):
            _accum(t, np.take(g, i, axis=axis))

    return _make(out_v, tensors, bk)


# -- softmax -----------------------------------------------------------------


def masked_softmax(a: Tensor, mask, axis: int = -1) -> Tensor:
    """Softmax over positions where `mask` is true; masked outputs are exactly 0.

    Rows with no unmasked entry come out all-zero (the empty-attention
    convention), and masked positions receive exactly zero gradient.
    """
    mask = np.broadcast_to(np.asarray(mask, dtype=bool), a.values.shape)
    neg_inf = np.array(-np.inf, dtype=a.values.dtype)
    scored = np.where(mask, a.values, neg_inf)
    row_max = scored.max(axis=axis, keepdims=True)
    row_max = np.where(np.isfinite(row_max), row_max, 0.0)
    e = np.exp(np.where(mask, a.values - row_max, neg_inf))
    denom = e.sum(axis=axis, keepdims=True)
    out_v = e / np.where(denom > 0, denom, 1.0)

    def bk(g):
        dot = (g * out_v).sum(axis=axis, keepdims=True)
        _accum(a, out_v * (g - dot))

    return _make(out_v, (a,), bk)


def softmax(a: Tensor, axis: int = -1) -> Tensor:
    return masked_softmax(a, np.ones(a.values.shape, dtype=bool), axis=axis)
