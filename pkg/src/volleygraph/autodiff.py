"""A small dense reverse-mode automatic differentiation engine.

Every value is a 2-D float64 array wrapped in a :class:`Tensor` that records
the operation that produced it. :func:`backward` sweeps the recorded graph in
reverse topological order. The graph is rebuilt on every forward pass.

Gradients accumulate on leaf tensors across calls to :func:`backward`; call
:func:`zero_grad` (or ``Tensor.zero_grad``) between steps. Intermediate
gradients are reset at the start of each sweep.
"""

from __future__ import annotations

from typing import Callable, Iterable, Optional, Sequence

import numpy as np

CHECKED = True
PROB_FLOOR = 1e-12


def set_checked(flag: bool) -> None:
    """Toggle rejection of non-finite values at construction."""
    global CHECKED
    CHECKED = bool(flag)


class ShapeError(ValueError):
    pass


class Tensor:
    __slots__ = ("value", "_grad", "parents", "op", "backward_fn", "requires_grad", "name")

    def __init__(self, value, parents: Sequence["Tensor"] = (), op: str = "leaf", requires_grad: bool = False, name: str = ""):
        v = np.asarray(value, dtype=np.float64)
        if v.ndim == 0:
            v = v.reshape(1, 1)
        elif v.ndim == 1:
            v = v.reshape(1, -1)
        elif v.ndim != 2:
            raise ShapeError(f"{op}: tensors are 2-D, got shape {v.shape}")
        if CHECKED and not np.all(np.isfinite(v)):
            raise FloatingPointError(f"{op}: non-finite value produced")
        self.value = v
        self._grad: Optional[np.ndarray] = None
        self.parents = tuple(parents)
        self.op = op
        self.backward_fn: Optional[Callable[[], None]] = None
        self.requires_grad = requires_grad or any(p.requires_grad for p in self.parents)
        self.name = name

    @property
    def shape(self) -> tuple[int, int]:
        return self.value.shape

    @property
    def grad(self) -> np.ndarray:
        # allocated on first use; reads as zeros until something accumulates
        if self._grad is None:
            self._grad = np.zeros_like(self.value)
        return self._grad

    @grad.setter
    def grad(self, g: np.ndarray) -> None:
        self._grad = g

    def zero_grad(self) -> None:
        self._grad = None

    def item(self) -> float:
        return float(self.value[0, 0])

    def __repr__(self) -> str:
        return f"Tensor(op={self.op}, shape={self.shape})"

    def __add__(self, other):
        return add(self, _lift(other))

    def __radd__(self, other):
        return add(_lift(other), self)

    def __sub__(self, other):
        return sub(self, _lift(other))

    def __rsub__(self, other):
        return sub(_lift(other), self)

    def __mul__(self, other):
        if np.isscalar(other):
            return scale(self, other)
        return mul(self, _lift(other))

    __rmul__ = __mul__

    def __matmul__(self, other):
        return matmul(self, other)

    @property
    def T(self):
        return transpose(self)


def _lift(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x, op="const")


def parameter(value, name: str = "") -> Tensor:
    return Tensor(value, requires_grad=True, name=name)


def _broadcast_shape(op: str, a: Tensor, b: Tensor) -> tuple[int, int]:
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(f"{op}: incompatible shapes {a.shape} and {b.shape}") from None


def _unbroadcast(g: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    for axis in (0, 1):
        if shape[axis] == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: incompatible shapes {a.shape} and {b.shape}")
    out = Tensor(a.value @ b.value, (a, b), "matmul")

    def backward():
        if a.requires_grad:
            a.grad += out.grad @ b.value.T
        if b.requires_grad:
            b.grad += a.value.T @ out.grad

    out.backward_fn = backward
    return out


def add(a: Tensor, b: Tensor) -> Tensor:
    _broadcast_shape("add", a, b)
    out = Tensor(a.value + b.value, (a, b), "add")

    def backward():
        if a.requires_grad:
            a.grad += _unbroadcast(out.grad, a.shape)
        if b.requires_grad:
            b.grad += _unbroadcast(out.grad, b.shape)

    out.backward_fn = backward
    return out


def sub(a: Tensor, b: Tensor) -> Tensor:
    _broadcast_shape("sub", a, b)
    out = Tensor(a.value - b.value, (a, b), "sub")

    def backward():
        if a.requires_grad:
            a.grad += _unbroadcast(out.grad, a.shape)
        if b.requires_grad:
            b.grad -= _unbroadcast(out.grad, b.shape)

    out.backward_fn = backward
    return out


def mul(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise product."""
    _broadcast_shape("mul", a, b)
    out = Tensor(a.value * b.value, (a, b), "mul")

    def backward():
        if a.requires_grad:
            a.grad += _unbroadcast(out.grad * b.value, a.shape)
        if b.requires_grad:
            b.grad += _unbroadcast(out.grad * a.value, b.shape)

    out.backward_fn = backward
    return out


elementwise_mul = mul


def scale(a: Tensor, c: float) -> Tensor:
    c = float(c)
    out = Tensor(a.value * c, (a,), "scale")

    def backward():
        if a.requires_grad:
            a.grad += out.grad * c

    out.backward_fn = backward
    return out


def transpose(a: Tensor) -> Tensor:
    out = Tensor(a.value.T, (a,), "transpose")

    def backward():
        if a.requires_grad:
            a.grad += out.grad.T

    out.backward_fn = backward
    return out


def reshape(a: Tensor, shape: tuple[int, int]) -> Tensor:
    out = Tensor(a.value.reshape(shape), (a,), "reshape")

    def backward():
        if a.requires_grad:
            a.grad += out.grad.reshape(a.shape)

    out.backward_fn = backward
    return out


def concat_cols(*ts: Tensor) -> Tensor:
    rows = {t.shape[0] for t in ts}
    if len(rows) != 1:
        raise ShapeError(f"concat_cols: row counts differ: {[t.shape for t in ts]}")
    out = Tensor(np.concatenate([t.value for t in ts], axis=1), ts, "concat_cols")
    bounds = np.cumsum([0] + [t.shape[1] for t in ts])

    def backward():
        for t, lo, hi in zip(ts, bounds[:-1], bounds[1:]):
            if t.requires_grad:
                t.grad += out.grad[:, lo:hi]

    out.backward_fn = backward
    return out


def slice_cols(a: Tensor, start: int, stop: int) -> Tensor:
    if not 0 <= start < stop <= a.shape[1]:
        raise ShapeError(f"slice_cols: bad range {start}:{stop} for shape {a.shape}")
    out = Tensor(a.value[:, start:stop], (a,), "slice_cols")

    def backward():
        if a.requires_grad:
            a.grad[:, start:stop] += out.grad

    out.backward_fn = backward
    return out


def relu(a: Tensor) -> Tensor:
    out = Tensor(np.maximum(a.value, 0.0), (a,), "relu")

    def backward():
        if a.requires_grad:
            a.grad += out.grad * (a.value > 0)

    out.backward_fn = backward
    return out


def tanh(a: Tensor) -> Tensor:
    y = np.tanh(a.value)
    out = Tensor(y, (a,), "tanh")

    def backward():
        if a.requires_grad:
            a.grad += out.grad * (1.0 - y * y)

    out.backward_fn = backward
    return out


def sigmoid(a: Tensor) -> Tensor:
    e = np.exp(-np.abs(a.value))
    y = np.where(a.value >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    out = Tensor(y, (a,), "sigmoid")

    def backward():
        if a.requires_grad:
            a.grad += out.grad * y * (1.0 - y)

    out.backward_fn = backward
    return out


def softmax_rows(a: Tensor, mask: Optional[np.ndarray] = None) -> Tensor:
    """Row-wise softmax. Entries where ``mask`` is False get probability 0.

    Every row must keep at least one unmasked entry.
    """
    z = a.value
    if mask is not None:
        if mask.shape != a.shape:
            raise ShapeError(f"softmax_rows: mask shape {mask.shape} does not match {a.shape}")
        z = np.where(mask, z, -np.inf)
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    s = e / e.sum(axis=1, keepdims=True)
    out = Tensor(s, (a,), "softmax_rows")

    def backward():
        g = out.grad
        if a.requires_grad:
            a.grad += s * (g - (g * s).sum(axis=1, keepdims=True))

    out.backward_fn = backward
    return out


def mean_rows(a: Tensor) -> Tensor:
    """Mean over rows, giving a (1, cols) tensor."""
    n = a.shape[0]
    out = Tensor(a.value.mean(axis=0, keepdims=True), (a,), "mean_rows")

    def backward():
        if a.requires_grad:
            a.grad += np.broadcast_to(out.grad / n, a.shape)

    out.backward_fn = backward
    return out


def sum_all(a: Tensor) -> Tensor:
    out = Tensor(a.value.sum(), (a,), "sum_all")

    def backward():
        if a.requires_grad:
            a.grad += out.grad[0, 0]

    out.backward_fn = backward
    return out


def segment_reduce(a: Tensor, offsets: Sequence[int], mode: str = "mean") -> Tensor:
    """Reduce consecutive row blocks ``a[offsets[g]:offsets[g+1]]`` to one row each.

    ``mode`` is ``mean``, ``sum`` or ``max``; max routes the gradient to the
    first maximal row of each column.
    """
    offsets = np.asarray(offsets)
    if offsets[0] != 0 or offsets[-1] != a.shape[0] or np.any(np.diff(offsets) <= 0):
        raise ShapeError(f"segment_reduce: offsets {offsets.tolist()} do not partition {a.shape[0]} rows")
    starts = offsets[:-1]
    counts = np.diff(offsets)
    if mode in ("mean", "sum"):
        y = np.add.reduceat(a.value, starts, axis=0)
        if mode == "mean":
            y = y / counts[:, None]
        out = Tensor(y, (a,), f"segment_{mode}")
        seg = np.repeat(np.arange(len(counts)), counts)

        def backward():
            g = out.grad / counts[:, None] if mode == "mean" else out.grad
            if a.requires_grad:
                a.grad += g[seg]

    elif mode == "max":
        rows = []
        argmax = np.empty((len(counts), a.shape[1]), dtype=int)
        for k, (lo, hi) in enumerate(zip(offsets[:-1], offsets[1:])):
            block = a.value[lo:hi]
            idx = block.argmax(axis=0)
            argmax[k] = idx + lo
            rows.append(block[idx, np.arange(a.shape[1])])
        out = Tensor(np.stack(rows), (a,), "segment_max")
        cols = np.arange(a.shape[1])

        def backward():
            for k in range(len(counts)):
                np.add.at(a.grad, (argmax[k], cols), out.grad[k])

    else:
        raise ValueError(f"segment_reduce: unknown mode {mode!r}")
    out.backward_fn = backward
    return out


def take_rows(a: Tensor, index) -> Tensor:
    """Gather rows ``a[index]``; repeated indices accumulate in the backward pass."""
    index = np.asarray(index, dtype=int)
    out = Tensor(a.value[index], (a,), "take_rows")

    def backward():
        if a.requires_grad:
            np.add.at(a.grad, index, out.grad)

    out.backward_fn = backward
    return out


def segment_softmax(a: Tensor, offsets: Sequence[int]) -> Tensor:
    """Softmax down each column within consecutive row blocks.

    Row block ``g`` is ``a[offsets[g]:offsets[g+1]]``; every block must be
    non-empty. Each block maximum is subtracted before exponentiation.
    """
    offsets = np.asarray(offsets)
    if offsets[0] != 0 or offsets[-1] != a.shape[0] or np.any(np.diff(offsets) <= 0):
        raise ShapeError(f"segment_softmax: offsets {offsets.tolist()} do not partition {a.shape[0]} rows")
    starts, counts = offsets[:-1], np.diff(offsets)
    seg = np.repeat(np.arange(len(counts)), counts)
    z = a.value - np.maximum.reduceat(a.value, starts, axis=0)[seg]
    e = np.exp(z)
    s = e / np.add.reduceat(e, starts, axis=0)[seg]
    out = Tensor(s, (a,), "segment_softmax")

    def backward():
        if a.requires_grad:
            g = out.grad
            a.grad += s * (g - np.add.reduceat(g * s, starts, axis=0)[seg])

    out.backward_fn = backward
    return out


def mse(pred: Tensor, target) -> Tensor:
    """Mean squared error over all entries, as a 1x1 tensor."""
    t = np.asarray(target, dtype=np.float64).reshape(pred.shape) if not isinstance(target, Tensor) else target.value
    if t.shape != pred.shape:
        raise ShapeError(f"mse: shapes {pred.shape} and {t.shape} differ")
    diff = pred.value - t
    n = diff.size
    out = Tensor(np.mean(diff * diff), (pred,), "mse")

    def backward():
        if pred.requires_grad:
            pred.grad += out.grad[0, 0] * 2.0 * diff / n

    out.backward_fn = backward
    return out


def cross_entropy(probs: Tensor, labels) -> Tensor:
    """Mean negative log-probability of the true class.

    Probabilities are clamped to ``[PROB_FLOOR, 1]`` before the log; the
    gradient is zero where the clamp is active.
    """
    labels = np.asarray(labels, dtype=int).reshape(-1)
    n, k = probs.shape
    if labels.shape[0] != n:
        raise ShapeError(f"cross_entropy: {labels.shape[0]} labels for {n} rows")
    if np.any(labels < 0) or np.any(labels >= k):
        raise ValueError(f"cross_entropy: class index out of range 0..{k - 1}")
    rows = np.arange(n)
    p = probs.value[rows, labels]
    pc = np.clip(p, PROB_FLOOR, 1.0)
    out = Tensor(-np.mean(np.log(pc)), (probs,), "cross_entropy")

    def backward():
        g = np.zeros_like(probs.value)
        live = p > PROB_FLOOR
        g[rows[live], labels[live]] = -1.0 / (n * p[live])
        if probs.requires_grad:
            probs.grad += out.grad[0, 0] * g

    out.backward_fn = backward
    return out


def _topological(root: Tensor) -> list[Tensor]:
    """Nodes that need gradients, parents before children."""
    order, seen = [], set()
    stack = [(root, False)]
    while stack:
        node, done = stack.pop()
        if done:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node.parents:
            if p.requires_grad and id(p) not in seen:
                stack.append((p, False))
    return order


def backward(loss: Tensor) -> None:
    """Populate ``.grad`` on every tensor reachable from a 1x1 ``loss``."""
    if loss.shape != (1, 1):
        raise ShapeError(f"backward: loss must be 1x1, got {loss.shape}")
    if not loss.requires_grad:
        return
    order = _topological(loss)
    for node in order:
        if node.parents:
            node.grad = np.zeros_like(node.value)
    loss.grad = loss.grad + 1.0
    for node in reversed(order):
        if node.backward_fn is not None:
            node.backward_fn()


def zero_grad(params: Iterable[Tensor]) -> None:
    for p in params:
        p.zero_grad()


def grad_check(f: Callable[[Tensor], Tensor], point, step: float = 1e-5) -> float:
    """Largest relative gap between backprop and central differences.

    ``f`` maps a leaf tensor to a scalar tensor. The error per coordinate is
    ``|analytic - numeric| / max(1, |analytic|, |numeric|)``.
    """
    x0 = np.array(point, dtype=np.float64)
    x = Tensor(x0, requires_grad=True)
    backward(f(x))
    analytic = x.grad.reshape(-1)

    flat = x.value.reshape(-1)
    numeric = np.empty_like(flat)
    for i in range(flat.size):
        hi, lo = flat.copy(), flat.copy()
        hi[i] += step
        lo[i] -= step
        fp = f(Tensor(hi.reshape(x.shape))).item()
        fm = f(Tensor(lo.reshape(x.shape))).item()
        numeric[i] = (fp - fm) / (2.0 * step)
    denom = np.maximum(1.0, np.maximum(np.abs(analytic), np.abs(numeric)))
    return float(np.max(np.abs(analytic - numeric) / denom)) if flat.size else 0.0
