"""Dense float64 tensors with tape-based reverse-mode differentiation.

Operations only record themselves while a :class:`Tape` is active and at
least one input requires a gradient, so inference runs without any
bookkeeping overhead.

    >>> x = Tensor([1.0, -2.0], requires_grad=True)
    >>> with Tape() as tape:
    ...     y = reduce_sum(relu(x))
    >>> tape.gradient(y, [x])[0]
    array([1., 0.])
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.special import expit

__all__ = [
    "ShapeError",
    "Tensor",
    "Tape",
    "as_tensor",
    "add",
    "sub",
    "mul",
    "scale",
    "matmul",
    "concat",
    "take",
    "reshape",
    "swap_last",
    "relu",
    "sigmoid",
    "tanh",
    "reduce_sum",
    "SegmentIndex",
    "gather_rows",
    "segment_sum",
    "segment_softmax",
    "softmax",
]


class ShapeError(ValueError):
    pass


class Tensor:
    __slots__ = ("value", "requires_grad", "name", "_parents", "_backward")

    def __init__(self, value, requires_grad: bool = False, name: str | None = None):
        self.value = np.asarray(value, dtype=np.float64)
        self.requires_grad = requires_grad
        self.name = name
        self._parents: tuple[Tensor, ...] = ()
        self._backward: Callable | None = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape

    def numpy(self) -> np.ndarray:
        return self.value

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}{label})"

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
        return scale(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)


_ACTIVE: list["Tape"] = []


class Tape:
    """Records differentiable operations in execution order.

    Execution order is a topological order of the computation graph, so the
    backward pass is a single sweep over the record in reverse.
    """

    def __init__(self):
        self.nodes: list[Tensor] = []

    def __enter__(self) -> "Tape":
        _ACTIVE.append(self)
        return self

    def __exit__(self, *exc) -> None:
        _ACTIVE.remove(self)

    def gradient(self, target: Tensor, sources: Sequence[Tensor]) -> list[np.ndarray]:
        """Gradients of scalar ``target`` with respect to each of ``sources``.

        Sources that do not influence the target get zero arrays.
        """
        if target.value.size != 1:
            raise ShapeError(f"gradient target must be scalar, got shape {target.shape}")
        grads: dict[int, np.ndarray] = {id(target): np.ones_like(target.value)}
        for node in reversed(self.nodes):
            g = grads.pop(id(node), None)
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
        out = []
        for s in sources:
            g = grads.get(id(s))
            out.append(np.zeros_like(s.value) if g is None else np.asarray(g).reshape(s.shape))
        return out


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _record(value: np.ndarray, parents: tuple[Tensor, ...], backward: Callable) -> Tensor:
    out = Tensor.__new__(Tensor)
    out.value = value
    out.name = None
    out.requires_grad = False
    out._parents = ()
    out._backward = None
    if _ACTIVE and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = parents
        out._backward = backward
        _ACTIVE[-1].nodes.append(out)
    return out


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    if g.shape == shape:
        return g
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def _broadcast_shape(a: Tensor, b: Tensor, op: str) -> None:
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(f"{op}: incompatible shapes {a.shape} and {b.shape}") from None


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "add")
    sa, sb = a.shape, b.shape
    ga, gb = a.requires_grad, b.requires_grad
    return _record(a.value + b.value, (a, b),
                   lambda g: (_unbroadcast(g, sa) if ga else None,
                              _unbroadcast(g, sb) if gb else None))


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "sub")
    sa, sb = a.shape, b.shape
    ga, gb = a.requires_grad, b.requires_grad
    return _record(a.value - b.value, (a, b),
                   lambda g: (_unbroadcast(g, sa) if ga else None,
                              _unbroadcast(-g, sb) if gb else None))


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "multiply")
    av, bv = a.value, b.value
    ga, gb = a.requires_grad, b.requires_grad
    return _record(av * bv, (a, b),
                   lambda g: (_unbroadcast(g * bv, av.shape) if ga else None,
                              _unbroadcast(g * av, bv.shape) if gb else None))


def scale(a, c: float) -> Tensor:
    a = as_tensor(a)
    return _record(a.value * c, (a,), lambda g: (g * c,))


def matmul(a, b) -> Tensor:
    """Matrix product of 2-d operands, or batched product of 3-d operands."""
    a, b = as_tensor(a), as_tensor(b)
    if a.value.ndim < 2 or a.value.ndim != b.value.ndim or a.shape[-1] != b.shape[-2] \
            or a.shape[:-2] != b.shape[:-2]:
        raise ShapeError(f"matmul: incompatible shapes {a.shape} and {b.shape}")
    av, bv = a.value, b.value
    ga, gb = a.requires_grad, b.requires_grad

    def backward(g):
        return (g @ np.swapaxes(bv, -1, -2) if ga else None,
                np.swapaxes(av, -1, -2) @ g if gb else None)

    return _record(av @ bv, (a, b), backward)


def concat(tensors: Sequence, axis: int = -1) -> Tensor:
    ts = tuple(as_tensor(t) for t in tensors)
    try:
        value = np.concatenate([t.value for t in ts], axis=axis)
    except ValueError:
        raise ShapeError(f"concat: incompatible shapes {[t.shape for t in ts]}") from None
    bounds = np.cumsum([t.shape[axis] for t in ts])[:-1]

    def backward(g):
        return tuple(np.split(g, bounds, axis=axis))

    return _record(value, ts, backward)


def take(a, start: int, stop: int, axis: int = -1) -> Tensor:
    """Slice ``[start, stop)`` along ``axis``."""
    a = as_tensor(a)
    axis = axis % a.value.ndim
    if not 0 <= start <= stop <= a.shape[axis]:
        raise ShapeError(f"slice [{start}:{stop}] out of range for axis {axis} of shape {a.shape}")
    shape = a.shape
    key = (slice(None),) * axis + (slice(start, stop),)

    def backward(g):
        full = np.zeros(shape)
        full[key] = g
        return (full,)

    return _record(a.value[key], (a,), backward)


def reshape(a, shape: tuple[int, ...]) -> Tensor:
    a = as_tensor(a)
    old = a.shape
    try:
        value = a.value.reshape(shape)
    except ValueError:
        raise ShapeError(f"reshape: cannot view {old} as {shape}") from None
    return _record(value, (a,), lambda g: (g.reshape(old),))


def swap_last(a) -> Tensor:
    """Transpose the last two axes."""
    a = as_tensor(a)
    return _record(np.swapaxes(a.value, -1, -2), (a,), lambda g: (np.swapaxes(g, -1, -2),))


def relu(a) -> Tensor:
    a = as_tensor(a)
    mask = a.value > 0
    # NaN passes through so a diverged input is not silently zeroed
    out = np.where(mask | np.isnan(a.value), a.value, 0.0)
    return _record(out, (a,), lambda g: (g * mask,))


def sigmoid(a) -> Tensor:
    a = as_tensor(a)
    y = expit(a.value)
    return _record(y, (a,), lambda g: (g * y * (1.0 - y),))


def tanh(a) -> Tensor:
    a = as_tensor(a)
    y = np.tanh(a.value)
    return _record(y, (a,), lambda g: (g * (1.0 - y * y),))


def reduce_sum(a, axis: int | None = None) -> Tensor:
    a = as_tensor(a)
    shape = a.shape

    def backward(g):
        if axis is None:
            return (np.broadcast_to(g, shape).copy(),)
        return (np.broadcast_to(np.expand_dims(g, axis), shape).copy(),)

    return _record(np.asarray(a.value.sum(axis=axis)), (a,), backward)


class SegmentIndex:
    """Integer ids into ``num_segments`` slots, with a cached sparse scatter matrix.

    Graph structure is fixed for a whole forward/backward pass, so building
    the scatter operator once per batch and reusing it for every gather
    backward and segment sum is much cheaper than unbuffered ``np.add.at``.
    """

    __slots__ = ("ids", "num_segments", "_scatter")

    def __init__(self, ids, num_segments: int):
        self.ids = np.asarray(ids, dtype=np.intp).reshape(-1)
        self.num_segments = int(num_segments)
        if self.ids.size and (self.ids.min() < 0 or self.ids.max() >= self.num_segments):
            raise IndexError(f"segment id out of range [0, {self.num_segments})")
        self._scatter = None

    def __len__(self) -> int:
        return self.ids.size

    def scatter(self, rows: np.ndarray) -> np.ndarray:
        """Sum ``rows`` (first axis aligned with ``ids``) into their segments."""
        if self._scatter is None:
            m = self.ids.size
            self._scatter = sp.csr_matrix((np.ones(m), (self.ids, np.arange(m))),
                                          shape=(self.num_segments, m))
        flat = rows.reshape(rows.shape[0], int(np.prod(rows.shape[1:])))
        return np.asarray(self._scatter @ flat).reshape((self.num_segments,) + rows.shape[1:])


def _as_index(ids, k: int, op: str) -> SegmentIndex:
    if isinstance(ids, SegmentIndex):
        if ids.num_segments != k:
            raise IndexError(f"{op}: index built for {ids.num_segments} slots, need {k}")
        return ids
    return SegmentIndex(ids, k)


def gather_rows(a, ids) -> Tensor:
    """Rows ``a[ids]``; the backward pass scatters gradients back."""
    a = as_tensor(a)
    index = _as_index(ids, a.shape[0], "gather_rows")
    return _record(a.value[index.ids], (a,), lambda g: (index.scatter(g),))


def segment_sum(rows, segment_ids, num_segments: int | None = None) -> Tensor:
    """Sum rows that share a segment id; empty segments give zero rows."""
    rows = as_tensor(rows)
    if isinstance(segment_ids, SegmentIndex):
        index = segment_ids
        if num_segments is not None and num_segments != index.num_segments:
            raise IndexError("segment_sum: num_segments disagrees with the index")
    else:
        if num_segments is None:
            raise ValueError("segment_sum needs num_segments for raw ids")
        index = SegmentIndex(segment_ids, num_segments)
    if len(index) != rows.shape[0]:
        raise ShapeError(f"segment_sum: {len(index)} ids for {rows.shape[0]} rows")
    ids = index.ids
    return _record(index.scatter(rows.value), (rows,), lambda g: (g[ids],))


def segment_softmax(logits, segment_ids, num_segments: int | None = None) -> Tensor:
    """Softmax of a 1-d logit vector taken independently within each segment."""
    logits = as_tensor(logits)
    ids = np.asarray(segment_ids, dtype=np.intp)
    if logits.value.ndim != 1 or ids.shape != logits.shape:
        raise ShapeError(f"segment_softmax: logits {logits.shape} vs ids {ids.shape}")
    k = int(ids.max()) + 1 if num_segments is None else num_segments
    if ids.size and (ids.min() < 0 or ids.max() >= k):
        raise IndexError(f"segment_softmax: index out of range [0, {k})")
    x = logits.value
    seg_max = np.full(k, -np.inf)
    np.maximum.at(seg_max, ids, x)
    e = np.exp(x - seg_max[ids])
    y = e / np.bincount(ids, weights=e, minlength=k)[ids]

    def backward(g):
        dot = np.bincount(ids, weights=g * y, minlength=k)
        return (y * (g - dot[ids]),)

    return _record(y, (logits,), backward)


def softmax(a, axis: int = -1, mask: np.ndarray | None = None) -> Tensor:
    """Softmax along ``axis``; entries where ``mask`` is False get zero weight."""
    a = as_tensor(a)
    x = a.value
    if mask is not None:
        x = np.where(mask, x, -np.inf)
    m = np.max(x, axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    e = np.exp(x - m)
    s = e.sum(axis=axis, keepdims=True)
    y = e / np.where(s > 0, s, 1.0)

    def backward(g):
        return (y * (g - (g * y).sum(axis=axis, keepdims=True)),)

    return _record(y, (a,), backward)
