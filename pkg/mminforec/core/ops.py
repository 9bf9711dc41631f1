from __future__ import annotations

# primitive ops; every op computes eagerly and, inside an active Graph,
# records a backward closure mapping the output grad to parent grads

from typing import Optional, Sequence, Tuple

import numpy as np

from ..errors import ShapeError
from .dropout import DropoutMask
from .graph import active_graph
from .tensor import ArrayLike, Tensor, as_tensor


def _record(op: str, data: np.ndarray, parents: Sequence[Tensor], backward) -> Tensor:
    out = Tensor(data)
    graph = active_graph()
    if graph is None:
        return out
    return graph.record(op, out, parents, backward)


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _broadcast_shape(op: str, a: Tensor, b: Tensor) -> Tuple[int, ...]:
    try:
        return tuple(np.broadcast_shapes(a.shape, b.shape))
    except ValueError:
        raise ShapeError(op, f"cannot broadcast {a.shape} with {b.shape}") from None


def sigmoid_np(x: np.ndarray) -> np.ndarray:
    return np.exp(-np.logaddexp(0.0, -x))


# ---------- elementwise ----------

def add(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape("add", a, b)
    return _record("add", a.data + b.data, (a, b),
                   lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)))


def sub(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape("sub", a, b)
    return _record("sub", a.data - b.data, (a, b),
                   lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)))


def mul(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape("mul", a, b)
    return _record("mul", a.data * b.data, (a, b),
                   lambda g: (_unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)))


def scale(a: ArrayLike, c: float) -> Tensor:
    a = as_tensor(a)
    c = float(c)
    return _record("scale", a.data * c, (a,), lambda g: (g * c,))


def relu(a: ArrayLike) -> Tensor:
    a = as_tensor(a)
    on = a.data > 0
    graph = active_graph()
    if graph is not None:
        graph.kinks.append(on)
    return _record("relu", np.where(on, a.data, 0.0), (a,), lambda g: (g * on,))


def sigmoid(a: ArrayLike) -> Tensor:
    a = as_tensor(a)
    y = sigmoid_np(a.data)
    return _record("sigmoid", y, (a,), lambda g: (g * y * (1.0 - y),))


def tanh(a: ArrayLike) -> Tensor:
    a = as_tensor(a)
    y = np.tanh(a.data)
    return _record("tanh", y, (a,), lambda g: (g * (1.0 - y * y),))


def softplus(a: ArrayLike) -> Tensor:
    """log(1 + e^x), stable for large |x|"""
    a = as_tensor(a)
    y = np.logaddexp(0.0, a.data)
    return _record("softplus", y, (a,), lambda g: (g * sigmoid_np(a.data),))


# ---------- linear algebra ----------

def matmul(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 2 or b.ndim < 2:
        raise ShapeError("matmul", f"needs >=2-d operands, got {a.shape} and {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise ShapeError("matmul", f"inner dims differ: {a.shape} @ {b.shape}")

    def backward(g: np.ndarray):
        ga = np.matmul(g, np.swapaxes(b.data, -1, -2))
        gb = np.matmul(np.swapaxes(a.data, -1, -2), g)
        return _unbroadcast(ga, a.shape), _unbroadcast(gb, b.shape)

    return _record("matmul", np.matmul(a.data, b.data), (a, b), backward)


def transpose(a: ArrayLike, axes: Optional[Sequence[int]] = None) -> Tensor:
    a = as_tensor(a)
    axes = tuple(axes) if axes is not None else tuple(reversed(range(a.ndim)))
    inverse = tuple(np.argsort(axes))
    return _record("transpose", np.transpose(a.data, axes), (a,), lambda g: (np.transpose(g, inverse),))


def reshape(a: ArrayLike, shape: Sequence[int]) -> Tensor:
    a = as_tensor(a)
    src = a.shape
    try:
        data = a.data.reshape(tuple(shape))
    except ValueError:
        raise ShapeError("reshape", f"cannot reshape {src} to {tuple(shape)}") from None
    return _record("reshape", data, (a,), lambda g: (g.reshape(src),))


# ---------- normalisation ----------

def softmax(a: ArrayLike, mask: Optional[np.ndarray] = None) -> Tensor:
    """softmax over the last axis; mask (bool, broadcastable) keeps True entries"""
    a = as_tensor(a)
    z = a.data
    if mask is not None:
        mask = np.broadcast_to(mask, z.shape)
        if not np.all(mask.any(axis=-1)):
            raise ShapeError("softmax", "a row has every entry masked")
        z = np.where(mask, z, -np.inf)
    e = np.exp(z - z.max(axis=-1, keepdims=True))
    y = e / e.sum(axis=-1, keepdims=True)

    def backward(g: np.ndarray):
        return (y * (g - (g * y).sum(axis=-1, keepdims=True)),)

    return _record("softmax", y, (a,), backward)


def logsumexp(a: ArrayLike, mask: Optional[np.ndarray] = None) -> Tensor:
    """log sum exp over the last axis (max-shifted); masked entries excluded"""
    a = as_tensor(a)
    z = a.data
    if mask is not None:
        mask = np.broadcast_to(mask, z.shape)
        if not np.all(mask.any(axis=-1)):
            raise ShapeError("logsumexp", "a row has every entry masked")
        z = np.where(mask, z, -np.inf)
    m = z.max(axis=-1, keepdims=True)
    out = m + np.log(np.exp(z - m).sum(axis=-1, keepdims=True))

    def backward(g: np.ndarray):
        return (g[..., None] * np.exp(z - out),)

    return _record("logsumexp", out[..., 0], (a,), backward)


def layer_norm(a: ArrayLike, gain: ArrayLike, bias: ArrayLike, eps: float = 1e-5) -> Tensor:
    a, gain, bias = as_tensor(a), as_tensor(gain), as_tensor(bias)
    n = a.shape[-1]
    mu = a.data.mean(axis=-1, keepdims=True)
    xc = a.data - mu
    inv = 1.0 / np.sqrt((xc * xc).mean(axis=-1, keepdims=True) + eps)
    xhat = xc * inv

    def backward(g: np.ndarray):
        dxhat = g * gain.data
        dx = inv / n * (n * dxhat - dxhat.sum(axis=-1, keepdims=True)
                        - xhat * (dxhat * xhat).sum(axis=-1, keepdims=True))
        return dx, _unbroadcast(g * xhat, gain.shape), _unbroadcast(g, bias.shape)

    return _record("layer_norm", xhat * gain.data + bias.data, (a, gain, bias), backward)


# ---------- indexing ----------

def gather(table: ArrayLike, ids: np.ndarray, frozen_rows: Sequence[int] = ()) -> Tensor:
    """rows of table at ids; frozen rows never receive gradient"""
    table = as_tensor(table)
    ids = np.asarray(ids, dtype=np.int64)
    frozen = list(frozen_rows)

    def backward(g: np.ndarray):
        gt = np.zeros_like(table.data)
        np.add.at(gt, ids, g)
        if frozen:
            gt[frozen] = 0.0
        return (gt,)

    return _record("embedding_gather", table.data[ids], (table,), backward)


def getitem(a: ArrayLike, key) -> Tensor:
    a = as_tensor(a)

    def backward(g: np.ndarray):
        ga = np.zeros_like(a.data)
        np.add.at(ga, key, g)
        return (ga,)

    return _record("slice", a.data[key], (a,), backward)


def take(a: ArrayLike, indices: np.ndarray, axis: int = 0) -> Tensor:
    a = as_tensor(a)
    indices = np.asarray(indices, dtype=np.int64)
    axis = axis % a.ndim

    def backward(g: np.ndarray):
        ga = np.zeros_like(a.data)
        np.add.at(np.moveaxis(ga, axis, 0), indices, np.moveaxis(g, axis, 0))
        return (ga,)

    return _record("take", np.take(a.data, indices, axis=axis), (a,), backward)


def concat(tensors: Sequence[ArrayLike], axis: int = 0) -> Tensor:
    parts = [as_tensor(t) for t in tensors]
    try:
        data = np.concatenate([p.data for p in parts], axis=axis)
    except ValueError as e:
        raise ShapeError("concat", str(e)) from None
    bounds = np.cumsum([p.shape[axis] for p in parts])[:-1]

    def backward(g: np.ndarray):
        return tuple(np.split(g, bounds, axis=axis))

    return _record("concat", data, parts, backward)


# ---------- reductions ----------

def sum(a: ArrayLike, axis: Optional[int] = None, keepdims: bool = False) -> Tensor:  # noqa: A001
    a = as_tensor(a)
    src = a.shape

    def backward(g: np.ndarray):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, src).copy(),)

    return _record("reduce_sum", a.data.sum(axis=axis, keepdims=keepdims), (a,), backward)


def mean(a: ArrayLike, axis: Optional[int] = None) -> Tensor:
    a = as_tensor(a)
    count = a.size if axis is None else a.shape[axis]
    return scale(sum(a, axis=axis), 1.0 / count)


# ---------- dropout ----------

def dropout(a: ArrayLike, mask: Optional[DropoutMask]) -> Tensor:
    """mask-multiply; no mask (or rate 0) is the identity"""
    a = as_tensor(a)
    if mask is None or mask.is_identity:
        return a
    graph = active_graph()
    if graph is not None and not mask.frozen:
        graph.unfrozen_dropout = True
    pattern = mask.keep(a.shape)
    return _record("dropout", a.data * pattern, (a,), lambda g: (g * pattern,))
