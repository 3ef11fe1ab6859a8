"""Dense float64 tensors with reverse-mode automatic differentiation.

Every operation executed while gradients are enabled records its parents and a
closure that maps the output gradient to parent gradients. ``Tensor.backward``
replays those closures in reverse topological order. Leading batch axes
broadcast the way numpy does; gradients are summed back over broadcast axes.
"""
from __future__ import annotations

import contextlib
import threading
from typing import Callable, Sequence

import numpy as np
from scipy.special import expit

from csplab.numcore.memory import track_buffer

_state = threading.local()


def grad_enabled() -> bool:
    return getattr(_state, "enabled", True)


@contextlib.contextmanager
def no_grad():
    """Disable graph recording on the current thread."""
    prev = grad_enabled()
    _state.enabled = False
    try:
        yield
    finally:
        _state.enabled = prev


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "op", "__weakref__")

    def __init__(self, data, requires_grad: bool = False, _parents: tuple = (), _backward=None, op: str = ""):
        arr = np.asarray(data, dtype=np.float64)
        self.data: np.ndarray = arr
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._parents = _parents
        self._backward = _backward
        self.op = op
        if arr.flags.owndata:
            track_buffer(self, arr.nbytes)

    # -- basic protocol -------------------------------------------------
    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data)

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}{flag})"

    def __len__(self) -> int:
        return len(self.data)

    # -- autodiff --------------------------------------------------------
    def backward(self, grad: np.ndarray | None = None) -> None:
        """Accumulate d(self)/d(leaf) into ``leaf.grad`` for every leaf requiring grad."""
        if grad is None:
            if self.data.size != 1:
                raise ValueError("backward() without a seed gradient needs a scalar output")
            grad = np.ones_like(self.data)
        order = _topo_order(self)
        grads: dict[int, np.ndarray] = {id(self): np.asarray(grad, dtype=np.float64)}
        for node in order:
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if node._backward is None:
                node.grad = g.copy() if node.grad is None else node.grad + g
                continue
            parent_grads = node._backward(g)
            for parent, pg in zip(node._parents, parent_grads):
                if pg is None or not parent.requires_grad:
                    continue
                key = id(parent)
                if key in grads:
                    grads[key] = grads[key] + pg
                else:
                    grads[key] = pg

    # -- operators -------------------------------------------------------
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return mul(self, -1.0)

    def __pow__(self, exponent: float):
        return power(self, exponent)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, index):
        return getitem(self, index)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def transpose(self, *axes):
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        return transpose(self, axes or None)

    def sum(self, axis=None, keepdims: bool = False):
        return tsum(self, axis, keepdims)

    def mean(self, axis=None, keepdims: bool = False):
        return mean(self, axis, keepdims)


def _topo_order(root: Tensor) -> list[Tensor]:
    seen: set[int] = set()
    post: list[Tensor] = []
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            post.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if parent.requires_grad and id(parent) not in seen:
                stack.append((parent, False))
    post.reverse()
    return post


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def record(data: np.ndarray, parents: Sequence[Tensor], backward: Callable, op: str) -> Tensor:
    if grad_enabled() and any(p.requires_grad for p in parents):
        return Tensor(data, requires_grad=True, _parents=tuple(parents), _backward=backward, op=op)
    return Tensor(data)


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


# -- elementwise arithmetic ----------------------------------------------
def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = a.data + b.data

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return record(out, (a, b), backward, "add")


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = a.data - b.data

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return record(out, (a, b), backward, "sub")


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = a.data * b.data

    def backward(g):
        ga = _unbroadcast(g * b.data, a.shape) if a.requires_grad else None
        gb = _unbroadcast(g * a.data, b.shape) if b.requires_grad else None
        return ga, gb

    return record(out, (a, b), backward, "mul")


def div(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = a.data / b.data

    def backward(g):
        ga = _unbroadcast(g / b.data, a.shape) if a.requires_grad else None
        gb = _unbroadcast(-g * a.data / b.data**2, b.shape) if b.requires_grad else None
        return ga, gb

    return record(out, (a, b), backward, "div")


def power(a: Tensor, exponent: float) -> Tensor:
    out = a.data**exponent

    def backward(g):
        return (g * exponent * a.data ** (exponent - 1),)

    return record(out, (a,), backward, "pow")


def exp(a: Tensor) -> Tensor:
    out = np.exp(a.data)

    def backward(g):
        return (g * out,)

    return record(out, (a,), backward, "exp")


def log(a: Tensor) -> Tensor:
    out = np.log(a.data)

    def backward(g):
        return (g / a.data,)

    return record(out, (a,), backward, "log")


def sqrt(a: Tensor) -> Tensor:
    out = np.sqrt(a.data)

    def backward(g):
        return (g * 0.5 / out,)

    return record(out, (a,), backward, "sqrt")


def relu(a: Tensor) -> Tensor:
    mask = a.data > 0
    out = np.where(mask, a.data, 0.0)

    def backward(g):
        return (g * mask,)

    return record(out, (a,), backward, "relu")


def sigmoid(a: Tensor) -> Tensor:
    out = expit(a.data)

    def backward(g):
        return (g * out * (1.0 - out),)

    return record(out, (a,), backward, "sigmoid")


def silu(a: Tensor) -> Tensor:
    s = expit(a.data)
    out = a.data * s

    def backward(g):
        return (g * (s + a.data * s * (1.0 - s)),)

    return record(out, (a,), backward, "silu")


def softplus(a: Tensor) -> Tensor:
    out = np.logaddexp(0.0, a.data)

    def backward(g):
        return (g * expit(a.data),)

    return record(out, (a,), backward, "softplus")


# -- reductions ----------------------------------------------------------
def tsum(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    out = np.sum(a.data, axis=axis, keepdims=keepdims)

    def backward(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, a.shape).copy(),)

    return record(out, (a,), backward, "sum")


def mean(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    count = a.data.size if axis is None else int(np.prod([a.shape[i] for i in np.atleast_1d(axis)]))
    return tsum(a, axis, keepdims) * (1.0 / count)


# -- shape and indexing ----------------------------------------------------
def reshape(a: Tensor, shape) -> Tensor:
    out = a.data.reshape(shape)

    def backward(g):
        return (g.reshape(a.shape),)

    return record(out, (a,), backward, "reshape")


def transpose(a: Tensor, axes=None) -> Tensor:
    out = np.transpose(a.data, axes)

    def backward(g):
        if axes is None:
            return (np.transpose(g),)
        return (np.transpose(g, np.argsort(axes)),)

    return record(out, (a,), backward, "transpose")


def getitem(a: Tensor, index) -> Tensor:
    out = a.data[index]

    def backward(g):
        full = np.zeros_like(a.data)
        if _needs_add_at(index):
            np.add.at(full, index, g)
        else:
            full[index] = g
        return (full,)

    return record(out, (a,), backward, "getitem")


def _needs_add_at(index) -> bool:
    items = index if isinstance(index, tuple) else (index,)
    return any(isinstance(i, (list, np.ndarray)) for i in items)


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    out = np.concatenate([t.data for t in tensors], axis=axis)
    bounds = np.cumsum([0] + [t.shape[axis] for t in tensors])

    def backward(g):
        return tuple(np.take(g, np.arange(lo, hi), axis=axis) for lo, hi in zip(bounds[:-1], bounds[1:]))

    return record(out, tensors, backward, "concat")


def pad(a: Tensor, widths: Sequence[tuple[int, int]]) -> Tensor:
    """Zero padding; ``widths`` follows :func:`numpy.pad`."""
    out = np.pad(a.data, widths)
    index = tuple(slice(lo, n + lo) for (lo, _), n in zip(widths, a.shape))

    def backward(g):
        return (g[index],)

    return record(out, (a,), backward, "pad")


# -- linear algebra --------------------------------------------------------
def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = np.matmul(a.data, b.data)

    def backward(g):
        ga = gb = None
        if a.requires_grad:
            ga = _unbroadcast(np.matmul(g, np.swapaxes(b.data, -1, -2)), a.shape)
        if b.requires_grad:
            gb = _unbroadcast(np.matmul(np.swapaxes(a.data, -1, -2), g), b.shape)
        return ga, gb

    return record(out, (a, b), backward, "matmul")


def linear(x: Tensor, weight: Tensor, bias: Tensor | None = None) -> Tensor:
    """Apply ``weight`` (out, in) to column tokens: (..., in, T) -> (..., out, T)."""
    out = np.matmul(weight.data, x.data)
    if bias is not None:
        out = out + bias.data[:, None]
    parents = (x, weight) if bias is None else (x, weight, bias)
    batch_axes = tuple(range(x.ndim - 2))

    def backward(g):
        gx = np.matmul(weight.data.T, g) if x.requires_grad else None
        gw = np.tensordot(g, x.data, axes=(batch_axes + (x.ndim - 1,),) * 2) if weight.requires_grad else None
        if bias is None:
            return gx, gw
        gb = g.sum(axis=batch_axes + (x.ndim - 1,))
        return gx, gw, gb

    return record(out, parents, backward, "linear")


# -- composite primitives ------------------------------------------------
def softmax(a: Tensor, axis: int = -1) -> Tensor:
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=axis, keepdims=True)

    def backward(g):
        return (out * (g - (g * out).sum(axis=axis, keepdims=True)),)

    return record(out, (a,), backward, "softmax")


def layer_norm(x: Tensor, scale: Tensor, offset: Tensor, axis: int = -2, eps: float = 1e-5) -> Tensor:
    """Normalize over ``axis``; ``scale``/``offset`` have that axis' length."""
    mu = x.data.mean(axis=axis, keepdims=True)
    xc = x.data - mu
    var = (xc**2).mean(axis=axis, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv
    shape = [1] * x.ndim
    shape[axis] = x.shape[axis]
    s = scale.data.reshape(shape)
    out = xhat * s + offset.data.reshape(shape)
    reduce_axes = tuple(i for i in range(x.ndim) if i != axis % x.ndim)
    n = x.shape[axis]

    def backward(g):
        gxhat = g * s
        gx = inv * (gxhat - gxhat.mean(axis=axis, keepdims=True)
                    - xhat * (gxhat * xhat).mean(axis=axis, keepdims=True))
        gscale = (g * xhat).sum(axis=reduce_axes)
        goffset = g.sum(axis=reduce_axes)
        return gx, gscale.reshape(n), goffset.reshape(n)

    return record(out, (x, scale, offset), backward, "layer_norm")


def conv2d(x: Tensor, weight: Tensor, bias: Tensor | None = None) -> Tensor:
    """Stride-1 'same' 2-D convolution, channels last.

    x: (B, H, W, Cin); weight: (Cout, Cin, kh, kw) with odd kh, kw. The kernel
    is unrolled along W into one banded matrix so the whole convolution is a
    single matmul over H-shifted copies of the input.
    """
    cout, cin, kh, kw = weight.shape
    nb, h, w, c = x.shape
    if c != cin:
        raise ValueError(f"conv2d expects {cin} input channels, got {c}")
    ph, pw = kh // 2, kw // 2
    xp = np.pad(x.data.reshape(nb, h, w * cin), ((0, 0), (ph, ph), (0, 0)))
    cols = np.stack([xp[:, i:i + h] for i in range(kh)], axis=2).reshape(nb * h, kh * w * cin)
    taps = [(j, wo, wo + j - pw) for j in range(kw) for wo in range(w) if 0 <= wo + j - pw < w]
    band = np.zeros((kh, w, cin, w, cout))
    for j, wo, wi in taps:
        band[:, wi, :, wo, :] = weight.data[:, :, :, j].transpose(2, 1, 0)
    band2 = band.reshape(kh * w * cin, w * cout)
    out = (cols @ band2).reshape(nb, h, w, cout)
    if bias is not None:
        out += bias.data
    parents = (x, weight) if bias is None else (x, weight, bias)

    def backward(g):
        g2 = g.reshape(nb * h, w * cout)
        gw = gx = None
        if weight.requires_grad:
            gband = (cols.T @ g2).reshape(kh, w, cin, w, cout)
            gw = np.zeros_like(weight.data)
            for j, wo, wi in taps:
                gw[:, :, :, j] += gband[:, wi, :, wo, :].transpose(2, 1, 0)
        if x.requires_grad:
            gcols = (g2 @ band2.T).reshape(nb, h, kh, w * cin)
            gxp = np.zeros_like(xp)
            for i in range(kh):
                gxp[:, i:i + h] += gcols[:, :, i]
            gx = gxp[:, ph:ph + h].reshape(nb, h, w, cin)
        if bias is None:
            return gx, gw
        return gx, gw, g.sum(axis=(0, 1, 2))

    return record(out, parents, backward, "conv2d")
