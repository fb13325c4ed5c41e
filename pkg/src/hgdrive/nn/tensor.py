"""Reverse-mode autodiff over float64 numpy arrays.

Only the operations needed by the attention network are implemented; each op
records a closure computing vector-Jacobian products for its inputs. Graph
construction is skipped entirely inside ``no_grad`` (inference path), so the
same forward code serves both training and fast greedy evaluation.
"""

from __future__ import annotations

import numpy as np

_GRAD_ENABLED = True


class no_grad:
    """Context manager disabling tape construction."""

    def __enter__(self):
        global _GRAD_ENABLED
        self._prev = _GRAD_ENABLED
        _GRAD_ENABLED = False
        return self

    def __exit__(self, *exc):
        global _GRAD_ENABLED
        _GRAD_ENABLED = self._prev
        return False


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum `grad` down to `shape`, undoing numpy broadcasting."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


class Tensor:
    """Array node in the computation graph.

    `data` is always a float64 ndarray; `grad` is filled by `backward()` for
    nodes with `requires_grad`.
    """

    __slots__ = ("data", "grad", "requires_grad", "_backward", "_parents")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._backward = None
        self._parents: tuple = ()

    @property
    def shape(self):
        return self.data.shape

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, grad={self.requires_grad})"

    def zero_grad(self):
        self.grad = None

    # -- graph construction -------------------------------------------------

    @staticmethod
    def _make(data, parents, backward):
        out = Tensor(data)
        if _GRAD_ENABLED and any(p.requires_grad for p in parents):
            out.requires_grad = True
            out._parents = parents
            out._backward = backward
        return out

    def _accumulate(self, grad: np.ndarray):
        if self.grad is None:
            self.grad = grad.copy()
        else:
            self.grad += grad

    def backward(self, grad=None):
        """Backpropagate from this node; accumulates into `.grad` of leaves."""
        if grad is None:
            if self.data.size != 1:
                raise ValueError("backward() without grad requires a scalar")
            grad = np.ones_like(self.data)
        topo: list[Tensor] = []
        seen = set()
        stack = [(self, False)]
        while stack:
            node, done = stack.pop()
            if done:
                topo.append(node)
                continue
            if id(node) in seen or not node.requires_grad:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                stack.append((p, False))
        grads: dict[int, np.ndarray] = {id(self): np.asarray(grad, dtype=np.float64)}
        for node in reversed(topo):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if node._backward is None:
                node._accumulate(g)
                continue
            for parent, pg in zip(node._parents, node._backward(g)):
                if pg is None or not parent.requires_grad:
                    continue
                pg = _unbroadcast(pg, parent.data.shape)
                if id(parent) in grads:
                    grads[id(parent)] += pg
                else:
                    grads[id(parent)] = pg

    # -- operator sugar ------------------------------------------------------

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
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def reshape(self, *shape):
        return reshape(self, shape)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


# -- primitive ops ----------------------------------------------------------


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return Tensor._make(a.data + b.data, (a, b), lambda g: (g, g))


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return Tensor._make(a.data - b.data, (a, b), lambda g: (g, -g))


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return Tensor._make(a.data * b.data, (a, b), lambda g: (g * b.data, g * a.data))


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)

    def backward(g):
        ga = g @ np.swapaxes(b.data, -1, -2)
        gb = np.swapaxes(a.data, -1, -2) @ g
        return ga, gb

    return Tensor._make(a.data @ b.data, (a, b), backward)


def einsum(spec: str, a, b) -> Tensor:
    """Two-operand einsum.

    Every index of each operand must appear in the output or in the other
    operand (plain contractions, no internal traces) so the gradient is itself
    an einsum with permuted subscripts.
    """
    a, b = as_tensor(a), as_tensor(b)
    lhs, out_sub = spec.split("->")
    a_sub, b_sub = lhs.split(",")

    def backward(g):
        ga = np.einsum(f"{out_sub},{b_sub}->{a_sub}", g, b.data)
        gb = np.einsum(f"{a_sub},{out_sub}->{b_sub}", a.data, g)
        return ga, gb

    return Tensor._make(np.einsum(spec, a.data, b.data), (a, b), backward)


def relu(x) -> Tensor:
    x = as_tensor(x)
    mask = x.data > 0
    return Tensor._make(np.where(mask, x.data, 0.0), (x,), lambda g: (g * mask,))


def leaky_relu(x, slope: float = 0.2) -> Tensor:
    x = as_tensor(x)
    mask = x.data > 0
    factor = np.where(mask, 1.0, slope)
    return Tensor._make(x.data * factor, (x,), lambda g: (g * factor,))


def sigmoid(x) -> Tensor:
    x = as_tensor(x)
    y = 1.0 / (1.0 + np.exp(-x.data))
    return Tensor._make(y, (x,), lambda g: (g * y * (1.0 - y),))


def log(x) -> Tensor:
    x = as_tensor(x)
    return Tensor._make(np.log(x.data), (x,), lambda g: (g / x.data,))


def square(x) -> Tensor:
    x = as_tensor(x)
    return Tensor._make(x.data * x.data, (x,), lambda g: (2.0 * g * x.data,))


def tsum(x, axis=None, keepdims: bool = False) -> Tensor:
    x = as_tensor(x)

    def backward(g):
        if axis is None:
            return (np.broadcast_to(g, x.data.shape).copy(),)
        g = np.asarray(g)
        if not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, x.data.shape).copy(),)

    return Tensor._make(x.data.sum(axis=axis, keepdims=keepdims), (x,), backward)


def tmean(x, axis=None, keepdims: bool = False) -> Tensor:
    x = as_tensor(x)
    n = x.data.size if axis is None else x.data.shape[axis]
    return mul(tsum(x, axis=axis, keepdims=keepdims), 1.0 / n)


def reshape(x, shape) -> Tensor:
    x = as_tensor(x)
    old = x.data.shape
    return Tensor._make(x.data.reshape(shape), (x,), lambda g: (g.reshape(old),))


def concat(tensors, axis: int = -1) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    sizes = [t.data.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def backward(g):
        return tuple(np.array_split(g, splits, axis=axis))

    return Tensor._make(
        np.concatenate([t.data for t in tensors], axis=axis), tuple(tensors), backward
    )


def softmax(x, axis: int = -1) -> Tensor:
    x = as_tensor(x)
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=axis, keepdims=True)

    def backward(g):
        return (y * (g - (g * y).sum(axis=axis, keepdims=True)),)

    return Tensor._make(y, (x,), backward)


def masked_softmax(x, mask: np.ndarray, axis: int) -> Tensor:
    """Softmax over entries where `mask` is nonzero; all-masked slices yield 0."""
    x = as_tensor(x)
    mask = np.asarray(mask, dtype=bool)
    neg = np.where(mask, x.data, -np.inf)
    mx = neg.max(axis=axis, keepdims=True)
    mx = np.where(np.isfinite(mx), mx, 0.0)  # keep exp() finite on empty slices
    e = np.exp(neg - mx) * mask
    denom = e.sum(axis=axis, keepdims=True)
    y = np.divide(e, denom, out=np.zeros_like(e), where=denom > 0)

    def backward(g):
        return (y * (g - (g * y).sum(axis=axis, keepdims=True)),)

    return Tensor._make(y, (x,), backward)


def broadcast_to(x, shape) -> Tensor:
    x = as_tensor(x)
    return Tensor._make(
        np.broadcast_to(x.data, shape).copy(),
        (x,),
        lambda g: (_unbroadcast(g, x.data.shape),),
    )


def log_softmax(x, axis: int = -1) -> Tensor:
    x = as_tensor(x)
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=axis, keepdims=True))
    y = shifted - lse

    def backward(g):
        return (g - np.exp(y) * g.sum(axis=axis, keepdims=True),)

    return Tensor._make(y, (x,), backward)


def gather(x, index: np.ndarray, axis: int = -1) -> Tensor:
    """take_along_axis with scatter-add backward."""
    x = as_tensor(x)
    index = np.asarray(index)

    def backward(g):
        gx = np.zeros_like(x.data)
        np.put_along_axis(gx, index, g, axis=axis)
        return (gx,)

    return Tensor._make(np.take_along_axis(x.data, index, axis=axis), (x,), backward)
