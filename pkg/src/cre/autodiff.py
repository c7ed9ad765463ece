"""Minimal reverse-mode automatic differentiation on float64 numpy arrays.

A Tensor wraps an ndarray and records a backward closure per operation.
Gradients are accumulated into ``.grad`` by ``Tensor.backward()`` on a
scalar output. Only the operations needed by the sentence encoders and
the scoring/objective pipeline are provided; everything runs at double
precision so central finite differences can verify the gradients.
"""

from __future__ import annotations

import numpy as np


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Reduce ``grad`` back to ``shape`` after numpy broadcasting."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad=False, parents=(), backward=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = requires_grad or any(p.requires_grad for p in parents)
        self._parents = parents if self.requires_grad else ()
        self._backward = backward if self.requires_grad else None

    # -- bookkeeping ----------------------------------------------------

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    def _accum(self, grad: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += grad

    def zero_grad(self) -> None:
        self.grad = None

    def backward(self) -> None:
        if self.data.size != 1:
            raise ValueError("backward() requires a scalar output")
        topo = []
        visited = set()
        stack = [(self, False)]
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
        self._accum(np.ones_like(self.data))
        for node in reversed(topo):
            if node._backward is not None:
                node._backward(node.grad)

    # -- arithmetic -----------------------------------------------------

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __neg__(self):
        def back(g, a=self):
            if a.requires_grad:
                a._accum(-g)

        return Tensor(-self.data, parents=(self,), backward=back)

    def __sub__(self, other):
        return add(self, -as_tensor(other))

    def __rsub__(self, other):
        return add(as_tensor(other), -self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(as_tensor(other), self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, key):
        out_data = self.data[key]

        def back(g, a=self, key=key):
            if not a.requires_grad:
                return
            gx = np.zeros_like(a.data)
            if _is_fancy(key):
                np.add.at(gx, key, g)
            else:
                gx[key] += g
            a._accum(gx)

        return Tensor(out_data, parents=(self,), backward=back)

    # -- elementwise ----------------------------------------------------

    def tanh(self):
        y = np.tanh(self.data)

        def back(g, a=self, y=y):
            if a.requires_grad:
                a._accum(g * (1.0 - y * y))

        return Tensor(y, parents=(self,), backward=back)

    def sigmoid(self):
        y = 1.0 / (1.0 + np.exp(-self.data))

        def back(g, a=self, y=y):
            if a.requires_grad:
                a._accum(g * y * (1.0 - y))

        return Tensor(y, parents=(self,), backward=back)

    def relu(self):
        mask = self.data > 0

        def back(g, a=self, mask=mask):
            if a.requires_grad:
                a._accum(g * mask)

        return Tensor(self.data * mask, parents=(self,), backward=back)

    def exp(self):
        y = np.exp(self.data)

        def back(g, a=self, y=y):
            if a.requires_grad:
                a._accum(g * y)

        return Tensor(y, parents=(self,), backward=back)

    def log(self):
        def back(g, a=self):
            if a.requires_grad:
                a._accum(g / a.data)

        return Tensor(np.log(self.data), parents=(self,), backward=back)

    def sqrt(self):
        """Square root with zero subgradient at 0 (used for L2 norms)."""
        y = np.sqrt(self.data)

        def back(g, a=self, y=y):
            if a.requires_grad:
                with np.errstate(divide="ignore", invalid="ignore"):
                    gx = np.where(y > 0, g / (2.0 * y), 0.0)
                a._accum(gx)

        return Tensor(y, parents=(self,), backward=back)

    def clip(self, lo: float, hi: float):
        """Clamp values; gradient passes through only in the open interval."""
        inside = (self.data > lo) & (self.data < hi)

        def back(g, a=self, inside=inside):
            if a.requires_grad:
                a._accum(g * inside)

        return Tensor(np.clip(self.data, lo, hi), parents=(self,), backward=back)

    # -- reductions / shape ---------------------------------------------

    def sum(self, axis=None, keepdims=False):
        out_data = self.data.sum(axis=axis, keepdims=keepdims)

        def back(g, a=self, axis=axis, keepdims=keepdims):
            if not a.requires_grad:
                return
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
            a._accum(np.broadcast_to(g, a.data.shape).copy())

        return Tensor(out_data, parents=(self,), backward=back)

    def mean(self, axis=None, keepdims=False):
        n = self.data.size if axis is None else self.data.shape[axis]
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / n)

    def max(self, axis=None, keepdims=False):
        """Max reduction; ties route gradient to the first maximum."""
        out_data = self.data.max(axis=axis, keepdims=keepdims)

        def back(g, a=self, axis=axis, keepdims=keepdims):
            if not a.requires_grad:
                return
            gx = np.zeros_like(a.data)
            if axis is None:
                idx = np.unravel_index(np.argmax(a.data), a.data.shape)
                gx[idx] = g if np.isscalar(g) else g.reshape(())
            else:
                idx = np.expand_dims(np.argmax(a.data, axis=axis), axis)
                gexp = g if keepdims else np.expand_dims(g, axis)
                np.put_along_axis(gx, idx, gexp, axis=axis)
            a._accum(gx)

        return Tensor(out_data, parents=(self,), backward=back)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], tuple):
            shape = shape[0]

        def back(g, a=self):
            if a.requires_grad:
                a._accum(g.reshape(a.data.shape))

        return Tensor(self.data.reshape(shape), parents=(self,), backward=back)

    @property
    def T(self):
        def back(g, a=self):
            if a.requires_grad:
                a._accum(g.T)

        return Tensor(self.data.T, parents=(self,), backward=back)


def _is_fancy(key) -> bool:
    if isinstance(key, (np.ndarray, list)):
        return True
    if isinstance(key, tuple):
        return any(isinstance(k, (np.ndarray, list)) for k in key)
    return False


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)

    def back(g):
        if a.requires_grad:
            a._accum(_unbroadcast(g, a.data.shape))
        if b.requires_grad:
            b._accum(_unbroadcast(g, b.data.shape))

    return Tensor(a.data + b.data, parents=(a, b), backward=back)


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)

    def back(g):
        if a.requires_grad:
            a._accum(_unbroadcast(g * b.data, a.data.shape))
        if b.requires_grad:
            b._accum(_unbroadcast(g * a.data, b.data.shape))

    return Tensor(a.data * b.data, parents=(a, b), backward=back)


def div(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)

    def back(g):
        if a.requires_grad:
            a._accum(_unbroadcast(g / b.data, a.data.shape))
        if b.requires_grad:
            b._accum(_unbroadcast(-g * a.data / (b.data * b.data), b.data.shape))

    return Tensor(a.data / b.data, parents=(a, b), backward=back)


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out_data = a.data @ b.data
    an, bn = a.data.ndim, b.data.ndim
    if an > 2 or bn > 2:
        raise ValueError("matmul supports 1-D and 2-D operands only")

    def back(g):
        if an == 2 and bn == 2:
            if a.requires_grad:
                a._accum(g @ b.data.T)
            if b.requires_grad:
                b._accum(a.data.T @ g)
        elif an == 2 and bn == 1:
            if a.requires_grad:
                a._accum(np.outer(g, b.data))
            if b.requires_grad:
                b._accum(a.data.T @ g)
        elif an == 1 and bn == 2:
            if a.requires_grad:
                a._accum(b.data @ g)
            if b.requires_grad:
                b._accum(np.outer(a.data, g))
        else:
            if a.requires_grad:
                a._accum(g * b.data)
            if b.requires_grad:
                b._accum(g * a.data)

    return Tensor(out_data, parents=(a, b), backward=back)


def concat(tensors, axis=0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    out_data = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.data.shape[axis] for t in tensors]

    def back(g):
        offset = 0
        for t, size in zip(tensors, sizes):
            if t.requires_grad:
                sl = [slice(None)] * g.ndim
                sl[axis] = slice(offset, offset + size)
                t._accum(g[tuple(sl)])
            offset += size

    return Tensor(out_data, parents=tuple(tensors), backward=back)


def softmax_rows(scores: Tensor, mask: np.ndarray | None = None) -> Tensor:
    """Row-wise softmax of a 2-D score matrix.

    ``mask`` is a boolean row of valid columns; invalid columns receive a
    large negative additive offset, so their weights underflow to exactly
    zero and carry zero gradient.
    """
    if mask is not None:
        offset = np.where(mask, 0.0, -1e9)
        scores = scores + Tensor(np.broadcast_to(offset, scores.shape))
    m = scores.max(axis=1, keepdims=True)
    e = (scores - m).exp()
    return e / e.sum(axis=1, keepdims=True)
