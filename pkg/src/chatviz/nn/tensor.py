"""Dense float64 tensors with reverse-mode automatic differentiation.

A small tape: every operation returns a new :class:`Tensor` holding a
closure that scatters the output gradient back to its parents. Gradients
are checked against central finite differences in the test suite, so ops
here favour clarity over micro-optimization; the one deliberately fused op
is :func:`lstm_sequence`, whose per-step backward would otherwise dominate
the tape.
"""
from __future__ import annotations

import contextlib
from typing import Callable, Optional, Sequence

import numpy as np

_GRAD_ENABLED = True


@contextlib.contextmanager
def no_grad():
    """Disable tape construction (inference paths)."""
    global _GRAD_ENABLED
    previous = _GRAD_ENABLED
    _GRAD_ENABLED = False
    try:
        yield
    finally:
        _GRAD_ENABLED = previous


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False,
                 parents: tuple["Tensor", ...] = (),
                 backward: Optional[Callable[[np.ndarray], None]] = None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad and _GRAD_ENABLED
        self._parents = parents if self.requires_grad else ()
        self._backward = backward if self.requires_grad else None

    # -- basic introspection -------------------------------------------------
    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def item(self) -> float:
        return float(self.data)

    def __repr__(self):
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"

    def accumulate(self, grad: np.ndarray) -> None:
        if self.grad is None:
            # copy: the incoming array may be shared with sibling paths
            self.grad = np.array(grad, dtype=np.float64)
        else:
            self.grad += grad

    def zero_grad(self) -> None:
        self.grad = None

    # -- autodiff -------------------------------------------------------------
    def backward(self, grad: Optional[np.ndarray] = None) -> None:
        if grad is None:
            if self.data.size != 1:
                raise ValueError("backward() without a gradient needs a scalar output")
            grad = np.ones_like(self.data)
        order: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen or not node.requires_grad:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                stack.append((parent, False))
        self.accumulate(grad)
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)
                # intermediates are transient: clearing them lets a shared
                # subgraph (e.g. one encoder pass) back multiple losses,
                # with leaf parameters accumulating across passes
                node.grad = None

    # -- operators --------------------------------------------------------------
    def __add__(self, other):
        return add(self, as_tensor(other))

    def __radd__(self, other):
        return add(as_tensor(other), self)

    def __sub__(self, other):
        return add(self, mul_scalar(as_tensor(other), -1.0))

    def __rsub__(self, other):
        return add(as_tensor(other), mul_scalar(self, -1.0))

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return mul_scalar(self, float(other))
        return mul(self, other)

    def __rmul__(self, other):
        return self.__mul__(other)

    def __truediv__(self, other):
        if isinstance(other, (int, float)):
            return mul_scalar(self, 1.0 / float(other))
        return div(self, other)

    def __neg__(self):
        return mul_scalar(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, key):
        return take(self, key)


def as_tensor(value) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return Tensor(value)


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Reduce a broadcast gradient back to the parent's shape."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad.reshape(shape)


def _make(data: np.ndarray, parents: Sequence[Tensor],
          backward: Callable[[np.ndarray], None]) -> Tensor:
    requires = _GRAD_ENABLED and any(p.requires_grad for p in parents)
    return Tensor(data, requires_grad=requires, parents=tuple(parents), backward=backward)


# -- arithmetic ----------------------------------------------------------------

def add(a: Tensor, b: Tensor) -> Tensor:
    out_data = a.data + b.data

    def backward(grad):
        if a.requires_grad:
            a.accumulate(_unbroadcast(grad, a.shape))
        if b.requires_grad:
            b.accumulate(_unbroadcast(grad, b.shape))

    return _make(out_data, (a, b), backward)


def mul(a: Tensor, b: Tensor) -> Tensor:
    out_data = a.data * b.data

    def backward(grad):
        if a.requires_grad:
            a.accumulate(_unbroadcast(grad * b.data, a.shape))
        if b.requires_grad:
            b.accumulate(_unbroadcast(grad * a.data, b.shape))

    return _make(out_data, (a, b), backward)


def mul_scalar(a: Tensor, s: float) -> Tensor:
    def backward(grad):
        if a.requires_grad:
            a.accumulate(grad * s)

    return _make(a.data * s, (a,), backward)


def div(a: Tensor, b: Tensor) -> Tensor:
    out_data = a.data / b.data

    def backward(grad):
        if a.requires_grad:
            a.accumulate(_unbroadcast(grad / b.data, a.shape))
        if b.requires_grad:
            b.accumulate(_unbroadcast(-grad * a.data / (b.data ** 2), b.shape))

    return _make(out_data, (a, b), backward)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    out_data = a.data @ b.data

    def backward(grad):
        if a.requires_grad:
            if a.data.ndim == 1 and b.data.ndim == 2:
                a.accumulate(grad @ b.data.T)
            elif a.data.ndim == 2 and b.data.ndim == 1:
                a.accumulate(np.outer(grad, b.data))
            else:
                a.accumulate(grad @ np.swapaxes(b.data, -1, -2))
        if b.requires_grad:
            if b.data.ndim == 1 and a.data.ndim == 2:
                b.accumulate(a.data.T @ grad)
            elif b.data.ndim == 2 and a.data.ndim == 1:
                b.accumulate(np.outer(a.data, grad))
            else:
                b.accumulate(np.swapaxes(a.data, -1, -2) @ grad)

    return _make(out_data, (a, b), backward)


def power(a: Tensor, exponent: float) -> Tensor:
    out_data = a.data ** exponent

    def backward(grad):
        if a.requires_grad:
            a.accumulate(grad * exponent * a.data ** (exponent - 1))

    return _make(out_data, (a,), backward)


def sqrt(a: Tensor) -> Tensor:
    return power(a, 0.5)


# -- nonlinearities --------------------------------------------------------------

def exp(a: Tensor) -> Tensor:
    out_data = np.exp(a.data)

    def backward(grad):
        if a.requires_grad:
            a.accumulate(grad * out_data)

    return _make(out_data, (a,), backward)


def log(a: Tensor) -> Tensor:
    def backward(grad):
        if a.requires_grad:
            a.accumulate(grad / a.data)

    return _make(np.log(a.data), (a,), backward)


def tanh(a: Tensor) -> Tensor:
    out_data = np.tanh(a.data)

    def backward(grad):
        if a.requires_grad:
            a.accumulate(grad * (1.0 - out_data ** 2))

    return _make(out_data, (a,), backward)


def sigmoid(a: Tensor) -> Tensor:
    out_data = 1.0 / (1.0 + np.exp(-a.data))

    def backward(grad):
        if a.requires_grad:
            a.accumulate(grad * out_data * (1.0 - out_data))

    return _make(out_data, (a,), backward)


def relu(a: Tensor) -> Tensor:
    out_data = np.maximum(a.data, 0.0)

    def backward(grad):
        if a.requires_grad:
            a.accumulate(grad * (a.data > 0.0))

    return _make(out_data, (a,), backward)


# -- reductions / shaping ------------------------------------------------------

def tsum(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    out_data = a.data.sum(axis=axis, keepdims=keepdims)

    def backward(grad):
        if not a.requires_grad:
            return
        g = grad
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        a.accumulate(np.broadcast_to(g, a.shape).copy())

    return _make(out_data, (a,), backward)


def tmean(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    if axis is None:
        count = a.data.size
    else:
        count = a.data.shape[axis]
    return mul_scalar(tsum(a, axis=axis, keepdims=keepdims), 1.0 / count)


def reshape(a: Tensor, shape) -> Tensor:
    def backward(grad):
        if a.requires_grad:
            a.accumulate(grad.reshape(a.shape))

    return _make(a.data.reshape(shape), (a,), backward)


def transpose(a: Tensor) -> Tensor:
    def backward(grad):
        if a.requires_grad:
            a.accumulate(grad.T)

    return _make(a.data.T, (a,), backward)


def take(a: Tensor, key) -> Tensor:
    out_data = a.data[key]

    def backward(grad):
        if a.requires_grad:
            full = np.zeros_like(a.data)
            np.add.at(full, key, grad)
            a.accumulate(full)

    return _make(out_data, (a,), backward)


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    out_data = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.data.shape[axis] for t in tensors]

    def backward(grad):
        start = 0
        for t, size in zip(tensors, sizes):
            index = [slice(None)] * grad.ndim
            index[axis] = slice(start, start + size)
            if t.requires_grad:
                t.accumulate(grad[tuple(index)])
            start += size

    return _make(out_data, tuple(tensors), backward)


def stack(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    out_data = np.stack([t.data for t in tensors], axis=axis)

    def backward(grad):
        parts = np.split(grad, len(tensors), axis=axis)
        for t, piece in zip(tensors, parts):
            if t.requires_grad:
                t.accumulate(np.squeeze(piece, axis=axis))

    return _make(out_data, tuple(tensors), backward)


# -- softmax family ---------------------------------------------------------------

def softmax(a: Tensor, axis: int = -1) -> Tensor:
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    exps = np.exp(shifted)
    out_data = exps / exps.sum(axis=axis, keepdims=True)

    def backward(grad):
        if a.requires_grad:
            dot = (grad * out_data).sum(axis=axis, keepdims=True)
            a.accumulate(out_data * (grad - dot))

    return _make(out_data, (a,), backward)


def masked_softmax(a: Tensor, mask: np.ndarray, axis: int = -1) -> Tensor:
    """Softmax over the positions where ``mask`` is True; others are exactly 0."""
    neg = np.where(mask, a.data, -np.inf)
    shifted = neg - neg.max(axis=axis, keepdims=True)
    exps = np.exp(shifted)
    out_data = exps / exps.sum(axis=axis, keepdims=True)

    def backward(grad):
        if a.requires_grad:
            dot = (grad * out_data).sum(axis=axis, keepdims=True)
            a.accumulate(out_data * (grad - dot))

    return _make(out_data, (a,), backward)


def masked_nll(logits: Tensor, mask: np.ndarray, target: int) -> Tensor:
    """Negative log-likelihood of ``target`` under a masked softmax over a
    1-D logit vector. The target must be a legal (unmasked) position."""
    if not mask[target]:
        raise ValueError("target position is masked out")
    neg = np.where(mask, logits.data, -np.inf)
    shifted = neg - neg.max()
    exps = np.exp(shifted)
    probs = exps / exps.sum()
    out_data = np.asarray(-np.log(probs[target]))

    def backward(grad):
        if logits.requires_grad:
            g = probs.copy()
            g[target] -= 1.0
            logits.accumulate(grad * g)

    return _make(out_data, (logits,), backward)


def cross_entropy(logits: Tensor, targets: Sequence[int]) -> Tensor:
    """Mean over positions of -log softmax(logits)[target].

    ``logits`` has shape [L, V]; ``targets`` length L.
    """
    targets = np.asarray(targets, dtype=np.int64)
    n, v = logits.data.shape
    if targets.min(initial=0) < 0 or (n and targets.max(initial=0) >= v):
        raise IndexError("target id out of range")
    shifted = logits.data - logits.data.max(axis=1, keepdims=True)
    exps = np.exp(shifted)
    probs = exps / exps.sum(axis=1, keepdims=True)
    picked = probs[np.arange(n), targets]
    out_data = np.asarray(-np.log(picked).mean())

    def backward(grad):
        if logits.requires_grad:
            g = probs.copy()
            g[np.arange(n), targets] -= 1.0
            logits.accumulate(grad * g / n)

    return _make(out_data, (logits,), backward)


def embedding_rows(table: Tensor, ids: Sequence[int]) -> Tensor:
    """Row gather with scatter-add gradient."""
    ids = np.asarray(ids, dtype=np.int64)
    if ids.size and (ids.min() < 0 or ids.max() >= table.data.shape[0]):
        raise IndexError("embedding id out of range")
    out_data = table.data[ids]

    def backward(grad):
        if table.requires_grad:
            full = np.zeros_like(table.data)
            np.add.at(full, ids, grad)
            table.accumulate(full)

    return _make(out_data, (table,), backward)


# -- fused recurrent sequence -----------------------------------------------------

def lstm_sequence(x: Tensor, w_x: Tensor, w_h: Tensor, b: Tensor,
                  reverse: bool = False) -> Tensor:
    """Run an LSTM over a [T, d_in] sequence, returning hidden states [T, H].

    The whole unrolled pass is one tape node: forward caches the gates and
    backward replays the recurrence in reverse (backpropagation through time).
    """
    seq = x.data[::-1] if reverse else x.data
    steps, _ = seq.shape
    hidden = w_h.data.shape[0]

    pre = seq @ w_x.data + b.data  # [T, 4H]
    hs = np.zeros((steps, hidden))
    cs = np.zeros((steps, hidden))
    gates = np.zeros((steps, 4 * hidden))
    h = np.zeros(hidden)
    c = np.zeros(hidden)
    w_h_data = w_h.data
    for t in range(steps):
        z = pre[t] + h @ w_h_data
        sig = 1.0 / (1.0 + np.exp(-z))
        i = sig[:hidden]
        f = sig[hidden:2 * hidden]
        g = np.tanh(z[2 * hidden:3 * hidden])
        o = sig[3 * hidden:]
        c = f * c + i * g
        h = o * np.tanh(c)
        gates[t, :3 * hidden] = sig[:3 * hidden]
        gates[t, 2 * hidden:3 * hidden] = g
        gates[t, 3 * hidden:] = o
        hs[t] = h
        cs[t] = c

    out_data = hs[::-1].copy() if reverse else hs.copy()

    def backward(grad):
        d_hs = grad[::-1] if reverse else grad
        dz_all = np.zeros((steps, 4 * hidden))
        tanh_cs = np.tanh(cs)
        w_h_t = w_h.data.T
        dh_next = np.zeros(hidden)
        dc_next = np.zeros(hidden)
        for t in range(steps - 1, -1, -1):
            i = gates[t, :hidden]
            f = gates[t, hidden:2 * hidden]
            g = gates[t, 2 * hidden:3 * hidden]
            o = gates[t, 3 * hidden:]
            c_prev = cs[t - 1] if t > 0 else 0.0
            tanh_c = tanh_cs[t]

            dh = d_hs[t] + dh_next
            dc = dh * o * (1.0 - tanh_c ** 2) + dc_next
            dc_next = dc * f

            dz = dz_all[t]
            dz[:hidden] = dc * g * i * (1.0 - i)
            dz[hidden:2 * hidden] = dc * c_prev * f * (1.0 - f)
            dz[2 * hidden:3 * hidden] = dc * i * (1.0 - g ** 2)
            dz[3 * hidden:] = dh * tanh_c * o * (1.0 - o)
            dh_next = dz @ w_h_t

        # weight/input gradients fall out of the stacked per-step deltas
        if x.requires_grad:
            dx_seq = dz_all @ w_x.data.T
            x.accumulate(dx_seq[::-1] if reverse else dx_seq)
        if w_x.requires_grad:
            w_x.accumulate(seq.T @ dz_all)
        if w_h.requires_grad:
            h_prev = np.vstack([np.zeros((1, hidden)), hs[:-1]])
            w_h.accumulate(h_prev.T @ dz_all)
        if b.requires_grad:
            b.accumulate(dz_all.sum(axis=0))

    return _make(out_data, (x, w_x, w_h, b), backward)
