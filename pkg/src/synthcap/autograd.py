"""Minimal reverse-mode automatic differentiation over numpy arrays.

Just enough machinery for the attention fusion block and the transformer
decoder: eager float64 ops that record a backward closure, and a
topological-order backward pass.  Keeping the engine in-repo means the
finite-difference checks in the test suite genuinely verify every
gradient this library trains with.
"""

from __future__ import annotations

from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import erf

_SQRT1_2 = 1.0 / np.sqrt(2.0)
_INV_SQRT2PI = 1.0 / np.sqrt(2.0 * np.pi)


class Tensor:
    """A numpy array plus an accumulated gradient and a backward closure."""

    __slots__ = ("data", "grad", "requires_grad", "_backward", "_parents")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad
        self._backward: Optional[Callable[[np.ndarray], None]] = None
        self._parents: tuple[Tensor, ...] = ()

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def accumulate(self, grad: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.array(grad, dtype=np.float64)
        else:
            self.grad += grad

    def zero_grad(self) -> None:
        self.grad = None

    def backward(self, grad: Optional[np.ndarray] = None) -> None:
        """Run reverse-mode accumulation from this node (default seed 1.0)."""
        if grad is None:
            if self.data.size != 1:
                raise ValueError("backward() without a seed needs a scalar output")
            grad = np.ones_like(self.data)
        topo: list[Tensor] = []
        visited: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                topo.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if id(parent) not in visited:
                    stack.append((parent, False))
        self.accumulate(grad)
        for node in reversed(topo):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)


def _wrap(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _node(data: np.ndarray, parents: Sequence[Tensor], backward) -> Tensor:
    out = Tensor(data)
    tracked = tuple(p for p in parents if p.requires_grad or p._parents)
    if tracked:
        out.requires_grad = True
        out._parents = tracked
        out._backward = backward
    return out


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum ``grad`` down to ``shape`` to undo numpy broadcasting."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


def add(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)

    def backward(g: np.ndarray) -> None:
        if a.requires_grad or a._parents:
            a.accumulate(_unbroadcast(g, a.data.shape))
        if b.requires_grad or b._parents:
            b.accumulate(_unbroadcast(g, b.data.shape))

    return _node(a.data + b.data, (a, b), backward)


def mul(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)

    def backward(g: np.ndarray) -> None:
        if a.requires_grad or a._parents:
            a.accumulate(_unbroadcast(g * b.data, a.data.shape))
        if b.requires_grad or b._parents:
            b.accumulate(_unbroadcast(g * a.data, b.data.shape))

    return _node(a.data * b.data, (a, b), backward)


def matmul(a, b) -> Tensor:
    """Matrix product; supports stacked (batched) operands without broadcasting."""
    a, b = _wrap(a), _wrap(b)

    def backward(g: np.ndarray) -> None:
        if a.requires_grad or a._parents:
            ga = g @ np.swapaxes(b.data, -1, -2)
            a.accumulate(_unbroadcast(ga, a.data.shape))
        if b.requires_grad or b._parents:
            gb = np.swapaxes(a.data, -1, -2) @ g
            b.accumulate(_unbroadcast(gb, b.data.shape))

    return _node(a.data @ b.data, (a, b), backward)


def reshape(a: Tensor, shape: tuple[int, ...]) -> Tensor:
    a = _wrap(a)

    def backward(g: np.ndarray) -> None:
        a.accumulate(g.reshape(a.data.shape))

    return _node(a.data.reshape(shape), (a,), backward)


def swapaxes(a: Tensor, ax1: int, ax2: int) -> Tensor:
    a = _wrap(a)

    def backward(g: np.ndarray) -> None:
        a.accumulate(np.swapaxes(g, ax1, ax2))

    return _node(np.swapaxes(a.data, ax1, ax2), (a,), backward)


def concat(tensors: Sequence[Tensor], axis: int) -> Tensor:
    tensors = [_wrap(t) for t in tensors]
    sizes = [t.data.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def backward(g: np.ndarray) -> None:
        for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
            if t.requires_grad or t._parents:
                index = [slice(None)] * g.ndim
                index[axis] = slice(lo, hi)
                t.accumulate(g[tuple(index)])

    return _node(np.concatenate([t.data for t in tensors], axis=axis), tensors, backward)


def gather_rows(table: Tensor, ids: np.ndarray) -> Tensor:
    """Row lookup ``table[ids]`` (embedding); duplicate ids accumulate."""
    table = _wrap(table)
    ids = np.asarray(ids)

    def backward(g: np.ndarray) -> None:
        grad = np.zeros_like(table.data)
        np.add.at(grad, ids.reshape(-1), g.reshape(-1, table.data.shape[-1]))
        table.accumulate(grad)

    return _node(table.data[ids], (table,), backward)


def softmax(a: Tensor, mask: Optional[np.ndarray] = None) -> Tensor:
    """Softmax over the last axis, with an optional additive mask constant."""
    a = _wrap(a)
    logits = a.data if mask is None else a.data + mask
    shifted = logits - logits.max(axis=-1, keepdims=True)
    expv = np.exp(shifted)
    probs = expv / expv.sum(axis=-1, keepdims=True)

    def backward(g: np.ndarray) -> None:
        inner = (g * probs).sum(axis=-1, keepdims=True)
        a.accumulate(probs * (g - inner))

    return _node(probs, (a,), backward)


def gelu(a: Tensor) -> Tensor:
    """Exact (erf-based) Gaussian error linear unit."""
    a = _wrap(a)
    x = a.data
    cdf = 0.5 * (1.0 + erf(x * _SQRT1_2))

    def backward(g: np.ndarray) -> None:
        pdf = _INV_SQRT2PI * np.exp(-0.5 * x * x)
        a.accumulate(g * (cdf + x * pdf))

    return _node(x * cdf, (a,), backward)


def layer_norm(a: Tensor, gamma: Tensor, beta: Tensor, eps: float = 1e-5) -> Tensor:
    """Layer normalization over the last axis with learned scale and shift."""
    a, gamma, beta = _wrap(a), _wrap(gamma), _wrap(beta)
    x = a.data
    mean = x.mean(axis=-1, keepdims=True)
    centered = x - mean
    var = (centered * centered).mean(axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + eps)
    x_hat = centered * inv_std

    def backward(g: np.ndarray) -> None:
        d = x.shape[-1]
        if gamma.requires_grad or gamma._parents:
            gamma.accumulate(_unbroadcast(g * x_hat, gamma.data.shape))
        if beta.requires_grad or beta._parents:
            beta.accumulate(_unbroadcast(g, beta.data.shape))
        if a.requires_grad or a._parents:
            gx_hat = g * gamma.data
            term1 = gx_hat
            term2 = gx_hat.mean(axis=-1, keepdims=True)
            term3 = x_hat * (gx_hat * x_hat).mean(axis=-1, keepdims=True)
            a.accumulate(inv_std * (term1 - term2 - term3))

    return _node(x_hat * gamma.data + beta.data, (a, gamma, beta), backward)


def mean(a: Tensor) -> Tensor:
    a = _wrap(a)
    count = a.data.size

    def backward(g: np.ndarray) -> None:
        a.accumulate(np.full_like(a.data, float(g) / count))

    return _node(np.array(a.data.mean()), (a,), backward)


def cross_entropy_logits(logits: Tensor, targets: np.ndarray, weights: np.ndarray) -> Tensor:
    """Weighted token-level cross-entropy from raw logits.

    ``logits`` is (N, V), ``targets`` (N,) int ids, ``weights`` (N,)
    nonnegative and summing to 1 (zero entries are masked out).  Returns
    the scalar sum_i weights[i] * -log softmax(logits[i])[targets[i]],
    computed with max-subtraction.
    """
    logits = _wrap(logits)
    x = logits.data
    targets = np.asarray(targets, dtype=np.int64)
    weights = np.asarray(weights, dtype=np.float64)
    shifted = x - x.max(axis=-1, keepdims=True)
    expv = np.exp(shifted)
    total = expv.sum(axis=-1, keepdims=True)
    log_probs = shifted - np.log(total)
    nll = -log_probs[np.arange(x.shape[0]), targets]
    loss = float((weights * nll).sum())

    def backward(g: np.ndarray) -> None:
        probs = expv / total
        grad = probs * weights[:, None]
        grad[np.arange(x.shape[0]), targets] -= weights
        logits.accumulate(float(g) * grad)

    return _node(np.array(loss), (logits,), backward)
