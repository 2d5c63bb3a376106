"""Dense float64 tensors with reverse-mode automatic differentiation.

Everything in this package runs on a single numeric carrier: numpy float64
arrays wrapped in graph nodes. An operation records its parent nodes and a
closure that pushes the output gradient back to them; ``backward()`` walks
the recorded graph once in reverse topological order and accumulates
gradients on the leaves.

Complex values never appear at this level. Complex arithmetic lives in
``cplx.py`` as pairs of real tensors, so every gradient here is a plain
partial derivative with respect to a real component.
"""

from __future__ import annotations

import numpy as np


class ShapeError(ValueError):
    """Raised when operand shapes are incompatible."""


class NonFiniteError(ValueError):
    """Raised when NaN or Inf shows up where finite values are required."""


_grad_enabled = True


class no_grad:
    """Context manager that disables graph recording (cheap eval forwards)."""

    def __enter__(self):
        global _grad_enabled
        self._prev = _grad_enabled
        _grad_enabled = False
        return self

    def __exit__(self, *exc):
        global _grad_enabled
        _grad_enabled = self._prev
        return False


class Tensor:
    """A dense real array plus an optional position in an autodiff graph.

    Leaf tensors created with ``requires_grad=True`` act as parameters:
    after ``backward(loss)`` their ``grad`` holds d(loss)/d(param) with the
    parameter's own shape. Finished tensors are treated as immutable values;
    only the optimizer rebinds ``data`` through ``assign``.
    """

    __slots__ = ("data", "grad", "requires_grad", "name", "_parents", "_backward")

    def __init__(self, data, requires_grad=False, name=None):
        arr = np.asarray(data, dtype=np.float64)
        if not np.isfinite(arr).all():
            raise NonFiniteError(f"non-finite values in tensor {name or '<unnamed>'}")
        self.data = arr
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self.name = name
        self._parents = ()
        self._backward = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def size(self):
        return self.data.size

    def __repr__(self):
        flags = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.data.shape}{flags}, name={self.name!r})"

    def assign(self, new_data):
        """Rebind the underlying array (optimizer updates only)."""
        arr = np.asarray(new_data, dtype=np.float64)
        if arr.shape != self.data.shape:
            raise ShapeError(f"assign shape {arr.shape} != {self.data.shape}")
        if not np.isfinite(arr).all():
            raise NonFiniteError(f"non-finite update for {self.name or '<unnamed>'}")
        self.data = arr

    # -- operator sugar -------------------------------------------------

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

    def __truediv__(self, other):
        return div(self, other)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def sum(self):
        return sum_all(self)

    def mean(self):
        return mean_all(self)

    def reshape(self, shape):
        return reshape(self, shape)

    def transpose(self, axes):
        return transpose(self, axes)


def as_tensor(x):
    if isinstance(x, Tensor):
        return x
    return Tensor(np.asarray(x, dtype=np.float64))


def _tracked(*parents):
    return _grad_enabled and any(p.requires_grad for p in parents)


def _node(data, parents, backward_fn):
    """Build an op output, recording the graph only when a parent needs it."""
    out = Tensor.__new__(Tensor)
    out.data = data
    out.grad = None
    out.name = None
    if _tracked(*parents):
        out.requires_grad = True
        out._parents = parents
        out._backward = backward_fn
    else:
        out.requires_grad = False
        out._parents = ()
        out._backward = None
    return out


def _accum(t, g):
    if t.grad is None:
        t.grad = np.zeros_like(t.data)
    t.grad += g


def _accum_slice(t, index, g):
    # Accumulate into a slice of the parent without materializing a full
    # gradient per child (keeps split/narrow backward linear in the number
    # of pieces).
    if t.grad is None:
        t.grad = np.zeros_like(t.data)
    t.grad[index] += g


def backward(loss):
    """Reverse-mode accumulation from a scalar loss node.

    Every tensor that participated in the graph with ``requires_grad`` set
    receives its gradient. Deep graphs (long recurrences) are handled with
    an iterative topological sort.
    """
    if loss.data.size != 1:
        raise ShapeError(f"backward needs a scalar loss, got shape {loss.data.shape}")
    if loss._backward is None and not loss.requires_grad:
        raise ValueError("loss is not attached to any recorded graph")

    topo = []
    visited = set()
    stack = [(loss, iter(loss._parents))]
    visited.add(id(loss))
    while stack:
        node, it = stack[-1]
        advanced = False
        for p in it:
            if id(p) not in visited and p._backward is not None:
                visited.add(id(p))
                stack.append((p, iter(p._parents)))
                advanced = True
                break
            visited.add(id(p))
        if not advanced:
            topo.append(node)
            stack.pop()

    loss.grad = np.ones_like(loss.data)
    for node in reversed(topo):
        if node._backward is not None:
            node._backward(node.grad)
            # The graph is single-use; free intermediate grads eagerly.
            if not (node is loss):
                node._parents = ()
                node._backward = None


def _unbroadcast(g, shape):
    """Sum a gradient down to ``shape`` (inverse of numpy broadcasting)."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


# -- arithmetic ----------------------------------------------------------


def add(a, b):
    a, b = as_tensor(a), as_tensor(b)
    data = a.data + b.data

    def bwd(g):
        if a.requires_grad:
            _accum(a, _unbroadcast(g, a.data.shape))
        if b.requires_grad:
            _accum(b, _unbroadcast(g, b.data.shape))

    return _node(data, (a, b), bwd)


def sub(a, b):
    a, b = as_tensor(a), as_tensor(b)
    data = a.data - b.data

    def bwd(g):
        if a.requires_grad:
            _accum(a, _unbroadcast(g, a.data.shape))
        if b.requires_grad:
            _accum(b, _unbroadcast(-g, b.data.shape))

    return _node(data, (a, b), bwd)


def mul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    data = a.data * b.data

    def bwd(g):
        if a.requires_grad:
            _accum(a, _unbroadcast(g * b.data, a.data.shape))
        if b.requires_grad:
            _accum(b, _unbroadcast(g * a.data, b.data.shape))

    return _node(data, (a, b), bwd)


def div(a, b):
    a, b = as_tensor(a), as_tensor(b)
    data = a.data / b.data

    def bwd(g):
        if a.requires_grad:
            _accum(a, _unbroadcast(g / b.data, a.data.shape))
        if b.requires_grad:
            _accum(b, _unbroadcast(-g * a.data / (b.data * b.data), b.data.shape))

    return _node(data, (a, b), bwd)


def neg(a):
    a = as_tensor(a)

    def bwd(g):
        if a.requires_grad:
            _accum(a, -g)

    return _node(-a.data, (a,), bwd)


def matmul(a, b):
    """2-D real matrix product; higher-rank callers reshape first."""
    a, b = as_tensor(a), as_tensor(b)
    if a.data.ndim != 2 or b.data.ndim != 2 or a.data.shape[1] != b.data.shape[0]:
        raise ShapeError(f"matmul mismatch: {a.data.shape} x {b.data.shape}")
    data = a.data @ b.data

    def bwd(g):
        if a.requires_grad:
            _accum(a, g @ b.data.T)
        if b.requires_grad:
            _accum(b, a.data.T @ g)

    return _node(data, (a, b), bwd)


# -- element-wise nonlinearities ------------------------------------------


def relu(a):
    a = as_tensor(a)
    data = np.maximum(a.data, 0.0)

    def bwd(g):
        _accum(a, g * (a.data > 0))

    return _node(data, (a,), bwd)


def sigmoid(a):
    a = as_tensor(a)
    x = a.data
    z = np.exp(-np.abs(x))  # stays in (0, 1], no overflow either side
    data = np.where(x >= 0, 1.0 / (1.0 + z), z / (1.0 + z))

    def bwd(g):
        _accum(a, g * data * (1.0 - data))

    return _node(data, (a,), bwd)


def tanh(a):
    a = as_tensor(a)
    data = np.tanh(a.data)

    def bwd(g):
        _accum(a, g * (1.0 - data * data))

    return _node(data, (a,), bwd)


def elu(a):
    a = as_tensor(a)
    x = a.data
    data = np.where(x > 0, x, np.expm1(np.minimum(x, 0.0)))

    def bwd(g):
        _accum(a, g * np.where(x > 0, 1.0, data + 1.0))

    return _node(data, (a,), bwd)


def identity(a):
    return as_tensor(a)


ACTIVATIONS = {
    "relu": relu,
    "sigmoid": sigmoid,
    "tanh": tanh,
    "elu": elu,
    "identity": identity,
}


def activate(a, kind):
    try:
        return ACTIVATIONS[kind](a)
    except KeyError:
        raise ValueError(f"unknown activation {kind!r}") from None


def sqrt(a):
    a = as_tensor(a)
    data = np.sqrt(a.data)

    def bwd(g):
        _accum(a, g * 0.5 / data)

    return _node(data, (a,), bwd)


def log(a):
    a = as_tensor(a)
    data = np.log(a.data)

    def bwd(g):
        _accum(a, g / a.data)

    return _node(data, (a,), bwd)


def absolute(a):
    a = as_tensor(a)
    data = np.abs(a.data)

    def bwd(g):
        # subgradient 0 at the kink
        _accum(a, g * np.sign(a.data))

    return _node(data, (a,), bwd)


# -- reductions and shape ops ----------------------------------------------


def sum_all(a):
    a = as_tensor(a)
    data = np.asarray(a.data.sum())

    def bwd(g):
        _accum(a, np.broadcast_to(g, a.data.shape))

    return _node(data, (a,), bwd)


def mean_all(a):
    a = as_tensor(a)
    n = a.data.size
    data = np.asarray(a.data.mean())

    def bwd(g):
        _accum(a, np.broadcast_to(g / n, a.data.shape))

    return _node(data, (a,), bwd)


def reshape(a, shape):
    a = as_tensor(a)
    data = a.data.reshape(shape)
    orig = a.data.shape

    def bwd(g):
        _accum(a, g.reshape(orig))

    return _node(data, (a,), bwd)


def transpose(a, axes):
    a = as_tensor(a)
    data = np.ascontiguousarray(a.data.transpose(axes))
    inv = np.argsort(axes)

    def bwd(g):
        _accum(a, g.transpose(inv))

    return _node(data, (a,), bwd)


def concat(tensors, axis):
    tensors = [as_tensor(t) for t in tensors]
    data = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.data.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def bwd(g):
        for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
            if t.requires_grad:
                idx = [slice(None)] * g.ndim
                idx[axis] = slice(lo, hi)
                _accum(t, g[tuple(idx)])

    return _node(data, tuple(tensors), bwd)


def split(a, pieces, axis):
    """Split into ``pieces`` equal parts along ``axis``.

    Each child pushes its gradient into the matching slice of the parent,
    so splitting a sequence into T steps stays O(T) in backward.
    """
    a = as_tensor(a)
    extent = a.data.shape[axis]
    if extent % pieces:
        raise ShapeError(f"cannot split extent {extent} into {pieces} pieces")
    step = extent // pieces
    outs = []
    for i in range(pieces):
        idx = [slice(None)] * a.data.ndim
        idx[axis] = slice(i * step, (i + 1) * step)
        idx = tuple(idx)
        piece = np.ascontiguousarray(a.data[idx])

        def bwd(g, idx=idx):
            _accum_slice(a, idx, g)

        outs.append(_node(piece, (a,), bwd))
    return outs


def narrow(a, axis, start, length):
    a = as_tensor(a)
    idx = [slice(None)] * a.data.ndim
    idx[axis] = slice(start, start + length)
    idx = tuple(idx)
    data = np.ascontiguousarray(a.data[idx])

    def bwd(g):
        _accum_slice(a, idx, g)

    return _node(data, (a,), bwd)


def stack(tensors, axis):
    tensors = [as_tensor(t) for t in tensors]
    data = np.stack([t.data for t in tensors], axis=axis)

    def bwd(g):
        for i, t in enumerate(tensors):
            if t.requires_grad:
                _accum(t, np.take(g, i, axis=axis))

    return _node(data, tuple(tensors), bwd)


# -- structured ops for the layers ------------------------------------------


def conv2d(x, kernel, stride, padding):
    """Cross-correlation of ``x [B,C,T,F]`` with ``kernel [O,C,kT,kF]``.

    Implemented as patch extraction plus one matmul; the backward pass
    scatters patch gradients back with one strided slice-add per kernel tap.
    """
    x, kernel = as_tensor(x), as_tensor(kernel)
    if x.data.ndim != 4 or kernel.data.ndim != 4 or x.data.shape[1] != kernel.data.shape[1]:
        raise ShapeError(f"conv2d mismatch: input {x.data.shape}, kernel {kernel.data.shape}")
    B, C, T, F = x.data.shape
    O, _, kT, kF = kernel.data.shape
    sT, sF = stride
    pT, pF = padding
    oT = (T + 2 * pT - kT) // sT + 1
    oF = (F + 2 * pF - kF) // sF + 1
    if oT < 1 or oF < 1:
        raise ShapeError(f"conv2d output collapsed: input {x.data.shape}, kernel {kernel.data.shape}, "
                         f"stride {stride}, padding {padding}")

    xp = np.pad(x.data, ((0, 0), (0, 0), (pT, pT), (pF, pF))) if (pT or pF) else x.data
    patches = np.empty((B, C, oT, oF, kT, kF))
    for it in range(kT):
        for jf in range(kF):
            patches[..., it, jf] = xp[:, :, it:it + sT * oT:sT, jf:jf + sF * oF:sF]
    cols = patches.transpose(0, 2, 3, 1, 4, 5).reshape(B * oT * oF, C * kT * kF)
    wmat = kernel.data.reshape(O, C * kT * kF).T
    out = (cols @ wmat).reshape(B, oT, oF, O).transpose(0, 3, 1, 2)

    def bwd(g):
        g2 = np.ascontiguousarray(g.transpose(0, 2, 3, 1)).reshape(B * oT * oF, O)
        if kernel.requires_grad:
            _accum(kernel, (cols.T @ g2).T.reshape(O, C, kT, kF))
        if x.requires_grad:
            dcols = (g2 @ wmat.T).reshape(B, oT, oF, C, kT, kF).transpose(0, 3, 1, 2, 4, 5)
            dxp = np.zeros_like(xp)
            for it in range(kT):
                for jf in range(kF):
                    dxp[:, :, it:it + sT * oT:sT, jf:jf + sF * oF:sF] += dcols[..., it, jf]
            _accum(x, dxp[:, :, pT:pT + T, pF:pF + F] if (pT or pF) else dxp)

    return _node(np.ascontiguousarray(out), (x, kernel), bwd)


def deconv2d(x, kernel, stride, padding):
    """Transposed convolution, the exact adjoint of ``conv2d``.

    ``kernel`` is stored ``[O,C,kT,kF]`` with O the *output* channels; for a
    kernel K, ``<conv2d(x,K), y> == <x, deconv2d(y, K.transpose(1,0,2,3))>``
    with the same stride and padding.
    """
    x, kernel = as_tensor(x), as_tensor(kernel)
    if x.data.ndim != 4 or kernel.data.ndim != 4 or x.data.shape[1] != kernel.data.shape[1]:
        raise ShapeError(f"deconv2d mismatch: input {x.data.shape}, kernel {kernel.data.shape}")
    B, C, T, F = x.data.shape
    O, _, kT, kF = kernel.data.shape
    sT, sF = stride
    pT, pF = padding
    fullT = (T - 1) * sT + kT
    fullF = (F - 1) * sF + kF
    oT = fullT - 2 * pT
    oF = fullF - 2 * pF
    if oT < 1 or oF < 1:
        raise ShapeError(f"deconv2d output collapsed: input {x.data.shape}, kernel {kernel.data.shape}")

    x2 = np.ascontiguousarray(x.data.transpose(0, 2, 3, 1)).reshape(B * T * F, C)
    full = np.zeros((B, O, fullT, fullF))
    for it in range(kT):
        for jf in range(kF):
            w = kernel.data[:, :, it, jf]  # [O, C]
            contrib = (x2 @ w.T).reshape(B, T, F, O).transpose(0, 3, 1, 2)
            full[:, :, it:it + sT * T:sT, jf:jf + sF * F:sF] += contrib
    out = np.ascontiguousarray(full[:, :, pT:pT + oT, pF:pF + oF])

    def bwd(g):
        gfull = np.zeros((B, O, fullT, fullF))
        gfull[:, :, pT:pT + oT, pF:pF + oF] = g
        dx2 = np.zeros_like(x2) if x.requires_grad else None
        for it in range(kT):
            for jf in range(kF):
                gs = gfull[:, :, it:it + sT * T:sT, jf:jf + sF * F:sF]
                g2 = np.ascontiguousarray(gs.transpose(0, 2, 3, 1)).reshape(B * T * F, O)
                if kernel.requires_grad:
                    _accum_slice(kernel, (slice(None), slice(None), it, jf), g2.T @ x2)
                if x.requires_grad:
                    dx2 += g2 @ kernel.data[:, :, it, jf]
        if x.requires_grad:
            _accum(x, dx2.reshape(B, T, F, C).transpose(0, 3, 1, 2))

    return _node(out, (x, kernel), bwd)


def overlap_add(frames, hop):
    """Overlap-add frames ``[B,T,L]`` at ``hop`` into ``[B,(T-1)*hop+L]``."""
    frames = as_tensor(frames)
    if frames.data.ndim != 3:
        raise ShapeError(f"overlap_add expects [B,T,L], got {frames.data.shape}")
    B, T, L = frames.data.shape
    out = np.zeros((B, (T - 1) * hop + L))
    for t in range(T):
        out[:, t * hop:t * hop + L] += frames.data[:, t]

    def bwd(g):
        df = np.empty((B, T, L))
        for t in range(T):
            df[:, t] = g[:, t * hop:t * hop + L]
        _accum(frames, df)

    return _node(out, (frames,), bwd)
