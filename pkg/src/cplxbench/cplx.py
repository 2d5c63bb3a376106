"""Complex arrays as pairs of real tensors, plus the core complex ops.

A complex array X = Xr + j*Xi is stored as two same-shape real tensors.
All complex arithmetic expands into real ops on the parts, so reverse-mode
differentiation treats every complex parameter as its two real components.
"""

from __future__ import annotations

import numpy as np

from . import tensor as tn
from .tensor import ShapeError, Tensor, as_tensor


class ComplexPair:
    """Real and imaginary parts, shape-locked together."""

    __slots__ = ("re", "im")

    def __init__(self, re, im):
        re, im = as_tensor(re), as_tensor(im)
        if re.data.shape != im.data.shape:
            raise ShapeError(f"re/im shapes differ: {re.data.shape} vs {im.data.shape}")
        self.re = re
        self.im = im

    @property
    def shape(self):
        return self.re.data.shape

    def __repr__(self):
        return f"ComplexPair(shape={self.shape})"

    def to_complex(self):
        """Materialize as a numpy complex array (reporting/tests only)."""
        return self.re.data + 1j * self.im.data

    @classmethod
    def from_complex(cls, z, requires_grad=False):
        z = np.asarray(z)
        return cls(
            Tensor(np.ascontiguousarray(z.real), requires_grad=requires_grad),
            Tensor(np.ascontiguousarray(z.imag), requires_grad=requires_grad),
        )

    @classmethod
    def zeros(cls, shape):
        return cls(Tensor(np.zeros(shape)), Tensor(np.zeros(shape)))


def complex_matmul(x: ComplexPair, w: ComplexPair) -> ComplexPair:
    """(Xr + jXi)(Wr + jWi) as exactly four real matrix products."""
    rr = tn.matmul(x.re, w.re)
    ii = tn.matmul(x.im, w.im)
    ri = tn.matmul(x.re, w.im)
    ir = tn.matmul(x.im, w.re)
    return ComplexPair(rr - ii, ri + ir)


def complex_hadamard(a: ComplexPair, b: ComplexPair) -> ComplexPair:
    """Element-wise complex product."""
    if a.shape != b.shape:
        raise ShapeError(f"hadamard shapes differ: {a.shape} vs {b.shape}")
    return ComplexPair(a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re)


def complex_magnitude(z: ComplexPair, eps: float = 0.0) -> Tensor:
    """Element-wise sqrt(re^2 + im^2 + eps).

    eps > 0 smooths the non-differentiable point at the origin; training
    graphs use a tiny eps, reported magnitudes use eps = 0.
    """
    if eps < 0:
        raise ValueError(f"eps must be non-negative, got {eps}")
    sq = z.re * z.re + z.im * z.im
    if eps:
        sq = sq + eps
    return tn.sqrt(sq)


def split_activation(z: ComplexPair, kind: str) -> ComplexPair:
    """Apply a real activation to the real and imaginary parts independently."""
    return ComplexPair(tn.activate(z.re, kind), tn.activate(z.im, kind))


def cadd(a: ComplexPair, b: ComplexPair) -> ComplexPair:
    return ComplexPair(a.re + b.re, a.im + b.im)


def csub(a: ComplexPair, b: ComplexPair) -> ComplexPair:
    return ComplexPair(a.re - b.re, a.im - b.im)


def scale_real(z: ComplexPair, gate: Tensor) -> ComplexPair:
    """Multiply both parts by a real gate (phase-preserving scaling)."""
    return ComplexPair(z.re * gate, z.im * gate)


def creshape(z: ComplexPair, shape) -> ComplexPair:
    return ComplexPair(tn.reshape(z.re, shape), tn.reshape(z.im, shape))


def ctranspose(z: ComplexPair, axes) -> ComplexPair:
    return ComplexPair(tn.transpose(z.re, axes), tn.transpose(z.im, axes))


def cconcat(pairs, axis) -> ComplexPair:
    return ComplexPair(
        tn.concat([p.re for p in pairs], axis),
        tn.concat([p.im for p in pairs], axis),
    )


def csplit(z: ComplexPair, pieces, axis):
    res = tn.split(z.re, pieces, axis)
    ims = tn.split(z.im, pieces, axis)
    return [ComplexPair(r, i) for r, i in zip(res, ims)]


def cstack(pairs, axis) -> ComplexPair:
    return ComplexPair(
        tn.stack([p.re for p in pairs], axis),
        tn.stack([p.im for p in pairs], axis),
    )
