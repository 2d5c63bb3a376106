"""Real and complex versions of every atomic network unit.

Each layer exists in a real and a complex flavour behind one class. Complex
weights are ComplexPairs, and complex forward passes expand into the four
real products of the underlying arithmetic. All counting helpers measure
real scalars: a complex weight counts 2 parameters, a complex multiply-add
counts 4 MACs.

MAC convention: weight multiplies only. Element-wise gate products,
activations and bias adds are excluded, so totals stay comparable across
gating variants.
"""

from __future__ import annotations

import math

import numpy as np

from . import tensor as tn
from .cplx import (
    ComplexPair,
    cadd,
    cconcat,
    complex_hadamard,
    complex_magnitude,
    complex_matmul,
    creshape,
    csplit,
    cstack,
    scale_real,
    split_activation,
)
from .tensor import ShapeError, Tensor

REAL, COMPLEX = "real", "complex"

# Magnitudes that feed gates use a smoothed square root while training so
# the gradient exists at the origin; evaluation uses the exact magnitude.
TRAIN_MAG_EPS = 1e-12


def _uniform(rng, shape, fan_in):
    bound = math.sqrt(1.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape)


def _param(rng, shape, fan_in, name):
    return Tensor(_uniform(rng, shape, fan_in), requires_grad=True, name=name)


def _cparam(rng, shape, fan_in, name):
    return ComplexPair(
        _param(rng, shape, fan_in, name + ".re"),
        _param(rng, shape, fan_in, name + ".im"),
    )


def _check_domain(domain):
    if domain not in (REAL, COMPLEX):
        raise ValueError(f"domain must be 'real' or 'complex', got {domain!r}")


class LinearLayer:
    """Dense layer over the trailing feature axis, real or complex."""

    def __init__(self, domain, in_dim, out_dim, use_bias=True, rng=None, name="linear"):
        _check_domain(domain)
        rng = rng or np.random.default_rng(0)
        self.domain = domain
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.use_bias = use_bias
        self.name = name
        if domain == REAL:
            self.w = _param(rng, (in_dim, out_dim), in_dim, f"{name}.w")
            self.b = _param(rng, (out_dim,), in_dim, f"{name}.b") if use_bias else None
        else:
            self.w = _cparam(rng, (in_dim, out_dim), in_dim, f"{name}.w")
            self.b = _cparam(rng, (out_dim,), in_dim, f"{name}.b") if use_bias else None

    def forward(self, x):
        if self.domain == REAL:
            if isinstance(x, ComplexPair):
                raise ShapeError(f"{self.name}: real layer got complex input")
            lead = x.data.shape[:-1]
            if x.data.shape[-1] != self.in_dim:
                raise ShapeError(f"{self.name}: input width {x.data.shape[-1]} != {self.in_dim}")
            y = tn.matmul(tn.reshape(x, (-1, self.in_dim)), self.w)
            if self.b is not None:
                y = y + self.b
            return tn.reshape(y, lead + (self.out_dim,))
        if not isinstance(x, ComplexPair):
            raise ShapeError(f"{self.name}: complex layer got real input")
        lead = x.shape[:-1]
        if x.shape[-1] != self.in_dim:
            raise ShapeError(f"{self.name}: input width {x.shape[-1]} != {self.in_dim}")
        y = complex_matmul(creshape(x, (-1, self.in_dim)), self.w)
        if self.b is not None:
            y = cadd(y, self.b)
        return creshape(y, lead + (self.out_dim,))

    __call__ = forward

    def parameters(self):
        ps = []
        if self.domain == REAL:
            ps.append((f"{self.name}.w", self.w))
            if self.b is not None:
                ps.append((f"{self.name}.b", self.b))
        else:
            ps += [(f"{self.name}.w.re", self.w.re), (f"{self.name}.w.im", self.w.im)]
            if self.b is not None:
                ps += [(f"{self.name}.b.re", self.b.re), (f"{self.name}.b.im", self.b.im)]
        return ps

    def param_count(self):
        n = self.in_dim * self.out_dim + (self.out_dim if self.use_bias else 0)
        return n if self.domain == REAL else 2 * n

    def mac_count(self, input_shape):
        frames = int(np.prod(input_shape[:-1])) if len(input_shape) > 1 else 1
        per = self.in_dim * self.out_dim
        return frames * per * (4 if self.domain == COMPLEX else 1)


class _ConvBase:
    transposed = False

    def __init__(self, domain, in_ch, out_ch, kernel, stride=(1, 1), padding=(0, 0),
                 use_bias=True, rng=None, name="conv"):
        _check_domain(domain)
        if stride[0] < 1 or stride[1] < 1:
            raise ValueError(f"stride must be >= 1, got {stride}")
        rng = rng or np.random.default_rng(0)
        self.domain = domain
        self.in_ch = in_ch
        self.out_ch = out_ch
        self.kernel = kernel
        self.stride = stride
        self.padding = padding
        self.use_bias = use_bias
        self.name = name
        kT, kF = kernel
        fan_in = in_ch * kT * kF
        shape = (out_ch, in_ch, kT, kF)
        if domain == REAL:
            self.k = _param(rng, shape, fan_in, f"{name}.k")
            self.b = _param(rng, (out_ch,), fan_in, f"{name}.b") if use_bias else None
        else:
            self.k = _cparam(rng, shape, fan_in, f"{name}.k")
            self.b = _cparam(rng, (out_ch,), fan_in, f"{name}.b") if use_bias else None

    def _core(self, x, k):
        op = tn.deconv2d if self.transposed else tn.conv2d
        return op(x, k, self.stride, self.padding)

    def forward(self, x):
        if self.domain == REAL:
            if isinstance(x, ComplexPair):
                raise ShapeError(f"{self.name}: real layer got complex input")
            y = self._core(x, self.k)
            if self.b is not None:
                y = y + tn.reshape(self.b, (1, self.out_ch, 1, 1))
            return y
        if not isinstance(x, ComplexPair):
            raise ShapeError(f"{self.name}: complex layer got real input")
        # the four real convolutions of the complex product
        rr = self._core(x.re, self.k.re)
        ii = self._core(x.im, self.k.im)
        ri = self._core(x.re, self.k.im)
        ir = self._core(x.im, self.k.re)
        y = ComplexPair(rr - ii, ri + ir)
        if self.b is not None:
            y = ComplexPair(y.re + tn.reshape(self.b.re, (1, self.out_ch, 1, 1)),
                            y.im + tn.reshape(self.b.im, (1, self.out_ch, 1, 1)))
        return y

    __call__ = forward

    def out_shape(self, input_shape):
        B, C, T, F = input_shape
        if C != self.in_ch:
            raise ShapeError(f"{self.name}: input channels {C} != {self.in_ch}")
        kT, kF = self.kernel
        sT, sF = self.stride
        pT, pF = self.padding
        if self.transposed:
            oT = (T - 1) * sT + kT - 2 * pT
            oF = (F - 1) * sF + kF - 2 * pF
        else:
            oT = (T + 2 * pT - kT) // sT + 1
            oF = (F + 2 * pF - kF) // sF + 1
        return (B, self.out_ch, oT, oF)

    def parameters(self):
        ps = []
        if self.domain == REAL:
            ps.append((f"{self.name}.k", self.k))
            if self.b is not None:
                ps.append((f"{self.name}.b", self.b))
        else:
            ps += [(f"{self.name}.k.re", self.k.re), (f"{self.name}.k.im", self.k.im)]
            if self.b is not None:
                ps += [(f"{self.name}.b.re", self.b.re), (f"{self.name}.b.im", self.b.im)]
        return ps

    def param_count(self):
        kT, kF = self.kernel
        n = self.out_ch * self.in_ch * kT * kF + (self.out_ch if self.use_bias else 0)
        return n if self.domain == REAL else 2 * n

    def mac_count(self, input_shape):
        # products = taps x positions; transposed convs spread from input
        # positions, plain convs gather at output positions
        B = input_shape[0]
        kT, kF = self.kernel
        if self.transposed:
            _, _, T, F = input_shape
            positions = B * T * F
        else:
            _, _, oT, oF = self.out_shape(input_shape)
            positions = B * oT * oF
        per = self.out_ch * self.in_ch * kT * kF
        return positions * per * (4 if self.domain == COMPLEX else 1)


class Conv2dLayer(_ConvBase):
    """Strided 2-D convolution over [batch, channels, time, freq]."""
    transposed = False


class Deconv2dLayer(_ConvBase):
    """Transposed 2-D convolution, the adjoint of Conv2dLayer."""
    transposed = True


LSTM_REAL, LSTM_QUASI, LSTM_FULL = "real", "quasi", "full"


class _RealCell:
    """One real LSTM cell: gates i,f,g,o packed along the last axis.

    ``double_bias`` keeps separate input-side and recurrent biases, the
    convention of the framework implementations the complex variants mirror;
    the plain real variant carries one bias per gate.
    """

    def __init__(self, in_dim, hidden, double_bias, rng, name):
        self.in_dim = in_dim
        self.hidden = hidden
        self.double_bias = double_bias
        self.wx = _param(rng, (in_dim, 4 * hidden), in_dim, f"{name}.wx")
        self.wh = _param(rng, (hidden, 4 * hidden), hidden, f"{name}.wh")
        self.b_ih = _param(rng, (4 * hidden,), in_dim, f"{name}.b_ih")
        self.b_hh = _param(rng, (4 * hidden,), hidden, f"{name}.b_hh") if double_bias else None
        self.name = name

    def run(self, x):
        """x: [B,T,in] -> [B,T,hidden], zero initial state."""
        B, T, _ = x.data.shape
        h = Tensor(np.zeros((B, self.hidden)))
        c = Tensor(np.zeros((B, self.hidden)))
        pre_in = tn.matmul(tn.reshape(x, (B * T, self.in_dim)), self.wx) + self.b_ih
        if self.b_hh is not None:
            pre_in = pre_in + self.b_hh
        steps = tn.split(tn.reshape(pre_in, (B, T, 4 * self.hidden)), T, axis=1)
        outs = []
        for t in range(T):
            pre = tn.reshape(steps[t], (B, 4 * self.hidden)) + tn.matmul(h, self.wh)
            gi, gf, gg, go = tn.split(pre, 4, axis=1)
            i, f, o = tn.sigmoid(gi), tn.sigmoid(gf), tn.sigmoid(go)
            g = tn.tanh(gg)
            c = f * c + i * g
            h = o * tn.tanh(c)
            outs.append(h)
        return tn.stack(outs, axis=1)

    def parameters(self):
        ps = [(f"{self.name}.wx", self.wx), (f"{self.name}.wh", self.wh),
              (f"{self.name}.b_ih", self.b_ih)]
        if self.b_hh is not None:
            ps.append((f"{self.name}.b_hh", self.b_hh))
        return ps

    def param_count(self):
        biases = 8 * self.hidden if self.double_bias else 4 * self.hidden
        return 4 * self.in_dim * self.hidden + 4 * self.hidden * self.hidden + biases

    def mac_per_step(self):
        return 4 * (self.in_dim * self.hidden + self.hidden * self.hidden)


class _FullComplexCell:
    """LSTM cell whose every product follows complex arithmetic.

    Matmuls are complex, activations act on the parts independently, and
    the gate/state element-wise products are complex Hadamard products.
    """

    def __init__(self, in_dim, hidden, rng, name):
        self.in_dim = in_dim
        self.hidden = hidden
        self.wx = _cparam(rng, (in_dim, 4 * hidden), in_dim, f"{name}.wx")
        self.wh = _cparam(rng, (hidden, 4 * hidden), hidden, f"{name}.wh")
        self.b_ih = _cparam(rng, (4 * hidden,), in_dim, f"{name}.b_ih")
        self.b_hh = _cparam(rng, (4 * hidden,), hidden, f"{name}.b_hh")
        self.name = name

    def run(self, x: ComplexPair):
        B, T, _ = x.shape
        h = ComplexPair.zeros((B, self.hidden))
        c = ComplexPair.zeros((B, self.hidden))
        pre_in = cadd(cadd(complex_matmul(creshape(x, (B * T, self.in_dim)), self.wx),
                           self.b_ih), self.b_hh)
        steps = csplit(creshape(pre_in, (B, T, 4 * self.hidden)), T, axis=1)
        outs = []
        for t in range(T):
            pre = cadd(creshape(steps[t], (B, 4 * self.hidden)), complex_matmul(h, self.wh))
            gi, gf, gg, go = csplit(pre, 4, axis=1)
            i = split_activation(gi, "sigmoid")
            f = split_activation(gf, "sigmoid")
            o = split_activation(go, "sigmoid")
            g = split_activation(gg, "tanh")
            c = cadd(complex_hadamard(f, c), complex_hadamard(i, g))
            h = complex_hadamard(o, split_activation(c, "tanh"))
            outs.append(h)
        return cstack(outs, axis=1)

    def parameters(self):
        ps = []
        for nm, p in (("wx", self.wx), ("wh", self.wh), ("b_ih", self.b_ih), ("b_hh", self.b_hh)):
            ps += [(f"{self.name}.{nm}.re", p.re), (f"{self.name}.{nm}.im", p.im)]
        return ps

    def param_count(self):
        return 2 * (4 * self.in_dim * self.hidden + 4 * self.hidden * self.hidden
                    + 8 * self.hidden)

    def mac_per_step(self):
        return 16 * (self.in_dim * self.hidden + self.hidden * self.hidden)


class LstmLayer:
    """One LSTM layer in one of three flavours.

    real
        standard LSTM over real features; one bias per gate.
    quasi
        two complete real sub-LSTMs; each runs over both the real and the
        imaginary input, and the four passes combine as
        (F_rr - F_ii) + j(F_ri + F_ir). No complex arithmetic inside.
    full
        every matmul, activation and element-wise product is complex.

    quasi and full carry exactly the same number of real parameters at
    equal (in_dim, hidden).
    """

    def __init__(self, variant, in_dim, hidden, rng=None, name="lstm"):
        if variant not in (LSTM_REAL, LSTM_QUASI, LSTM_FULL):
            raise ValueError(f"unknown LSTM variant {variant!r}")
        if hidden < 1:
            raise ValueError(f"hidden must be positive, got {hidden}")
        rng = rng or np.random.default_rng(0)
        self.variant = variant
        self.in_dim = in_dim
        self.hidden = hidden
        self.name = name
        if variant == LSTM_REAL:
            self.cell = _RealCell(in_dim, hidden, False, rng, f"{name}.cell")
        elif variant == LSTM_QUASI:
            self.sub_r = _RealCell(in_dim, hidden, True, rng, f"{name}.sub_r")
            self.sub_i = _RealCell(in_dim, hidden, True, rng, f"{name}.sub_i")
        else:
            self.cell = _FullComplexCell(in_dim, hidden, rng, f"{name}.cell")

    def forward(self, x):
        if self.variant == LSTM_REAL:
            if isinstance(x, ComplexPair):
                raise ShapeError(f"{self.name}: real LSTM got complex input")
            return self.cell.run(x)
        if not isinstance(x, ComplexPair):
            raise ShapeError(f"{self.name}: {self.variant} LSTM needs complex input")
        if self.variant == LSTM_FULL:
            return self.cell.run(x)
        f_rr = self.sub_r.run(x.re)
        f_ir = self.sub_r.run(x.im)
        f_ri = self.sub_i.run(x.re)
        f_ii = self.sub_i.run(x.im)
        return ComplexPair(f_rr - f_ii, f_ri + f_ir)

    __call__ = forward

    def parameters(self):
        if self.variant == LSTM_QUASI:
            return self.sub_r.parameters() + self.sub_i.parameters()
        return self.cell.parameters()

    def param_count(self):
        if self.variant == LSTM_QUASI:
            return self.sub_r.param_count() + self.sub_i.param_count()
        return self.cell.param_count()

    def mac_count(self, input_shape):
        B, T = input_shape[0], input_shape[1]
        if self.variant == LSTM_REAL:
            per = self.cell.mac_per_step()
        elif self.variant == LSTM_FULL:
            per = self.cell.mac_per_step()
        else:
            # two sub-LSTMs, each run twice
            per = 2 * (self.sub_r.mac_per_step() + self.sub_i.mac_per_step())
        return B * T * per


GATE_REAL, GATE_SEPARATE, GATE_MAGNITUDE = "real", "separate", "magnitude"


def magnitude_gate(z: ComplexPair, training: bool = False) -> Tensor:
    """Real-valued gate (sigmoid(|z|) - 0.5) * 2, in [0, 1)."""
    eps = TRAIN_MAG_EPS if training else 0.0
    mag = complex_magnitude(z, eps=eps)
    return (tn.sigmoid(mag) - 0.5) * 2.0


class GluLayer:
    """Gated linear unit: two parallel convolutions and a gating product.

    Real domain gates with a plain sigmoid. Complex domain offers two
    mechanisms: 'separate' (sigmoid on each part, complex-valued gate) and
    'magnitude' (real gate from the recentred sigmoid of the magnitude,
    which scales both parts and preserves the phase of the feature branch).
    """

    def __init__(self, domain, in_ch, out_ch, kernel, stride=(1, 1), padding=(0, 0),
                 gating=None, transposed=False, rng=None, name="glu"):
        _check_domain(domain)
        rng = rng or np.random.default_rng(0)
        if gating is None:
            gating = GATE_REAL if domain == REAL else GATE_MAGNITUDE
        if domain == REAL and gating != GATE_REAL:
            raise ValueError(f"{name}: gating {gating!r} needs a complex domain")
        if domain == COMPLEX and gating not in (GATE_SEPARATE, GATE_MAGNITUDE):
            raise ValueError(f"{name}: complex GLU needs 'separate' or 'magnitude' gating")
        cls = Deconv2dLayer if transposed else Conv2dLayer
        self.domain = domain
        self.gating = gating
        self.name = name
        self.feat = cls(domain, in_ch, out_ch, kernel, stride, padding, rng=rng,
                        name=f"{name}.feat")
        self.gate = cls(domain, in_ch, out_ch, kernel, stride, padding, rng=rng,
                        name=f"{name}.gate")

    def forward(self, x, training=False):
        f1 = self.feat(x)
        f2 = self.gate(x)
        if self.gating == GATE_REAL:
            return f1 * tn.sigmoid(f2)
        if self.gating == GATE_SEPARATE:
            return ComplexPair(f1.re * tn.sigmoid(f2.re), f1.im * tn.sigmoid(f2.im))
        return scale_real(f1, magnitude_gate(f2, training=training))

    __call__ = forward

    def out_shape(self, input_shape):
        return self.feat.out_shape(input_shape)

    def parameters(self):
        return self.feat.parameters() + self.gate.parameters()

    def param_count(self):
        return self.feat.param_count() + self.gate.param_count()

    def mac_count(self, input_shape):
        return self.feat.mac_count(input_shape) + self.gate.mac_count(input_shape)


def param_count(layer) -> int:
    """Exact number of real scalars in a layer's parameters."""
    return layer.param_count()


def mac_count(layer, input_shape) -> int:
    """Weight multiply-accumulates for one forward pass on input_shape."""
    return layer.mac_count(input_shape)
