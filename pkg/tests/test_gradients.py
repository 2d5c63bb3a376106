"""Finite-difference gradient suite over every layer variant.

Each case builds a small layer, projects its output to a scalar with a
fixed random weighting, and compares reverse-mode gradients of every
parameter (and the input) against central differences.
"""

import numpy as np
import pytest

from cplxbench.cplx import ComplexPair
from cplxbench.layers import (
    Conv2dLayer,
    Deconv2dLayer,
    GluLayer,
    LinearLayer,
    LstmLayer,
)
from cplxbench.tensor import Tensor

from conftest import check_gradients, project_to_scalar

SEEDS = range(10)


def real_input(rng, shape):
    return Tensor(rng.normal(size=shape), requires_grad=True)


def cplx_input(rng, shape):
    return ComplexPair(Tensor(rng.normal(size=shape), requires_grad=True),
                       Tensor(rng.normal(size=shape), requires_grad=True))


def input_tensors(x):
    return [x.re, x.im] if isinstance(x, ComplexPair) else [x]


CASES = {
    "linear_real": (lambda rng: LinearLayer("real", 4, 3, rng=rng),
                    lambda rng: real_input(rng, (5, 4))),
    "linear_complex": (lambda rng: LinearLayer("complex", 4, 3, rng=rng),
                       lambda rng: cplx_input(rng, (5, 4))),
    "conv_real": (lambda rng: Conv2dLayer("real", 2, 3, (1, 3), (1, 2), (0, 1), rng=rng),
                  lambda rng: real_input(rng, (2, 2, 3, 7))),
    "conv_complex": (lambda rng: Conv2dLayer("complex", 2, 3, (1, 3), (1, 2), (0, 1), rng=rng),
                     lambda rng: cplx_input(rng, (2, 2, 3, 7))),
    "deconv_real": (lambda rng: Deconv2dLayer("real", 2, 3, (1, 3), (1, 2), (0, 1), rng=rng),
                    lambda rng: real_input(rng, (2, 2, 3, 5))),
    "deconv_complex": (lambda rng: Deconv2dLayer("complex", 2, 3, (1, 3), (1, 2), (0, 1), rng=rng),
                       lambda rng: cplx_input(rng, (2, 2, 3, 5))),
    "lstm_real": (lambda rng: LstmLayer("real", 3, 4, rng=rng),
                  lambda rng: real_input(rng, (2, 3, 3))),
    "lstm_quasi": (lambda rng: LstmLayer("quasi", 3, 4, rng=rng),
                   lambda rng: cplx_input(rng, (2, 3, 3))),
    "lstm_full": (lambda rng: LstmLayer("full", 3, 4, rng=rng),
                  lambda rng: cplx_input(rng, (2, 3, 3))),
    "glu_real": (lambda rng: GluLayer("real", 2, 3, (1, 3), (1, 1), (0, 1), rng=rng),
                 lambda rng: real_input(rng, (1, 2, 2, 5))),
    "glu_separate": (lambda rng: GluLayer("complex", 2, 3, (1, 3), (1, 1), (0, 1),
                                          gating="separate", rng=rng),
                     lambda rng: cplx_input(rng, (1, 2, 2, 5))),
    "glu_magnitude": (lambda rng: GluLayer("complex", 2, 3, (1, 3), (1, 1), (0, 1),
                                           gating="magnitude", rng=rng),
                      lambda rng: cplx_input(rng, (1, 2, 2, 5))),
    "glu_deconv_magnitude": (lambda rng: GluLayer("complex", 2, 3, (1, 3), (1, 2), (0, 1),
                                                  gating="magnitude", transposed=True, rng=rng),
                             lambda rng: cplx_input(rng, (1, 2, 2, 4))),
}


@pytest.mark.parametrize("seed", SEEDS)
@pytest.mark.parametrize("case", sorted(CASES))
def test_layer_gradients(case, seed):
    build, make_input = CASES[case]
    rng = np.random.default_rng(hash(case) % 10_000 + seed)
    layer = build(rng)
    x = make_input(rng)

    def fwd():
        out = layer(x, training=True) if isinstance(layer, GluLayer) else layer(x)
        return project(out)

    probe = layer(x, training=True) if isinstance(layer, GluLayer) else layer(x)
    project = project_to_scalar(probe, np.random.default_rng(seed + 999))
    check_gradients(fwd, layer.parameters(), inputs=input_tensors(x), seed=seed)
