"""Real vs complex-valued speech-enhancement building blocks.

A small numpy workbench: complex layers assembled from their four real
products, matched real counterparts, parameter/MAC accounting, STFT-domain
losses, and a deterministic toy enhancement benchmark.
"""

from .tensor import Tensor, backward, no_grad, NonFiniteError, ShapeError
from .cplx import (
    ComplexPair,
    complex_hadamard,
    complex_magnitude,
    complex_matmul,
    split_activation,
)

__all__ = [
    "Tensor",
    "backward",
    "no_grad",
    "NonFiniteError",
    "ShapeError",
    "ComplexPair",
    "complex_hadamard",
    "complex_magnitude",
    "complex_matmul",
    "split_activation",
]

__version__ = "0.1.0"
