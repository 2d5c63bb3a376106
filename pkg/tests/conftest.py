"""Shared finite-difference machinery for the gradient suites."""

import numpy as np

from cplxbench.cplx import ComplexPair
from cplxbench.tensor import Tensor, backward


def rel_err(a, b):
    denom = max(np.linalg.norm(a), np.linalg.norm(b), 1e-12)
    return np.linalg.norm(a - b) / denom


def central_diff_inplace(eval_fn, arrays, step=1e-5):
    """Central differences, mutating each array in place and restoring it."""
    grads = []
    for arr in arrays:
        g = np.zeros_like(arr)
        flat = arr.reshape(-1)
        gf = g.reshape(-1)
        for i in range(flat.size):
            keep = flat[i]
            flat[i] = keep + step
            hi = eval_fn()
            flat[i] = keep - step
            lo = eval_fn()
            flat[i] = keep
            gf[i] = (hi - lo) / (2 * step)
        grads.append(g)
    return grads


def project_to_scalar(out, rng):
    """Deterministic random projection of a layer output to a scalar loss."""
    if isinstance(out, ComplexPair):
        pr = Tensor(rng.normal(size=out.shape))
        pi = Tensor(rng.normal(size=out.shape))
        return lambda o: ((o.re * pr).sum() + (o.im * pi).sum())
    p = Tensor(rng.normal(size=out.data.shape))
    return lambda o: (o * p).sum()


def check_gradients(forward_fn, params, inputs=(), seed=0, tol=1e-4, step=1e-5):
    """Analytic gradients of forward_fn() vs central differences.

    ``params`` is a list of (name, Tensor); ``inputs`` extra Tensors to
    check. forward_fn must rebuild its graph from the tensors' current data
    on every call and return a scalar Tensor.
    """
    loss = forward_fn()
    backward(loss)
    tensors = [t for _, t in params] + list(inputs)
    analytic = [t.grad.copy() if t.grad is not None else np.zeros_like(t.data) for t in tensors]
    for t in tensors:
        t.grad = None
    numeric = central_diff_inplace(lambda: float(forward_fn().data),
                                   [t.data for t in tensors], step=step)
    names = [n for n, _ in params] + [f"input{i}" for i in range(len(inputs))]
    for name, got, want in zip(names, analytic, numeric):
        err = rel_err(got, want)
        assert err < tol, f"gradient mismatch for {name}: rel err {err:.3e} (seed {seed})"
