"""Finite-difference verification of reverse-mode gradients."""

from __future__ import annotations

import numpy as np

from .rng import RngStream
from .tensor import Parameter


def grad_check(f, params: list[Parameter], eps: float = 1e-5,
               max_coords: int | None = None, rng: RngStream | None = None) -> float:
    """Compare analytic gradients of scalar f() against central differences.

    f must be a closure over `params` returning a scalar Tensor; it is
    re-evaluated with coordinates perturbed in place. Checks every coordinate
    unless max_coords caps the per-parameter sample (seeded through rng).
    Returns the worst relative error max(|a-n| / max(1e-8, |a|+|n|)).
    """
    for p in params:
        p.grad = None
    out = f()
    out.backward()
    analytic = {id(p): (np.zeros_like(p.values) if p.grad is None else p.grad.copy())
                for p in params}
    worst = 0.0
    for p in params:
        flat = p.values.reshape(-1)
        n = flat.size
        if max_coords is not None and n > max_coords:
            if rng is None:
                rng = RngStream(0)
            idxs = rng.permutation(n)[:max_coords]
        else:
            idxs = range(n)
        a_flat = analytic[id(p)].reshape(-1)
        for i in idxs:
            orig = flat[i]
            flat[i] = orig + eps
            f_plus = float(f().values)
            flat[i] = orig - eps
            f_minus = float(f().values)
            flat[i] = orig
            numeric = (f_plus - f_minus) / (2.0 * eps)
            a = float(a_flat[i])
            rel = abs(a - numeric) / max(1e-8, abs(a) + abs(numeric))
            if rel > worst:
                worst = rel
    return worst
