"""Adam optimizer with bias correction, operating in-place on Parameters."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..autodiff.tensor import Parameter


@dataclass
class OptimizerState:
    """Per-parameter first/second moments plus the completed-step count."""

    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    step: int = 0


def init_optimizer(params: list[Parameter]) -> OptimizerState:
    state = OptimizerState()
    for p in params:
        state.m[p.name] = np.zeros_like(p.values)
        state.v[p.name] = np.zeros_like(p.values)
    return state


def adam_step(params: list[Parameter], state: OptimizerState, lr: float,
              betas: tuple[float, float] = (0.9, 0.999), eps: float = 1e-8) -> None:
    """One bias-corrected Adam update; parameters without grads are skipped."""
    b1, b2 = betas
    state.step += 1
    t = state.step
    c1 = 1.0 - b1 ** t
    c2 = 1.0 - b2 ** t
    for p in params:
        if p.grad is None:
            continue
        g = p.grad
        m = state.m[p.name]
        v = state.v[p.name]
        m[...] = b1 * m + (1.0 - b1) * g
        v[...] = b2 * v + (1.0 - b2) * (g * g)
        update = (m / c1) / (np.sqrt(v / c2) + eps)
        p.values -= (lr * update).astype(p.values.dtype, copy=False)
