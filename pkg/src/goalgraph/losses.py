"""Training objective: winner-takes-all Laplace NLL, soft-target mode
classification, and minimum-ADE regression, combined with unit weights."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import tensor as T
from .autodiff.tensor import Tensor
from .model.config import PredictionSet
from .scenes.types import FuturePath


class NonPositiveScale(ValueError):
    """A Laplace scale parameter is not strictly positive."""


@dataclass
class LossBreakdown:
    l_reg: Tensor
    l_cls: Tensor
    l_ade: Tensor
    total: Tensor
    winner_mode: object  # int for one scene, list of ints for a batch


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(np.asarray(x))


def _gt_points(gt) -> np.ndarray:
    if isinstance(gt, FuturePath):
        return gt.points
    return np.asarray(gt)


def winner_mode(mu, gt) -> int:
    """argmin_k of summed L2 error to ground truth; ties break to lowest index."""
    mu_v = np.asarray(getattr(mu, "values", mu))
    y = _gt_points(gt)
    err = np.linalg.norm(mu_v - y[None, :, :], axis=2).sum(axis=1)  # [K]
    return int(np.argmin(err))


def laplace_nll(mu, b, gt, m_star: int):
    """Winner-mode Laplace negative log-likelihood, averaged over timesteps.

    Per timestep the NLL sums log(2 b) + |y - mu| / b over the two coordinate
    dimensions. Only mode m_star contributes, so the gradient touches no other
    mode's parameters.
    """
    mu = _as_tensor(mu)
    b = _as_tensor(b)
    if (b.values <= 0).any():
        raise NonPositiveScale("laplace scales must be > 0")
    y = _gt_points(gt)
    mu_w = mu[m_star]  # [f, 2]
    b_w = b[m_star]
    nll = T.log(b_w * 2.0) + T.absolute(mu_w - y) / b_w  # [f, 2]
    return T.mean(T.tensor_sum(nll, axis=1))


def soft_target_cls(pi_hat, mu, gt, temperature: float = 1.0):
    """Cross-entropy against distance-softmax soft targets.

    Targets are softmax(-ADE_k / temperature) over modes, kept inside the
    graph so the whole objective stays finite-difference checkable end to
    end; predicted probabilities are floored at 1e-12 inside the log.
    """
    pi_hat = _as_tensor(pi_hat)
    mu = _as_tensor(mu)
    y = _gt_points(gt)
    diff = mu - y[None, :, :]  # [K, f, 2]
    ade = T.mean(T.sqrt(T.tensor_sum(diff * diff, axis=2)), axis=1)  # [K]
    targets = T.softmax(ade * (-1.0 / temperature), axis=-1)
    return T.tensor_sum(T.log(T.clamp_min(pi_hat, 1e-12)) * (-targets))


def min_ade_loss(mu, gt):
    """Smallest mean displacement over modes (the value at the argmin mode)."""
    mu = _as_tensor(mu)
    y = _gt_points(gt)
    k_star = int(np.argmin(
        np.linalg.norm(mu.values - y[None, :, :], axis=2).mean(axis=1)))
    diff = mu[k_star] - y  # [f, 2]
    dist = T.sqrt(T.tensor_sum(diff * diff, axis=1))
    return T.mean(dist)


def total_loss(pred: PredictionSet, gt) -> LossBreakdown:
    """Unit-weighted sum of the three terms for one scene."""
    m_star = winner_mode(pred.mu, gt)
    l_reg = laplace_nll(pred.mu, pred.b, gt, m_star)
    l_cls = soft_target_cls(pred.pi, pred.mu, gt)
    l_ade = min_ade_loss(pred.mu, gt)
    return LossBreakdown(l_reg, l_cls, l_ade, l_reg + l_cls + l_ade, m_star)


def batch_total_loss(preds, gts) -> LossBreakdown:
    """Mean LossBreakdown over aligned per-scene predictions and futures."""
    if len(preds) != len(gts) or not preds:
        raise ValueError("need equal, nonzero numbers of predictions and futures")
    parts = [total_loss(p, g) for p, g in zip(preds, gts)]
    n = float(len(parts))
    l_reg = sum((p.l_reg for p in parts[1:]), parts[0].l_reg) / n
    l_cls = sum((p.l_cls for p in parts[1:]), parts[0].l_cls) / n
    l_ade = sum((p.l_ade for p in parts[1:]), parts[0].l_ade) / n
    return LossBreakdown(l_reg, l_cls, l_ade, l_reg + l_cls + l_ade,
                         [p.winner_mode for p in parts])
