"""Dataset evaluation: minADE_K, minFDE_K, miss rate, off-road rate.

All functions work on plain arrays (predictions are detached before scoring)
and are deliberately simple so they can be cross-checked against brute-force
oracles point by point.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from .model.config import PredictionSet
from .scenes.geometry import min_centerline_distance
from .scenes.types import Scene

MISS_THRESHOLD_M = 2.0


class KTooLarge(ValueError):
    """Requested top-K exceeds the prediction's mode count."""


class MissingGroundTruth(ValueError):
    """Evaluation needs scenes with futures; got none or an incomplete one."""


@dataclass
class MetricsReport:
    min_ade: dict  # {K: meters}
    min_fde: dict  # {K: meters}
    miss_rate: dict  # {K: fraction}
    offroad_rate: float
    scene_count: int
    # informational; not part of the serialized report
    mean_inference_ms: float | None = field(default=None, compare=False)

    def to_json(self) -> str:
        return json.dumps({
            "min_ade_k": {str(k): v for k, v in self.min_ade.items()},
            "min_fde_k": {str(k): v for k, v in self.min_fde.items()},
            "miss_rate_k": {str(k): v for k, v in self.miss_rate.items()},
            "offroad_rate": self.offroad_rate,
            "scene_count": self.scene_count,
        }, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "MetricsReport":
        obj = json.loads(text)
        return cls(
            min_ade={int(k): v for k, v in obj["min_ade_k"].items()},
            min_fde={int(k): v for k, v in obj["min_fde_k"].items()},
            miss_rate={int(k): v for k, v in obj["miss_rate_k"].items()},
            offroad_rate=obj["offroad_rate"],
            scene_count=obj["scene_count"],
        )


def _pred_arrays(pred: PredictionSet):
    p = pred.numpy()
    return p.pi, p.mu


def _top_k(pi: np.ndarray, k: int) -> np.ndarray:
    if k > pi.shape[0]:
        raise KTooLarge(f"top-{k} requested from {pi.shape[0]} modes")
    return np.argsort(-pi, kind="stable")[:k]


def _gt_points(gt) -> np.ndarray:
    return gt.points if hasattr(gt, "points") else np.asarray(gt)


def min_ade_k(pred: PredictionSet, gt, k: int) -> float:
    pi, mu = _pred_arrays(pred)
    y = _gt_points(gt)
    top = _top_k(pi, k)
    ade = np.linalg.norm(mu[top] - y[None, :, :], axis=2).mean(axis=1)
    return float(ade.min())


def min_fde_k(pred: PredictionSet, gt, k: int) -> float:
    pi, mu = _pred_arrays(pred)
    y = _gt_points(gt)
    top = _top_k(pi, k)
    fde = np.linalg.norm(mu[top, -1, :] - y[None, -1, :], axis=1)
    return float(fde.min())


def is_miss(pred: PredictionSet, gt, k: int, threshold: float = MISS_THRESHOLD_M) -> bool:
    """Miss iff every top-K mode strays strictly more than `threshold` from gt."""
    pi, mu = _pred_arrays(pred)
    y = _gt_points(gt)
    top = _top_k(pi, k)
    worst = np.linalg.norm(mu[top] - y[None, :, :], axis=2).max(axis=1)
    return bool((worst > threshold).all())


def miss_rate_k(preds, gts, k: int, threshold: float = MISS_THRESHOLD_M) -> float:
    if len(preds) != len(gts) or not preds:
        raise ValueError("need equal, nonzero numbers of predictions and futures")
    misses = sum(is_miss(p, g, k, threshold) for p, g in zip(preds, gts))
    return misses / len(preds)


def offroad_rate(preds, graphs, all_modes: bool = True) -> float:
    """Fraction of predicted points beyond corridor_width/2 of every centerline."""
    if len(preds) != len(graphs) or not preds:
        raise ValueError("need equal, nonzero numbers of predictions and graphs")
    off = 0
    total = 0
    for pred, graph in zip(preds, graphs):
        pi, mu = _pred_arrays(pred)
        pts = mu if all_modes else mu[_top_k(pi, 1)]
        flat = pts.reshape(-1, 2)
        d = min_centerline_distance(flat, graph)
        off += int((d > graph.corridor_width / 2.0).sum())
        total += flat.shape[0]
    return off / total


def evaluate_dataset(predict_fn, scenes, ks=(1, 5, 10), eval_seed: int = 0,
                     threshold: float = MISS_THRESHOLD_M,
                     offroad_all_modes: bool = True) -> MetricsReport:
    """Score predict_fn(scene, seed) -> PredictionSet over a dataset.

    Per-scene seeds derive from (eval_seed, index), so reports are reproducible
    for any prediction function, model-backed or baseline. K values are clipped
    to the prediction's mode count.
    """
    scenes = list(scenes)
    if not scenes:
        raise MissingGroundTruth("empty dataset")
    for i, s in enumerate(scenes):
        if s.future is None:
            raise MissingGroundTruth(f"scene {i} has no ground-truth future")
    preds = []
    elapsed = 0.0
    for i, scene in enumerate(scenes):
        t0 = time.perf_counter()
        preds.append(predict_fn(scene, eval_seed * 1_000_003 + i))
        elapsed += time.perf_counter() - t0
    n_modes = preds[0].numpy().pi.shape[0]
    ks = sorted({min(k, n_modes) for k in ks})
    gts = [s.future for s in scenes]
    report = MetricsReport(
        min_ade={k: float(np.mean([min_ade_k(p, g, k) for p, g in zip(preds, gts)]))
                 for k in ks},
        min_fde={k: float(np.mean([min_fde_k(p, g, k) for p, g in zip(preds, gts)]))
                 for k in ks},
        miss_rate={k: miss_rate_k(preds, gts, k, threshold) for k in ks},
        offroad_rate=offroad_rate(preds, [s.graph for s in scenes], offroad_all_modes),
        scene_count=len(scenes),
        mean_inference_ms=1000.0 * elapsed / len(scenes),
    )
    return report


def constant_velocity_baseline(scene: Scene, future_steps: int | None = None) -> PredictionSet:
    """Single-mode straight-line rollout of the target's last observed step."""
    if future_steps is None:
        if scene.future is None:
            raise MissingGroundTruth("cannot infer horizon without a future")
        future_steps = scene.future.points.shape[0]
    track = scene.target
    idx = np.flatnonzero(track.observed)
    cur = track.states[idx[-1], :2]
    if idx.size >= 2:
        step = (cur - track.states[idx[-2], :2]) / (idx[-1] - idx[-2])
    else:
        step = np.zeros(2)
    mu = cur[None, :] + np.arange(1, future_steps + 1)[:, None] * step[None, :]
    return PredictionSet(
        pi=np.array([1.0]),
        mu=mu[None, :, :],
        b=np.ones((1, future_steps, 2)),
    )
