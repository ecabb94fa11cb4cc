"""Deterministic mini-batch training loop.

All stochastic choices (batch order, forward noise, evaluation seeds) derive
from TrainConfig.seed through counter-based streams, so a run is a pure
function of (datasets, configs) and resuming from a checkpoint reproduces the
uninterrupted run bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..autodiff.rng import RngStream
from ..losses import LossBreakdown, total_loss
from ..metrics import evaluate_dataset
from ..model.config import ModelConfig
from ..model.network import TrajectoryModel
from ..scenes.features import DEFAULT_LIMITS
from ..scenes.transform import to_agent_frame
from ..scenes.types import FRAME_TARGET
from .adam import OptimizerState, adam_step, init_optimizer
from .batching import Batch, make_batches
from .checkpoint import Checkpoint, make_checkpoint, restore_model


class NonFiniteLoss(RuntimeError):
    """Loss became NaN or infinite; message names the offending scene."""


@dataclass
class TrainConfig:
    batch_size: int = 16
    steps: int = 2000
    learning_rate: float = 1e-3
    lr_min: float = 1e-4
    adam_betas: tuple[float, float] = (0.9, 0.999)
    adam_eps: float = 1e-8
    grad_clip_norm: float | None = 5.0
    seed: int = 0
    eval_every: int = 500

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.steps < 0:
            raise ValueError("steps must be >= 0")
        if self.learning_rate < 0 or self.adam_eps <= 0:
            raise ValueError("learning_rate >= 0 and adam_eps > 0 required")
        if self.lr_min < 0 or self.lr_min > self.learning_rate:
            raise ValueError("lr_min must lie in [0, learning_rate]")
        b1, b2 = self.adam_betas
        if not (0 <= b1 < 1 and 0 <= b2 < 1):
            raise ValueError("adam_betas must lie in [0, 1)")
        if self.grad_clip_norm is not None and self.grad_clip_norm <= 0:
            raise ValueError("grad_clip_norm must be positive or None")
        if self.eval_every < 1:
            raise ValueError("eval_every must be >= 1")

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["adam_betas"] = list(self.adam_betas)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        d = dict(d)
        if "adam_betas" in d:
            d["adam_betas"] = tuple(d["adam_betas"])
        return cls(**d)


@dataclass
class TrainLog:
    """One record per evaluation point, in step order."""

    records: list[dict] = field(default_factory=list)

    def append(self, step: int, l_reg: float, l_cls: float, l_ade: float,
               val_min_ade5: float) -> dict:
        rec = {
            "step": step,
            "l_reg": float(l_reg),
            "l_cls": float(l_cls),
            "l_ade": float(l_ade),
            "val_min_ade5": float(val_min_ade5),
        }
        self.records.append(rec)
        return rec

    @staticmethod
    def format_record(rec: dict) -> str:
        return ("step={step} l_reg={l_reg:.6f} l_cls={l_cls:.6f} "
                "l_ade={l_ade:.6f} val_min_ade5={val_min_ade5:.6f}").format(**rec)


def cosine_learning_rate(step: int, cfg: TrainConfig) -> float:
    """Cosine decay from learning_rate down to lr_min over the run."""
    total = max(1, cfg.steps)
    frac = min(step, total) / total
    span = cfg.learning_rate - cfg.lr_min
    return cfg.lr_min + 0.5 * span * (1.0 + math.cos(math.pi * frac))


def clip_grad_norm(params, max_norm: float) -> float:
    """Scale all gradients so their global L2 norm is at most max_norm."""
    sq = 0.0
    grads = [p.grad for p in params if p.grad is not None]
    for g in grads:
        sq += float(np.sum(np.asarray(g, dtype=np.float64) ** 2))
    norm = math.sqrt(sq)
    if norm > max_norm:
        scale = max_norm / norm
        for g in grads:
            g *= scale
    return norm


def train_step(model: TrajectoryModel, opt: OptimizerState, batch: Batch,
               cfg: TrainConfig, lr: float | None = None) -> LossBreakdown:
    """One optimization step: forward each scene, mean loss, backward, Adam.

    Forward noise derives from (cfg.seed, "noise", scene index) with no step
    term, so a scene keeps one fixed draw for the whole run. Stable draws keep
    each mode's goal assignment and latent offset consistent across epochs,
    which the mode-ranking head needs in order to receive a coherent gradient;
    resumed runs trivially replay the same noise.
    """
    if lr is None:
        lr = cosine_learning_rate(opt.step, cfg)
    model.store.zero_grads()

    parts = []
    for i, inputs in enumerate(batch.inputs):
        noise_rng = RngStream(cfg.seed).derive(
            "noise", batch.scene_indices[i])
        noise = model.draw_noise(noise_rng, inputs.node_mask.shape[0])
        pred, _ = model.forward(inputs, noise)
        part = total_loss(pred, batch.futures[i])
        if not np.isfinite(float(part.total.values)):
            raise NonFiniteLoss(
                f"non-finite loss at scene {batch.scene_indices[i]} "
                f"(step {opt.step})")
        parts.append(part)

    n = float(len(parts))
    l_reg = sum((p.l_reg for p in parts[1:]), parts[0].l_reg) / n
    l_cls = sum((p.l_cls for p in parts[1:]), parts[0].l_cls) / n
    l_ade = sum((p.l_ade for p in parts[1:]), parts[0].l_ade) / n
    total = l_reg + l_cls + l_ade
    total.backward()

    trainable = model.store.trainable()
    if cfg.grad_clip_norm is not None:
        clip_grad_norm(trainable, cfg.grad_clip_norm)
    adam_step(trainable, opt, lr, cfg.adam_betas, cfg.adam_eps)
    return LossBreakdown(l_reg, l_cls, l_ade, total, [p.winner_mode for p in parts])


def _target_frame(scenes) -> list:
    out = []
    for s in scenes:
        out.append(s if s.frame == FRAME_TARGET else to_agent_frame(s))
    return out


def fit(train_scenes, val_scenes, model_cfg: ModelConfig, train_cfg: TrainConfig,
        start: Checkpoint | None = None, limits: tuple[int, int] = DEFAULT_LIMITS,
        log_path: str | None = None, log_fn=None,
        stop_at_step: int | None = None) -> tuple[Checkpoint, TrainLog]:
    """Train for train_cfg.steps steps, evaluating val minADE5 periodically.

    Pass a Checkpoint as `start` to resume: the loop continues from its
    recorded step with identical batch order and noise, so interrupted and
    uninterrupted runs produce the same final state. `stop_at_step` halts the
    run early without shortening the learning-rate schedule, which is how a
    mid-run save for later resumption is produced deliberately.
    """
    train = _target_frame(train_scenes)
    val = _target_frame(val_scenes)
    if not train or not val:
        raise ValueError("train and validation datasets must be non-empty")

    if start is not None:
        model, opt = restore_model(start)
    else:
        model = TrajectoryModel(model_cfg, seed=train_cfg.seed, dtype=np.float32)
        opt = init_optimizer(model.store.trainable())

    steps_per_epoch = max(1, math.ceil(len(train) / train_cfg.batch_size))
    log = TrainLog()
    log_fh = open(log_path, "a", encoding="utf-8") if log_path else None

    def evaluate(step: int, breakdown: LossBreakdown | None):
        eval_seed = int(RngStream(train_cfg.seed).derive("eval").integers(0, 2**31))
        report = evaluate_dataset(
            lambda s, sd: model.predict(s, sd, limits), val, ks=(5,),
            eval_seed=eval_seed)
        if breakdown is None:
            terms = (math.nan, math.nan, math.nan)
        else:
            terms = (float(breakdown.l_reg.values), float(breakdown.l_cls.values),
                     float(breakdown.l_ade.values))
        rec = log.append(step, *terms, report.min_ade[max(report.min_ade)])
        if log_fh:
            log_fh.write(TrainLog.format_record(rec) + "\n")
            log_fh.flush()
        if log_fn:
            log_fn(rec)

    last_step = train_cfg.steps if stop_at_step is None \
        else min(stop_at_step, train_cfg.steps)
    try:
        epoch = -1
        batches: list[Batch] = []
        breakdown = None
        for step in range(opt.step, last_step):
            want_epoch = step // steps_per_epoch
            if want_epoch != epoch:
                epoch = want_epoch
                epoch_seed = RngStream(train_cfg.seed).derive("epoch", epoch).seed
                batches = make_batches(train, train_cfg.batch_size, epoch_seed, limits)
            batch = batches[step % steps_per_epoch]
            breakdown = train_step(model, opt, batch, train_cfg,
                                   cosine_learning_rate(step, train_cfg))
            if (step + 1) % train_cfg.eval_every == 0 or step + 1 == train_cfg.steps:
                evaluate(step + 1, breakdown)
        if train_cfg.steps == 0:
            evaluate(0, None)
    finally:
        if log_fh:
            log_fh.close()

    ckpt = make_checkpoint(model, opt, {"seed": train_cfg.seed, "step": opt.step})
    return ckpt, log
