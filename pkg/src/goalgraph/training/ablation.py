"""Four-way ablation over goal proposals and cross-attention.

Every row trains with the same TrainConfig seed, so data order, forward
noise, and parameter initialization are shared and metric differences are
attributable to the configuration flags alone.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from ..metrics import MetricsReport, evaluate_dataset
from ..model.config import ModelConfig
from ..scenes.features import DEFAULT_LIMITS
from .checkpoint import restore_model
from .loop import TrainConfig, _target_frame, fit

ABLATION_GRID: tuple[tuple[bool, bool], ...] = (
    (False, False),
    (True, False),
    (False, True),
    (True, True),
)


@dataclass
class AblationRow:
    use_goal_proposals: bool
    use_cross_attention: bool
    report: MetricsReport


def run_ablation(train_scenes, val_scenes, base_cfg: ModelConfig,
                 train_cfg: TrainConfig,
                 limits: tuple[int, int] = DEFAULT_LIMITS,
                 log_fn=None) -> list[AblationRow]:
    """Train the four flag combinations and report validation metrics."""
    train = _target_frame(train_scenes)
    val = _target_frame(val_scenes)
    eval_seed = int(train_cfg.seed) * 10_007 + 97
    rows = []
    for use_goals, use_cross in ABLATION_GRID:
        cfg = replace(base_cfg, use_goal_proposals=use_goals,
                      use_cross_attention=use_cross)
        ckpt, _ = fit(train, val, cfg, train_cfg, limits=limits)
        model, _ = restore_model(ckpt)
        report = evaluate_dataset(
            lambda s, sd: model.predict(s, sd, limits), val,
            ks=(1, 5), eval_seed=eval_seed)
        row = AblationRow(use_goals, use_cross, report)
        rows.append(row)
        if log_fn:
            log_fn(row)
    return rows


def format_ablation_table(rows: list[AblationRow]) -> str:
    lines = ["goals  cross_attn  val_minADE5  val_minFDE5  miss_rate5"]
    for r in rows:
        k = 5 if 5 in r.report.min_ade else max(r.report.min_ade)
        lines.append(
            f"{str(r.use_goal_proposals):<6} {str(r.use_cross_attention):<11}"
            f" {r.report.min_ade[k]:<12.4f} {r.report.min_fde[k]:<12.4f}"
            f" {r.report.miss_rate[k]:.4f}")
    return "\n".join(lines)
