from .ablation import ABLATION_GRID, AblationRow, format_ablation_table, run_ablation
from .adam import OptimizerState, adam_step, init_optimizer
from .batching import Batch, make_batches
from .checkpoint import (
    FORMAT_VERSION,
    Checkpoint,
    FormatError,
    VersionMismatch,
    load_checkpoint,
    make_checkpoint,
    restore_model,
    save_checkpoint,
)
from .loop import (
    NonFiniteLoss,
    TrainConfig,
    TrainLog,
    clip_grad_norm,
    cosine_learning_rate,
    fit,
    train_step,
)

__all__ = [
    "ABLATION_GRID",
    "AblationRow",
    "Batch",
    "Checkpoint",
    "FORMAT_VERSION",
    "FormatError",
    "NonFiniteLoss",
    "OptimizerState",
    "TrainConfig",
    "TrainLog",
    "VersionMismatch",
    "adam_step",
    "clip_grad_norm",
    "cosine_learning_rate",
    "fit",
    "format_ablation_table",
    "init_optimizer",
    "load_checkpoint",
    "make_batches",
    "make_checkpoint",
    "restore_model",
    "run_ablation",
    "save_checkpoint",
    "train_step",
]
