from .config import ModelConfig, PredictionSet
from .network import (
    COORD_SCALE,
    OUTPUT_SCALE,
    Encodings,
    ForwardNoise,
    GoalProposal,
    InteractOut,
    TrajectoryModel,
)

__all__ = [
    "COORD_SCALE",
    "OUTPUT_SCALE",
    "Encodings",
    "ForwardNoise",
    "GoalProposal",
    "InteractOut",
    "ModelConfig",
    "PredictionSet",
    "TrajectoryModel",
]
