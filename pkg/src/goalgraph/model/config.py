"""Model hyperparameters and the prediction output contract."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np


@dataclass
class ModelConfig:
    embed_dim: int = 32
    modes: int = 10
    heads: int = 4
    gat_layers: int = 2
    tau: float = 1.0
    sigma_z: float = 0.2
    goal_samples: int = 10
    future_steps: int = 12
    use_goal_proposals: bool = True
    use_cross_attention: bool = True

    def __post_init__(self):
        if self.embed_dim % self.heads != 0:
            raise ValueError(f"embed_dim {self.embed_dim} not divisible by heads {self.heads}")
        if self.modes < 2:
            raise ValueError("modes must be >= 2")
        if self.tau <= 0:
            raise ValueError("tau must be > 0")
        if self.sigma_z < 0:
            raise ValueError("sigma_z must be >= 0")
        if self.goal_samples < 1 or self.future_steps < 1 or self.gat_layers < 0:
            raise ValueError("goal_samples, future_steps >= 1 and gat_layers >= 0 required")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        return cls(**d)


@dataclass
class PredictionSet:
    """K-mode Laplacian mixture over future trajectories.

    pi [K] mixing coefficients (simplex), mu [K, f, 2] locations in meters,
    b [K, f, 2] strictly positive scales. Fields are engine tensors during
    training and plain arrays after `numpy()`.
    """

    pi: object
    mu: object
    b: object

    def numpy(self) -> "PredictionSet":
        return PredictionSet(
            pi=np.asarray(getattr(self.pi, "values", self.pi)),
            mu=np.asarray(getattr(self.mu, "values", self.mu)),
            b=np.asarray(getattr(self.b, "values", self.b)),
        )

    @property
    def n_modes(self) -> int:
        return np.asarray(getattr(self.pi, "values", self.pi)).shape[0]
