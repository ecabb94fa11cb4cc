"""Scikit-learn estimator facade over the trainer and the network.

TrajectoryPredictor composes the whole stack behind fit/predict/score so the
model can sit in sklearn pipelines and parameter searches. Hyperparameters
mirror ModelConfig and TrainConfig one to one; fitted state lives in
trailing-underscore attributes per the sklearn contract.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from .autodiff.rng import RngStream
from .metrics import MetricsReport, evaluate_dataset
from .model.config import ModelConfig, PredictionSet
from .model.network import TrajectoryModel
from .training.checkpoint import Checkpoint, restore_model
from .training.loop import TrainConfig, TrainLog, fit as run_fit
from .validation import check_fitted, check_scene_list


class TrajectoryPredictor(BaseEstimator):
    """Multimodal trajectory predictor with an sklearn-style interface.

    fit() trains on a list of Scenes (their recorded futures are the
    supervision; y is accepted for API compatibility and must be None),
    predict() maps Scenes to K-mode PredictionSets, and score() returns
    negated minADE over the top 5 modes so that larger is better.
    """

    def __init__(self, embed_dim: int = 32, modes: int = 10, heads: int = 4,
                 gat_layers: int = 2, tau: float = 1.0, sigma_z: float = 0.2,
                 goal_samples: int = 10, future_steps: int = 12,
                 use_goal_proposals: bool = True, use_cross_attention: bool = True,
                 batch_size: int = 16, steps: int = 2000,
                 learning_rate: float = 1e-3, lr_min: float = 1e-4,
                 grad_clip_norm: float | None = 5.0, eval_every: int = 500,
                 seed: int = 0, val_fraction: float = 0.1,
                 max_neighbors: int = 8, max_lane_nodes: int = 40):
        self.embed_dim = embed_dim
        self.modes = modes
        self.heads = heads
        self.gat_layers = gat_layers
        self.tau = tau
        self.sigma_z = sigma_z
        self.goal_samples = goal_samples
        self.future_steps = future_steps
        self.use_goal_proposals = use_goal_proposals
        self.use_cross_attention = use_cross_attention
        self.batch_size = batch_size
        self.steps = steps
        self.learning_rate = learning_rate
        self.lr_min = lr_min
        self.grad_clip_norm = grad_clip_norm
        self.eval_every = eval_every
        self.seed = seed
        self.val_fraction = val_fraction
        self.max_neighbors = max_neighbors
        self.max_lane_nodes = max_lane_nodes

    def _model_config(self) -> ModelConfig:
        return ModelConfig(
            embed_dim=self.embed_dim, modes=self.modes, heads=self.heads,
            gat_layers=self.gat_layers, tau=self.tau, sigma_z=self.sigma_z,
            goal_samples=self.goal_samples, future_steps=self.future_steps,
            use_goal_proposals=self.use_goal_proposals,
            use_cross_attention=self.use_cross_attention)

    def _train_config(self) -> TrainConfig:
        return TrainConfig(
            batch_size=self.batch_size, steps=self.steps,
            learning_rate=self.learning_rate, lr_min=self.lr_min,
            grad_clip_norm=self.grad_clip_norm, seed=self.seed,
            eval_every=self.eval_every)

    def _limits(self) -> tuple[int, int]:
        return (self.max_neighbors, self.max_lane_nodes)

    def fit(self, X, y=None, val_scenes=None, log_fn=None) -> "TrajectoryPredictor":
        """Train on Scenes in X; futures stored on the scenes supervise.

        When val_scenes is omitted a seeded val_fraction split of X is held
        out for the periodic evaluations the training log records.
        """
        if y is not None:
            raise ValueError("y must be None; supervision comes from scene futures")
        scenes = check_scene_list(X, require_future=True)
        if val_scenes is not None:
            train, val = scenes, check_scene_list(val_scenes, require_future=True)
        else:
            if not 0.0 < self.val_fraction < 1.0:
                raise ValueError("val_fraction must lie in (0, 1)")
            order = RngStream(self.seed).derive("val_split").permutation(len(scenes))
            n_val = max(1, int(round(self.val_fraction * len(scenes))))
            if n_val >= len(scenes):
                raise ValueError("val_fraction leaves no training scenes")
            val = [scenes[i] for i in order[:n_val]]
            train = [scenes[i] for i in order[n_val:]]

        ckpt, log = run_fit(train, val, self._model_config(), self._train_config(),
                            limits=self._limits(), log_fn=log_fn)
        model, _ = restore_model(ckpt)
        self.model_ = model
        self.checkpoint_: Checkpoint = ckpt
        self.log_: TrainLog = log
        self.n_train_scenes_ = len(train)
        return self

    def predict(self, X, seed: int = 0) -> list[PredictionSet]:
        """K-mode mixture per scene; arrays, one PredictionSet per input."""
        check_fitted(self)
        scenes = check_scene_list(X)
        return [self.model_.predict(s, seed * 1_000_003 + i, self._limits())
                for i, s in enumerate(scenes)]

    def predict_goals(self, X, seed: int = 0) -> list[np.ndarray]:
        """Sampled goal weights [S, V] per scene, for inspection/plotting."""
        check_fitted(self)
        scenes = check_scene_list(X)
        return [self.model_.predict_with_goals(s, seed * 1_000_003 + i,
                                               self._limits())[1]
                for i, s in enumerate(scenes)]

    def score(self, X, y=None, seed: int = 0) -> float:
        """Negated val minADE over the top 5 modes (greater is better)."""
        report = self.evaluate(X, seed=seed, ks=(5,))
        return -report.min_ade[max(report.min_ade)]

    def evaluate(self, X, seed: int = 0, ks=(1, 5, 10)) -> MetricsReport:
        check_fitted(self)
        scenes = check_scene_list(X, require_future=True)
        return evaluate_dataset(
            lambda s, sd: self.model_.predict(s, sd, self._limits()),
            scenes, ks=ks, eval_seed=seed)

    @classmethod
    def from_checkpoint(cls, ckpt: Checkpoint, **overrides) -> "TrajectoryPredictor":
        """Wrap an already-trained Checkpoint in a fitted estimator."""
        mc = ckpt.model_config
        est = cls(embed_dim=mc.embed_dim, modes=mc.modes, heads=mc.heads,
                  gat_layers=mc.gat_layers, tau=mc.tau, sigma_z=mc.sigma_z,
                  goal_samples=mc.goal_samples, future_steps=mc.future_steps,
                  use_goal_proposals=mc.use_goal_proposals,
                  use_cross_attention=mc.use_cross_attention, **overrides)
        model, _ = restore_model(ckpt)
        est.model_ = model
        est.checkpoint_ = ckpt
        est.log_ = TrainLog()
        est.n_train_scenes_ = 0
        return est
