"""Padded fixed-shape model inputs from a target-centric scene."""

from __future__ import annotations

import numpy as np

from .types import FRAME_TARGET, AgentTrack, ModelInputs, Scene

DEFAULT_LIMITS = (8, 40)  # (N_max neighbors, V_max lane nodes)


class LimitExceeded(ValueError):
    """Scene has more entities than the padded tensor capacity."""


def _track_features(track: AgentTrack) -> np.ndarray:
    """[h+1, 6] rows (x, y, v, a, w, is_ped); unobserved steps stay all-zero."""
    h1 = track.n_steps
    feats = np.zeros((h1, 6))
    obs = track.observed
    feats[obs, :5] = track.states[obs]
    feats[obs, 5] = float(track.is_pedestrian)
    return feats


def encode_features(scene: Scene, limits: tuple[int, int] = DEFAULT_LIMITS) -> ModelInputs:
    if scene.frame != FRAME_TARGET:
        raise ValueError(f"encode_features needs a {FRAME_TARGET!r} scene, got {scene.frame!r}")
    n_max, v_max = limits
    n_nbr = len(scene.neighbors)
    n_nodes = len(scene.graph.nodes)
    if n_nbr > n_max:
        raise LimitExceeded(f"{n_nbr} neighbors exceed the padded capacity {n_max}")
    if n_nodes > v_max:
        raise LimitExceeded(f"{n_nodes} lane nodes exceed the padded capacity {v_max}")

    h1 = scene.target.n_steps
    p = scene.graph.poses_per_node

    nbr_feats = np.zeros((n_max, h1, 6))
    nbr_mask = np.zeros(n_max, dtype=bool)
    for i, nb in enumerate(scene.neighbors):
        nbr_feats[i] = _track_features(nb)
        nbr_mask[i] = True

    node_feats = np.zeros((v_max, p, 4))
    node_mask = np.zeros(v_max, dtype=bool)
    for i, node in enumerate(scene.graph.nodes):
        node_feats[i] = node.poses
        node_mask[i] = True

    adjacency_mask = np.zeros((v_max, v_max), dtype=bool)
    adjacency_mask[:n_nodes, :n_nodes] = scene.graph.adjacency_matrix()

    return ModelInputs(
        target_feats=_track_features(scene.target),
        nbr_feats=nbr_feats,
        nbr_mask=nbr_mask,
        node_feats=node_feats,
        node_mask=node_mask,
        adjacency_mask=adjacency_mask,
    )
