"""Seeded epoch shuffling and per-batch padded feature encoding."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..autodiff.rng import RngStream
from ..scenes.features import DEFAULT_LIMITS, LimitExceeded, encode_features
from ..scenes.types import FRAME_TARGET, ModelInputs, Scene


@dataclass
class Batch:
    inputs: list[ModelInputs]
    futures: list[np.ndarray]  # each [f, 2]
    scene_indices: list[int]  # positions in the source dataset


def make_batches(scenes: list[Scene], batch_size: int, seed: int,
                 limits: tuple[int, int] = DEFAULT_LIMITS) -> list[Batch]:
    """One seeded pass over the dataset in shuffled order.

    Each batch is padded only to its own max neighbor/node counts (capped by
    `limits`), so small batches stay small. Raises LimitExceeded if any scene
    overflows the caps.
    """
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    for i, s in enumerate(scenes):
        if s.frame != FRAME_TARGET:
            raise ValueError(f"scene {i}: make_batches needs target-centric scenes")
        if s.future is None:
            raise ValueError(f"scene {i}: training scenes need ground-truth futures")

    order = RngStream(seed).permutation(len(scenes))
    batches = []
    for lo in range(0, len(scenes), batch_size):
        idx = [int(i) for i in order[lo:lo + batch_size]]
        chunk = [scenes[i] for i in idx]
        n_cap = min(limits[0], max(len(s.neighbors) for s in chunk))
        v_cap = min(limits[1], max(len(s.graph.nodes) for s in chunk))
        for i, s in zip(idx, chunk):
            if len(s.neighbors) > limits[0]:
                raise LimitExceeded(f"scene {i}: {len(s.neighbors)} neighbors exceed cap {limits[0]}")
            if len(s.graph.nodes) > limits[1]:
                raise LimitExceeded(f"scene {i}: {len(s.graph.nodes)} lane nodes exceed cap {limits[1]}")
        pad = (max(n_cap, 1), max(v_cap, 1))
        batches.append(Batch(
            inputs=[encode_features(s, pad) for s in chunk],
            futures=[s.future.points for s in chunk],
            scene_indices=idx,
        ))
    return batches
