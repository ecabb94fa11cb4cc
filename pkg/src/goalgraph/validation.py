"""Input checks shared by the estimator and the CLI."""

from __future__ import annotations

from sklearn.exceptions import NotFittedError

from .scenes.transform import to_agent_frame
from .scenes.types import FRAME_TARGET, Scene


def check_scene_list(X, require_future: bool = False) -> list[Scene]:
    """Coerce X to a non-empty list of Scenes, target-centric frame.

    Global-frame scenes are converted; anything that is not a Scene raises.
    """
    scenes = list(X)
    if not scenes:
        raise ValueError("expected a non-empty sequence of scenes")
    out = []
    for i, s in enumerate(scenes):
        if not isinstance(s, Scene):
            raise TypeError(f"item {i}: expected a Scene, got {type(s).__name__}")
        if require_future and s.future is None:
            raise ValueError(f"item {i}: scene has no ground-truth future")
        out.append(s if s.frame == FRAME_TARGET else to_agent_frame(s))
    return out


def check_fitted(estimator, attribute: str = "model_") -> None:
    if not hasattr(estimator, attribute):
        raise NotFittedError(
            f"{type(estimator).__name__} is not fitted yet; call fit first")
