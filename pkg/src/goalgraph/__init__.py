"""Multimodal vehicle trajectory prediction on synthetic lane graphs."""

__version__ = "0.1.0"


def __getattr__(name):
    if name == "TrajectoryPredictor":
        from .estimator import TrajectoryPredictor
        return TrajectoryPredictor
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")


__all__ = ["TrajectoryPredictor", "__version__"]
