from .types import (
    FRAME_GLOBAL,
    FRAME_TARGET,
    TOPOLOGIES,
    AgentTrack,
    FuturePath,
    GenConfig,
    LaneGraph,
    LaneNode,
    ModelInputs,
    Scene,
)
from .generate import TargetOffGraph, branch_labels, generate_dataset, generate_scene, simulate_future
from .transform import apply_rigid, to_agent_frame
from .features import DEFAULT_LIMITS, LimitExceeded, encode_features
from .serialize import ParseError, load_dataset, parse_scene, save_dataset, serialize_scene

__all__ = [
    "AgentTrack",
    "FuturePath",
    "GenConfig",
    "LaneGraph",
    "LaneNode",
    "ModelInputs",
    "Scene",
    "FRAME_GLOBAL",
    "FRAME_TARGET",
    "TOPOLOGIES",
    "TargetOffGraph",
    "branch_labels",
    "generate_dataset",
    "generate_scene",
    "simulate_future",
    "apply_rigid",
    "to_agent_frame",
    "DEFAULT_LIMITS",
    "LimitExceeded",
    "encode_features",
    "ParseError",
    "load_dataset",
    "parse_scene",
    "save_dataset",
    "serialize_scene",
]
