"""Rigid-frame transforms between the global and target-centric frames."""

from __future__ import annotations

import numpy as np

from .geometry import rotation_matrix, wrap_angle
from .types import FRAME_GLOBAL, FRAME_TARGET, AgentTrack, FuturePath, LaneGraph, LaneNode, Scene


def _transform_track(track: AgentTrack, rot: np.ndarray, shift: np.ndarray) -> AgentTrack:
    states = track.states.copy()
    obs = track.observed
    states[obs, :2] = (states[obs, :2] + shift) @ rot.T
    return AgentTrack(track.track_id, states, obs.copy(), track.is_pedestrian)


def apply_rigid(scene: Scene, angle: float, translation) -> Scene:
    """Rotate then translate a whole scene; used to probe frame invariance."""
    rot = rotation_matrix(angle)
    t = np.asarray(translation, dtype=np.float64)

    def move_track(track: AgentTrack) -> AgentTrack:
        states = track.states.copy()
        obs = track.observed
        states[obs, :2] = states[obs, :2] @ rot.T + t
        return AgentTrack(track.track_id, states, obs.copy(), track.is_pedestrian)

    nodes = []
    for node in scene.graph.nodes:
        poses = node.poses.copy()
        poses[:, :2] = poses[:, :2] @ rot.T + t
        poses[:, 2] = wrap_angle(poses[:, 2] + angle)
        nodes.append(LaneNode(node.node_id, poses))
    graph = LaneGraph(nodes, list(scene.graph.edges), scene.graph.corridor_width)
    future = None
    if scene.future is not None:
        future = FuturePath(scene.future.points @ rot.T + t)
    return Scene(move_track(scene.target), [move_track(n) for n in scene.neighbors],
                 graph, future, scene.frame, dict(scene.meta))


def to_agent_frame(scene: Scene) -> Scene:
    """Re-express a global-frame scene relative to the target's current pose.

    The target's current position maps to the origin and its heading (chord of
    its last two observed positions) to zero. Speeds, accelerations, and yaw
    rates are frame-independent scalars and pass through unchanged.
    """
    if scene.frame != FRAME_GLOBAL:
        raise ValueError(f"expected a {FRAME_GLOBAL!r} scene, got {scene.frame!r}")
    heading = scene.target.heading()
    anchor = scene.target.current_xy()
    rot = rotation_matrix(-heading)
    shift = -anchor

    nodes = []
    for node in scene.graph.nodes:
        poses = node.poses.copy()
        poses[:, :2] = (poses[:, :2] + shift) @ rot.T
        poses[:, 2] = wrap_angle(poses[:, 2] - heading)
        nodes.append(LaneNode(node.node_id, poses))
    graph = LaneGraph(nodes, list(scene.graph.edges), scene.graph.corridor_width)
    future = None
    if scene.future is not None:
        future = FuturePath((scene.future.points + shift) @ rot.T)
    return Scene(
        _transform_track(scene.target, rot, shift),
        [_transform_track(n, rot, shift) for n in scene.neighbors],
        graph,
        future,
        FRAME_TARGET,
        dict(scene.meta),
    )
