"""Scene data model: agents, lane graphs, padded model inputs, generator knobs."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

FRAME_GLOBAL = "global"
FRAME_TARGET = "target_centric"

TOPOLOGIES = ("straight", "curve", "t_junction", "crossroads")

# state columns of an agent step: x, y, speed, accel, yaw_rate
STATE_DIM = 5
# model-facing feature width: the five state columns plus the pedestrian flag
FEATURE_DIM = 6
POSE_DIM = 4  # x, y, theta, stopline-or-crosswalk flag


@dataclass
class AgentTrack:
    """One agent's h+1 observed states, oldest first, current state last.

    states is [h+1, 5] (x, y, v, a, w); observed marks real steps, padded
    steps are all-zero rows. The pedestrian flag is per-agent, constant over
    the track.
    """

    track_id: int
    states: np.ndarray  # [h+1, 5] float
    observed: np.ndarray  # [h+1] bool
    is_pedestrian: bool = False

    def __post_init__(self):
        self.states = np.asarray(self.states, dtype=np.float64)
        self.observed = np.asarray(self.observed, dtype=bool)
        if self.states.ndim != 2 or self.states.shape[1] != STATE_DIM:
            raise ValueError(f"states must be [h+1, {STATE_DIM}], got {self.states.shape}")
        if self.observed.shape != (self.states.shape[0],):
            raise ValueError("observed mask length must match states")
        if not self.observed[-1]:
            raise ValueError("the current (last) state must be observed")

    @property
    def n_steps(self) -> int:
        return self.states.shape[0]

    def current_xy(self) -> np.ndarray:
        return self.states[-1, :2].copy()

    def current_speed(self) -> float:
        return float(self.states[-1, 2])

    def heading(self) -> float:
        """Heading from the chord of the last two observed positions.

        Tracks never store headings explicitly; this is the convention every
        consumer (frame transform, plots) shares. Fewer than two observed
        steps, or a stationary chord, give heading 0.
        """
        idx = np.flatnonzero(self.observed)
        if idx.size < 2:
            return 0.0
        d = self.states[idx[-1], :2] - self.states[idx[-2], :2]
        if d[0] == 0.0 and d[1] == 0.0:
            return 0.0
        return float(np.arctan2(d[1], d[0]))


@dataclass
class LaneNode:
    """A fixed-length run of equidistant centerline poses (x, y, theta, flag)."""

    node_id: int
    poses: np.ndarray  # [P, 4]

    def __post_init__(self):
        self.poses = np.asarray(self.poses, dtype=np.float64)
        if self.poses.ndim != 2 or self.poses.shape[1] != POSE_DIM:
            raise ValueError(f"poses must be [P, {POSE_DIM}], got {self.poses.shape}")


@dataclass
class LaneGraph:
    nodes: list[LaneNode]
    edges: list[tuple[int, int]]  # directed successor pairs (from_id, to_id)
    corridor_width: float

    def __post_init__(self):
        if not self.nodes:
            raise ValueError("a lane graph needs at least one node")
        ids = {n.node_id for n in self.nodes}
        if len(ids) != len(self.nodes):
            raise ValueError("duplicate node ids")
        pose_counts = {n.poses.shape[0] for n in self.nodes}
        if len(pose_counts) != 1:
            raise ValueError("all nodes must share one pose count")
        self.edges = [(int(a), int(b)) for a, b in self.edges]
        for a, b in self.edges:
            if a == b:
                raise ValueError(f"self-loop on node {a}")
            if a not in ids or b not in ids:
                raise ValueError(f"edge ({a}, {b}) references a missing node")

    @property
    def poses_per_node(self) -> int:
        return self.nodes[0].poses.shape[0]

    def node_by_id(self, node_id: int) -> LaneNode:
        for n in self.nodes:
            if n.node_id == node_id:
                return n
        raise KeyError(node_id)

    def successors(self, node_id: int) -> list[int]:
        return [b for a, b in self.edges if a == node_id]

    def adjacency_matrix(self) -> np.ndarray:
        """Boolean [V, V] in node-list order; [i, j] true for an edge i -> j."""
        index = {n.node_id: i for i, n in enumerate(self.nodes)}
        adj = np.zeros((len(self.nodes), len(self.nodes)), dtype=bool)
        for a, b in self.edges:
            adj[index[a], index[b]] = True
        return adj


@dataclass
class FuturePath:
    points: np.ndarray  # [f, 2]

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64)
        if self.points.ndim != 2 or self.points.shape[1] != 2:
            raise ValueError(f"future points must be [f, 2], got {self.points.shape}")


@dataclass
class Scene:
    target: AgentTrack
    neighbors: list[AgentTrack]
    graph: LaneGraph
    future: FuturePath | None
    frame: str
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.frame not in (FRAME_GLOBAL, FRAME_TARGET):
            raise ValueError(f"unknown frame {self.frame!r}")
        steps = self.target.n_steps
        for nb in self.neighbors:
            if nb.n_steps != steps:
                raise ValueError("all tracks in a scene share one history length")


@dataclass
class ModelInputs:
    """Padded fixed-shape tensors; masked rows are exactly zero."""

    target_feats: np.ndarray  # [h+1, 6]
    nbr_feats: np.ndarray  # [N_max, h+1, 6]
    nbr_mask: np.ndarray  # [N_max] bool
    node_feats: np.ndarray  # [V_max, P, 4]
    node_mask: np.ndarray  # [V_max] bool
    adjacency_mask: np.ndarray  # [V_max, V_max] bool


@dataclass
class GenConfig:
    """Synthetic scene generator settings.

    The four concrete layouts are straight, curve, t_junction and crossroads;
    "mixed" draws one of the four per scene from the scene's own seed.
    """

    scene_topology: str = "mixed"
    node_length: float = 10.0
    poses_per_node: int = 5
    corridor_width: float = 4.0
    speed_range: tuple[float, float] = (3.0, 8.0)
    noise_std: float = 0.2
    history_steps: int = 4
    future_steps: int = 12
    step_dt: float = 0.5
    chain_nodes: int = 8
    stem_nodes: int = 4
    branch_arc_nodes: int = 2
    branch_out_nodes: int = 2
    max_neighbors: int = 4
    pedestrian_prob: float = 0.15
    appear_mid_history_prob: float = 0.3
    stop_flag_prob: float = 0.05

    def __post_init__(self):
        if self.scene_topology not in TOPOLOGIES + ("mixed",):
            raise ValueError(f"unknown topology {self.scene_topology!r}")
        for name in ("node_length", "poses_per_node", "corridor_width", "step_dt"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.poses_per_node < 2:
            raise ValueError("poses_per_node must be >= 2")
        if self.history_steps < 1 or self.future_steps < 1:
            raise ValueError("history_steps and future_steps must be >= 1")
        lo, hi = self.speed_range
        if not (0 < lo <= hi):
            raise ValueError("speed_range must be 0 < low <= high")
        if self.noise_std < 0:
            raise ValueError("noise_std must be >= 0")
