"""Synthetic scene generation: lane layouts, agent histories, future rollout.

Scenes are built in the global frame from a single seeded stream, so one
(seed, config) pair always reproduces the same scene bit for bit. Layouts are
assembled from constant-curvature pieces, one per lane node, which keeps node
poses exactly equidistant and the rollout free of integration drift.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..autodiff.rng import RngStream
from .geometry import advance_pose, min_centerline_distance, point_segment_distance, wrap_angle
from .types import (
    FRAME_GLOBAL,
    TOPOLOGIES,
    AgentTrack,
    FuturePath,
    GenConfig,
    LaneGraph,
    LaneNode,
    Scene,
)

_PLACEMENT_MARGIN = 1.0


class TargetOffGraph(ValueError):
    """The target agent is too far from every lane centerline to roll forward."""


@dataclass
class _Route:
    """A root-to-leaf lane course: one constant-curvature piece per node."""

    pieces: list[tuple[float, float, float, float, float]]  # (x, y, theta, kappa, length)
    node_ids: list[int]

    @property
    def total_length(self) -> float:
        return sum(p[4] for p in self.pieces)

    def pose_at(self, s: float) -> tuple[float, float, float]:
        """Pose at arc position s; extrapolates beyond either end."""
        if s < 0.0:
            x, y, th, kappa, _ = self.pieces[0]
            return advance_pose(x, y, th, kappa, s)
        acc = 0.0
        for i, (x, y, th, kappa, length) in enumerate(self.pieces):
            if s <= acc + length or i == len(self.pieces) - 1:
                return advance_pose(x, y, th, kappa, s - acc)
            acc += length
        raise AssertionError("unreachable")

    def curvature_at(self, s: float) -> float:
        acc = 0.0
        for _, _, _, kappa, length in self.pieces:
            if s <= acc + length:
                return kappa
            acc += length
        return self.pieces[-1][3]


def _chain_pieces(entry, kappas, length):
    """Consecutive constant-curvature pieces starting from an entry pose."""
    x, y, th = entry
    pieces = []
    for kappa in kappas:
        pieces.append((x, y, th, kappa, length))
        x, y, th = advance_pose(x, y, th, kappa, length)
    return pieces, (x, y, th)


def _node_from_piece(node_id, piece, poses_per_node, flags):
    x, y, th, kappa, length = piece
    ds = length / poses_per_node
    poses = np.zeros((poses_per_node, 4))
    for j in range(poses_per_node):
        px, py, pth = advance_pose(x, y, th, kappa, j * ds)
        poses[j] = (px, py, wrap_angle(pth), flags[j])
    return LaneNode(node_id, poses)


def _build_layout(rng: RngStream, cfg: GenConfig, topology: str):
    """Lay out nodes, successor edges, and root-to-leaf routes for a topology."""
    origin = rng.uniform((2,), -50.0, 50.0)
    heading = float(rng.uniform((), 0.0, 2.0 * np.pi))
    entry = (float(origin[0]), float(origin[1]), heading)
    L = cfg.node_length

    if topology == "straight":
        pieces, _ = _chain_pieces(entry, [0.0] * cfg.chain_nodes, L)
        chains = [pieces]
        stem_len = cfg.chain_nodes
    elif topology == "curve":
        radius = float(rng.uniform((), 40.0, 100.0))
        sign = 1.0 if rng.uniform(()) < 0.5 else -1.0
        pieces, _ = _chain_pieces(entry, [sign / radius] * cfg.chain_nodes, L)
        chains = [pieces]
        stem_len = cfg.chain_nodes
    else:
        stem_pieces, junction = _chain_pieces(entry, [0.0] * cfg.stem_nodes, L)
        arc_kappa = (np.pi / 2.0) / (cfg.branch_arc_nodes * L)
        branch_signs = [1.0, -1.0] if topology == "t_junction" else [1.0, -1.0, 0.0]
        chains = [stem_pieces]
        for sign in branch_signs:
            kappas = [sign * arc_kappa] * cfg.branch_arc_nodes + [0.0] * cfg.branch_out_nodes
            branch_pieces, _ = _chain_pieces(junction, kappas, L)
            chains.append(branch_pieces)
        stem_len = cfg.stem_nodes

    # assign node ids chain by chain and wire successor edges
    nodes_pieces = []
    chain_ids = []
    next_id = 0
    for pieces in chains:
        ids = list(range(next_id, next_id + len(pieces)))
        next_id += len(pieces)
        chain_ids.append(ids)
        nodes_pieces.extend(zip(ids, pieces))
    edges = []
    for ids in chain_ids:
        edges.extend((ids[k], ids[k + 1]) for k in range(len(ids) - 1))
    for ids in chain_ids[1:]:
        edges.append((chain_ids[0][-1], ids[0]))

    flags = rng.uniform((next_id, cfg.poses_per_node)) < cfg.stop_flag_prob
    nodes = [_node_from_piece(nid, piece, cfg.poses_per_node, flags[nid])
             for nid, piece in nodes_pieces]

    if len(chains) == 1:
        routes = [_Route(chains[0], chain_ids[0])]
    else:
        routes = [_Route(chains[0] + br, chain_ids[0] + ids)
                  for br, ids in zip(chains[1:], chain_ids[1:])]
    return nodes, edges, routes, stem_len * L


def _track_along_route(route: _Route, track_id, s_now, speed, cfg, appear_idx=0):
    """Constant-speed history ending at arc position s_now on the route."""
    h = cfg.history_steps
    states = np.zeros((h + 1, 5))
    observed = np.zeros(h + 1, dtype=bool)
    for k in range(h + 1):
        s_k = s_now - (h - k) * speed * cfg.step_dt
        if s_k < 0.0 or k < appear_idx:
            continue
        x, y, th = route.pose_at(s_k)
        yaw_rate = route.curvature_at(s_k) * speed
        states[k] = (x, y, speed, 0.0, yaw_rate)
        observed[k] = True
    return AgentTrack(track_id, states, observed, is_pedestrian=False)


def _pedestrian_track(rng: RngStream, route: _Route, track_id, cfg, appear_idx=0):
    """Slow straight-line walker placed a few meters off the lane."""
    h = cfg.history_steps
    s = float(rng.uniform((), 0.0, route.total_length))
    x, y, th = route.pose_at(s)
    side = 1.0 if rng.uniform(()) < 0.5 else -1.0
    offset = float(rng.uniform((), 3.0, 8.0))
    px = x - side * offset * np.sin(th)
    py = y + side * offset * np.cos(th)
    walk_heading = float(rng.uniform((), 0.0, 2.0 * np.pi))
    speed = float(rng.uniform((), 0.5, 2.0))
    dx, dy = speed * cfg.step_dt * np.cos(walk_heading), speed * cfg.step_dt * np.sin(walk_heading)
    states = np.zeros((h + 1, 5))
    observed = np.zeros(h + 1, dtype=bool)
    for k in range(h + 1):
        if k < appear_idx:
            continue
        states[k] = (px - (h - k) * dx, py - (h - k) * dy, speed, 0.0, 0.0)
        observed[k] = True
    return AgentTrack(track_id, states, observed, is_pedestrian=True)


def _place_target(rng: RngStream, cfg: GenConfig, route: _Route, junction_s: float | None):
    """Pick speed and arc position leaving room for history and future.

    Near junctions the position is tied to the future horizon so the rollout
    crosses the junction somewhere in its middle portion, which is what makes
    branch choice matter for prediction.
    """
    h_len = cfg.history_steps * cfg.step_dt
    f_len = cfg.future_steps * cfg.step_dt
    speed = float(rng.uniform((), *cfg.speed_range))
    total = route.total_length
    feasible_top = (total - 2.0 * _PLACEMENT_MARGIN) / (h_len + f_len)
    if speed > feasible_top:
        speed = feasible_top
    s_min = h_len * speed + _PLACEMENT_MARGIN
    if junction_s is None:
        s_max = total - f_len * speed - _PLACEMENT_MARGIN
        s0 = float(rng.uniform((), s_min, max(s_min, s_max)))
    else:
        u = float(rng.uniform((), 0.3, 0.7))
        s0 = max(junction_s - u * f_len * speed, s_min)
        s0 = min(s0, junction_s - _PLACEMENT_MARGIN)
    return s0, speed


def generate_scene(seed: int, cfg: GenConfig) -> Scene:
    """One global-frame scene with ground-truth future, deterministic in (seed, cfg)."""
    rng = RngStream(seed)
    topology = cfg.scene_topology
    if topology == "mixed":
        topology = TOPOLOGIES[int(rng.integers(0, len(TOPOLOGIES)))]
    nodes, edges, routes, stem_length = _build_layout(rng, cfg, topology)
    graph = LaneGraph(nodes, edges, cfg.corridor_width)
    junction_s = stem_length if topology in ("t_junction", "crossroads") else None

    s0, speed = _place_target(rng, cfg, routes[0], junction_s)
    target = _track_along_route(routes[0], 0, s0, speed, cfg)

    neighbors = []
    n_nbr = int(rng.integers(0, cfg.max_neighbors + 1))
    for i in range(n_nbr):
        appear_idx = 0
        if float(rng.uniform(())) < cfg.appear_mid_history_prob:
            appear_idx = int(rng.integers(1, cfg.history_steps + 1))
        route = routes[int(rng.integers(0, len(routes)))]
        if float(rng.uniform(())) < cfg.pedestrian_prob:
            neighbors.append(_pedestrian_track(rng, route, i + 1, cfg, appear_idx))
        else:
            v_n = float(rng.uniform((), *cfg.speed_range))
            s_n = float(rng.uniform((), 0.02, 0.98)) * route.total_length
            neighbors.append(_track_along_route(route, i + 1, s_n, v_n, cfg, appear_idx))

    scene = Scene(target, neighbors, graph, None, FRAME_GLOBAL,
                  meta={"seed": int(seed), "topology": topology})
    scene.future = simulate_future(scene, cfg, rng.derive("future").seed)
    return scene


def generate_dataset(seed: int, n_scenes: int, cfg: GenConfig) -> list[Scene]:
    root = RngStream(seed)
    return [generate_scene(root.derive("scene", i).seed, cfg) for i in range(n_scenes)]


# -- forward rollout ----------------------------------------------------------


def simulate_future(scene: Scene, cfg: GenConfig, seed: int) -> FuturePath:
    """Advance the target along the lane graph at its current speed.

    At branch points a successor is drawn uniformly from the seeded stream;
    each waypoint gets lateral Gaussian noise of std cfg.noise_std. If the
    graph runs out the walk continues along the last tangent.
    """
    rng = RngStream(seed)
    graph = scene.graph
    pos = scene.target.current_xy()
    speed = scene.target.current_speed()
    P = graph.poses_per_node

    if float(min_centerline_distance(pos[None, :], graph)[0]) > cfg.corridor_width:
        raise TargetOffGraph(
            f"target at ({pos[0]:.2f}, {pos[1]:.2f}) is beyond corridor width "
            f"{cfg.corridor_width} from every centerline")

    by_id = {n.node_id: n for n in graph.nodes}

    # project onto the nearest centerline segment (within-node or connector)
    best = (np.inf, "node", None, 0, 0.0)
    for node_ in graph.nodes:
        xy = node_.poses[:, :2]
        for i in range(P - 1):
            d, t_, _ = point_segment_distance(pos, xy[i], xy[i + 1])
            if d < best[0]:
                best = (d, "node", node_, i, t_)
    for frm, to in graph.edges:
        d, t_, _ = point_segment_distance(pos, by_id[frm].poses[-1, :2], by_id[to].poses[0, :2])
        if d < best[0]:
            best = (d, "conn", by_id[frm], to, t_)

    if best[1] == "node":
        _, _, node, seg_idx, t = best
        seg_a = node.poses[seg_idx, :2]
        seg_b = node.poses[seg_idx + 1, :2]
    else:
        # starting on a connector: the branch isn't committed yet, so a
        # multi-successor junction still gets its uniform draw here
        _, _, pred, _, t = best
        succs = graph.successors(pred.node_id)
        chosen = succs[0] if len(succs) == 1 else succs[int(rng.integers(0, len(succs)))]
        seg_idx = P - 1
        seg_a = pred.poses[-1, :2]
        seg_b = by_id[chosen].poses[0, :2]
        node = by_id[chosen]
    extrapolating = False

    def _next_segment():
        """Move the cursor to the segment after (node, seg_idx)."""
        nonlocal node, seg_idx, seg_a, seg_b, extrapolating
        if seg_idx < P - 2:
            seg_idx += 1
            seg_a = node.poses[seg_idx, :2]
            seg_b = node.poses[seg_idx + 1, :2]
            return
        if seg_idx == P - 2:
            succs = graph.successors(node.node_id)
            if not succs:
                extrapolating = True
                seg_a, seg_b = seg_b, seg_b + (seg_b - seg_a)
                return
            chosen = succs[0] if len(succs) == 1 else succs[int(rng.integers(0, len(succs)))]
            seg_idx = P - 1
            seg_a = node.poses[P - 1, :2]
            seg_b = by_id[chosen].poses[0, :2]
            node = by_id[chosen]
            return
        # connector consumed; continue inside the successor node
        seg_idx = 0
        seg_a = node.poses[0, :2]
        seg_b = node.poses[1, :2]

    points = np.zeros((cfg.future_steps, 2))
    for step in range(cfg.future_steps):
        remaining = speed * cfg.step_dt
        while True:
            seg_vec = seg_b - seg_a
            seg_len = float(np.hypot(*seg_vec))
            ahead = (1.0 - t) * seg_len
            if extrapolating or remaining < ahead:
                break
            remaining -= ahead
            t = 0.0
            _next_segment()
        seg_vec = seg_b - seg_a
        seg_len = float(np.hypot(*seg_vec))
        # while extrapolating t just keeps growing past 1 along the frozen tangent
        t += remaining / seg_len
        point = seg_a + t * seg_vec
        tangent = seg_vec / seg_len
        lateral = float(rng.normal(())) * cfg.noise_std
        points[step] = point + lateral * np.array([-tangent[1], tangent[0]])
    return FuturePath(points)


# -- branch bookkeeping (used by diversity checks and plots) -------------------


def branch_labels(graph: LaneGraph) -> dict[int, int]:
    """Map node_id -> branch index after the first fan-out junction.

    Nodes at or before the junction get -1; nodes reachable through the
    junction's k-th successor get label k. Graphs without a fan-out are all -1.
    """
    labels = {n.node_id: -1 for n in graph.nodes}
    junction = None
    for n in graph.nodes:
        if len(graph.successors(n.node_id)) >= 2:
            junction = n.node_id
            break
    if junction is None:
        return labels
    for b, start in enumerate(graph.successors(junction)):
        frontier = [start]
        while frontier:
            nid = frontier.pop()
            if labels[nid] != -1:
                continue
            labels[nid] = b
            frontier.extend(graph.successors(nid))
    return labels
