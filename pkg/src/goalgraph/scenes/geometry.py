"""Planar geometry helpers shared by the generator, transforms, and metrics."""

from __future__ import annotations

import numpy as np


def wrap_angle(a):
    """Wrap to (-pi, pi]."""
    return np.arctan2(np.sin(a), np.cos(a))


def rotation_matrix(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s], [s, c]])


def advance_pose(x: float, y: float, theta: float, kappa: float, ds: float):
    """Advance (x, y, theta) by arc length ds along constant curvature kappa.

    Exact for circular arcs (and lines at kappa = 0), so repeated calls stay
    on the true centerline with no integration drift.
    """
    if kappa == 0.0:
        return x + ds * np.cos(theta), y + ds * np.sin(theta), theta
    theta2 = theta + kappa * ds
    x2 = x + (np.sin(theta2) - np.sin(theta)) / kappa
    y2 = y - (np.cos(theta2) - np.cos(theta)) / kappa
    return x2, y2, theta2


def point_segment_distance(p: np.ndarray, a: np.ndarray, b: np.ndarray):
    """Distance from p to segment ab; returns (distance, t, closest_point)."""
    ab = b - a
    denom = float(ab @ ab)
    if denom == 0.0:
        return float(np.hypot(*(p - a))), 0.0, a.copy()
    t = float(np.clip((p - a) @ ab / denom, 0.0, 1.0))
    proj = a + t * ab
    return float(np.hypot(*(p - proj))), t, proj


def points_to_segments_distance(points: np.ndarray, seg_a: np.ndarray,
                                seg_b: np.ndarray) -> np.ndarray:
    """Min distance from each of [n, 2] points to any of the [m, 2] segments."""
    ab = seg_b - seg_a  # [m, 2]
    denom = (ab * ab).sum(axis=1)  # [m]
    denom_safe = np.where(denom == 0.0, 1.0, denom)
    ap = points[:, None, :] - seg_a[None, :, :]  # [n, m, 2]
    t = np.clip((ap * ab[None, :, :]).sum(axis=2) / denom_safe[None, :], 0.0, 1.0)
    t = np.where(denom[None, :] == 0.0, 0.0, t)
    proj = seg_a[None, :, :] + t[:, :, None] * ab[None, :, :]
    d = np.linalg.norm(points[:, None, :] - proj, axis=2)  # [n, m]
    return d.min(axis=1)


def project_to_polyline(p: np.ndarray, pts: np.ndarray):
    """Closest point on an open polyline; returns (distance, seg_idx, t)."""
    best = (np.inf, 0, 0.0)
    for i in range(len(pts) - 1):
        d, t, _ = point_segment_distance(p, pts[i], pts[i + 1])
        if d < best[0]:
            best = (d, i, t)
    return best


def centerline_segments(graph) -> tuple[np.ndarray, np.ndarray]:
    """All centerline segments of a lane graph as ([m, 2], [m, 2]) endpoints.

    Covers pose-to-pose runs inside each node and the connecting segment from
    a node's last pose to each successor's first pose, so corridor-distance
    queries see one continuous network.
    """
    a_list, b_list = [], []
    for node in graph.nodes:
        xy = node.poses[:, :2]
        a_list.append(xy[:-1])
        b_list.append(xy[1:])
    by_id = {n.node_id: n for n in graph.nodes}
    for frm, to in graph.edges:
        a_list.append(by_id[frm].poses[-1:, :2])
        b_list.append(by_id[to].poses[:1, :2])
    return np.concatenate(a_list, axis=0), np.concatenate(b_list, axis=0)


def min_centerline_distance(points: np.ndarray, graph) -> np.ndarray:
    """Distance from each [n, 2] point to the nearest lane centerline."""
    seg_a, seg_b = centerline_segments(graph)
    return points_to_segments_distance(np.atleast_2d(points), seg_a, seg_b)
