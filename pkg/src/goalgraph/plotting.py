"""Scene and prediction rendering to standalone SVG.

The drawing convention: drivable corridor as a light band under everything,
lane centerlines grey, target history black, ground truth green, predicted
modes red with the most likely mode cyan (stroke class "ml-mode"), and per
point uncertainty circles along the most likely mode whose radius is the
mean of the two Laplace scale values there.
"""

from __future__ import annotations

import numpy as np

from .scenes.types import Scene


class HorizonMismatch(ValueError):
    """Prediction horizon differs from the scene's ground-truth horizon."""


def _fmt(x: float) -> str:
    return f"{x:.2f}".rstrip("0").rstrip(".")


class _Canvas:
    """Maps scene coordinates (y up) onto a fixed-width SVG viewport (y down)."""

    def __init__(self, points: np.ndarray, width: float = 640.0, margin: float = 0.06):
        lo = points.min(axis=0)
        hi = points.max(axis=0)
        span = np.maximum(hi - lo, 1e-6)
        pad = margin * float(span.max())
        self.x0, self.y0 = float(lo[0] - pad), float(lo[1] - pad)
        self.x1, self.y1 = float(hi[0] + pad), float(hi[1] + pad)
        self.scale = width / (self.x1 - self.x0)
        self.width = width
        self.height = (self.y1 - self.y0) * self.scale

    def to_px(self, xy) -> tuple[float, float]:
        x, y = float(xy[0]), float(xy[1])
        return (x - self.x0) * self.scale, (self.y1 - y) * self.scale

    def polyline(self, pts, cls: str, stroke: str, width_px: float,
                 opacity: float | None = None) -> str:
        coords = " ".join("{},{}".format(*map(_fmt, self.to_px(p))) for p in pts)
        extra = f' stroke-opacity="{opacity}"' if opacity is not None else ""
        return (f'<polyline class="{cls}" points="{coords}" fill="none" '
                f'stroke="{stroke}" stroke-width="{_fmt(width_px)}" '
                f'stroke-linecap="round" stroke-linejoin="round"{extra}/>')

    def circle(self, center, radius: float, cls: str, stroke: str) -> str:
        cx, cy = self.to_px(center)
        r = max(radius * self.scale, 0.5)
        return (f'<circle class="{cls}" cx="{_fmt(cx)}" cy="{_fmt(cy)}" '
                f'r="{_fmt(r)}" fill="{stroke}" fill-opacity="0.12" '
                f'stroke="{stroke}" stroke-width="1"/>')


def _observed_xy(track) -> np.ndarray:
    return track.states[track.observed.astype(bool), :2]


def render_scene_svg(scene: Scene, pi: np.ndarray, mu: np.ndarray,
                     b: np.ndarray) -> str:
    """Compose the SVG document for one scene and one K-mode prediction."""
    pi = np.asarray(pi, dtype=float)
    mu = np.asarray(mu, dtype=float)
    b = np.asarray(b, dtype=float)
    if mu.ndim != 3 or mu.shape[2] != 2 or b.shape != mu.shape:
        raise ValueError(f"mu/b must be [K, f, 2], got {mu.shape} and {b.shape}")
    if scene.future is not None and mu.shape[1] != scene.future.points.shape[0]:
        raise HorizonMismatch(
            f"prediction horizon {mu.shape[1]} != scene horizon "
            f"{scene.future.points.shape[0]}")

    clouds = [node.poses[:, :2] for node in scene.graph.nodes]
    clouds.append(_observed_xy(scene.target))
    clouds.append(mu.reshape(-1, 2))
    if scene.future is not None:
        clouds.append(scene.future.points)
    canvas = _Canvas(np.concatenate(clouds, axis=0))

    band_px = max(scene.graph.corridor_width * canvas.scale, 1.0)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{_fmt(canvas.width)}" height="{_fmt(canvas.height)}" '
        f'viewBox="0 0 {_fmt(canvas.width)} {_fmt(canvas.height)}">',
        '<rect width="100%" height="100%" fill="white"/>',
    ]
    for node in scene.graph.nodes:
        parts.append(canvas.polyline(node.poses[:, :2], "corridor", "#e9ecef",
                                     band_px))
    for node in scene.graph.nodes:
        parts.append(canvas.polyline(node.poses[:, :2], "lane", "#9aa0a6", 1.5))

    history = _observed_xy(scene.target)
    if history.shape[0] >= 2:
        parts.append(canvas.polyline(history, "history", "#111111", 2.5))
    if scene.future is not None:
        gt = np.concatenate([history[-1:], scene.future.points], axis=0)
        parts.append(canvas.polyline(gt, "gt", "#1e8f3e", 2.5))

    ml = int(np.argmax(pi))
    start = history[-1:]
    for k in range(mu.shape[0]):
        if k == ml:
            continue
        pts = np.concatenate([start, mu[k]], axis=0)
        parts.append(canvas.polyline(pts, "mode", "#d23a2f", 1.5, opacity=0.75))
    for t in range(mu.shape[1]):
        radius = float(b[ml, t].mean())
        parts.append(canvas.circle(mu[ml, t], radius, "uncertainty", "#00b5c8"))
    parts.append(canvas.polyline(np.concatenate([start, mu[ml]], axis=0),
                                 "ml-mode", "#00b5c8", 2.5))
    parts.append("</svg>")
    return "\n".join(parts)
