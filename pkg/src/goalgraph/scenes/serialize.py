"""One-scene-per-line dataset files.

Records are JSON objects; floats go through Python's shortest-repr formatting,
which round-trips IEEE doubles bit-exactly. parse(serialize(scene)) == scene.
"""

from __future__ import annotations

import json

import numpy as np

from .types import AgentTrack, FuturePath, LaneGraph, LaneNode, Scene


class ParseError(ValueError):
    """Malformed scene record; the message names the offending field path."""


def _track_to_obj(track: AgentTrack) -> dict:
    return {
        "id": int(track.track_id),
        "is_pedestrian": bool(track.is_pedestrian),
        "states": track.states.tolist(),
        "observed": track.observed.tolist(),
    }


def serialize_scene(scene: Scene) -> str:
    obj = {
        "target": _track_to_obj(scene.target),
        "neighbors": [_track_to_obj(n) for n in scene.neighbors],
        "graph": {
            "corridor_width": float(scene.graph.corridor_width),
            "nodes": [{"id": int(n.node_id), "poses": n.poses.tolist()}
                      for n in scene.graph.nodes],
            "edges": [[int(a), int(b)] for a, b in scene.graph.edges],
        },
        "future": None if scene.future is None else scene.future.points.tolist(),
        "frame": scene.frame,
        "meta": scene.meta,
    }
    return json.dumps(obj, separators=(",", ":"))


def _need(obj: dict, key: str, path: str):
    if not isinstance(obj, dict):
        raise ParseError(f"{path}: expected an object")
    if key not in obj:
        raise ParseError(f"{path}.{key}: missing" if path else f"{key}: missing")
    return obj[key]


def _parse_track(obj: dict, path: str) -> AgentTrack:
    try:
        states = np.asarray(_need(obj, "states", path), dtype=np.float64)
        observed = np.asarray(_need(obj, "observed", path), dtype=bool)
        return AgentTrack(
            track_id=int(_need(obj, "id", path)),
            states=states,
            observed=observed,
            is_pedestrian=bool(_need(obj, "is_pedestrian", path)),
        )
    except (TypeError, ValueError) as e:
        if isinstance(e, ParseError):
            raise
        raise ParseError(f"{path}: {e}") from e


def parse_scene(text: str) -> Scene:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"not valid JSON: {e}") from e
    if not isinstance(obj, dict):
        raise ParseError("record is not an object")

    target = _parse_track(_need(obj, "target", ""), "target")
    neighbors_raw = _need(obj, "neighbors", "")
    if not isinstance(neighbors_raw, list):
        raise ParseError("neighbors: expected a list")
    neighbors = [_parse_track(t, f"neighbors[{i}]") for i, t in enumerate(neighbors_raw)]

    graph_obj = _need(obj, "graph", "")
    nodes_raw = _need(graph_obj, "nodes", "graph")
    if not isinstance(nodes_raw, list):
        raise ParseError("graph.nodes: expected a list")
    try:
        nodes = [LaneNode(int(_need(n, "id", f"graph.nodes[{i}]")),
                          np.asarray(_need(n, "poses", f"graph.nodes[{i}]"), dtype=np.float64))
                 for i, n in enumerate(nodes_raw)]
        edges = [(int(a), int(b)) for a, b in _need(graph_obj, "edges", "graph")]
        graph = LaneGraph(nodes, edges, float(_need(graph_obj, "corridor_width", "graph")))
    except ParseError:
        raise
    except (TypeError, ValueError) as e:
        raise ParseError(f"graph: {e}") from e

    future_raw = _need(obj, "future", "")
    future = None
    if future_raw is not None:
        try:
            future = FuturePath(np.asarray(future_raw, dtype=np.float64))
        except (TypeError, ValueError) as e:
            raise ParseError(f"future: {e}") from e

    frame = _need(obj, "frame", "")
    meta = _need(obj, "meta", "")
    if not isinstance(meta, dict):
        raise ParseError("meta: expected an object")
    try:
        return Scene(target, neighbors, graph, future, frame, meta)
    except ValueError as e:
        raise ParseError(str(e)) from e


def save_dataset(path, scenes) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for scene in scenes:
            fh.write(serialize_scene(scene))
            fh.write("\n")


def load_dataset(path) -> list[Scene]:
    scenes = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                scenes.append(parse_scene(line))
            except ParseError as e:
                raise ParseError(f"line {lineno}: {e}") from e
    return scenes
