"""Checkpoint file format: JSON text header, blank line, fp32 payload.

The header carries the format version, the model configuration, optimizer
metadata, the training seed state, and a manifest of (name, shape, offset)
for every tensor in the payload. The payload is little-endian float32 bytes
per manifest entry, concatenated in manifest order, so a round trip through
disk is bit-exact for float32 training state.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from ..model.config import ModelConfig
from ..model.network import TrajectoryModel
from .adam import OptimizerState, init_optimizer

FORMAT_VERSION = 1


class FormatError(ValueError):
    """Checkpoint file malformed; the message names the offending section."""


class VersionMismatch(FormatError):
    """Checkpoint written by an incompatible format version."""


@dataclass
class Checkpoint:
    model_config: ModelConfig
    params: dict[str, np.ndarray]
    optimizer: OptimizerState
    train_seed_state: dict
    format_version: int = FORMAT_VERSION


def make_checkpoint(model: TrajectoryModel, opt: OptimizerState,
                    train_seed_state: dict) -> Checkpoint:
    params = {name: model.store[name].values.copy() for name in model.store.names()}
    return Checkpoint(model.cfg, params, opt, dict(train_seed_state))


def _entries(ckpt: Checkpoint):
    for name, arr in ckpt.params.items():
        yield f"param/{name}", arr
    for name, arr in ckpt.optimizer.m.items():
        yield f"opt.m/{name}", arr
    for name, arr in ckpt.optimizer.v.items():
        yield f"opt.v/{name}", arr


def save_checkpoint(ckpt: Checkpoint, path: str) -> None:
    manifest = []
    blobs = []
    offset = 0
    for key, arr in _entries(ckpt):
        blob = np.ascontiguousarray(arr, dtype="<f4").tobytes()
        manifest.append({"name": key, "shape": list(arr.shape), "offset": offset})
        blobs.append(blob)
        offset += len(blob)
    header = {
        "format_version": ckpt.format_version,
        "model_config": ckpt.model_config.to_dict(),
        "optimizer": {"step": ckpt.optimizer.step},
        "train_seed_state": ckpt.train_seed_state,
        "manifest": manifest,
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header).encode("utf-8"))
        fh.write(b"\n\n")
        for blob in blobs:
            fh.write(blob)


def load_checkpoint(path: str) -> Checkpoint:
    with open(path, "rb") as fh:
        raw = fh.read()
    sep = raw.find(b"\n\n")
    if sep < 0:
        raise FormatError("header: missing blank-line terminator")
    try:
        header = json.loads(raw[:sep].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise FormatError(f"header: {e}") from e
    version = header.get("format_version")
    if version != FORMAT_VERSION:
        raise VersionMismatch(f"format_version {version!r}, expected {FORMAT_VERSION}")
    for key in ("model_config", "optimizer", "train_seed_state", "manifest"):
        if key not in header:
            raise FormatError(f"header: missing {key!r}")
    try:
        cfg = ModelConfig.from_dict(header["model_config"])
    except (TypeError, ValueError) as e:
        raise FormatError(f"model_config: {e}") from e

    payload = raw[sep + 2:]
    tensors = {}
    end = 0
    for i, entry in enumerate(header["manifest"]):
        try:
            name, shape, offset = entry["name"], entry["shape"], entry["offset"]
        except (TypeError, KeyError) as e:
            raise FormatError(f"manifest[{i}]: missing {e}") from e
        count = int(np.prod(shape)) if shape else 1
        end = offset + 4 * count
        if end > len(payload):
            raise FormatError(f"payload: truncated at manifest entry {name!r}")
        arr = np.frombuffer(payload, dtype="<f4", count=count, offset=offset)
        tensors[name] = arr.reshape(shape).astype(np.float32)

    params = {k[len("param/"):]: a for k, a in tensors.items() if k.startswith("param/")}
    opt = OptimizerState(
        m={k[len("opt.m/"):]: a for k, a in tensors.items() if k.startswith("opt.m/")},
        v={k[len("opt.v/"):]: a for k, a in tensors.items() if k.startswith("opt.v/")},
        step=int(header["optimizer"].get("step", 0)),
    )
    return Checkpoint(cfg, params, opt, dict(header["train_seed_state"]), int(version))


def restore_model(ckpt: Checkpoint) -> tuple[TrajectoryModel, OptimizerState]:
    """Rebuild the model this checkpoint describes and load its tensors.

    Names and shapes must match the freshly constructed model exactly.
    """
    seed = int(ckpt.train_seed_state.get("seed", 0))
    model = TrajectoryModel(ckpt.model_config, seed=seed, dtype=np.float32)
    for name in model.store.names():
        if name not in ckpt.params:
            raise FormatError(f"parameter {name!r}: missing from checkpoint")
        arr = ckpt.params[name]
        if tuple(arr.shape) != model.store[name].values.shape:
            raise FormatError(
                f"parameter {name!r}: shape {tuple(arr.shape)} != "
                f"{model.store[name].values.shape}")
        model.store[name].values[...] = arr
    extra = set(ckpt.params) - set(model.store.names())
    if extra:
        raise FormatError(f"parameter {sorted(extra)[0]!r}: not in model")

    opt = init_optimizer(model.store.trainable())
    opt.step = ckpt.optimizer.step
    for name in opt.m:
        if name in ckpt.optimizer.m:
            opt.m[name][...] = ckpt.optimizer.m[name]
            opt.v[name][...] = ckpt.optimizer.v[name]
    return model, opt
