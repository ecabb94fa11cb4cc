"""JSON config files with gen / model / train sections.

Every key is optional and falls back to the dataclass default; any key that
does not name a field is a hard error, so typos cannot silently revert a
setting to its default.
"""

from __future__ import annotations

import dataclasses
import json

from .model.config import ModelConfig
from .scenes.types import GenConfig
from .training.loop import TrainConfig


class ConfigError(ValueError):
    """Bad config file; the message names the offending key."""


_SECTIONS = {"gen": GenConfig, "model": ModelConfig, "train": TrainConfig}


@dataclasses.dataclass
class CliConfig:
    gen: GenConfig
    model: ModelConfig
    train: TrainConfig


def _build_section(section: str, cls, values: dict):
    if not isinstance(values, dict):
        raise ConfigError(f"section {section!r} must be an object")
    fields = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in values.items():
        if key not in fields:
            raise ConfigError(f"unknown key {section}.{key}")
        default = fields[key].default
        if isinstance(default, tuple) and isinstance(value, list):
            value = tuple(value)
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"section {section!r}: {e}") from e


def parse_config(text: str) -> CliConfig:
    try:
        obj = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as e:
        raise ConfigError(f"not valid JSON: {e}") from e
    if not isinstance(obj, dict):
        raise ConfigError("top level must be an object")
    for key in obj:
        if key not in _SECTIONS:
            raise ConfigError(f"unknown section {key}")
    built = {name: _build_section(name, cls, obj.get(name, {}))
             for name, cls in _SECTIONS.items()}
    return CliConfig(**built)


def load_config(path: str | None) -> CliConfig:
    """Read a config file; None yields all defaults."""
    if path is None:
        return parse_config("")
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_config(fh.read())
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
