"""Flat dotted-key configuration (``snake.alpha``, ``segmenter.polarity``...).

The same names are used in JSON config files and in ``--set key=value``
overrides on the command line.
"""

from __future__ import annotations

import json
from dataclasses import fields
from pathlib import Path

from .errors import ConfigError
from .pipeline import AlignmentSettings, PipelineConfig
from .segment import SegmenterSettings
from .snake import SnakeParams

_SECTIONS = {"snake": SnakeParams, "segmenter": SegmenterSettings, "alignment": AlignmentSettings}

DEFAULTS = {}
for _name, _cls in _SECTIONS.items():
    for _f in fields(_cls):
        DEFAULTS[f"{_name}.{_f.name}"] = _f.default
DEFAULTS["energy.sigma"] = PipelineConfig.__dataclass_fields__["sigma"].default
DEFAULTS["compare.margin"] = 2
DEFAULTS["io.out"] = "."


def _coerce(key, value):
    default = DEFAULTS[key]
    if isinstance(value, str) and not isinstance(default, str):
        try:
            value = json.loads(value)
        except json.JSONDecodeError:
            raise ConfigError(f"{key}: cannot parse {value!r}") from None
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{key}: expected true/false, got {value!r}")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
            raise ConfigError(f"{key}: expected an integer, got {value!r}")
        return int(value)
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{key}: expected a number, got {value!r}")
        return float(value)
    if not isinstance(value, str):
        raise ConfigError(f"{key}: expected a string, got {value!r}")
    return value


def merge(base: dict, updates: dict, source: str) -> dict:
    out = dict(base)
    for key, value in updates.items():
        if key not in DEFAULTS:
            raise ConfigError(f"{source}: unknown key {key!r}")
        out[key] = _coerce(key, value)
    return out


def load_config_file(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: config must be a flat JSON object")
    return data


def parse_overrides(items) -> dict:
    out = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        out[key.strip()] = value.strip()
    return out


def resolve(config_path=None, overrides=()) -> dict:
    """Defaults, then the config file, then ``--set`` overrides."""
    flat = dict(DEFAULTS)
    if config_path is not None:
        flat = merge(flat, load_config_file(config_path), str(config_path))
    return merge(flat, parse_overrides(overrides), "--set")


def pipeline_config(flat: dict) -> PipelineConfig:
    """Build and validate a PipelineConfig from a resolved flat dict."""
    try:
        sections = {name: cls(**{f.name: flat[f"{name}.{f.name}"] for f in fields(cls)})
                    for name, cls in _SECTIONS.items()}
        cfg = PipelineConfig(sigma=flat["energy.sigma"], **sections)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if flat["compare.margin"] < 0:
        raise ConfigError("compare.margin must be >= 0")
    return cfg
