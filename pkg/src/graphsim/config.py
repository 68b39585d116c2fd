"""Training configuration: nested JSON with ``--key=value`` overrides."""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field
from typing import Any

from .embedding import ModelConfig
from .ged import DataConfig
from .losses import LossConfig

MODEL_KINDS = ("embedding", "matching")
OUTPUT_DIR_ENV = "GRAPHSIM_OUTPUT_DIR"


@dataclass(frozen=True)
class TrainConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    loss: LossConfig = field(default_factory=LossConfig)
    data: DataConfig = field(default_factory=DataConfig)
    model_kind: str = "matching"
    batch_size: int = 20
    num_training_steps: int = 100_000
    eval_every: int = 2_000
    eval_size: int = 1000
    learning_rate: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        if self.model_kind not in MODEL_KINDS:
            raise ValueError(f"model_kind must be one of {MODEL_KINDS}, got {self.model_kind!r}")
        for name in ("batch_size", "num_training_steps", "eval_every", "eval_size"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")

    def to_dict(self) -> dict:
        out = {}
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            out[f.name] = value.to_dict() if hasattr(value, "to_dict") else (
                dataclasses.asdict(value) if dataclasses.is_dataclass(value) else value)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        d = dict(d)
        unknown = set(d) - {f.name for f in dataclasses.fields(cls)}
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        sections = {"model": ModelConfig, "loss": LossConfig, "data": DataConfig}
        for key, sub in sections.items():
            if key in d:
                values = dict(d[key])
                names = {f.name for f in dataclasses.fields(sub)}
                bad = set(values) - names
                if bad:
                    raise ValueError(f"unknown keys in {key!r}: {sorted(bad)}")
                for k, v in values.items():
                    if isinstance(v, list):
                        values[k] = tuple(v)
                d[key] = sub(**values)
        return cls(**d)


def _parse_scalar(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(raw: dict, overrides: list[str]) -> dict:
    """Apply ``key=value`` strings to a nested config dict.

    Keys are either dotted paths (``model.node_state_dim``) or a bare field
    name, which must then be unambiguous across the top level and sections.
    """
    raw = json.loads(json.dumps(raw))
    defaults = TrainConfig().to_dict()
    for item in overrides:
        if "=" not in item:
            raise ValueError(f"override {item!r} is not of the form key=value")
        key, text = item.split("=", 1)
        key = key.lstrip("-").replace("-", "_")
        value = _parse_scalar(text)
        if "." in key:
            section, name = key.split(".", 1)
            if section not in defaults or not isinstance(defaults[section], dict) \
                    or name not in defaults[section]:
                raise ValueError(f"unknown config key {key!r}")
            raw.setdefault(section, {})[name] = value
            continue
        homes = [s for s, v in defaults.items() if isinstance(v, dict) and key in v]
        if key in defaults and not isinstance(defaults[key], dict):
            homes.append(None)
        if not homes:
            raise ValueError(f"unknown config key {key!r}")
        if len(homes) > 1:
            raise ValueError(f"config key {key!r} is ambiguous; use a dotted path")
        if homes[0] is None:
            raw[key] = value
        else:
            raw.setdefault(homes[0], {})[key] = value
    return raw


def load_config(path: str | os.PathLike | None, overrides: list[str] | None = None) -> TrainConfig:
    raw: dict = {}
    if path is not None:
        with open(path) as f:
            raw = json.load(f)
    return TrainConfig.from_dict(apply_overrides(raw, overrides or []))


def default_output_dir(name: str) -> str:
    return os.path.join(os.environ.get(OUTPUT_DIR_ENV, "runs"), name)
