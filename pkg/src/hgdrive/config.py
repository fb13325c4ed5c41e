"""Run configuration: dataclass sections, INI parsing, strict validation.

Unknown sections or keys are errors; values round-trip exactly through
serialize/parse.
"""

from __future__ import annotations

import configparser
import dataclasses
import io
from dataclasses import dataclass, field

from .drl import DrlConfig
from .expert import ExpertTrainConfig
from .geometry import Approach
from .graph import GraphScales
from .nn import NetConfig
from .world import ScenarioConfig


@dataclass(frozen=True)
class PathsConfig:
    dataset: str = "out/demonstrations.ldjson"
    expert_checkpoint: str = "out/expert.json"
    checkpoint_dir: str = "out/checkpoints"
    metrics: str = "out/metrics.csv"


@dataclass
class RunConfig:
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    network: NetConfig = field(default_factory=NetConfig)
    scales: GraphScales = field(default_factory=GraphScales)
    expert: ExpertTrainConfig = field(default_factory=ExpertTrainConfig)
    drl: DrlConfig = field(default_factory=DrlConfig)
    paths: PathsConfig = field(default_factory=PathsConfig)

    def validate(self) -> "RunConfig":
        drl, expert = self.drl, self.expert
        if not 0.0 < drl.gamma <= 1.0:
            raise ValueError(f"gamma must be in (0, 1], got {drl.gamma}")
        for name, value in (("drl learning_rate", drl.learning_rate), ("expert learning_rate", expert.learning_rate)):
            if value <= 0:
                raise ValueError(f"{name} must be positive, got {value}")
        if not 0.0 <= drl.epsilon_final <= drl.epsilon_initial <= 1.0:
            raise ValueError("need 0 <= epsilon_final <= epsilon_initial <= 1")
        for name, value in (
            ("episodes", drl.episodes), ("test_episodes", drl.test_episodes), ("max_steps", drl.max_steps),
            ("explore_steps", drl.explore_steps), ("buffer_capacity", drl.buffer_capacity),
            ("batch_size", drl.batch_size), ("update_interval", drl.update_interval),
            ("target_sync_interval", drl.target_sync_interval),
            ("epochs", expert.epochs), ("batch_size", expert.batch_size),
            ("max_batches_per_epoch", expert.max_batches_per_epoch),
        ):
            if value <= 0:
                raise ValueError(f"{name} must be positive, got {value}")
        counts = (self.scenario.n_aggressive, self.scenario.n_normal, self.scenario.n_conservative)
        if any(c < 0 for c in counts):
            raise ValueError("style counts must be non-negative")
        if any(c > self.network.slots_per_style for c in counts):
            raise ValueError("style counts exceed the per-style slot count")
        return self


_SECTIONS = {
    "scenario": (ScenarioConfig, "scenario"),
    "network": (NetConfig, "network"),
    "scales": (GraphScales, "scales"),
    "expert": (ExpertTrainConfig, "expert"),
    "drl": (DrlConfig, "drl"),
    "paths": (PathsConfig, "paths"),
}


def _coerce(raw: str, target_type):
    if target_type is bool:
        if raw.lower() in ("true", "1", "yes"):
            return True
        if raw.lower() in ("false", "0", "no"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if target_type is Approach:
        return Approach[raw.upper()]
    return target_type(raw)


def _field_value(cls, name: str, raw: str):
    fields = {f.name: f for f in dataclasses.fields(cls)}
    if name not in fields:
        raise ValueError(f"unknown key {name!r} for section [{cls.__name__}]")
    f = fields[name]
    if f.default is not dataclasses.MISSING:
        default = f.default
    elif f.default_factory is not dataclasses.MISSING:  # type: ignore[misc]
        default = f.default_factory()  # type: ignore[misc]
    else:
        default = None
    if default is None:
        # the only None-default fields are optional floats (e.g. beta_override)
        return None if raw.lower() in ("none", "") else float(raw)
    return _coerce(raw, type(default))


def parse_config(text: str) -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    parser.read_string(text)
    kwargs = {}
    for section in parser.sections():
        if section not in _SECTIONS:
            raise ValueError(f"unknown config section [{section}]")
        cls, attr = _SECTIONS[section]
        values = {}
        for key, raw in parser.items(section):
            values[key] = _field_value(cls, key, raw)
        kwargs[attr] = cls(**values)
    return RunConfig(**kwargs).validate()


def load_config(path: str | None) -> RunConfig:
    if path is None:
        return RunConfig().validate()
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def serialize_config(config: RunConfig) -> str:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    for section, (cls, attr) in _SECTIONS.items():
        obj = getattr(config, attr)
        parser[section] = {}
        for f in dataclasses.fields(cls):
            value = getattr(obj, f.name)
            if isinstance(value, Approach):
                value = value.name
            parser[section][f.name] = "none" if value is None else repr(value) if isinstance(value, float) else str(value)
    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()
