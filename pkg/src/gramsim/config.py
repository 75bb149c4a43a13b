"""Scenario configuration and the plain-text ``key=value`` config format."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Dict, Mapping, Optional, Union


class ConfigError(ValueError):
    pass


PROTOCOLS = ("gram", "ndn")


@dataclass(frozen=True)
class ScenarioConfig:
    protocol: str = "gram"
    nodes: int = 200
    side: float = 100.0
    radius: float = 15.0
    link_delay_ms: float = 15.0
    groups: int = 20
    group_size: int = 20
    rate: float = 160.0
    cache_capacity: int = 1000
    duration_s: float = 10.0
    warmup_s: float = 1.0
    sample_period_ms: float = 100.0
    attach_delay_ms: float = 0.0
    mart_timeout_s: float = 10.0
    interest_lifetime_s: float = 4.0
    payload_size: int = 4096
    seed: int = 1
    seed_retries: int = 100
    topology_file: Optional[str] = None
    trace: bool = False

    def __post_init__(self):
        if self.protocol not in PROTOCOLS:
            raise ConfigError(f"protocol must be one of {PROTOCOLS}, got {self.protocol!r}")
        for name in ("nodes", "groups", "group_size", "payload_size"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        for name in ("side", "radius", "rate", "sample_period_ms", "mart_timeout_s",
                     "interest_lifetime_s"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be > 0")
        for name in ("link_delay_ms", "attach_delay_ms", "duration_s", "warmup_s",
                     "cache_capacity", "seed_retries"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")
        if self.topology_file is None and self.group_size >= self.nodes:
            raise ConfigError("group_size must be smaller than the node count")

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            if value is None:
                continue
            lines.append(f"{f.name}={_format(value)}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_mapping(cls, values: Mapping[str, object]) -> "ScenarioConfig":
        known = {f.name: f for f in fields(cls)}
        kwargs = {}
        for key, raw in values.items():
            key = key.strip().replace("-", "_")
            if key not in known:
                raise ConfigError(f"unknown config key {key!r}")
            kwargs[key] = coerce(known[key], raw)
        return cls(**kwargs)


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def coerce(f: dataclasses.Field, raw):
    if not isinstance(raw, str):
        return raw
    kind = f.type if isinstance(f.type, str) else getattr(f.type, "__name__", str(f.type))
    text = raw.strip()
    try:
        if kind == "bool":
            if text.lower() in ("1", "true", "yes", "on"):
                return True
            if text.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if kind == "int":
            return int(text)
        if kind == "float":
            return float(text)
        if kind == "Optional[str]":
            return text or None
        return text
    except ValueError:
        raise ConfigError(f"bad value {raw!r} for {f.name}") from None


def parse_config_text(text: str) -> Dict[str, str]:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        values[key.strip()] = value.strip()
    return values


def load_config(path: Union[str, Path], overrides: Optional[Mapping[str, object]] = None
                ) -> ScenarioConfig:
    values: Dict[str, object] = dict(parse_config_text(Path(path).read_text()))
    values.update(overrides or {})
    return ScenarioConfig.from_mapping(values)
