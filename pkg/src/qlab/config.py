"""Experiment configuration: TOML files with a JSON fallback."""

from __future__ import annotations

import json
import os
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - exercised on 3.10 only
    import tomli as tomllib

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "thread_cap"]


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    seed: int = 0
    count: int = 10
    K: int = 1
    N: int = 4
    dim: int = 1
    space_p: float = 2.0
    form: str = "scalar"
    q: list = field(default_factory=lambda: [2.0, 2.0, 2.0])
    alpha: list = field(default_factory=lambda: [1 / 3, 1 / 3, 1 / 3])
    beta: list = field(default_factory=lambda: [1 / 3, 1 / 3, 1 / 3])
    max_quartiles: int = 100
    eps: float = 0.01

    def validate(self) -> "ExperimentConfig":
        if self.K < 0 or self.N < 2:
            raise ConfigError("grid needs K >= 0 and N >= 2")
        if self.K + self.N > 10:
            raise ConfigError("grid too large: K + N must stay <= 10")
        if len(self.q) != 3 or len(self.alpha) != 3 or len(self.beta) != 3:
            raise ConfigError("q, alpha and beta are triples")
        if self.form not in ("scalar", "duality"):
            raise ConfigError(f"unknown form {self.form!r}")
        if self.form == "scalar" and self.dim != 1:
            raise ConfigError("the scalar form needs dim = 1")
        if self.count < 0:
            raise ConfigError("count must be nonnegative")
        return self

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_mapping(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            cfg = cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc
        cfg.q = [float(x) for x in cfg.q]
        cfg.alpha = [float(x) for x in cfg.alpha]
        cfg.beta = [float(x) for x in cfg.beta]
        return cfg.validate()


def load_config(path: Optional[str]) -> ExperimentConfig:
    if path is None:
        return ExperimentConfig().validate()
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path} is neither TOML nor JSON") from exc
    data = data.get("experiment", data)
    return ExperimentConfig.from_mapping(data)


def thread_cap() -> int:
    raw = os.environ.get("QLAB_THREADS")
    if raw is None:
        return os.cpu_count() or 1
    try:
        return max(1, int(raw))
    except ValueError as exc:
        raise ConfigError(f"QLAB_THREADS={raw!r} is not an integer") from exc
