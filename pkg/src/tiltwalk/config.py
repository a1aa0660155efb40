"""Run configuration and result manifests for the command-line front end."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import platform
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .graphs import GraphError, parse_model
from .weights import parse_weight

SUBCOMMANDS = ("enumerate", "analyze", "closed-form", "sample", "verify")
MANIFEST_VERSION = 1
CSV_SCHEMAS = {"enumerate": 1, "brackets": 1, "closed-form": 1, "sample": 1}


class ConfigError(ValueError):
    """Invalid run configuration; the CLI maps it to exit status 2."""


@dataclass
class RunConfig:
    model: str | None = None
    weight: str = "saw"
    n_max: int = 12
    lambdas: list[float] = field(default_factory=lambda: [0.0, 0.5])
    zs: list[float] = field(default_factory=list)
    tol: float = 1e-3
    seed: int = 0
    samples: int = 1000
    n: int | None = None
    method: str = "auto"
    coeffs: int | None = None
    workers: int = 1
    cache_dir: str | None = None
    no_cache: bool = False
    out_dir: str = "tiltwalk-out"

    @classmethod
    def keys(cls) -> set[str]:
        return {f.name for f in dataclasses.fields(cls)}

    @classmethod
    def from_mapping(cls, data) -> RunConfig:
        if not isinstance(data, dict):
            raise ConfigError("config must be a mapping of keys to values")
        unknown = set(data) - cls.keys()
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        return cls(**data)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def validate(self, subcommand: str) -> RunConfig:
        """Check every field before any computation; returns ``self``."""
        if subcommand not in SUBCOMMANDS:
            raise ConfigError(f"unknown subcommand {subcommand!r}")
        if not self.model:
            raise ConfigError("a model descriptor is required")
        try:
            model = parse_model(self.model)
            parse_weight(self.weight)
        except (GraphError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        if subcommand == "closed-form" and type(model).__name__ not in ("EndFixedTree", "OrientedTree112"):
            raise ConfigError("closed forms exist for end-fixed-tree and oriented-112 only")
        for name in ("n_max", "seed", "samples", "workers"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, int):
                raise ConfigError(f"{name} must be an integer")
        for name in ("n", "coeffs"):
            v = getattr(self, name)
            if v is not None and (isinstance(v, bool) or not isinstance(v, int) or v < 0):
                raise ConfigError(f"{name} must be a non-negative integer")
        if not 0 <= self.n_max <= 5000:
            raise ConfigError("n_max must be in [0, 5000]")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        if self.samples < 0:
            raise ConfigError("samples must be non-negative")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        for name in ("lambdas", "zs"):
            vals = getattr(self, name)
            if not isinstance(vals, list) or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in vals):
                raise ConfigError(f"{name} must be a list of numbers")
            if not all(math.isfinite(x) for x in vals):
                raise ConfigError(f"{name} must be finite")
            setattr(self, name, [float(x) for x in vals])
        if any(z <= 0 for z in self.zs):
            raise ConfigError("z values must be positive")
        if not (isinstance(self.tol, (int, float)) and 0 < self.tol < 1):
            raise ConfigError("tol must be in (0, 1)")
        if self.method not in ("auto", "exact", "rosenbluth"):
            raise ConfigError("method must be auto, exact or rosenbluth")
        if subcommand == "sample" and not self.lambdas:
            raise ConfigError("sample needs a lambda")
        if subcommand == "analyze" and not self.lambdas:
            raise ConfigError("analyze needs at least one lambda")
        if not isinstance(self.out_dir, str) or not self.out_dir:
            raise ConfigError("out_dir must be a path")
        return self


def load_config_file(path: str | Path) -> dict:
    """Read a YAML or JSON config; a result manifest is accepted and its ``config`` echo is used."""
    p = Path(path)
    try:
        data = yaml.safe_load(p.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config {p}: {exc}") from exc
    if data is None or data == {}:
        raise ConfigError(f"config {p} is empty")
    if isinstance(data, dict) and "manifest_version" in data:
        data = data.get("config")
    if not isinstance(data, dict):
        raise ConfigError(f"config {p} must be a mapping")
    return data


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        x = float(x)
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


@dataclass
class ResultManifest:
    subcommand: str
    config: dict
    tool_version: str
    inputs: dict[str, str] = field(default_factory=dict)
    outputs: dict[str, str] = field(default_factory=dict)
    timings: dict[str, float] = field(default_factory=dict)
    verdicts: dict = field(default_factory=dict)
    passed: bool = True
    environment: dict = field(default_factory=dict)

    def add_output(self, path: Path) -> None:
        self.outputs[path.name] = sha256_file(path)

    def to_dict(self) -> dict:
        from .sampler import RNG_NAME

        return _jsonable({
            "manifest_version": MANIFEST_VERSION,
            "subcommand": self.subcommand,
            "config": self.config,
            "tool_version": self.tool_version,
            "csv_schemas": CSV_SCHEMAS,
            "rng": RNG_NAME,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "timings_s": self.timings,
            "verdicts": self.verdicts,
            "passed": self.passed,
            "environment": self.environment or {
                "python": platform.python_version(),
                "numpy": np.__version__,
                "platform": platform.platform(),
            },
        })

    def write(self, path: Path) -> Path:
        path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")
        return path
