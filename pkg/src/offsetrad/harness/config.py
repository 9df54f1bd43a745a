"""Experiment configuration: JSON schema, validation and typed records."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema

from .scenarios import SCENARIOS, NoiseSpec

EXPERIMENT_KINDS = (
    "parametric_rate",
    "finite_aggregation",
    "nonparametric_rate",
    "dominance",
    "critical_radius",
    "minimax_lower",
    "geom_check",
)


class ConfigError(ValueError):
    """The configuration does not satisfy the schema or its invariants."""


def load_schema() -> dict:
    text = resources.files("offsetrad.harness").joinpath("config.schema.json").read_text()
    return json.loads(text)


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    scenario: str
    n_grid: tuple
    trials: int
    seed: int
    noise: NoiseSpec | None = None
    specification: str = "well"
    class_spec: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    output: str | None = None
    name: str | None = None

    def __post_init__(self):
        if self.kind not in EXPERIMENT_KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}")
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}")
        grid = tuple(int(v) for v in self.n_grid)
        if not grid or any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigError("n_grid must be non-empty and strictly increasing")
        if grid[0] < 1:
            raise ConfigError("n_grid entries must be positive")
        object.__setattr__(self, "n_grid", grid)
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.specification not in ("well", "misspecified"):
            raise ConfigError("specification must be 'well' or 'misspecified'")
        if self.name is None:
            object.__setattr__(self, "name", self.kind)

    def scenario_params(self) -> dict:
        out = {**self.class_spec, "specification": self.specification}
        if self.noise is not None:
            out["noise"] = self.noise
        return out

    @classmethod
    def from_dict(cls, d: dict, seed: int | None = None, output: str | None = None):
        return cls(
            kind=d["kind"],
            scenario=d["scenario"],
            n_grid=tuple(d["n_grid"]),
            trials=int(d.get("trials", 1)),
            seed=int(d.get("seed", seed if seed is not None else 0)),
            noise=NoiseSpec.from_dict(d["noise"]) if "noise" in d else None,
            specification=d.get("specification", "well"),
            class_spec=dict(d.get("class", {})),
            params=dict(d.get("params", {})),
            output=output,
            name=d.get("name"),
        )


def validate(config: dict) -> None:
    """Raise :class:`ConfigError` with the schema message on failure."""
    try:
        jsonschema.validate(config, load_schema())
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"invalid config at {where}: {exc.message}") from None
    names = [e.get("name", e["kind"]) for e in config["experiments"]]
    dup = sorted({n for n in names if names.count(n) > 1})
    if dup:
        raise ConfigError(f"duplicate experiment names: {dup}")


def load_config(path: str | Path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        config = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    validate(config)
    return config


def config_hash(config: dict) -> str:
    canon = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def experiments_from(config: dict) -> list[ExperimentConfig]:
    seed = int(config.get("seed", 0))
    out = config.get("output")
    return [ExperimentConfig.from_dict(e, seed=seed, output=out) for e in config["experiments"]]
