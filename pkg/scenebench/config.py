"""
Run configuration: built-in defaults, overridden by a JSON config file
(``--config`` or the ``GSR_CONFIG`` environment variable), overridden in turn
by command-line flags.
"""

import json
import logging
import os
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Mapping

import jsonschema

from .agents.oracle import DEFAULT_EXPANSION_CAP
from .agents.remote import DEFAULT_RETRIES, DEFAULT_TIMEOUT_MS
from .bench.noise import NoiseMode
from .bench.suites import SEEDS_PER_CELL, Level, Suite
from .errors import SchemaError
from .graph.extract import ExtractionConfig
from .rewards import RewardWeights

logger = logging.getLogger(__name__)

CONFIG_ENV = "GSR_CONFIG"

_RATIO = {"type": "number", "minimum": 0, "maximum": 1}
_WEIGHT = {"type": "number", "minimum": 0}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "suites": {"type": "array", "items": {"enum": [str(s) for s in Suite]}},
        "levels": {"type": "array", "items": {"type": "string"}},
        "seeds": {"type": "integer", "minimum": 1},
        "trials": {"type": "integer", "minimum": 1},
        "noise": {"type": "array", "items": _RATIO, "minItems": 1},
        "noise_mode": {"enum": [str(m) for m in NoiseMode]},
        "per_episode_noise": {"type": "boolean"},
        "feedback": {"type": "boolean"},
        "agent": {"type": "string", "minLength": 1},
        "timeout_ms": {"type": "integer", "minimum": 1},
        "retries": {"type": "integer", "minimum": 0},
        "expansion_cap": {"type": "integer", "minimum": 1},
        "weights": {"type": "array", "items": _WEIGHT, "minItems": 3, "maxItems": 3},
        "alpha": _WEIGHT,
        "beta": _WEIGHT,
        "tau": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "joint_threshold": {"type": "number", "minimum": 0},
        "gripper_threshold": _RATIO,
        "overlap_threshold": _RATIO,
        "beside_distance": {"type": "number", "minimum": 0},
        "out": {"type": "string"},
        "seed": {"type": "integer"},
        "parallel": {"type": "integer", "minimum": 1},
    },
}


@dataclass(frozen=True, kw_only=True)
class RunConfig:
    suites: tuple[str, ...] = tuple(str(s) for s in Suite)
    levels: tuple[str, ...] = tuple(str(l) for l in Level)
    seeds: int = SEEDS_PER_CELL
    trials: int = 10
    noise: tuple[float, ...] = (0.0,)
    noise_mode: str = str(NoiseMode.FLIP)
    per_episode_noise: bool = False
    feedback: bool = True
    agent: str = "oracle"
    timeout_ms: int = DEFAULT_TIMEOUT_MS
    retries: int = DEFAULT_RETRIES
    expansion_cap: int = DEFAULT_EXPANSION_CAP
    weights: tuple[float, float, float] = (1.0, 1.0, 1.0)
    alpha: float = 0.5
    beta: float = 1.0
    # inside threshold on the intersection over the smaller volume
    tau: float = 0.5
    joint_threshold: float = 0.05
    gripper_threshold: float = 0.5
    overlap_threshold: float = 0.25
    beside_distance: float = 0.15
    out: str = "results"
    seed: int = 0
    parallel: int = field(default_factory=lambda: os.cpu_count() or 1)

    def __post_init__(self):
        problems = sorted(jsonschema.Draft202012Validator(CONFIG_SCHEMA).iter_errors(self.to_document()), key=str)
        if problems:
            raise SchemaError(f"invalid configuration: {problems[0].message}")

    def replace(self, **kwargs) -> "RunConfig":
        return replace(self, **kwargs)

    def extraction(self) -> ExtractionConfig:
        return ExtractionConfig(
            inside_threshold=self.tau,
            overlap_threshold=self.overlap_threshold,
            beside_distance=self.beside_distance,
            joint_threshold=self.joint_threshold,
            gripper_threshold=self.gripper_threshold,
        )

    def reward_weights(self) -> RewardWeights:
        step, grounding, termination = self.weights
        return RewardWeights(step=step, grounding=grounding, termination=termination, alpha=self.alpha, beta=self.beta)

    def to_document(self) -> dict[str, Any]:
        doc = asdict(self)
        for key, value in doc.items():
            if isinstance(value, tuple):
                doc[key] = list(value)
        return doc

    @classmethod
    def from_document(cls, doc: Mapping[str, Any]) -> "RunConfig":
        try:
            jsonschema.validate(dict(doc), CONFIG_SCHEMA)
        except jsonschema.ValidationError as exc:
            where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
            raise SchemaError(f"invalid configuration at {where}: {exc.message}") from exc
        return cls(**{key: tuple(value) if isinstance(value, list) else value for key, value in doc.items()})


def load_file(path: str | os.PathLike) -> dict[str, Any]:
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise SchemaError(f"cannot read config file {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise SchemaError(f"config file {path} is not JSON: {exc.msg} (line {exc.lineno})") from exc
    # validates the file on its own so errors point at the file
    RunConfig.from_document(doc)
    return doc


def resolve(overrides: Mapping[str, Any], config_path: str | None = None) -> RunConfig:
    """Defaults, then the config file, then the non-None ``overrides``."""
    path = config_path or os.getenv(CONFIG_ENV)
    merged: dict[str, Any] = {}
    if path:
        logger.info(f"reading configuration from {path}")
        merged.update(load_file(path))
    merged.update({key: value for key, value in overrides.items() if value is not None})
    known = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(merged) - known)
    if unknown:
        raise SchemaError(f"unknown configuration keys: {', '.join(unknown)}")
    return RunConfig.from_document({key: list(v) if isinstance(v, tuple) else v for key, v in merged.items()})
