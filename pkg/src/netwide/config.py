"""Experiment configuration: a JSON file plus ``key=value`` overrides."""

from __future__ import annotations

import copy
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from netwide.estimators import AnalysisParams
from netwide.hashing import MAX_M
from netwide.sim.routing import KINDS

TASKS = ("cardinality", "frequency", "heavy_hitters", "hhh", "superspreaders", "flow_size")
GENERATORS = ("zipf", "superspreader")
DEFAULT_M = 12


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    # trace source: exactly one of ``trace_path`` and ``generate``
    trace_path: str | None = None
    generate: dict | None = None

    routing: str = "single-switch"
    K: int = 1
    hop_nodes: float = 98400
    subset_prob: float = 0.5
    routing_seed: int = 1

    # slot bits: set m directly, or epsilon and delta (and alpha) to derive it
    m: int | None = None
    epsilon: float | None = None
    delta: float | None = None
    alpha: float = 2.0
    sketch_seed: int = 7

    tasks: list = field(default_factory=lambda: list(TASKS))
    theta: float = 0.001
    psi: float = 1000
    prefix_lengths: list = field(default_factory=lambda: [8, 16, 24, 32])
    checkpoints: str | list = "pow2"

    baselines: bool = False
    baseline_epsilon: float = 0.01
    baseline_delta: float = 0.05
    baseline_register_bits: int | None = 8
    baseline_seed: int = 11

    workers: int = 1
    report: str | None = None
    csv: str | None = None

    def validate(self) -> None:
        if (self.trace_path is None) == (self.generate is None):
            raise ConfigError("exactly one of 'trace_path' and 'generate' must be set")
        if self.generate is not None:
            kind = self.generate.get("kind", "zipf")
            if kind not in GENERATORS:
                raise ConfigError(f"generate.kind must be one of {GENERATORS}")
        if self.routing not in KINDS:
            raise ConfigError(f"routing must be one of {KINDS}")
        if self.K < 1:
            raise ConfigError("K must be >= 1")
        if (self.epsilon is None) != (self.delta is None):
            raise ConfigError("epsilon and delta must be given together")
        if self.m is not None and self.epsilon is not None:
            raise ConfigError("give either m or (epsilon, delta, alpha), not both")
        if self.alpha < 1:
            raise ConfigError("alpha must be >= 1")
        bad = set(self.tasks) - set(TASKS)
        if bad:
            raise ConfigError(f"unknown tasks {sorted(bad)}; choose from {TASKS}")
        if not 0 < self.theta < 1:
            raise ConfigError("theta must be in (0, 1)")
        if self.psi < 0:
            raise ConfigError("psi must be >= 0")
        if not isinstance(self.checkpoints, (str, list)) or (
            isinstance(self.checkpoints, str) and self.checkpoints != "pow2"
        ):
            raise ConfigError("checkpoints must be 'pow2' or a list of packet counts")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        try:
            m = self.slot_bits()
        except ValueError as e:
            raise ConfigError(str(e)) from None
        if not 1 <= m <= MAX_M:
            raise ConfigError(f"slot bit-width {m} outside [1, {MAX_M}]")

    def slot_bits(self) -> int:
        if self.m is not None:
            return int(self.m)
        if self.epsilon is None:
            return DEFAULT_M
        return AnalysisParams(self.epsilon, self.delta, self.alpha).m

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> ExperimentConfig:
        known = {f.name for f in fields(cls)}
        extra = set(data) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        cfg = cls(**copy.deepcopy(data))
        cfg.validate()
        return cfg


def parse_override(item: str) -> tuple[list[str], object]:
    if "=" not in item:
        raise ConfigError(f"override {item!r} is not key=value")
    key, raw = item.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw  # bare strings need no quoting
    return key.strip().split("."), value


def apply_overrides(data: dict, overrides) -> dict:
    data = copy.deepcopy(data)
    for item in overrides or ():
        path, value = parse_override(item)
        node = data
        for k in path[:-1]:
            if node.get(k) is None:
                node[k] = {}
            node = node[k]
            if not isinstance(node, dict):
                raise ConfigError(f"cannot set {item!r}: {k!r} is not a section")
        node[path[-1]] = value
    return data


def load_config(path, overrides=()) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON ({e})") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return ExperimentConfig.from_dict(apply_overrides(data, overrides))
