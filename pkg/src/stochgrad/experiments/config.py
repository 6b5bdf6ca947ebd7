"""JSON experiment configuration.

Every object in the document is checked against a fixed key set; unknown
keys are rejected so typos fail loudly instead of silently falling back to
defaults.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional, Union

import numpy as np

from ..errors import ConfigError, ContractError
from ..estimators import ESTIMATOR_KINDS
from ..network import LayeredNetwork
from .tasks import TASKS, build_task

SCHEMA_VERSION = 1


@dataclass
class EstimatorConfig:
    kind: str = "unbiased"
    # None: online tracker; "optimal": exact optimum from the oracle; number: fixed.
    baseline: Union[None, str, float] = None
    baseline_decay: float = 0.99
    epsilon_guard: float = 1e-8
    baseline_warmup: int = 0
    corrector_lr: float = 0.25
    corrector_lr_decay: float = 1.0
    corrector_use_sigma: bool = False
    corrector_warmup: int = 0
    spsa_c: float = 0.1
    fd_epsilon: float = 1e-5

    def validate(self):
        if self.kind not in ESTIMATOR_KINDS:
            raise ConfigError(f"unknown estimator {self.kind!r}; valid options: {' | '.join(ESTIMATOR_KINDS)}")
        if isinstance(self.baseline, str) and self.baseline != "optimal":
            raise ConfigError(f"baseline must be null, 'optimal' or a number, got {self.baseline!r}")
        if not 0 < self.baseline_decay <= 1:
            raise ConfigError("baseline_decay must be in (0, 1]")
        if self.spsa_c <= 0 or self.fd_epsilon <= 0 or self.epsilon_guard <= 0:
            raise ConfigError("spsa_c, fd_epsilon and epsilon_guard must be positive")
        if self.corrector_lr < 0 or self.corrector_lr_decay < 0:
            raise ConfigError("corrector_lr and corrector_lr_decay must be non-negative")


@dataclass
class ControllerConfig:
    target_rate: float = 0.2
    threshold: Optional[float] = None
    bias_step: float = 0.01
    ma_decay: float = 0.99


@dataclass
class BoltzmannConfig:
    n_visible: int = 2
    n_hidden: int = 1
    weights: Optional[list] = None
    biases: Optional[list] = None
    v: Optional[list] = None
    init_scale: float = 0.5
    n_chains: int = 200
    n_samples: int = 50
    burn_in: int = 1000
    thin: int = 10


@dataclass
class ExperimentConfig:
    seed: int = 0
    network: Optional[dict] = None
    input: Optional[list] = None
    task: Optional[str] = None
    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)
    n_samples: int = 10_000
    chunk_size: int = 1000
    sweep_units: list = field(default_factory=list)
    training_steps: int = 200
    learning_rate: float = 0.5
    batch_size: int = 1
    firing_rate_controller: Optional[ControllerConfig] = None
    boltzmann: Optional[BoltzmannConfig] = None
    output: Optional[str] = None
    schema_version: int = SCHEMA_VERSION

    def validate(self) -> "ExperimentConfig":
        if self.schema_version != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema_version {self.schema_version}; expected {SCHEMA_VERSION}")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")
        if self.task is not None and self.task not in TASKS:
            raise ConfigError(f"unknown task {self.task!r}; valid options: {', '.join(TASKS)}")
        for name in ("n_samples", "chunk_size", "batch_size"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.training_steps < 0:
            raise ConfigError("training_steps must be >= 0")
        if any(int(k) < 1 for k in self.sweep_units):
            raise ConfigError("sweep_units entries must be >= 1")
        self.estimator.validate()
        return self

    def build(self):
        """The network and input this experiment runs on."""
        try:
            if self.task is not None:
                net_doc, x = build_task(self.task)
                if self.network is not None:
                    net_doc = self.network
                if self.input is not None:
                    x = self.input
            else:
                if self.network is None:
                    raise ConfigError("config needs either 'task' or 'network'")
                net_doc = self.network
                x = self.input if self.input is not None else [0.0] * int(net_doc.get("input_size", 0))
            net = LayeredNetwork.from_dict(net_doc, seed=self.seed)
        except ContractError as exc:
            raise ConfigError(f"invalid network description: {exc}") from exc
        x = np.asarray(x, dtype=float)
        if x.shape != (net.input_size,):
            raise ConfigError(f"input has {x.size} values, network expects {net.input_size}")
        return net, x

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _build(cls, doc, where):
    if not isinstance(doc, dict):
        raise ConfigError(f"{where} must be a JSON object")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(doc) - known)
    if unknown:
        raise ConfigError(f"unknown key(s) {unknown} in {where}; allowed: {sorted(known)}")
    try:
        return cls(**doc)
    except TypeError as exc:
        raise ConfigError(f"bad {where}: {exc}") from None


def config_from_dict(doc: dict) -> ExperimentConfig:
    doc = dict(doc)
    nested = {
        "estimator": EstimatorConfig,
        "firing_rate_controller": ControllerConfig,
        "boltzmann": BoltzmannConfig,
    }
    for key, cls in nested.items():
        if doc.get(key) is not None:
            doc[key] = _build(cls, doc[key], key)
    cfg = _build(ExperimentConfig, doc, "config")
    if cfg.estimator is None:
        cfg.estimator = EstimatorConfig()
    return cfg.validate()


def loads_config(text: str) -> ExperimentConfig:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        line = text.splitlines()[exc.lineno - 1] if 0 < exc.lineno <= len(text.splitlines()) else ""
        raise ConfigError(f"malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}\n    {line}") from None
    return config_from_dict(doc)


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return loads_config(text)


def dump_config(cfg: ExperimentConfig, path) -> None:
    Path(path).write_text(cfg.to_json() + "\n")
