"""Run configuration: a flat ``module.key`` document stored as JSON."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path

from .evaluation import MethodConfig
from .falk import FalkParams, MajorityTrainer, QbsvmTrainer, QmsvmTrainer
from .kernel import KernelConfig
from .qmsvm import WeightingConfig
from .sampler import (
    EXHAUSTIVE_CAP,
    CapacityError,
    ExhaustiveSampler,
    RemoteSampler,
    SamplerConfig,
    SimulatedAnnealingSampler,
)

ENDPOINT_ENV = "LQSVM_SAMPLER_ENDPOINT"


class ConfigError(ValueError):
    pass


# (attribute, flat key, type)
_SCHEMA = [
    ("task", "run.task", str),
    ("mode", "run.mode", str),
    ("selection", "run.selection", bool),
    ("dynamic_model", "run.dynamic_model", bool),
    ("seed", "run.seed", int),
    ("n_jobs", "run.n_jobs", int),
    ("folds", "cv.folds", int),
    ("standardize", "cv.standardize", bool),
    ("k", "falk.k", int),
    ("k_prime", "falk.k_prime", int),
    ("m", "falk.m", int),
    ("internal_folds", "falk.internal_folds", int),
    ("grid", "falk.grid", list),
    ("eval_samples", "falk.eval_samples", int),
    ("gamma", "svm.gamma", float),
    ("S", "svm.S", int),
    ("B", "qbsvm.B", int),
    ("K_binary", "qbsvm.K", int),
    ("xi", "qbsvm.xi", float),
    ("K_multi", "qmsvm.K", int),
    ("mu", "qmsvm.mu", float),
    ("beta", "qmsvm.beta", float),
    ("multiplier", "qmsvm.multiplier", float),
    ("max_min_ratio", "qubo.max_min_ratio", float),
    ("sampler", "sampler.kind", str),
    ("num_reads", "sampler.num_reads", int),
    ("sweeps", "sampler.sweeps", int),
    ("sampler_seed", "sampler.seed", int),
    ("chain_strength", "sampler.chain_strength", float),
    ("exhaustive_cap", "sampler.exhaustive_cap", int),
    ("endpoint", "sampler.endpoint", str),
]
_BY_KEY = {key: (attr, typ) for attr, key, typ in _SCHEMA}
_OPTIONAL = {"eval_samples", "max_min_ratio", "endpoint"}


@dataclass(frozen=True)
class RunConfig:
    task: str = "binary"
    mode: str = "local"
    selection: bool = False
    dynamic_model: bool = False
    seed: int = 0
    n_jobs: int = 1
    folds: int = 10
    standardize: bool = True
    k: int = 80
    k_prime: int = 60
    m: int = 8
    internal_folds: int = 5
    grid: tuple = (-0.5, 1.0)
    eval_samples: int | None = None
    gamma: float = 1.0
    S: int = 100
    B: int = 2
    K_binary: int = 2
    xi: float = 1.0
    K_multi: int = 2
    mu: float = 1.0
    beta: float = 1.0
    multiplier: float = 10.0
    max_min_ratio: float | None = None
    sampler: str = "sa"
    num_reads: int = 1000
    sweeps: int = 100
    sampler_seed: int = 0
    chain_strength: float = 1.0
    exhaustive_cap: int = EXHAUSTIVE_CAP
    endpoint: str | None = None

    # -- (de)serialization --------------------------------------------------------

    def to_flat(self) -> dict:
        out = {}
        for attr, key, _ in _SCHEMA:
            v = getattr(self, attr)
            out[key] = list(v) if isinstance(v, tuple) else v
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_flat(), sort_keys=True, indent=1) + "\n"

    @classmethod
    def from_flat(cls, flat: dict) -> "RunConfig":
        kwargs = {}
        for key, raw in flat.items():
            if key not in _BY_KEY:
                raise ConfigError(f"unknown config key {key!r}")
            attr, typ = _BY_KEY[key]
            kwargs[attr] = _coerce(key, raw, typ, attr in _OPTIONAL)
        return cls(**kwargs).validated()

    @classmethod
    def loads(cls, text: str) -> "RunConfig":
        try:
            flat = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
        if not isinstance(flat, dict):
            raise ConfigError("config must be a JSON object of flat keys")
        return cls.from_flat(flat)

    @classmethod
    def load(cls, path) -> "RunConfig":
        return cls.loads(Path(path).read_text())

    def override(self, assignments) -> "RunConfig":
        """Apply ``key=value`` strings (values parsed as JSON when possible)."""
        flat = self.to_flat()
        for item in assignments:
            if "=" not in item:
                raise ConfigError(f"override {item!r} must look like key=value")
            key, val = item.split("=", 1)
            key = key.strip()
            if key not in _BY_KEY:
                raise ConfigError(f"unknown config key {key!r}")
            try:
                flat[key] = json.loads(val)
            except json.JSONDecodeError:
                flat[key] = val
        return RunConfig.from_flat(flat)

    # -- validation -----------------------------------------------------------------

    def validated(self) -> "RunConfig":
        if self.task not in ("binary", "multiclass"):
            raise ConfigError(f"run.task must be binary or multiclass, got {self.task!r}")
        if self.mode not in ("local", "global", "majority"):
            raise ConfigError(f"run.mode must be local, global or majority, got {self.mode!r}")
        if self.dynamic_model:
            raise ConfigError("run.dynamic_model: per-neighborhood model switching is not implemented")
        if self.sampler not in ("sa", "exhaustive", "remote"):
            raise ConfigError(f"sampler.kind must be sa, exhaustive or remote, got {self.sampler!r}")
        if not 1 <= self.k_prime < self.k:
            raise ConfigError(f"need 1 <= falk.k_prime < falk.k (got k'={self.k_prime}, k={self.k})")
        if self.folds < 2:
            raise ConfigError("cv.folds must be >= 2")
        if self.S < 1 or self.S > self.num_reads:
            raise ConfigError("svm.S must lie in 1..sampler.num_reads")
        for g in (*self.grid, self.gamma):
            try:
                KernelConfig(float(g))
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
        if self.m < 1 or self.internal_folds < 2:
            raise ConfigError("falk.m must be >= 1 and falk.internal_folds >= 2")
        if self.eval_samples is not None and not 1 <= self.eval_samples <= self.k_prime:
            raise ConfigError("falk.eval_samples must lie in 1..falk.k_prime")
        if self.B < 2 or self.K_binary < 1 or self.K_multi < 1:
            raise ConfigError("qbsvm.B >= 2 and K >= 1 required")
        if self.max_min_ratio is not None and not self.max_min_ratio > 0:
            raise ConfigError("qubo.max_min_ratio must be positive")
        if self.num_reads < 1 or self.sweeps < 1:
            raise ConfigError("sampler.num_reads and sampler.sweeps must be >= 1")
        return self

    def variables_needed(self, n_classes: int) -> int:
        """QUBO size of one local (or slice/subset) model."""
        if self.task == "binary":
            return self.k * self.K_binary
        return self.k * n_classes * self.K_multi

    def check_capacity(self, n_classes: int) -> None:
        if self.mode == "majority" or self.sampler != "exhaustive":
            return
        need = self.variables_needed(n_classes)
        if need > self.exhaustive_cap:
            raise CapacityError(
                f"models need {need} QUBO variables but the exhaustive sampler is limited to "
                f"{self.exhaustive_cap} (sampler.exhaustive_cap)"
            )

    # -- object construction ----------------------------------------------------------

    def sampler_config(self) -> SamplerConfig:
        return SamplerConfig(num_reads=self.num_reads, sweeps_per_read=self.sweeps,
                             seed=self.sampler_seed, chain_strength=self.chain_strength)

    def build_sampler(self):
        if self.sampler == "sa":
            return SimulatedAnnealingSampler(self.sampler_config())
        if self.sampler == "exhaustive":
            return ExhaustiveSampler(self.exhaustive_cap, keep=self.S)
        endpoint = os.environ.get(ENDPOINT_ENV) or self.endpoint
        if not endpoint:
            raise ConfigError(f"remote sampler needs sampler.endpoint or ${ENDPOINT_ENV}")
        return RemoteSampler(endpoint, self.sampler_config())

    def falk_params(self) -> FalkParams:
        return FalkParams(
            k=self.k, k_prime=self.k_prime, m=self.m, internal_folds=self.internal_folds,
            grid=tuple(KernelConfig(float(g)) for g in self.grid),
            eval_samples=self.eval_samples, seed=self.seed,
        )

    def trainer(self):
        if self.mode == "majority":
            return MajorityTrainer()
        kernel = KernelConfig(float(self.gamma))
        sampler = self.build_sampler()
        if self.task == "binary":
            return QbsvmTrainer(sampler, kernel, self.B, self.K_binary, self.xi, self.S, self.max_min_ratio)
        return QmsvmTrainer(sampler, kernel, self.K_multi, self.mu, self.beta, self.S,
                            WeightingConfig(self.multiplier), self.max_min_ratio)

    def method(self) -> MethodConfig:
        return MethodConfig(
            kind=self.mode, trainer=self.trainer(), falk=self.falk_params(),
            selection=self.selection and self.mode == "local", n_jobs=self.n_jobs,
        )


def _coerce(key, raw, typ, optional):
    if raw is None:
        if optional:
            return None
        raise ConfigError(f"{key} must not be null")
    try:
        if typ is bool:
            if isinstance(raw, bool):
                return raw
            if isinstance(raw, str) and raw.lower() in ("true", "false"):
                return raw.lower() == "true"
            raise ValueError(raw)
        if typ is int:
            if isinstance(raw, bool) or (isinstance(raw, float) and not raw.is_integer()):
                raise ValueError(raw)
            return int(raw)
        if typ is float:
            if isinstance(raw, bool):
                raise ValueError(raw)
            return float(raw)
        if typ is list:
            if isinstance(raw, (int, float)) and not isinstance(raw, bool):
                raw = [raw]
            if not isinstance(raw, (list, tuple)) or not raw:
                raise ValueError(raw)
            return tuple(float(v) for v in raw)
        return str(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: cannot interpret {raw!r} as {typ.__name__}") from None
