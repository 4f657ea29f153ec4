"""
Experiment configuration: a frozen pydantic model read from ``key=value`` text.
"""
from __future__ import annotations

import typing
from enum import Enum
from typing import Any, Dict, List

import numpy as np
from pydantic import BaseModel, ConfigDict, ValidationError, field_validator, model_validator

from slt.errors import ConfigError
from slt.stablepath import SmallJumpMode


class KernelName(str, Enum):
    HAT = "hat"
    BESQ = "besq"
    ZERO = "zero"


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    # process and skeleton
    alpha: float = 0.5
    a: float = 1.0
    T: float = 1.0
    eps: float = 1e-3
    dt: float = 1e-4
    small_jump_mode: SmallJumpMode = SmallJumpMode.DRIFT_ONLY
    resource_cap: float = 1e8

    # local-time grids
    bandwidth: float = 0.02
    level_min: float = -1.0
    level_max: float = 1.0
    level_step: float = 0.05
    time_step: float = 0.1
    y: float = 0.3

    # thresholds and marks
    h0: float = 0.2
    h_factor: float = 0.5
    h_count: int = 6
    kernel: KernelName = KernelName.HAT
    mark_resolution: int = 101

    # restricted process
    b: float = 1.0
    q_list: List[float] = [1.0]
    restricted_horizon: float = 20.0

    # analytic cross-checks
    alpha_grid: List[float] = [0.3, 0.5, 0.7]
    b_grid: List[float] = [0.5, 1.0, 2.0]
    theta_q_grid: List[float] = [0.1, 0.5, 1.0, 2.0, 5.0]

    # BESQ
    besq_draws: int = 100_000
    holder_gamma: float = 0.2
    holder_p: float = 8.0
    holder_resolution: int = 1000
    holder_paths: int = 10_000

    # increment scaling and passage
    scaling_p: float = 2.0
    sep_min: float = 0.02
    sep_max: float = 0.64
    sep_count: int = 6
    passage_levels: List[float] = [0.5, 1.0]

    # orchestration
    seed: int = 0
    replicas: int = 50
    threads: int = 1
    out: str = "results"
    record_timings: bool = False

    @field_validator("alpha")
    @classmethod
    def _alpha_in_range(cls, v: float) -> float:
        if not 0.0 < v < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        return v

    @field_validator("alpha_grid")
    @classmethod
    def _alpha_grid_in_range(cls, v: List[float]) -> List[float]:
        if not v or any(not 0.0 < x < 1.0 for x in v):
            raise ValueError("alpha_grid values must lie in (0, 1)")
        return v

    @field_validator(
        "a", "eps", "dt", "bandwidth", "level_step", "time_step", "h0", "b",
        "restricted_horizon", "resource_cap", "sep_min", "sep_max", "holder_gamma",
    )
    @classmethod
    def _positive(cls, v: float) -> float:
        if not v > 0.0:
            raise ValueError("must be positive")
        return v

    @field_validator("T")
    @classmethod
    def _non_negative(cls, v: float) -> float:
        if not v >= 0.0:
            raise ValueError("must be non-negative")
        return v

    @field_validator("h_count", "replicas", "threads", "besq_draws", "holder_paths")
    @classmethod
    def _at_least_one(cls, v: int) -> int:
        if v < 1:
            raise ValueError("must be at least 1")
        return v

    @field_validator("mark_resolution", "holder_resolution")
    @classmethod
    def _resolution(cls, v: int) -> int:
        if v < 2:
            raise ValueError("must be at least 2")
        return v

    @field_validator("sep_count")
    @classmethod
    def _enough_separations(cls, v: int) -> int:
        if v < 3:
            raise ValueError("need at least 3 separations for a slope fit")
        return v

    @field_validator("h_factor")
    @classmethod
    def _shrinking(cls, v: float) -> float:
        if not 0.0 < v < 1.0:
            raise ValueError("must lie in (0, 1)")
        return v

    @field_validator("q_list", "theta_q_grid")
    @classmethod
    def _q_values(cls, v: List[float]) -> List[float]:
        if not v or any(q < 0.0 for q in v):
            raise ValueError("q values must be non-negative")
        return v

    @field_validator("b_grid", "passage_levels")
    @classmethod
    def _positive_list(cls, v: List[float]) -> List[float]:
        if not v or any(not x > 0.0 for x in v):
            raise ValueError("values must be positive")
        return v

    @field_validator("seed")
    @classmethod
    def _u64(cls, v: int) -> int:
        if not 0 <= v < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        return v

    @field_validator("scaling_p")
    @classmethod
    def _moment_order(cls, v: float) -> float:
        if not v >= 1.0:
            raise ValueError("must be at least 1")
        return v

    @model_validator(mode="after")
    def _consistent(self) -> "ExperimentConfig":
        if not self.level_max > self.level_min:
            raise ValueError("level_max must exceed level_min")
        if not self.sep_max > self.sep_min:
            raise ValueError("sep_max must exceed sep_min")
        if not self.holder_p > 2.0:
            raise ValueError("holder_p must exceed 2")
        if not self.holder_gamma < (self.holder_p - 2.0) / (2.0 * self.holder_p):
            raise ValueError("holder_gamma must stay below (holder_p - 2) / (2 holder_p)")
        return self

    # --- derived grids ---

    def level_grid(self) -> np.ndarray:
        n = int(round((self.level_max - self.level_min) / self.level_step))
        return np.linspace(self.level_min, self.level_min + n * self.level_step, n + 1)

    def time_grid(self) -> np.ndarray:
        if self.T == 0.0:
            return np.zeros(1)
        n = max(int(round(self.T / self.time_step)), 1)
        return np.linspace(0.0, self.T, n + 1)

    def h_list(self) -> np.ndarray:
        return self.h0 * self.h_factor ** np.arange(self.h_count)

    def separations(self) -> np.ndarray:
        return np.geomspace(self.sep_min, self.sep_max, self.sep_count)

    def with_overrides(self, **updates: Any) -> "ExperimentConfig":
        """Copy with ``updates`` applied (``None`` values ignored), validated again."""
        data = self.model_dump()
        data.update({k: v for k, v in updates.items() if v is not None})
        return ExperimentConfig.model_validate(data)


def _is_list_field(name: str) -> bool:
    return typing.get_origin(ExperimentConfig.model_fields[name].annotation) in (list, List)


def parse_config(text: str) -> ExperimentConfig:
    """
    Parse ``key=value`` lines; ``#`` starts a comment and list values are comma-separated.

    Raises:
        ConfigError: On a malformed line, an unknown or repeated key, or a value outside its domain
    """
    values: Dict[str, Any] = {}
    lines: Dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"malformed line {raw.strip()!r}, expected key=value", lineno)
        if key not in ExperimentConfig.model_fields:
            raise ConfigError(f"unknown key {key!r}", lineno)
        if key in values:
            raise ConfigError(f"key {key!r} given twice", lineno)
        values[key] = [item.strip() for item in value.split(",") if item.strip()] if _is_list_field(key) else value
        lines[key] = lineno

    try:
        return ExperimentConfig.model_validate(values)
    except ValidationError as e:
        error = e.errors()[0]
        key = str(error["loc"][0]) if error["loc"] else None
        raise ConfigError(f"{key or 'config'}: {error['msg']}", lines.get(key) if key else None) from e


def _format(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, Enum):
        return str(value.value)
    if isinstance(value, list):
        return ",".join(_format(v) for v in value)
    return str(value)


def serialize_config(config: ExperimentConfig) -> str:
    """Canonical text form, one key per line in field order."""
    return "".join(f"{name}={_format(getattr(config, name))}\n" for name in ExperimentConfig.model_fields)
