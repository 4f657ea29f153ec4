"""
Shared plumbing for experiments: replica pools, outputs and the JSON run summary.
"""
from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path
from typing import Any, ClassVar, Dict, Iterator, List, Optional, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel

from slt import __version__
from slt.config import ExperimentConfig, KernelName, serialize_config
from slt.estimators import Mapper, PathSettings
from slt.marks import MarkKernel
from slt.sampling import RngStream, make_streams
from slt.stablepath import StableParams

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"


@contextmanager
def replica_pool(threads: int) -> Iterator[Mapper]:
    """Yield an order-preserving map over replicas: the builtin for one worker, a process pool otherwise."""
    if threads <= 1:
        yield map
        return
    with ProcessPoolExecutor(max_workers=threads) as executor:
        yield partial(executor.map, chunksize=8)


def zero_unit_paths(resolution: int, s: RngStream, n: int) -> np.ndarray:
    """Unit sampler of the degenerate kernel whose marks vanish."""
    return np.zeros((n, resolution))


def make_kernel(config: ExperimentConfig) -> MarkKernel:
    if config.kernel is KernelName.HAT:
        return MarkKernel.hat(config.mark_resolution)
    if config.kernel is KernelName.BESQ:
        return MarkKernel.besq_excursion(config.alpha, config.mark_resolution)
    return MarkKernel.custom(partial(zero_unit_paths, config.mark_resolution), 1.0, config.mark_resolution)


class CheckResult(BaseModel):
    name: str
    passed: bool
    detail: str = ""


class RunSummary(BaseModel):
    """JSON summary written next to every CSV."""

    experiment: str
    version: str
    seed: int
    config: Dict[str, Any]
    metrics: Dict[str, Any]
    checks: List[CheckResult]
    passed: bool
    rows: int
    csv: str
    wall_time_s: float


@dataclass
class ExperimentOutput:
    table: pd.DataFrame
    metrics: Dict[str, Any] = field(default_factory=dict)
    checks: List[CheckResult] = field(default_factory=list)

    def check(self, name: str, passed: bool, detail: str = "") -> None:
        self.checks.append(CheckResult(name=name, passed=bool(passed), detail=detail))

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


class Experiment:
    """
    One subcommand's experiment.

    Subclasses set ``name``, ``columns`` and ``description`` and implement :meth:`run`.
    """

    name: ClassVar[str]
    columns: ClassVar[Tuple[str, ...]]
    description: ClassVar[str] = ""

    def __init__(self, config: ExperimentConfig):
        self.config = config

    @property
    def params(self) -> StableParams:
        return StableParams(self.config.alpha, self.config.a)

    @property
    def settings(self) -> PathSettings:
        return PathSettings(
            params=self.params,
            eps=self.config.eps,
            dt=self.config.dt,
            bandwidth=self.config.bandwidth,
            small_jump_mode=self.config.small_jump_mode,
            resource_cap=self.config.resource_cap,
        )

    def streams(self, n: Optional[int] = None) -> List[RngStream]:
        return make_streams(self.config.seed, n or self.config.replicas)

    def frame(self, rows: List[Dict[str, Any]] | Dict[str, Any]) -> pd.DataFrame:
        return pd.DataFrame(rows, columns=list(self.columns))

    def run(self, mapper: Mapper) -> ExperimentOutput:
        raise NotImplementedError


def write_outputs(
    experiment: Experiment, output: ExperimentOutput, out_dir: Path, wall_time_s: float
) -> Tuple[Path, Path]:
    """Write ``<name>.csv`` and ``<name>.json`` to ``out_dir``."""
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"{experiment.name}.csv"
    json_path = out_dir / f"{experiment.name}.json"
    output.table.to_csv(csv_path, index=False, float_format=FLOAT_FORMAT, columns=list(experiment.columns))
    (out_dir / f"{experiment.name}.conf").write_text(serialize_config(experiment.config), encoding="utf-8")

    summary = RunSummary(
        experiment=experiment.name,
        version=__version__,
        seed=experiment.config.seed,
        config=experiment.config.model_dump(mode="json"),
        metrics=output.metrics,
        checks=output.checks,
        passed=output.passed,
        rows=int(len(output.table)),
        csv=csv_path.name,
        wall_time_s=wall_time_s,
    )
    json_path.write_text(summary.model_dump_json(indent=2), encoding="utf-8")
    logger.debug("wrote %s and %s", csv_path, json_path)
    return csv_path, json_path
