"""Crossing records at a fixed level, and crossing rates per unit local time."""
from __future__ import annotations

import logging
import math
from functools import partial
from typing import Dict, List, Tuple

import numpy as np

from slt.errors import ContractError, ParameterError
from slt.estimators import (
    CountKind,
    CrossingRecord,
    Mapper,
    PathSettings,
    collect_crossings,
    count_estimator,
    crossing_tail_slope,
    excursion_jump_rate,
    height_rate_constant,
    identify_rate_constant,
    ks_uniform,
    slope_fit,
)
from slt.experiments.base import Experiment, ExperimentOutput, make_kernel
from slt.marks import KernelVariant, MarkKernel, mark_constant_c, sample_jump_marks
from slt.sampling import RngStream
from slt.stablepath import occupation_local_time

logger = logging.getLogger(__name__)

KS_LEVEL = 0.01
MIN_DECADE_SAMPLES = 50
SLOPE_TOLERANCE = 0.05
CONSTANT_RTOL = 0.1
MIN_TAIL_RECORDS = 10_000

MARK_STREAM = 1


def marked_crossings(
    settings: PathSettings, kernel: MarkKernel, T: float, y: float, s: RngStream
) -> Tuple[List[CrossingRecord], float]:
    """Crossing records of level ``y`` on one marked path, with the local time at ``y``."""
    path = settings.simulate(T, s)
    marks = sample_jump_marks(kernel, path.jump_sizes, s.derive(MARK_STREAM))
    records = collect_crossings(path, y, marks)
    local_time = occupation_local_time(path, [y], settings.bandwidth, [T]).final(y)
    return records, local_time


def _gather(experiment: Experiment, mapper: Mapper) -> Tuple[List[List[CrossingRecord]], np.ndarray]:
    cfg = experiment.config
    job = partial(marked_crossings, experiment.settings, make_kernel(cfg), cfg.T, cfg.y)
    results = list(mapper(job, experiment.streams()))
    return [r[0] for r in results], np.array([r[1] for r in results])


def _constant_at(hs: np.ndarray, rates: np.ndarray, exponent: float) -> float:
    """Geometric-mean constant C of rate = C h^(-exponent)."""
    return math.exp(float(np.mean(np.log(rates) + exponent * np.log(hs))))


class CrossingsExperiment(Experiment):
    name = "crossings"
    columns = ("t", "A", "B", "H", "U", "markval")
    description = "Undershoot/overshoot records at level y and uniformity of U"

    def run(self, mapper: Mapper) -> ExperimentOutput:
        per_replica, local_times = _gather(self, mapper)
        records = [r for replica in per_replica for r in replica]
        output = ExperimentOutput(self.frame([r._asdict() for r in records]))
        output.metrics["n_records"] = len(records)
        if not records:
            return output

        u = np.array([r.U for r in records])
        h = np.array([r.H for r in records])
        pooled = ks_uniform(u)
        output.metrics["ks_statistic"] = pooled.statistic
        output.metrics["ks_pvalue"] = pooled.pvalue
        output.check("u_uniform", pooled.pvalue > KS_LEVEL, f"p = {pooled.pvalue:.4f}")

        decades = np.floor(np.log10(h)).astype(int)
        by_decade: Dict[str, float] = {}
        for decade in np.unique(decades):
            chosen = u[decades == decade]
            if chosen.size < MIN_DECADE_SAMPLES:
                continue
            p = ks_uniform(chosen).pvalue
            by_decade[f"1e{decade}"] = p
            output.check(f"u_uniform_given_H_1e{decade}", p > KS_LEVEL, f"n = {chosen.size}, p = {p:.4f}")
        output.metrics["ks_pvalue_by_decade"] = by_decade
        self._tail(output, records, float(local_times.sum()))
        return output

    def _tail(self, output: ExperimentOutput, records: List[CrossingRecord], local_time: float) -> None:
        alpha = self.config.alpha
        try:
            fit = crossing_tail_slope(records, local_time, self.config.h_list())
        except (ContractError, ParameterError) as e:
            logger.info("no crossing tail fit: %s", e)
            return
        output.metrics["tail_slope"] = fit.slope
        output.metrics["tail_slope_stderr"] = fit.stderr
        if len(records) < MIN_TAIL_RECORDS:
            logger.info(
                "tail slope %.4f from %d crossings, not checked below %d", fit.slope, len(records), MIN_TAIL_RECORDS
            )
            return
        output.check("tail_slope", abs(fit.slope + alpha) <= SLOPE_TOLERANCE, f"slope = {fit.slope:.4f}")


class RatesExperiment(Experiment):
    name = "rates"
    columns = ("kind", "h", "count", "local_time", "rate")
    description = "Crossing counts per unit local time against h for each estimator kind"

    def run(self, mapper: Mapper) -> ExperimentOutput:
        cfg = self.config
        per_replica, local_times = _gather(self, mapper)
        total_local_time = float(local_times.sum())
        hs = cfg.h_list()
        kernel = make_kernel(cfg)

        rows = []
        counts: Dict[CountKind, np.ndarray] = {}
        for kind in CountKind:
            counts[kind] = np.array(
                [sum(count_estimator(records, h, kind, cfg.T) for records in per_replica) for h in hs]
            )
            for h, count in zip(hs, counts[kind]):
                rate = count / total_local_time if total_local_time > 0.0 else 0.0
                rows.append(
                    {"kind": kind.value, "h": float(h), "count": int(count), "local_time": total_local_time, "rate": rate}
                )
        output = ExperimentOutput(self.frame(rows))
        output.metrics["local_time"] = total_local_time
        output.metrics["excursion_constant"] = excursion_jump_rate(cfg.alpha)
        output.metrics["height_constant"] = height_rate_constant(cfg.alpha)
        if total_local_time <= 0.0:
            return output

        self._check_jumpsize(output, hs, counts[CountKind.JUMPSIZE] / total_local_time)
        if kernel.variant is not KernelVariant.CUSTOM:
            self._check_mark(output, kernel, hs, counts[CountKind.MARK] / total_local_time)
        return output

    def _fit(self, output: ExperimentOutput, label: str, hs: np.ndarray, rates: np.ndarray):
        if np.any(rates <= 0.0):
            output.check(f"{label}_fit", False, "some thresholds saw no crossings")
            return None
        fit = slope_fit(np.log(hs), np.log(rates))
        output.metrics[f"{label}_slope"] = fit.slope
        output.metrics[f"{label}_slope_stderr"] = fit.stderr
        return fit

    def _check_jumpsize(self, output: ExperimentOutput, hs: np.ndarray, rates: np.ndarray) -> None:
        alpha = self.config.alpha
        fit = self._fit(output, "jumpsize", hs, rates)
        if fit is None:
            return
        output.check("jumpsize_slope", abs(fit.slope + alpha) <= SLOPE_TOLERANCE, f"slope = {fit.slope:.4f}")
        constant = _constant_at(hs, rates, alpha)
        output.metrics["jumpsize_constant"] = constant
        matched = identify_rate_constant(alpha, constant, CONSTANT_RTOL)
        output.metrics["jumpsize_constant_match"] = matched
        output.check("jumpsize_constant", matched is not None, f"matches {matched or 'neither candidate'}")

    def _check_mark(self, output: ExperimentOutput, kernel: MarkKernel, hs: np.ndarray, rates: np.ndarray) -> None:
        alpha = self.config.alpha
        fit = self._fit(output, "mark", hs, rates)
        if fit is None:
            return
        c = mark_constant_c(kernel, alpha)
        constant = _constant_at(hs, rates, alpha / kernel.q)
        output.metrics["mark_constant"] = constant
        output.metrics["mark_reference_constant"] = c
        output.check("mark_slope", abs(fit.slope + alpha / kernel.q) <= SLOPE_TOLERANCE, f"slope = {fit.slope:.4f}")
        output.check(
            "mark_constant", abs(constant / c - 1.0) <= CONSTANT_RTOL, f"constant = {constant:.4f}, c = {c:.4f}"
        )
