"""Sup-norm error of the rescaled mark counts against occupation local times, as h shrinks."""
from __future__ import annotations

from functools import partial
from typing import Optional, Tuple

import numpy as np

from slt.estimators import Mapper, PathSettings, SweepResult, bandwidth_error, theorem1_sweep
from slt.experiments.base import Experiment, ExperimentOutput, make_kernel
from slt.marks import KernelVariant, MarkKernel, mark_constant_c, sample_jump_marks
from slt.sampling import RngStream
from slt.stablepath import occupation_local_time

MARK_STREAM = 1
MAX_INVERSIONS = 1


def sweep_replica(
    settings: PathSettings,
    kernel: MarkKernel,
    T: float,
    h_list: np.ndarray,
    level_grid: np.ndarray,
    time_grid: np.ndarray,
    c: Optional[float],
    s: RngStream,
) -> Tuple[SweepResult, float]:
    """One marked path: its sweep and the sup gap between bandwidths w and w/2."""
    path = settings.simulate(T, s)
    marks = sample_jump_marks(kernel, path.jump_sizes, s.derive(MARK_STREAM))
    baseline = occupation_local_time(path, level_grid, settings.bandwidth, time_grid)
    result = theorem1_sweep(path, marks, kernel, h_list, level_grid, time_grid, baseline, c)
    return result, bandwidth_error(path, level_grid, time_grid, settings.bandwidth)


class Theorem1Experiment(Experiment):
    name = "theorem1"
    columns = ("h", "sup_error", "levels", "times", "runtime_s")
    description = "Rescaled mark counts against occupation local times over a shrinking h ladder"

    def _constant(self, kernel: MarkKernel) -> Optional[float]:
        # the zero kernel has no constant of its own
        if kernel.variant is KernelVariant.CUSTOM:
            return mark_constant_c(MarkKernel.hat(), self.config.alpha)
        return None

    def run(self, mapper: Mapper) -> ExperimentOutput:
        cfg = self.config
        kernel = make_kernel(cfg)
        hs = cfg.h_list()
        levels, times = cfg.level_grid(), cfg.time_grid()
        job = partial(sweep_replica, self.settings, kernel, cfg.T, hs, levels, times, self._constant(kernel))
        results = list(mapper(job, self.streams()))

        errors = np.mean([r.sup_error for r, _ in results], axis=0)
        runtimes = np.sum([r.runtime_s for r, _ in results], axis=0) if cfg.record_timings else 0.0
        baseline_error = float(np.mean([gap for _, gap in results]))
        rows = [
            {
                "h": float(h),
                "sup_error": float(err),
                "levels": int(levels.size),
                "times": int(times.size),
                "runtime_s": float(runtimes),
            }
            for h, err in zip(hs, errors)
        ]
        output = ExperimentOutput(self.frame(rows))
        output.metrics["c"] = results[0][0].c if results else None
        output.metrics["bandwidth_error"] = baseline_error

        inversions = int(np.count_nonzero(np.diff(errors) > 0.0))
        output.metrics["inversions"] = inversions
        target = max(0.5 * float(errors[0]), 2.0 * baseline_error)
        output.check(
            "error_shrinks",
            float(errors[-1]) <= target,
            f"last = {errors[-1]:.4g}, allowed = {target:.4g}",
        )
        output.check("error_monotone", inversions <= MAX_INVERSIONS, f"{inversions} inversion(s)")
        return output
