"""Jump-intensity check: counts of jumps above 2^k eps against the Levy tail."""
from __future__ import annotations

import logging
from functools import partial

import numpy as np

from slt.estimators import Mapper, PathSettings, refinement_change
from slt.experiments.base import Experiment, ExperimentOutput
from slt.sampling import RngStream
from slt.stablepath import PathSkeleton, levy_tail

logger = logging.getLogger(__name__)

Z_LIMIT = 3.0
REFINEMENT_STREAM = 5


def jump_counts(settings: PathSettings, T: float, thresholds: np.ndarray, s: RngStream) -> np.ndarray:
    path = settings.simulate(T, s)
    sizes = np.sort(path.jump_sizes)
    return sizes.size - np.searchsorted(sizes, thresholds, side="right")


class SimulateExperiment(Experiment):
    name = "simulate"
    columns = ("x", "count", "time", "empirical_rate", "levy_tail", "z_score")
    description = "Simulate skeletons and compare jump counts with the Levy tail"

    def run(self, mapper: Mapper) -> ExperimentOutput:
        cfg = self.config
        thresholds = cfg.eps * 2.0 ** np.arange(1, 7)
        per_replica = list(mapper(partial(jump_counts, self.settings, cfg.T, thresholds), self.streams()))
        counts = np.sum(per_replica, axis=0) if per_replica else np.zeros(thresholds.size, dtype=int)
        exposure = cfg.replicas * cfg.a * cfg.T

        rows = []
        for x, count in zip(thresholds, counts):
            tail = levy_tail(cfg.alpha, float(x))
            expected = tail * exposure
            z = (count - expected) / np.sqrt(expected) if expected > 0.0 else 0.0
            rows.append(
                {
                    "x": float(x),
                    "count": int(count),
                    "time": exposure,
                    "empirical_rate": count / exposure if exposure > 0.0 else 0.0,
                    "levy_tail": tail,
                    "z_score": float(z),
                }
            )
        output = ExperimentOutput(self.frame(rows))
        output.metrics["total_jumps_above_2eps"] = int(counts[0]) if counts.size else 0
        if exposure > 0.0:
            worst = max(abs(r["z_score"]) for r in rows)
            output.metrics["max_abs_z"] = worst
            output.check("jump_intensity", worst <= Z_LIMIT, f"max |z| = {worst:.3f}")
            self._refinement(output)
        return output

    def _refinement(self, output: ExperimentOutput) -> None:
        # logged, not checked
        stream = self.streams(1)[0].derive(REFINEMENT_STREAM)
        result = refinement_change(self.settings, self.config.T, self.config.level_grid(), stream)
        output.metrics["refinement_change"] = result.change
        output.metrics["refinement_bandwidth_error"] = result.bandwidth_error
        if not result.within_error:
            logger.info("refinement moved local times beyond the bandwidth error")

    def first_skeleton(self) -> PathSkeleton:
        """The skeleton of replica 0, regenerated from its stream."""
        return self.settings.simulate(self.config.T, self.streams(1)[0])
