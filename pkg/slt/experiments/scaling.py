"""Moments of local-time increments between levels against their separation."""
from __future__ import annotations

from slt.estimators import Mapper, increment_scaling
from slt.experiments.base import Experiment, ExperimentOutput

SLOPE_TOLERANCE = 0.1


class ScalingExperiment(Experiment):
    name = "scaling"
    columns = ("sep", "p", "moment_estimate", "stderr")
    description = "E|l^y(N) - l^0(N)|^p against |y| on a geometric ladder"

    def run(self, mapper: Mapper) -> ExperimentOutput:
        cfg = self.config
        pairs = [(0.0, float(sep)) for sep in cfg.separations()]
        result = increment_scaling(self.settings, pairs, cfg.scaling_p, cfg.T, self.streams(), mapper)
        rows = [
            {"sep": float(sep), "p": cfg.scaling_p, "moment_estimate": float(m), "stderr": float(se)}
            for sep, m, se in zip(result.separations, result.moments, result.stderrs)
        ]
        output = ExperimentOutput(self.frame(rows))
        expected = cfg.scaling_p * cfg.alpha / 2.0
        output.metrics["exponent"] = result.fit.slope
        output.metrics["exponent_stderr"] = result.fit.stderr
        output.metrics["expected_exponent"] = expected
        output.check(
            "increment_exponent",
            abs(result.fit.slope - expected) <= SLOPE_TOLERANCE,
            f"exponent = {result.fit.slope:.4f}, expected {expected:.4f}",
        )
        return output
