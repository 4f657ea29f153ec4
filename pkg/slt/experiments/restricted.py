"""Laplace exponent of the inverse local time of the process restricted to [0, b]."""
from __future__ import annotations

from slt.estimators import Mapper
from slt.experiments.base import Experiment, ExperimentOutput
from slt.restricted import CENSORING_LIMIT, sigma_b_experiment

REL_TOLERANCE = 0.1


class RestrictedExperiment(Experiment):
    name = "restricted"
    columns = ("q", "empirical_exponent", "theta_b", "rel_diff", "censored_frac")
    description = "Empirical -log E exp(-q sigma^b) against the closed-form exponent"

    def run(self, mapper: Mapper) -> ExperimentOutput:
        cfg = self.config
        result = sigma_b_experiment(
            self.settings, cfg.b, cfg.q_list, self.streams(), horizon=cfg.restricted_horizon, mapper=mapper
        )
        rows = [
            {
                "q": float(q),
                "empirical_exponent": float(emp),
                "theta_b": float(theta),
                "rel_diff": float(rel),
                "censored_frac": result.censored_frac,
            }
            for q, emp, theta, rel in zip(result.q, result.empirical, result.theta_b, result.rel_diff)
        ]
        output = ExperimentOutput(self.frame(rows))
        output.metrics["replicas"] = result.n_replicas
        output.metrics["censored_frac"] = result.censored_frac
        output.metrics["sigma_moments"] = [float(m) for m in result.moments]

        output.check(
            "censoring",
            result.censoring_ok,
            f"{100.0 * result.censored_frac:.2f}% censored, limit {100.0 * CENSORING_LIMIT:.0f}%",
        )
        for row in rows:
            if row["q"] == 0.0:
                continue
            output.check(
                f"exponent_q{row['q']:g}",
                row["rel_diff"] < REL_TOLERANCE,
                f"empirical = {row['empirical_exponent']:.4f}, closed form = {row['theta_b']:.4f}",
            )
        return output
