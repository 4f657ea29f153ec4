"""Deterministic cross-checks of the analytic layer: two forms of the restricted exponent and more."""
from __future__ import annotations

import itertools
from functools import partial
from typing import Dict, Tuple

from slt.estimators import Mapper
from slt.experiments.base import Experiment, ExperimentOutput
from slt.specfun import poisson_mdp, scale_W_laplace, theta_b_closed, theta_b_integral

THETA_RTOL = 1e-8
LAPLACE_RTOL = 1e-6

# (alpha, q, eta) with eta^(1 + alpha) > q
LAPLACE_TRIPLES = (
    (0.3, 0.0, 1.0),
    (0.3, 0.5, 2.0),
    (0.3, 1.0, 1.5),
    (0.5, 0.0, 0.5),
    (0.5, 0.5, 1.0),
    (0.5, 1.0, 2.0),
    (0.5, 2.0, 3.0),
    (0.7, 0.5, 1.0),
    (0.7, 1.0, 2.0),
    (0.7, 3.0, 4.0),
)
MDP_TIMES = (1e3, 1e4, 1e5, 1e6)
MDP_PAIRS = ((1.0, 0.5), (2.0, 0.5), (2.0, 0.1))


def theta_row(a: float, point: Tuple[float, float, float]) -> Dict[str, float]:
    alpha, b, q = point
    closed = theta_b_closed(alpha, a, b, q)
    integral = theta_b_integral(alpha, a, b, q)
    rel = abs(closed - integral) / abs(closed) if closed != 0.0 else abs(integral)
    return {"alpha": alpha, "b": b, "q": q, "theta_closed": closed, "theta_integral": integral, "rel_diff": rel}


def laplace_rel_error(triple: Tuple[float, float, float]) -> float:
    alpha, q, eta = triple
    expected = 1.0 / (eta ** (1.0 + alpha) - q)
    return abs(scale_W_laplace(alpha, q, eta) / expected - 1.0)


class SpecfunCheckExperiment(Experiment):
    name = "specfun-check"
    columns = ("alpha", "b", "q", "theta_closed", "theta_integral", "rel_diff")
    description = "Closed against integral restricted exponent, scale-function Laplace identity, Poisson bound"

    def run(self, mapper: Mapper) -> ExperimentOutput:
        cfg = self.config
        grid = list(itertools.product(cfg.alpha_grid, cfg.b_grid, cfg.theta_q_grid))
        rows = list(mapper(partial(theta_row, cfg.a), grid))
        output = ExperimentOutput(self.frame(rows))

        worst = max(r["rel_diff"] for r in rows)
        output.metrics["theta_max_rel_diff"] = worst
        output.check("theta_forms_agree", worst < THETA_RTOL, f"max rel diff = {worst:.3e}")

        laplace = list(mapper(laplace_rel_error, LAPLACE_TRIPLES))
        output.metrics["laplace_rel_errors"] = {str(t): e for t, e in zip(LAPLACE_TRIPLES, laplace)}
        output.check("laplace_identity", max(laplace) < LAPLACE_RTOL, f"max rel error = {max(laplace):.3e}")

        violations = []
        for t, (z, delta) in itertools.product(MDP_TIMES, MDP_PAIRS):
            lhs, rhs = poisson_mdp(t, z, delta)
            if lhs > rhs:
                violations.append(f"t={t:g} z={z:g} delta={delta:g}: {lhs:.3e} > {rhs:.3e}")
        output.metrics["poisson_mdp_violations"] = violations
        output.check(
            "poisson_moderate_deviation",
            not violations,
            "; ".join(violations) or f"{len(MDP_TIMES) * len(MDP_PAIRS)} cases hold",
        )
        return output
