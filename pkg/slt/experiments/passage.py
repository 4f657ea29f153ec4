"""Local time at 0 and passage probabilities at an independent exponential time."""
from __future__ import annotations

import logging
import math
from functools import partial
from typing import Dict, List

import numpy as np

from slt.estimators import Mapper, local_time_at_exponential, passage_probability_mc
from slt.experiments.base import Experiment, ExperimentOutput
from slt.specfun import lemma7_prob

logger = logging.getLogger(__name__)

Z_LIMIT = 3.0
LOCAL_TIME_RTOL = 0.05
PASSAGE_RTOL = 0.03

LOCAL_TIME_STREAM = 11
DOWN_STREAM = 12
UP_STREAM = 13


def _row(quantity: str, estimate: float, reference: float, stderr: float) -> Dict[str, object]:
    z = (estimate - reference) / stderr if stderr > 0.0 else 0.0
    return {"quantity": quantity, "estimate": estimate, "reference": reference, "stderr": stderr, "z_score": z}


class PassageExperiment(Experiment):
    name = "passage"
    columns = ("quantity", "estimate", "reference", "stderr", "z_score")
    description = "Exp(1+alpha) law of l^0(lambda) and passage probabilities before lambda ~ Exp(1)"

    def run(self, mapper: Mapper) -> ExperimentOutput:
        cfg = self.config
        streams = self.streams()
        if cfg.a != 1.0:
            logger.warning("passage references assume a = 1, got a = %s", cfg.a)
        rows: List[Dict[str, object]] = []
        output_checks = []

        local_times = np.fromiter(
            mapper(partial(local_time_at_exponential, self.settings), [s.derive(LOCAL_TIME_STREAM) for s in streams]),
            dtype=float,
        )
        se = float(local_times.std(ddof=1) / math.sqrt(local_times.size)) if local_times.size > 1 else 0.0
        reference = 1.0 / (1.0 + cfg.alpha)
        rows.append(_row("local_time_mean", float(local_times.mean()), reference, se))
        allowed = LOCAL_TIME_RTOL * reference + Z_LIMIT * se
        output_checks.append(("local_time_mean", abs(local_times.mean() - reference) <= allowed))

        # downward passage is continuous: P(T_{-y} < lambda) = exp(-y)
        p, se = passage_probability_mc(
            self.settings, -math.log(2.0), [s.derive(DOWN_STREAM) for s in streams], mapper
        )
        rows.append(_row("passage_down_ln2", p, 0.5, se))
        output_checks.append(("passage_down_ln2", abs(rows[-1]["z_score"]) <= Z_LIMIT))

        for k, y in enumerate(cfg.passage_levels):
            level_streams = [s.derive(UP_STREAM).derive(k) for s in streams]
            p, se = passage_probability_mc(self.settings, y, level_streams, mapper)
            reference = lemma7_prob(cfg.alpha, y)
            rows.append(_row(f"passage_up_{y:g}", p, reference, se))
            output_checks.append(
                (f"passage_up_{y:g}", abs(p - reference) <= max(PASSAGE_RTOL * reference, Z_LIMIT * se))
            )

        output = ExperimentOutput(self.frame(rows))
        for (name, passed), row in zip(output_checks, rows):
            output.metrics[f"{name}_z"] = row["z_score"]
            output.check(name, passed, f"estimate = {row['estimate']:.4f}, reference = {row['reference']:.4f}")
        return output
