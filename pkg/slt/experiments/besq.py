"""BESQ transitions, bridges and Holder constants against their closed forms and bounds."""
from __future__ import annotations

import math
from functools import partial
from typing import Dict, List, Tuple

import numpy as np

from slt.estimators import Mapper
from slt.experiments.base import Experiment, ExperimentOutput
from slt.marks import besq_bridge_mean, besq_bridge_samples, besq_from_zero, holder_quotients, unit_grid
from slt.sampling import RngStream, make_streams
from slt.specfun import besq_moment_bound, holder_moment_bound

Z_LIMIT = 3.0
HOLDER_CHUNK = 1000
BRIDGE_CHUNK = 10_000
HOLDER_STREAM = 3

# transition checks: BESQ(1) from 1 at t = 1, BESQ(2) from 3 at t = 0.5
MEAN_CASE = (1.0, 1.0, 1.0)
VARIANCE_CASE = (2.0, 3.0, 0.5)
HOLDER_DELTA = 5.0
LP_ORDER = 4.0
BOUNDED = ("lp_norm", "holder_moment")


def _row(quantity: str, estimate: float, reference: float, stderr: float) -> Dict[str, object]:
    z = (estimate - reference) / stderr if stderr > 0.0 else 0.0
    return {"quantity": quantity, "estimate": estimate, "reference": reference, "stderr": stderr, "z_score": z}


def transition_values(delta: float, x0: float, t: float, n: int, s: RngStream) -> np.ndarray:
    return besq_from_zero(delta, x0, [0.0, t], s, n_paths=n)[:, 1]


def holder_moment_chunk(
    delta: float, resolution: int, gamma_: float, p: float, n: int, s: RngStream
) -> Tuple[float, float]:
    """Sums of D^p and D^(2p) over ``n`` BESQ(delta) paths from 0 on the unit grid."""
    grid = unit_grid(resolution)
    d = holder_quotients(besq_from_zero(delta, 0.0, grid, s, n_paths=n), grid, gamma_)
    return float(np.sum(d**p)), float(np.sum(d ** (2.0 * p)))


class BesqExperiment(Experiment):
    name = "besq"
    columns = ("quantity", "estimate", "reference", "stderr", "z_score")
    description = "BESQ transition moments, bridge mean and Holder moment bound"

    def run(self, mapper: Mapper) -> ExperimentOutput:
        cfg = self.config
        n = cfg.besq_draws
        mean_stream, var_stream, bridge_stream = self.streams(3)
        rows: List[Dict[str, object]] = []

        delta, x0, t = MEAN_CASE
        x = transition_values(delta, x0, t, n, mean_stream)
        rows.append(_row("transition_mean", float(x.mean()), x0 + delta * t, float(x.std(ddof=1) / math.sqrt(n))))

        lp_moment = float(np.mean(x**LP_ORDER))
        lp_norm = lp_moment ** (1.0 / LP_ORDER)
        lp_se = float(np.std(x**LP_ORDER, ddof=1) / math.sqrt(n)) / (LP_ORDER * lp_moment ** (1.0 - 1.0 / LP_ORDER))
        rows.append(_row("lp_norm", lp_norm, besq_moment_bound(x0, delta, t, LP_ORDER), lp_se))

        delta, x0, t = VARIANCE_CASE
        x = transition_values(delta, x0, t, n, var_stream)
        centred = (x - x.mean()) ** 2
        rows.append(
            _row(
                "transition_variance",
                float(x.var(ddof=1)),
                4.0 * x0 * t + 2.0 * delta * t**2,
                float(centred.std(ddof=1) / math.sqrt(n)),
            )
        )

        bridge_delta = 4.0 + 2.0 * cfg.alpha
        mid = self._bridge_midpoints(bridge_delta, n, bridge_stream)
        reference = float(besq_bridge_mean(bridge_delta, 0.5))
        rows.append(_row("bridge_mean_half", float(mid.mean()), reference, float(mid.std(ddof=1) / math.sqrt(n))))

        rows.append(self._holder_moment(mapper))

        output = ExperimentOutput(self.frame(rows))
        for row in rows:
            output.metrics[f"{row['quantity']}_z"] = row["z_score"]
        for row in rows:
            if row["quantity"] in BOUNDED:
                continue
            output.check(str(row["quantity"]), abs(row["z_score"]) <= Z_LIMIT, f"z = {row['z_score']:.3f}")
        for row in (r for r in rows if r["quantity"] in BOUNDED):
            output.check(
                f"{row['quantity']}_bound",
                row["estimate"] <= row["reference"],
                f"estimate = {row['estimate']:.6g}, bound = {row['reference']:.6g}",
            )
        return output

    def _bridge_midpoints(self, delta: float, n: int, s: RngStream) -> np.ndarray:
        # an odd resolution puts u = 1/2 on the grid
        resolution = 2 * (self.config.mark_resolution // 2) + 1
        middle = resolution // 2
        values = []
        remaining = n
        while remaining > 0:
            m = min(BRIDGE_CHUNK, remaining)
            values.append(besq_bridge_samples(delta, resolution, s, m)[:, middle])
            remaining -= m
        return np.concatenate(values)

    def _holder_moment(self, mapper: Mapper) -> Dict[str, object]:
        cfg = self.config
        sizes = [HOLDER_CHUNK] * (cfg.holder_paths // HOLDER_CHUNK)
        if cfg.holder_paths % HOLDER_CHUNK:
            sizes.append(cfg.holder_paths % HOLDER_CHUNK)
        streams = [s.derive(HOLDER_STREAM) for s in make_streams(cfg.seed, len(sizes))]
        job = partial(holder_moment_chunk, HOLDER_DELTA, cfg.holder_resolution, cfg.holder_gamma, cfg.holder_p)
        sums = np.array(list(mapper(job, sizes, streams)))
        total = cfg.holder_paths
        moment = float(sums[:, 0].sum() / total)
        second = float(sums[:, 1].sum() / total)
        stderr = math.sqrt(max(second - moment**2, 0.0) / total)
        bound = holder_moment_bound(HOLDER_DELTA, 0.0, cfg.holder_p, cfg.holder_gamma)
        return _row("holder_moment", moment, bound, stderr)
