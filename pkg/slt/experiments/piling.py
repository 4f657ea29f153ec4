"""Piling of one skeleton's jumps, with a brute-force cross-check on small random instances."""
from __future__ import annotations

import logging
from functools import partial
from typing import List

import numpy as np

from slt.errors import ContractError
from slt.estimators import Mapper
from slt.experiments.base import Experiment, ExperimentOutput, make_kernel
from slt.marks import cmj_holder_refinement, sample_jump_marks
from slt.piling import (
    PileSet,
    check_crossing_depths,
    pile_decay_slope,
    pile_holder_constants,
    pile_jumps,
    pile_jumps_naive,
)
from slt.sampling import RngStream, make_streams, sample_truncated_jump
from slt.stablepath import JumpEvent, PathSkeleton

logger = logging.getLogger(__name__)

SMALL_INSTANCES = 100
MAX_SMALL_JUMPS = 200
SMALL_EPS = 1e-3
SLOPE_TOLERANCE = 0.15
MAX_FIELD_GROWTH = 2.0
INSTANCE_STREAM = 7
MARK_STREAM = 1


def random_instance(alpha: float, s: RngStream) -> List[JumpEvent]:
    """Up to 200 jumps with uniform times, standard normal pre-jump levels and stable sizes."""
    n = int(s.integers(1, MAX_SMALL_JUMPS + 1))
    times = np.sort(s.uniform(n))
    pre = s.normal(size=n)
    sizes = sample_truncated_jump(alpha, SMALL_EPS, s.uniform(n))
    return [JumpEvent(float(t), float(x), float(d)) for t, x, d in zip(times, pre, sizes)]


def naive_agrees(alpha: float, s: RngStream) -> bool:
    instance = random_instance(alpha, s)
    return pile_jumps(instance).piles == pile_jumps_naive(instance).piles


class PilingExperiment(Experiment):
    name = "piling"
    columns = ("k", "pile_size", "max_jump")
    description = "First-fit piling of one skeleton: invariants, decay of the largest jump per pile, aggregate field"

    def run(self, mapper: Mapper) -> ExperimentOutput:
        cfg = self.config
        stream = self.streams(1)[0]
        path = self.settings.simulate(cfg.T, stream)
        pileset = pile_jumps(path)
        largest = pileset.largest_jumps()
        rows = [
            {"k": k, "pile_size": len(pile), "max_jump": float(x)}
            for k, (pile, x) in enumerate(zip(pileset.piles, largest), start=1)
        ]
        output = ExperimentOutput(self.frame(rows))
        output.metrics["n_jumps"] = path.n_jumps
        output.metrics["n_piles"] = pileset.n_piles

        try:
            pileset.check()
            output.check("pile_invariants", True, f"{path.n_jumps} jumps in {pileset.n_piles} piles")
        except ContractError as e:
            output.check("pile_invariants", False, str(e))
        try:
            check_crossing_depths(pileset)
            output.check("crossing_depth", True, "every pile k sits on a level crossed by floor(k/2) larger jumps")
        except ContractError as e:
            output.check("crossing_depth", False, str(e))

        instance_streams = [s.derive(INSTANCE_STREAM) for s in make_streams(cfg.seed, SMALL_INSTANCES)]
        agree = list(mapper(partial(naive_agrees, cfg.alpha), instance_streams))
        output.check("matches_naive", all(agree), f"{sum(agree)}/{len(agree)} small instances agree")

        self._aggregate_field(output, path, pileset, stream.derive(MARK_STREAM))
        self._decay(output, pileset)
        return output

    def _decay(self, output: ExperimentOutput, pileset: PileSet) -> None:
        try:
            slope, stderr = pile_decay_slope(pileset)
        except ContractError as e:
            logger.warning("skipping the decay fit: %s", e)
            output.check("decay_fit", False, str(e))
            return
        expected = -1.0 / self.config.alpha
        output.metrics["decay_slope"] = slope
        output.metrics["decay_slope_stderr"] = stderr
        output.metrics["decay_slope_bound"] = expected
        output.check("decay_fit", True, f"slope = {slope:.4f} over {pileset.n_piles} piles")
        # -1/alpha bounds the decay; finite paths fit shallower
        if abs(slope - expected) > SLOPE_TOLERANCE:
            logger.warning("pile decay slope %.4f is outside %.2f +/- %.2f", slope, expected, SLOPE_TOLERANCE)

    def _aggregate_field(
        self, output: ExperimentOutput, path: PathSkeleton, pileset: PileSet, s: RngStream
    ) -> None:
        kernel = make_kernel(self.config)
        if not kernel.q > self.config.alpha:
            logger.info("no aggregate-field diagnostic: q = %s does not exceed alpha", kernel.q)
            return
        gamma_ = (kernel.q - self.config.alpha) / 2.0
        marks = sample_jump_marks(kernel, path.jump_sizes, s)

        constants = pile_holder_constants(pileset, marks.unit_quotients(gamma_), path.jump_sizes, kernel.q, gamma_)
        output.metrics["pile_holder_max"] = float(constants.max()) if constants.size else 0.0
        output.metrics["pile_holder_sum"] = float(constants.sum())

        field = cmj_holder_refinement(path, marks, gamma_)
        output.metrics["field_holder_gamma"] = gamma_
        output.metrics["field_holder_coarse"] = field.coarse
        output.metrics["field_holder_fine"] = field.fine
        logger.info("aggregate field gamma-quotient %.4g -> %.4g under refinement", field.coarse, field.fine)
        output.check(
            "field_holder_refinement",
            field.growth < MAX_FIELD_GROWTH,
            f"gamma = {gamma_:.3f}, quotient {field.coarse:.4g} -> {field.fine:.4g}",
        )
