"""
Experiments behind the ``slt`` subcommands, keyed by subcommand name.
"""
from typing import Dict, Type

from slt.experiments.base import Experiment, ExperimentOutput, RunSummary, replica_pool, write_outputs
from slt.experiments.besq import BesqExperiment
from slt.experiments.crossings import CrossingsExperiment, RatesExperiment
from slt.experiments.passage import PassageExperiment
from slt.experiments.piling import PilingExperiment
from slt.experiments.restricted import RestrictedExperiment
from slt.experiments.scaling import ScalingExperiment
from slt.experiments.simulate import SimulateExperiment
from slt.experiments.specfun_check import SpecfunCheckExperiment
from slt.experiments.theorem1 import Theorem1Experiment

REGISTRY: Dict[str, Type[Experiment]] = {
    cls.name: cls
    for cls in (
        SimulateExperiment,
        Theorem1Experiment,
        CrossingsExperiment,
        RatesExperiment,
        PilingExperiment,
        BesqExperiment,
        SpecfunCheckExperiment,
        RestrictedExperiment,
        ScalingExperiment,
        PassageExperiment,
    )
}

__all__ = [
    "Experiment",
    "ExperimentOutput",
    "REGISTRY",
    "RunSummary",
    "replica_pool",
    "write_outputs",
]
