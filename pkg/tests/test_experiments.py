import json

import pandas as pd
import pytest

from slt.config import ExperimentConfig, parse_config
from slt.experiments import REGISTRY, ExperimentOutput, RunSummary, write_outputs
from slt.experiments.base import make_kernel
from slt.marks import KernelVariant
from slt.templates import available_templates, generate_template, get_template_path

SMALL = dict(T=0.2, eps=1e-2, dt=1e-3, replicas=4, level_step=0.25, time_step=0.1, seed=42)


def test_registry_names_every_subcommand():
    assert set(REGISTRY) == {
        "simulate",
        "theorem1",
        "crossings",
        "rates",
        "piling",
        "besq",
        "specfun-check",
        "restricted",
        "scaling",
        "passage",
    }


def test_every_experiment_has_a_starter_config():
    assert available_templates() == sorted(REGISTRY)
    for name in available_templates():
        parse_config(get_template_path(name).read_text(encoding="utf-8"))


def test_generate_template(tmp_path):
    written = generate_template("theorem1", tmp_path / "configs")
    assert written.read_text(encoding="utf-8") == get_template_path("theorem1").read_text(encoding="utf-8")
    with pytest.raises(ValueError):
        generate_template("nope", tmp_path)


def test_output_passes_only_when_every_check_does():
    output = ExperimentOutput(pd.DataFrame())
    assert output.passed
    output.check("first", True)
    output.check("second", False, "too big")
    assert not output.passed
    assert [c.name for c in output.checks] == ["first", "second"]


def test_kernels_from_config():
    assert make_kernel(ExperimentConfig()).variant is KernelVariant.HAT
    assert make_kernel(ExperimentConfig(kernel="besq", alpha=0.3)).alpha == 0.3
    zero = make_kernel(ExperimentConfig(kernel="zero", mark_resolution=7))
    assert zero.variant is KernelVariant.CUSTOM
    assert zero.sample_units(None, 3).shape == (3, 7)


def test_simulate_writes_all_outputs(tmp_path):
    experiment = REGISTRY["simulate"](ExperimentConfig(**SMALL))
    output = experiment.run(map)
    csv_path, json_path = write_outputs(experiment, output, tmp_path, 0.5)

    table = pd.read_csv(csv_path)
    assert list(table.columns) == list(experiment.columns)
    assert len(table) == 6
    summary = RunSummary.model_validate_json(json_path.read_text(encoding="utf-8"))
    assert summary.experiment == "simulate"
    assert summary.seed == 42
    assert summary.rows == 6
    assert summary.csv == "simulate.csv"
    assert summary.passed == output.passed
    assert parse_config((tmp_path / "simulate.conf").read_text(encoding="utf-8")) == experiment.config


def test_experiment_runs_are_reproducible():
    config = ExperimentConfig(**SMALL)
    first = REGISTRY["simulate"](config).run(map)
    second = REGISTRY["simulate"](config).run(map)
    pd.testing.assert_frame_equal(first.table, second.table)


def test_crossings_at_zero_horizon_has_no_records(tmp_path):
    experiment = REGISTRY["crossings"](ExperimentConfig(**{**SMALL, "T": 0.0}))
    output = experiment.run(map)
    assert output.table.empty
    assert output.passed
    csv_path, _ = write_outputs(experiment, output, tmp_path, 0.0)
    assert csv_path.read_text(encoding="utf-8").strip() == "t,A,B,H,U,markval"


def test_theorem1_rows_follow_the_h_ladder():
    config = ExperimentConfig(**{**SMALL, "h_count": 3, "level_min": -0.5, "level_max": 0.5})
    output = REGISTRY["theorem1"](config).run(map)
    assert list(output.table["h"]) == pytest.approx([0.2, 0.1, 0.05])
    assert set(output.table["levels"]) == {5}
    assert set(output.table["times"]) == {3}
    assert set(output.table["runtime_s"]) == {0.0}
    assert {c.name for c in output.checks} == {"error_shrinks", "error_monotone"}


def test_piling_on_a_tiny_path_fails_the_decay_fit():
    output = REGISTRY["piling"](ExperimentConfig(T=0.01, eps=0.01, dt=0.001, seed=1)).run(map)
    checks = {c.name: c.passed for c in output.checks}
    assert checks["pile_invariants"]
    assert checks["crossing_depth"]
    assert checks["matches_naive"]
    assert checks["field_holder_refinement"]
    assert not checks["decay_fit"]
    assert not output.passed
    assert output.metrics["field_holder_fine"] >= output.metrics["field_holder_coarse"] * (1.0 - 1e-9)


def test_summary_serialises_metrics():
    output = ExperimentOutput(pd.DataFrame(), metrics={"slope": -0.5, "match": None})
    output.check("slope", True, "ok")
    summary = RunSummary(
        experiment="x",
        version="0",
        seed=0,
        config={},
        metrics=output.metrics,
        checks=output.checks,
        passed=output.passed,
        rows=0,
        csv="x.csv",
        wall_time_s=0.0,
    )
    assert json.loads(summary.model_dump_json())["checks"][0]["name"] == "slope"


def test_simulate_logs_the_refinement_change():
    output = REGISTRY["simulate"](ExperimentConfig(**SMALL)).run(map)
    assert output.metrics["refinement_change"] >= 0.0
    assert output.metrics["refinement_bandwidth_error"] >= 0.0
    assert "refinement" not in {c.name for c in output.checks}


def test_crossings_reports_the_tail_slope_without_checking_few_records():
    output = REGISTRY["crossings"](ExperimentConfig(**{**SMALL, "T": 1.0, "eps": 1e-3, "replicas": 20})).run(map)
    assert "tail_slope" in output.metrics
    assert "tail_slope" not in {c.name for c in output.checks}


# starter configs, with replica counts cut where the acceptance tolerances allow it
STARTER_OVERRIDES = {
    "simulate": {},
    "theorem1": {},
    "crossings": {},
    "rates": {"replicas": 200},
    "piling": {},
    "besq": {"besq_draws": 20_000, "holder_paths": 2_000},
    "specfun-check": {},
    "restricted": {"replicas": 4_000},
    "scaling": {"replicas": 3_000},
    "passage": {"replicas": 3_000},
}


@pytest.mark.slow
@pytest.mark.parametrize("name", sorted(STARTER_OVERRIDES))
def test_starter_config_passes_its_checks(name):
    config = parse_config(get_template_path(name).read_text(encoding="utf-8"))
    config = config.with_overrides(**STARTER_OVERRIDES[name])
    output = REGISTRY[name](config).run(map)
    failed = [f"{c.name}: {c.detail}" for c in output.checks if not c.passed]
    assert output.checks
    assert not failed
    assert output.passed
