import json

import pytest
from typer.testing import CliRunner

from slt import __version__
from slt.cli import app
from slt.config import parse_config
from slt.skeleton_io import load_skeleton

runner = CliRunner()

SMALL_CONFIG = "T=0.5\neps=1e-2\ndt=1e-3\nreplicas=20\nseed=99\n"


@pytest.fixture
def small_config(tmp_path):
    path = tmp_path / "small.conf"
    path.write_text(SMALL_CONFIG, encoding="utf-8")
    return path


def test_version():
    result = runner.invoke(app, ["version"])
    assert result.exit_code == 0
    assert __version__ in result.output


def test_schema_lists_summary_fields():
    result = runner.invoke(app, ["schema"])
    assert result.exit_code == 0
    assert '"wall_time_s"' in result.output
    assert '"checks"' in result.output


def test_bad_config_exits_with_usage_error(tmp_path):
    bad = tmp_path / "bad.conf"
    bad.write_text("alpha=0.5\nalpha=2\n", encoding="utf-8")
    result = runner.invoke(app, ["simulate", "--config", str(bad), "--out", str(tmp_path)])
    assert result.exit_code == 1
    assert "line 2" in result.output


def test_missing_config_exits_with_usage_error(tmp_path):
    result = runner.invoke(app, ["simulate", "--config", str(tmp_path / "absent.conf")])
    assert result.exit_code == 1
    assert "cannot read" in result.output


def test_crossings_at_zero_horizon_writes_header_only(tmp_path):
    config = tmp_path / "zero.conf"
    config.write_text("T=0\nreplicas=2\n", encoding="utf-8")
    result = runner.invoke(app, ["crossings", "-c", str(config), "-o", str(tmp_path / "out")])
    assert result.exit_code == 0
    assert (tmp_path / "out" / "crossings.csv").read_text(encoding="utf-8").strip() == "t,A,B,H,U,markval"
    summary = json.loads((tmp_path / "out" / "crossings.json").read_text(encoding="utf-8"))
    assert summary["passed"] is True
    assert summary["rows"] == 0


def test_output_does_not_depend_on_worker_count(tmp_path, small_config):
    serial = runner.invoke(app, ["simulate", "-c", str(small_config), "-o", str(tmp_path / "one"), "-t", "1"])
    pooled = runner.invoke(app, ["simulate", "-c", str(small_config), "-o", str(tmp_path / "two"), "-t", "2"])
    assert serial.exit_code in (0, 2)
    assert pooled.exit_code == serial.exit_code
    assert (tmp_path / "one" / "simulate.csv").read_bytes() == (tmp_path / "two" / "simulate.csv").read_bytes()


def test_seed_flag_overrides_config(tmp_path, small_config):
    result = runner.invoke(app, ["simulate", "-c", str(small_config), "-o", str(tmp_path), "--seed", "5"])
    assert result.exit_code in (0, 2)
    assert json.loads((tmp_path / "simulate.json").read_text(encoding="utf-8"))["seed"] == 5


def test_failed_checks_exit_with_acceptance_error(tmp_path):
    config = tmp_path / "tiny.conf"
    config.write_text("T=0.01\neps=0.01\ndt=0.001\nseed=1\n", encoding="utf-8")
    result = runner.invoke(app, ["piling", "-c", str(config), "-o", str(tmp_path)])
    assert result.exit_code == 2
    assert json.loads((tmp_path / "piling.json").read_text(encoding="utf-8"))["passed"] is False


def test_simulate_dump_writes_a_loadable_skeleton(tmp_path, small_config):
    dump = tmp_path / "replica0.skel"
    result = runner.invoke(app, ["simulate", "-c", str(small_config), "-o", str(tmp_path), "--dump", str(dump)])
    assert result.exit_code in (0, 2)
    skeleton = load_skeleton(dump)
    assert (skeleton.seed, skeleton.stream_index) == (99, 0)
    assert skeleton.T == 0.5
    assert skeleton.values[0] == 0.0


def test_init_writes_a_parseable_config(tmp_path):
    result = runner.invoke(app, ["init", "--experiment", "restricted", "--output-dir", str(tmp_path)])
    assert result.exit_code == 0
    parse_config((tmp_path / "restricted.conf").read_text(encoding="utf-8"))


def test_init_rejects_unknown_experiment(tmp_path):
    result = runner.invoke(app, ["init", "--experiment", "nope", "--output-dir", str(tmp_path)])
    assert result.exit_code == 1


@pytest.mark.slow
def test_specfun_check_passes(tmp_path):
    result = runner.invoke(app, ["specfun-check", "-o", str(tmp_path)])
    assert result.exit_code == 0
    summary = json.loads((tmp_path / "specfun-check.json").read_text(encoding="utf-8"))
    assert summary["passed"] is True
    assert summary["rows"] == 45
