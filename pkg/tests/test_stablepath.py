import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.stats import iqr

from slt.errors import ParameterError, ResourceCapError
from slt.sampling import RngStream, make_streams
from slt.stablepath import (
    SmallJumpMode,
    StableParams,
    compensator_drift,
    expected_jump_count,
    first_hit,
    first_passage,
    grid_for,
    inverse_local_time,
    levy_density,
    levy_double_tail,
    levy_tail,
    occupation_local_time,
    simulate_path,
    small_jump_variance,
)


@pytest.mark.parametrize("alpha", [0.2, 0.5, 0.8])
def test_levy_closed_forms_match_quadrature(alpha):
    x = 0.7
    tail, _ = quad(lambda z: levy_density(alpha, z), x, np.inf)
    assert levy_tail(alpha, x) == pytest.approx(tail, rel=1e-8)
    double, _ = quad(lambda z: levy_tail(alpha, z), x, np.inf)
    assert levy_double_tail(alpha, x) == pytest.approx(double, rel=1e-8)
    drift, _ = quad(lambda z: z * levy_density(alpha, z), x, np.inf)
    assert compensator_drift(alpha, x) == pytest.approx(drift, rel=1e-8)
    var, _ = quad(lambda z: z * z * levy_density(alpha, z), 0.0, x)
    assert small_jump_variance(alpha, x) == pytest.approx(var, rel=1e-6)


def test_params_validation():
    with pytest.raises(ParameterError):
        StableParams(1.0)
    with pytest.raises(ParameterError):
        StableParams(0.5, a=0.0)


def test_grid_for_clips_last_point():
    assert np.allclose(grid_for(1.0, 0.3), [0.0, 0.3, 0.6, 0.9, 1.0])
    assert np.array_equal(grid_for(0.0, 0.1), [0.0])
    assert np.allclose(grid_for(1.0, 0.25), [0.0, 0.25, 0.5, 0.75, 1.0])


def test_zero_horizon_path(stream):
    path = simulate_path(StableParams(0.5), 0.0, 1e-3, 1e-4, SmallJumpMode.DRIFT_ONLY, stream)
    assert path.n_jumps == 0
    assert np.array_equal(path.values, [0.0])


def test_resource_cap_refuses(stream):
    with pytest.raises(ResourceCapError):
        simulate_path(StableParams(0.5), 10.0, 1e-6, 1e-3, "drift_only", stream, resource_cap=1e3)


def test_simulation_is_deterministic():
    a = simulate_path(StableParams(0.5), 1.0, 1e-2, 1e-3, "gaussian", RngStream(4, 2))
    b = simulate_path(StableParams(0.5), 1.0, 1e-2, 1e-3, "gaussian", RngStream(4, 2))
    assert np.array_equal(a.values, b.values)
    assert np.array_equal(a.jump_times, b.jump_times)
    assert np.array_equal(a.jump_sizes, b.jump_sizes)


def test_simulated_jumps_exceed_eps(stream):
    path = simulate_path(StableParams(0.5), 1.0, 1e-2, 1e-3, "drift_only", stream)
    assert path.n_jumps > 0
    assert np.all(path.jump_sizes > 1e-2)
    assert np.all(np.diff(path.jump_times) >= 0.0)
    assert path.values[0] == 0.0


def test_jump_count_matches_intensity():
    params = StableParams(0.5, a=2.0)
    expected = expected_jump_count(params, 1.0, 1e-2)
    counts = np.array(
        [simulate_path(params, 1.0, 1e-2, 1e-2, "drift_only", s).n_jumps for s in make_streams(5, 200)]
    )
    assert abs(counts.mean() - expected) < 4 * math.sqrt(expected / counts.size)


def test_knots_merge_grid_and_jumps(small_path):
    k = small_path.knots()
    assert np.allclose(k.times, [0.0, 0.5, 0.75, 1.0])
    assert np.allclose(k.post, [0.0, -0.1, 0.35, 0.3])
    assert np.allclose(k.pre, [0.0, -0.1, -0.15, 0.3])
    assert small_path.value_at(0.8) == pytest.approx(0.35)
    assert np.allclose(small_path.value_at(np.array([0.1, 0.6])), [0.0, -0.1])


def test_occupation_local_time_by_hand(small_path):
    field = occupation_local_time(small_path, [-0.1, 0.0, 0.5], 0.1, [0.25, 1.0])
    # level 0 holds over [0, 0.5), level -0.1 over [0.5, 0.75)
    assert np.allclose(field.at_level(0.0), [2.5, 5.0])
    assert np.allclose(field.at_level(-0.1), [0.0, 2.5])
    assert np.allclose(field.at_level(0.5), [0.0, 0.0])
    assert field.final(0.0) == pytest.approx(5.0)
    with pytest.raises(ParameterError):
        field.at_level(0.05)


def test_occupation_grids_must_ascend(small_path):
    with pytest.raises(ParameterError):
        occupation_local_time(small_path, [0.1, 0.0], 0.1, [1.0])
    with pytest.raises(ParameterError):
        occupation_local_time(small_path, [0.0], 0.0, [1.0])


def test_inverse_local_time(small_path):
    field = occupation_local_time(small_path, [0.0], 0.1, [0.25, 0.5, 1.0])
    assert inverse_local_time(field, 0.0, 3.0) == pytest.approx(0.5)
    assert inverse_local_time(field, 0.0, 5.0) == math.inf


def test_first_passage_by_hand(small_path):
    assert first_passage(small_path, 0.0) == 0.0
    assert first_passage(small_path, -0.05) == pytest.approx(0.25)
    assert first_passage(small_path, 0.2) == pytest.approx(0.75)
    assert first_passage(small_path, 1.0) == math.inf


def test_first_hit_ignores_jumps_over_the_level(small_path):
    # the jump at t=0.75 carries the path over 0.2 without touching it
    assert first_passage(small_path, 0.2) == pytest.approx(0.75)
    assert first_hit(small_path, 0.2) == math.inf
    # after the jump the path drifts from 0.35 down to 0.3 over [0.75, 1]
    assert first_passage(small_path, 0.32) == pytest.approx(0.75)
    assert first_hit(small_path, 0.32) == pytest.approx(0.9)
    assert first_hit(small_path, -0.05) == pytest.approx(first_passage(small_path, -0.05))
    assert first_hit(small_path, 0.0) == 0.0


def test_occupation_bins_tile_the_horizon(stream):
    path = simulate_path(StableParams(0.5), 2.0, 1e-2, 1e-3, "gaussian", stream)
    k = path.knots()
    w = 0.0625
    lo = np.floor(k.post.min() / w) * w - w
    hi = np.ceil(k.post.max() / w) * w + w
    levels = np.arange(lo, hi + w, w)
    field = occupation_local_time(path, levels, w, [2.0])
    assert w * field.ell[:, -1].sum() == pytest.approx(2.0, rel=1e-9)


def test_occupation_is_monotone_in_time(stream):
    path = simulate_path(StableParams(0.5), 1.0, 1e-2, 1e-3, "drift_only", stream)
    field = occupation_local_time(path, np.linspace(-0.5, 0.5, 11), 0.05, np.linspace(0.0, 1.0, 21))
    assert np.all(np.diff(field.ell, axis=1) >= 0.0)
    assert np.all(field.ell[:, 0] == 0.0)


def test_terminal_value_has_zero_mean():
    finals = np.array(
        [simulate_path(StableParams(0.5), 1.0, 1e-2, 1e-3, "drift_only", s).values[-1] for s in make_streams(8, 400)]
    )
    # median of means over 20 groups; the upper tail is heavy
    group_means = finals.reshape(20, 20).mean(axis=1)
    estimate = np.median(group_means)
    spread = iqr(group_means) / math.sqrt(group_means.size)
    assert abs(estimate) < 5 * spread
