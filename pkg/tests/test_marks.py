import math

import mpmath
import numpy as np
import pytest
from scipy.special import gamma

from slt.errors import ContractError, ParameterError
from slt.marks import (
    KernelVariant,
    MarkKernel,
    MarkPath,
    besq_bridge_samples,
    besq_from_zero,
    FieldHolder,
    cmj_aggregate,
    cmj_holder_refinement,
    eval_mark,
    holder_quotient,
    holder_quotients,
    mark_constant_c,
    sample_jump_marks,
    sample_unit_path,
    scale_mark,
    tent,
    uniform_holder_constant,
    unit_grid,
)
from slt.sampling import RngStream
from slt.stablepath import StableParams, simulate_path


def test_kernel_validation():
    with pytest.raises(ParameterError):
        MarkKernel(KernelVariant.HAT, 0.5, 11)
    with pytest.raises(ParameterError):
        MarkKernel(KernelVariant.BESQ_EXC, 1.0, 11)
    with pytest.raises(ParameterError):
        MarkKernel(KernelVariant.CUSTOM, 1.0, 11)
    with pytest.raises(ParameterError):
        MarkKernel.custom(lambda s, n: np.zeros((n, 11)), 0.0, 11)
    with pytest.raises(ParameterError):
        MarkKernel.hat(resolution=1)


def test_hat_unit_path_is_the_tent(stream):
    unit = sample_unit_path(MarkKernel.hat(5), stream)
    assert np.allclose(unit.samples, [0.0, 0.25, 0.5, 0.25, 0.0])
    assert np.allclose(tent(np.array([0.1, 0.9])), [0.1, 0.1])


def test_mark_path_vanishes_at_endpoints():
    with pytest.raises(ContractError):
        MarkPath(1.0, 1.0, np.array([0.0, 0.5, 0.1]))


def test_scale_and_eval_mark(stream):
    unit = sample_unit_path(MarkKernel.hat(5), stream)
    mark = scale_mark(unit, 4.0)
    assert mark.jump_size == 4.0
    assert np.allclose(mark.samples, [0.0, 1.0, 2.0, 1.0, 0.0])
    assert eval_mark(mark, 2.0) == pytest.approx(2.0)
    assert eval_mark(mark, 1.0) == pytest.approx(1.0)
    assert eval_mark(mark, 0.0) == 0.0
    assert eval_mark(mark, 4.0) == 0.0
    assert eval_mark(mark, 5.0) == 0.0
    with pytest.raises(ParameterError):
        scale_mark(unit, 0.0)


def test_custom_mark_interpolates():
    mark = MarkPath(2.0, 0.7, np.array([0.0, 1.0, 0.0]))
    assert eval_mark(mark, 0.5) == pytest.approx(0.5)
    assert eval_mark(mark, 1.5) == pytest.approx(0.5)


def test_custom_sampler_shape_is_checked(stream):
    kernel = MarkKernel.custom(lambda s, n: np.zeros((n, 3)), 1.0, 11)
    with pytest.raises(ContractError):
        kernel.sample_units(stream, 4)


def test_besq_from_zero_validation(stream):
    with pytest.raises(ParameterError):
        besq_from_zero(-1.0, 0.0, [0.0, 1.0], stream)
    with pytest.raises(ParameterError):
        besq_from_zero(2.0, -1.0, [0.0, 1.0], stream)
    with pytest.raises(ParameterError):
        besq_from_zero(2.0, 0.0, [0.5, 1.0], stream)
    with pytest.raises(ParameterError):
        besq_from_zero(2.0, 0.0, [0.0, 1.0, 1.0], stream)


def test_besq_from_zero_mean_and_variance(stream):
    x = besq_from_zero(3.0, 1.0, [0.0, 0.5, 1.0], stream, n_paths=100_000)
    assert x.shape == (100_000, 3)
    assert np.all(x[:, 0] == 1.0)
    # mean x0 + delta t, variance 4 x0 t + 2 delta t^2
    se = math.sqrt(10.0 / x.shape[0])
    assert abs(x[:, 2].mean() - 4.0) < 4 * se
    assert x[:, 2].var() == pytest.approx(10.0, rel=0.05)


def test_besq_single_path_shape(stream):
    x = besq_from_zero(2.0, 0.0, unit_grid(6), stream)
    assert x.shape == (6,)
    assert np.all(x >= 0.0)


def test_bridge_endpoints_and_midpoint_mean(stream):
    z = besq_bridge_samples(5.0, 3, stream, 100_000)
    assert np.all(z[:, 0] == 0.0) and np.all(z[:, -1] == 0.0)
    # midpoint is a quarter of a BESQ(5) at time 1 from 0: mean 5/4, variance 10/16
    se = math.sqrt(10.0 / 16.0 / z.shape[0])
    assert abs(z[:, 1].mean() - 1.25) < 4 * se


def test_holder_quotient_matches_double_loop():
    rng = np.random.default_rng(3)
    grid = unit_grid(30)
    f = rng.normal(size=30)
    gamma_ = 0.3
    brute = max(
        abs(f[i] - f[j]) / abs(grid[i] - grid[j]) ** gamma_ for i in range(30) for j in range(30) if i != j
    )
    assert holder_quotient(f, grid, gamma_) == pytest.approx(brute, rel=1e-12)
    rows = holder_quotients(np.vstack([f, 2 * f]), grid, gamma_)
    assert np.allclose(rows, [brute, 2 * brute], rtol=1e-12)


def test_holder_quotient_of_identity_is_one():
    grid = unit_grid(11)
    assert holder_quotient(grid, grid, 1.0) == pytest.approx(1.0)
    with pytest.raises(ParameterError):
        holder_quotient(grid, grid, 0.0)
    with pytest.raises(ParameterError):
        holder_quotient(grid[:1], grid[:1], 0.5)


def test_uniform_holder_constant():
    assert uniform_holder_constant(np.array([1.0, 2.0]), np.array([4.0, 0.25]), 1.0, 0.5) == pytest.approx(2.0)
    assert uniform_holder_constant(np.array([]), np.array([]), 1.0, 0.5) == 0.0


@pytest.mark.parametrize("alpha", [0.25, 0.5, 0.75])
def test_closed_form_constants(alpha):
    hat_expectation = 2 * mpmath.quad(lambda u: u**alpha, [0, 0.5])
    expected_hat = (1 + alpha) / mpmath.gamma(1 - alpha) * hat_expectation
    assert mark_constant_c(MarkKernel.hat(), alpha) == pytest.approx(float(expected_hat), rel=1e-10)

    # the bridge marginal at u is u(1-u) times a Gamma(2 + alpha, scale 2)
    beta_part = mpmath.quad(lambda u: (u * (1 - u)) ** alpha, [0, 1])
    gamma_part = 2**alpha * mpmath.gamma(2 + 2 * alpha) / mpmath.gamma(2 + alpha)
    expected_besq = (1 + alpha) / mpmath.gamma(1 - alpha) * beta_part * gamma_part
    kernel = MarkKernel.besq_excursion(alpha)
    assert mark_constant_c(kernel, alpha) == pytest.approx(float(expected_besq), rel=1e-10)


def test_constant_needs_q_above_alpha():
    kernel = MarkKernel.custom(lambda s, n: np.zeros((n, 11)), 0.4, 11)
    with pytest.raises(ParameterError):
        mark_constant_c(kernel, 0.5, RngStream(1, 0))


def test_custom_constant_needs_stream():
    kernel = MarkKernel.custom(lambda s, n: np.tile(tent(unit_grid(11)), (n, 1)), 1.0, 11)
    with pytest.raises(ContractError):
        mark_constant_c(kernel, 0.5)


def test_custom_tent_constant_matches_hat(stream):
    kernel = MarkKernel.custom(lambda s, n: np.tile(tent(unit_grid(101)), (n, 1)), 1.0, 101)
    estimate = mark_constant_c(kernel, 0.5, stream, n_samples=100_000)
    assert estimate == pytest.approx(2.0**-0.5 / gamma(0.5), rel=0.01)


@pytest.mark.slow
def test_custom_besq_constant_matches_closed_form(stream):
    alpha = 0.5
    kernel = MarkKernel.custom(lambda s, n: besq_bridge_samples(4.0 + 2.0 * alpha, 101, s, n), 1.0, 101)
    estimate = mark_constant_c(kernel, alpha, stream, n_samples=200_000)
    assert estimate == pytest.approx(mark_constant_c(MarkKernel.besq_excursion(alpha), alpha), rel=0.03)


def test_jump_marks_evaluate_agrees_with_eval_mark(stream):
    marks = sample_jump_marks(MarkKernel.besq_excursion(0.5, resolution=11), np.array([0.3, 1.2]), stream)
    indices = np.array([0, 0, 1, 1, 1])
    positions = np.array([0.05, 0.31, 0.0, 0.47, 1.1])
    expected = [eval_mark(marks.mark(j), p) for j, p in zip(indices, positions)]
    assert np.allclose(marks.evaluate(indices, positions), expected, atol=1e-12)


def test_aggregate_field_on_small_path(small_path):
    marks = sample_jump_marks(MarkKernel.hat(), small_path.jump_sizes, RngStream(0, 0))
    field = cmj_aggregate(small_path, marks, [0.1, 0.4, -0.2])
    assert np.allclose(field, [0.25, 0.0, 0.0])
    assert np.allclose(cmj_aggregate(small_path, marks, [0.1], T=0.5), [0.0])


def test_unit_quotients_of_hat_marks():
    marks = sample_jump_marks(MarkKernel.hat(), np.array([0.5, 2.0]), RngStream(0, 0))
    # the tent rises by 1/2 over half the unit interval
    assert np.allclose(marks.unit_quotients(0.5), [0.5**0.5, 0.5**0.5])


def test_field_holder_growth():
    assert FieldHolder(0.0, 0.0).growth == 1.0
    assert FieldHolder(0.0, 1.0).growth == np.inf
    assert FieldHolder(2.0, 3.0).growth == pytest.approx(1.5)


def test_field_holder_refinement_on_one_tent(small_path):
    # one jump from -0.15 to 0.35: the field is a tent of height 1/4
    marks = sample_jump_marks(MarkKernel.hat(), small_path.jump_sizes, RngStream(0, 0))
    result = cmj_holder_refinement(small_path, marks, 0.5, n_levels=5)
    assert result.coarse == pytest.approx(0.5)
    assert result.fine == pytest.approx(0.5)
    assert result.growth == pytest.approx(1.0)


@pytest.mark.slow
@pytest.mark.parametrize("kernel", [MarkKernel.hat(), MarkKernel.besq_excursion(0.5)])
def test_aggregate_field_quotient_is_stable_under_refinement(kernel):
    path = simulate_path(StableParams(0.5), 1.0, 1e-3, 1e-4, "drift_only", RngStream(21, 0))
    marks = sample_jump_marks(kernel, path.jump_sizes, RngStream(21, 1))
    result = cmj_holder_refinement(path, marks, 0.25)
    assert 0.0 < result.coarse < np.inf
    assert result.fine >= result.coarse * (1.0 - 1e-9)
    assert result.growth < 2.0
