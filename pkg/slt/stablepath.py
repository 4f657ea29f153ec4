"""
Spectrally positive stable Levy process with Laplace exponent psi(eta) = a * eta^(1+alpha).

Paths are simulated by compensated truncation: jumps above ``eps`` are kept exactly
and arrive as a Poisson process, every jump is compensated through a linear drift,
and jumps below ``eps`` are optionally replaced by a Brownian surrogate.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import NamedTuple, Sequence, Tuple

import numpy as np
from scipy.special import gamma

from slt.errors import ParameterError, ResourceCapError
from slt.sampling import RngStream, sample_poisson_events, sample_truncated_jump

logger = logging.getLogger(__name__)

DEFAULT_RESOURCE_CAP = 1e8


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha < 1.0:
        raise ParameterError(f"alpha must lie in (0, 1), got {alpha}")


def _check_positive(name: str, value: float) -> None:
    if not value > 0.0:
        raise ParameterError(f"{name} must be positive, got {value}")


# --- Levy measure -------------------------------------------------------------------


def levy_density(alpha: float, x: np.ndarray | float) -> np.ndarray | float:
    """Density of the Levy measure, (1+alpha) alpha / Gamma(1-alpha) * x^(-alpha-2)."""
    _check_alpha(alpha)
    return (1.0 + alpha) * alpha / gamma(1.0 - alpha) * np.power(x, -alpha - 2.0)


def levy_tail(alpha: float, x: float) -> float:
    """Tail intensity Pi((x, inf)) = alpha x^(-alpha-1) / Gamma(1-alpha)."""
    _check_alpha(alpha)
    _check_positive("x", x)
    return alpha * x ** (-alpha - 1.0) / gamma(1.0 - alpha)


def levy_double_tail(alpha: float, x: float) -> float:
    """Integrated tail, int_x^inf Pi((z, inf)) dz = x^(-alpha) / Gamma(1-alpha)."""
    _check_alpha(alpha)
    _check_positive("x", x)
    return x ** (-alpha) / gamma(1.0 - alpha)


def compensator_drift(alpha: float, eps: float) -> float:
    """Mean of the retained jumps per unit time, int_eps^inf x Pi(dx)."""
    _check_alpha(alpha)
    _check_positive("eps", eps)
    return (1.0 + alpha) * eps ** (-alpha) / gamma(1.0 - alpha)


def small_jump_variance(alpha: float, eps: float) -> float:
    """Variance per unit time of the discarded jumps, int_0^eps x^2 Pi(dx)."""
    _check_alpha(alpha)
    _check_positive("eps", eps)
    return (1.0 + alpha) * alpha * eps ** (1.0 - alpha) / ((1.0 - alpha) * gamma(1.0 - alpha))


# --- Types --------------------------------------------------------------------------


@dataclass(frozen=True)
class StableParams:
    """Index ``alpha`` in (0, 1) and time-scale ``a`` > 0."""

    alpha: float
    a: float = 1.0

    def __post_init__(self) -> None:
        _check_alpha(self.alpha)
        _check_positive("a", self.a)


class SmallJumpMode(str, Enum):
    DRIFT_ONLY = "drift_only"
    GAUSSIAN = "gaussian"


class JumpEvent(NamedTuple):
    t: float
    x_pre: float
    dx: float


class Knots(NamedTuple):
    """Merged event timeline of a skeleton.

    ``post[i]`` is the value held from ``times[i]`` on, ``pre[i]`` the value reached
    just before ``times[i]`` under linear interpolation of the continuous part.
    """

    times: np.ndarray
    post: np.ndarray
    pre: np.ndarray


@dataclass(frozen=True, eq=False)
class PathSkeleton:
    """A simulated path: values on the time grid plus every jump above ``eps``."""

    params: StableParams
    T: float
    eps: float
    dt: float
    values: np.ndarray
    jump_times: np.ndarray
    jump_pre: np.ndarray
    jump_sizes: np.ndarray
    small_jump_mode: SmallJumpMode = SmallJumpMode.DRIFT_ONLY
    seed: int = 0
    stream_index: int = 0

    @cached_property
    def grid_times(self) -> np.ndarray:
        return grid_for(self.T, self.dt)

    @property
    def n_jumps(self) -> int:
        return int(self.jump_times.size)

    @property
    def jumps(self) -> Tuple[JumpEvent, ...]:
        return tuple(
            JumpEvent(float(t), float(x), float(d))
            for t, x, d in zip(self.jump_times, self.jump_pre, self.jump_sizes)
        )

    @cached_property
    def _knots(self) -> Knots:
        # grid knots carry no jump of their own: pre and post coincide there
        times = np.concatenate([self.grid_times, self.jump_times])
        post = np.concatenate([self.values, self.jump_pre + self.jump_sizes])
        pre = np.concatenate([self.values, self.jump_pre])
        order = np.argsort(times, kind="stable")
        return Knots(times[order], post[order], pre[order])

    def knots(self) -> Knots:
        return self._knots

    def value_at(self, t: float | np.ndarray) -> float | np.ndarray:
        """Skeleton value at time(s) ``t`` under the piecewise-constant convention."""
        k = self._knots
        idx = np.searchsorted(k.times, np.clip(t, 0.0, self.T), side="right") - 1
        out = k.post[np.maximum(idx, 0)]
        return float(out) if np.ndim(t) == 0 else out

    def segments(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Linear pieces ``(t0, t1, v0, v1)`` between consecutive knots."""
        k = self._knots
        return k.times[:-1], k.times[1:], k.post[:-1], k.pre[1:]


@dataclass(frozen=True, eq=False)
class LocalTimeField:
    """Occupation-density local time estimates on a (level x time) grid."""

    level_grid: np.ndarray
    time_grid: np.ndarray
    bandwidth: float
    ell: np.ndarray

    def level_index(self, y: float) -> int:
        idx = int(np.argmin(np.abs(self.level_grid - y)))
        if not np.isclose(self.level_grid[idx], y, rtol=0.0, atol=1e-12):
            raise ParameterError(f"level {y} is not on the level grid")
        return idx

    def at_level(self, y: float) -> np.ndarray:
        return self.ell[self.level_index(y)]

    def final(self, y: float) -> float:
        return float(self.at_level(y)[-1])


# --- Simulation ---------------------------------------------------------------------


def grid_for(T: float, dt: float) -> np.ndarray:
    """Grid times 0, dt, 2 dt, ... with the last point clipped to ``T``."""
    if T == 0.0:
        return np.zeros(1)
    n_steps = int(np.ceil(T / dt - 1e-9))
    return np.minimum(np.arange(n_steps + 1) * dt, T)


def expected_jump_count(params: StableParams, T: float, eps: float) -> float:
    return params.a * levy_tail(params.alpha, eps) * T


def simulate_path(
    params: StableParams,
    T: float,
    eps: float,
    dt: float,
    small_jump_mode: SmallJumpMode | str,
    s: RngStream,
    resource_cap: float = DEFAULT_RESOURCE_CAP,
) -> PathSkeleton:
    """
    Simulate a skeleton of the stable process on ``[0, T]``.

    Args:
        params: Index and time-scale
        T: Horizon, >= 0
        eps: Jump truncation level, > 0
        dt: Grid step, > 0
        small_jump_mode: Drift-only compensation or an added Brownian surrogate
        s: Stream consumed by the simulation
        resource_cap: Largest admissible expected jump count

    Returns:
        The simulated skeleton
    """
    if not T >= 0.0:
        raise ParameterError(f"T must be non-negative, got {T}")
    _check_positive("eps", eps)
    _check_positive("dt", dt)
    mode = SmallJumpMode(small_jump_mode)
    expected = expected_jump_count(params, T, eps)
    if expected > resource_cap:
        raise ResourceCapError(expected, resource_cap)

    alpha, a = params.alpha, params.a
    jump_times = sample_poisson_events(a * levy_tail(alpha, eps), T, s)
    n_jumps = jump_times.size
    jump_sizes = sample_truncated_jump(alpha, eps, s.uniform(n_jumps)) if n_jumps else np.empty(0)

    grid = grid_for(T, dt)
    continuous = -a * compensator_drift(alpha, eps) * grid
    if mode is SmallJumpMode.GAUSSIAN and grid.size > 1:
        scale = np.sqrt(a * small_jump_variance(alpha, eps) * np.diff(grid))
        continuous[1:] += np.cumsum(s.normal(scale))

    cumulative = np.concatenate([[0.0], np.cumsum(jump_sizes)])
    landed = np.searchsorted(jump_times, grid, side="right")
    values = continuous + cumulative[landed]
    values[0] = 0.0
    jump_pre = np.interp(jump_times, grid, continuous) + cumulative[:n_jumps]

    logger.debug("simulated path: T=%s eps=%s jumps=%d (expected %.1f)", T, eps, n_jumps, expected)
    return PathSkeleton(
        params=params,
        T=float(T),
        eps=float(eps),
        dt=float(dt),
        values=values,
        jump_times=jump_times,
        jump_pre=jump_pre,
        jump_sizes=jump_sizes,
        small_jump_mode=mode,
        seed=s.master_seed,
        stream_index=s.stream_index,
    )


# --- Local times and passage times --------------------------------------------------


def occupation_local_time(
    path: PathSkeleton,
    level_grid: Sequence[float] | np.ndarray,
    bandwidth: float,
    time_grid: Sequence[float] | np.ndarray,
) -> LocalTimeField:
    """
    Occupation-density local times w^-1 Leb{s <= t : X_s in [y - w/2, y + w/2)}.

    The path is piecewise constant between consecutive knots (grid and jump times).
    """
    _check_positive("bandwidth", bandwidth)
    levels = np.asarray(level_grid, dtype=float)
    times = np.asarray(time_grid, dtype=float)
    if levels.size == 0 or times.size == 0:
        raise ParameterError("level and time grids must be non-empty")
    if np.any(np.diff(levels) <= 0.0) or np.any(np.diff(times) < 0.0):
        raise ParameterError("level and time grids must be ascending")

    k = path.knots()
    durations = np.diff(k.times)
    held = k.post[:-1]
    clipped = np.clip(times, 0.0, path.T)
    idx = np.clip(np.searchsorted(k.times, clipped, side="right") - 1, 0, k.times.size - 1)
    partial = clipped - k.times[idx]
    current = k.post[idx]

    half = bandwidth / 2.0
    ell = np.empty((levels.size, times.size))
    for i, y in enumerate(levels):
        inside = (held >= y - half) & (held < y + half)
        occupied = np.concatenate([[0.0], np.cumsum(np.where(inside, durations, 0.0))])
        now_inside = (current >= y - half) & (current < y + half)
        ell[i] = (occupied[idx] + np.where(now_inside, partial, 0.0)) / bandwidth
    return LocalTimeField(level_grid=levels, time_grid=times, bandwidth=float(bandwidth), ell=ell)


def inverse_local_time(field: LocalTimeField, y: float, s: float) -> float:
    """First time-grid point with local time at ``y`` strictly above ``s``; inf if none."""
    row = field.at_level(y)
    above = row > s
    if not np.any(above):
        return float("inf")
    return float(field.time_grid[int(np.argmax(above))])


def _linear_hits(path: PathSkeleton, y: float) -> np.ndarray:
    """Time at which each linear piece meets ``y``; inf for pieces that miss it."""
    t0, t1, v0, v1 = path.segments()
    lo, hi = np.minimum(v0, v1), np.maximum(v0, v1)
    on_segment = (lo <= y) & (y <= hi)
    slope = v0 - v1
    frac = np.divide(v0 - y, slope, out=np.zeros_like(v0), where=slope != 0.0)
    return np.where(on_segment, t0 + frac * (t1 - t0), np.inf)


def first_passage(path: PathSkeleton, y: float) -> float:
    """
    First time the skeleton reaches or crosses level ``y``; inf if never.

    Downward passages are located on the linearly interpolated continuous part,
    upward passages may also happen by a jump.
    """
    if y == 0.0:
        return 0.0
    if path.segments()[0].size == 0:
        return float("inf")
    hit_linear = _linear_hits(path, y)

    k = path.knots()
    by_jump = (k.pre[1:] < y) & (y <= k.post[1:])
    hit_jump = np.where(by_jump, k.times[1:], np.inf)
    return float(min(hit_linear.min(), hit_jump.min()))


def first_hit(path: PathSkeleton, y: float) -> float:
    """
    First time the skeleton takes the value ``y``; inf if never.

    Only the linear pieces count: a jump that carries the path over ``y`` is not a hit.
    Below the start the two notions agree, since downward motion is continuous.
    """
    if y == 0.0:
        return 0.0
    if path.segments()[0].size == 0:
        return float("inf")
    return float(_linear_hits(path, y).min())
