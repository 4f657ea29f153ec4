"""
Level-crossing statistics and the counting estimators of local time.

Every jump that carries the path across a level ``y`` leaves a :class:`CrossingRecord`.
Counting the crossings whose mark, corridor or jump size exceeds ``h`` and rescaling
by ``h^(alpha/q) / c`` recovers the local time at ``y`` as ``h -> 0``.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, replace
from enum import Enum
from functools import partial
from typing import Callable, Iterable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy.special import gamma, kolmogorov
from scipy.stats import linregress

from slt.errors import ContractError, ParameterError
from slt.marks import JumpMarks, MarkKernel, mark_constant_c
from slt.sampling import RngStream
from slt.stablepath import (
    DEFAULT_RESOURCE_CAP,
    LocalTimeField,
    PathSkeleton,
    SmallJumpMode,
    StableParams,
    first_hit,
    first_passage,
    occupation_local_time,
    simulate_path,
)

logger = logging.getLogger(__name__)

Mapper = Callable[..., Iterable]


class CountKind(str, Enum):
    MARK = "mark"
    CORRIDOR = "corridor"
    JUMPSIZE = "jumpsize"


class CrossingRecord(NamedTuple):
    t: float
    A: float
    B: float
    H: float
    U: float
    markval: Optional[float] = None


def collect_crossings(path: PathSkeleton, y: float, marks: Optional[JumpMarks] = None) -> List[CrossingRecord]:
    """
    One record per jump with X_{t-} < y < X_t, in time order.

    Args:
        path: Simulated skeleton
        y: Level
        marks: Marks of the skeleton's jumps; fills ``markval`` when given

    Returns:
        The crossing records
    """
    if not np.isfinite(y):
        raise ParameterError(f"y must be finite, got {y}")
    if marks is not None and marks.jump_sizes.size != path.n_jumps:
        raise ContractError("every jump must carry a mark")
    lo = path.jump_pre
    hi = lo + path.jump_sizes
    idx = np.flatnonzero((lo < y) & (y < hi))
    undershoot = y - lo[idx]
    overshoot = hi[idx] - y
    markvals = marks.evaluate(idx, undershoot) if marks is not None else None

    records = []
    for n, j in enumerate(idx):
        a, b = float(undershoot[n]), float(overshoot[n])
        h = a + b
        records.append(
            CrossingRecord(
                t=float(path.jump_times[j]),
                A=a,
                B=b,
                H=h,
                U=a / h,
                markval=None if markvals is None else float(markvals[n]),
            )
        )
    return records


def _qualifying(records: Sequence[CrossingRecord], h: float, kind: CountKind) -> np.ndarray:
    """Boolean mask of records meeting the kind's threshold predicate."""
    kind = CountKind(kind)
    if kind is CountKind.MARK:
        if any(r.markval is None for r in records):
            raise ContractError("MARK counts need mark values on every record")
        return np.array([r.markval >= h for r in records], dtype=bool)
    if kind is CountKind.CORRIDOR:
        return np.array([r.A >= h and r.B >= h for r in records], dtype=bool)
    return np.array([r.H > h for r in records], dtype=bool)


def count_estimator(
    records: Sequence[CrossingRecord], h: float, kind: CountKind | str, t: float = float("inf")
) -> int:
    """Number of records up to time ``t`` whose mark, corridor or jump size clears ``h``."""
    if not h > 0.0:
        raise ParameterError(f"h must be positive, got {h}")
    if not records:
        return 0
    ok = _qualifying(records, h, CountKind(kind))
    times = np.array([r.t for r in records])
    return int(np.count_nonzero(ok & (times <= t)))


def rescaled_estimate(count: float, h: float, alpha: float, q: float, c: float) -> float:
    if not c > 0.0:
        raise ParameterError(f"c must be positive, got {c}")
    return h ** (alpha / q) * count / c


# --- Sup-error sweep ---------------------------------------------------------------


@dataclass(frozen=True)
class SweepResult:
    """Sup errors of the rescaled mark counts against an occupation baseline, one per h."""

    h: np.ndarray
    sup_error: np.ndarray
    c: float
    n_levels: int
    n_times: int
    level_step: float
    time_step: float
    runtime_s: float

    def inversions(self) -> int:
        """Number of consecutive pairs where the error grows as h shrinks."""
        return int(np.count_nonzero(np.diff(self.sup_error) > 0.0))


def _grid_step(grid: np.ndarray) -> float:
    return float(np.min(np.diff(grid))) if grid.size > 1 else 0.0


def theorem1_sweep(
    path: PathSkeleton,
    marks: JumpMarks,
    kernel: MarkKernel,
    h_list: Sequence[float],
    level_grid: Sequence[float] | np.ndarray,
    time_grid: Sequence[float] | np.ndarray,
    baseline: LocalTimeField,
    c: Optional[float] = None,
) -> SweepResult:
    """
    For each h, sup over the (level, time) grid of |h^(alpha/q) m_h(y, t) / c - l^y(t)|.

    Args:
        path: Simulated skeleton
        marks: Marks of every jump
        kernel: Kernel the marks were drawn from
        h_list: Strictly decreasing thresholds
        level_grid: Levels y
        time_grid: Times t
        baseline: Occupation local times on the same grids
        c: Estimator constant; defaults to the kernel's constant

    Returns:
        The sweep result
    """
    started = time.perf_counter()
    hs = np.asarray(h_list, dtype=float)
    if hs.size == 0 or np.any(hs <= 0.0) or np.any(np.diff(hs) >= 0.0):
        raise ParameterError("h_list must be positive and strictly decreasing")
    levels = np.asarray(level_grid, dtype=float)
    times = np.asarray(time_grid, dtype=float)
    if not (
        np.array_equal(levels, baseline.level_grid) and np.array_equal(times, baseline.time_grid)
    ):
        raise ContractError("baseline must live on the sweep's level and time grids")
    alpha = path.params.alpha
    if c is None:
        c = mark_constant_c(kernel, alpha)

    lo = path.jump_pre
    hi = lo + path.jump_sizes
    estimates = np.zeros((hs.size, levels.size, times.size))
    for i, y in enumerate(levels):
        idx = np.flatnonzero((lo < y) & (y < hi))
        if idx.size == 0:
            continue
        markvals = marks.evaluate(idx, y - lo[idx])
        jump_times = path.jump_times[idx]
        for k, h in enumerate(hs):
            crossed = np.sort(jump_times[markvals >= h])
            counts = np.searchsorted(crossed, times, side="right")
            estimates[k, i] = h ** (alpha / kernel.q) * counts / c

    errors = np.abs(estimates - baseline.ell[np.newaxis]).reshape(hs.size, -1).max(axis=1)
    result = SweepResult(
        h=hs,
        sup_error=errors,
        c=float(c),
        n_levels=int(levels.size),
        n_times=int(times.size),
        level_step=_grid_step(levels),
        time_step=_grid_step(times),
        runtime_s=time.perf_counter() - started,
    )
    logger.debug("theorem1 sweep errors: %s", np.array2string(errors, precision=4))
    return result


# --- Rates --------------------------------------------------------------------------


def counts_by_h(
    records: Sequence[CrossingRecord], h_list: Sequence[float], kind: CountKind | str, t: float = float("inf")
) -> np.ndarray:
    return np.array([count_estimator(records, h, kind, t) for h in h_list], dtype=int)


def rate_per_local_time(
    records: Sequence[CrossingRecord],
    field: LocalTimeField,
    y: float,
    h_list: Sequence[float],
    kind: CountKind | str,
) -> np.ndarray:
    """count(h, T) / l^y(T) for each h, with T the last point of the field's time grid."""
    local_time = field.final(y)
    if not local_time > 0.0:
        raise ContractError(f"local time at level {y} is zero: no rate per local time")
    horizon = float(field.time_grid[-1])
    return counts_by_h(records, h_list, kind, horizon) / local_time


def excursion_jump_rate(alpha: float) -> float:
    """(1+alpha) / Gamma(1-alpha): rate constant of crossings with H > h per unit local time."""
    return (1.0 + alpha) / gamma(1.0 - alpha)


def height_rate_constant(alpha: float) -> float:
    """(1+alpha) alpha / Gamma(1-alpha), the alternative JUMPSIZE rate constant."""
    return (1.0 + alpha) * alpha / gamma(1.0 - alpha)


def identify_rate_constant(alpha: float, fitted: float, rtol: float = 0.1) -> Optional[str]:
    """Name of the candidate JUMPSIZE constant within ``rtol`` of ``fitted``, if any."""
    candidates = {
        "excursion": excursion_jump_rate(alpha),
        "height": height_rate_constant(alpha),
    }
    matches = [name for name, value in candidates.items() if abs(fitted / value - 1.0) < rtol]
    return matches[0] if matches else None


class SlopeFit(NamedTuple):
    slope: float
    intercept: float
    stderr: float


def slope_fit(xs: Sequence[float] | np.ndarray, ys: Sequence[float] | np.ndarray) -> SlopeFit:
    """Ordinary least-squares line through ``(xs, ys)``."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.size != y.size:
        raise ParameterError("xs and ys must have the same length")
    if x.size < 3:
        raise ParameterError(f"need at least 3 points, got {x.size}")
    if np.unique(x).size != x.size:
        raise ParameterError("xs must not contain duplicates")
    fit = linregress(x, y)
    return SlopeFit(float(fit.slope), float(fit.intercept), float(fit.stderr))


def crossing_tail_slope(records: Sequence[CrossingRecord], local_time: float, xs: Sequence[float]) -> SlopeFit:
    """Log-log fit of count(H > x) / l^y(T) against x, pooled over any number of paths."""
    if not local_time > 0.0:
        raise ContractError("local time is zero: no rate per local time")
    rates = counts_by_h(records, xs, CountKind.JUMPSIZE) / local_time
    if np.any(rates <= 0.0):
        raise ContractError("every tail level needs at least one crossing")
    return slope_fit(np.log(xs), np.log(rates))


class KSResult(NamedTuple):
    statistic: float
    pvalue: float


def ks_uniform(samples: Sequence[float] | np.ndarray) -> KSResult:
    """One-sample Kolmogorov-Smirnov test against Uniform(0, 1) with the asymptotic p-value."""
    u = np.sort(np.asarray(samples, dtype=float))
    n = u.size
    if n < 1:
        raise ParameterError("need at least one sample")
    if np.any(u <= 0.0) or np.any(u >= 1.0):
        raise ParameterError("samples must lie in (0, 1)")
    i = np.arange(1, n + 1)
    d = float(max(np.max(i / n - u), np.max(u - (i - 1) / n)))
    return KSResult(d, float(kolmogorov(np.sqrt(n) * d)))


def bandwidth_error(
    path: PathSkeleton,
    level_grid: Sequence[float] | np.ndarray,
    time_grid: Sequence[float] | np.ndarray,
    bandwidth: float,
) -> float:
    """Sup difference between the occupation estimators at bandwidths w and w/2."""
    wide = occupation_local_time(path, level_grid, bandwidth, time_grid)
    narrow = occupation_local_time(path, level_grid, bandwidth / 2.0, time_grid)
    return float(np.max(np.abs(wide.ell - narrow.ell)))


# --- Monte Carlo over replicas ------------------------------------------------------


@dataclass(frozen=True)
class PathSettings:
    """Simulation knobs shared by every replica of an experiment."""

    params: StableParams
    eps: float
    dt: float
    bandwidth: float
    small_jump_mode: SmallJumpMode = SmallJumpMode.DRIFT_ONLY
    resource_cap: float = DEFAULT_RESOURCE_CAP

    def simulate(self, T: float, s: RngStream) -> PathSkeleton:
        return simulate_path(self.params, T, self.eps, self.dt, self.small_jump_mode, s, self.resource_cap)


class RefinementCheck(NamedTuple):
    change: float
    bandwidth_error: float

    @property
    def within_error(self) -> bool:
        return self.change <= self.bandwidth_error


def refinement_change(
    settings: PathSettings, T: float, level_grid: Sequence[float] | np.ndarray, s: RngStream
) -> RefinementCheck:
    """
    Sup change of l^y(T) over ``level_grid`` when dt and eps are both halved on the same stream,
    next to the bandwidth error of the unrefined path.
    """
    levels = np.asarray(level_grid, dtype=float)
    coarse = settings.simulate(T, s.clone())
    fine = replace(settings, eps=settings.eps / 2.0, dt=settings.dt / 2.0).simulate(T, s.clone())
    ell_coarse = occupation_local_time(coarse, levels, settings.bandwidth, [T]).ell[:, -1]
    ell_fine = occupation_local_time(fine, levels, settings.bandwidth, [T]).ell[:, -1]
    result = RefinementCheck(
        float(np.max(np.abs(ell_fine - ell_coarse))),
        bandwidth_error(coarse, levels, [T], settings.bandwidth),
    )
    logger.info(
        "halving dt and eps moves l^y(T) by %.4g (bandwidth error %.4g)", result.change, result.bandwidth_error
    )
    return result


def local_time_at_exponential(settings: PathSettings, s: RngStream) -> float:
    """l^0(lambda) for an independent lambda ~ Exp(1); its law is Exp(1+alpha)."""
    horizon = float(s.exponential())
    path = settings.simulate(horizon, s)
    field = occupation_local_time(path, [0.0], settings.bandwidth, [horizon])
    return float(field.ell[0, -1])


def passage_before_exponential(settings: PathSettings, y: float, s: RngStream) -> bool:
    """
    Whether T_y = inf{t : X_t = y} falls before an independent lambda ~ Exp(1).

    Above the start a jump over y does not count, so only the linear pieces are searched.
    """
    horizon = float(s.exponential())
    path = settings.simulate(horizon, s)
    hit = first_hit(path, y) if y > 0.0 else first_passage(path, y)
    return hit < horizon


def passage_probability_mc(
    settings: PathSettings,
    y: float,
    streams: Sequence[RngStream],
    mapper: Mapper = map,
) -> Tuple[float, float]:
    """
    Monte Carlo estimate of P(T_y < lambda), one replica per stream.

    Returns:
        ``(estimate, standard error)``
    """
    hits = np.fromiter(mapper(partial(passage_before_exponential, settings, y), streams), dtype=float)
    if hits.size == 0:
        raise ParameterError("need at least one replica")
    p = float(hits.mean())
    return p, float(np.sqrt(p * (1.0 - p) / hits.size))


def local_times_at_horizon(
    settings: PathSettings, levels: Sequence[float], horizon: float, s: RngStream
) -> np.ndarray:
    path = settings.simulate(horizon, s)
    return occupation_local_time(path, levels, settings.bandwidth, [horizon]).ell[:, -1]


@dataclass(frozen=True)
class ScalingResult:
    separations: np.ndarray
    moments: np.ndarray
    stderrs: np.ndarray
    fit: SlopeFit


def increment_scaling(
    settings: PathSettings,
    pairs: Sequence[Tuple[float, float]],
    p: float,
    horizon: float,
    streams: Sequence[RngStream],
    mapper: Mapper = map,
) -> ScalingResult:
    """
    Fit the exponent of E|l^y(N) - l^x(N)|^p against |y - x|.

    Args:
        settings: Simulation knobs
        pairs: Level pairs ``(x, y)``
        p: Moment order, >= 1
        horizon: Time N
        streams: One stream per replica
        mapper: ``map`` or a pool's map

    Returns:
        Per-pair moments and the log-log slope over the pairs with distinct levels
    """
    if not p >= 1.0:
        raise ParameterError(f"p must be at least 1, got {p}")
    pair_arr = np.asarray(pairs, dtype=float).reshape(-1, 2)
    levels = np.unique(pair_arr)
    lookup = {level: i for i, level in enumerate(levels)}
    ix = np.array([lookup[x] for x in pair_arr[:, 0]])
    iy = np.array([lookup[y] for y in pair_arr[:, 1]])

    ell = np.array(list(mapper(partial(local_times_at_horizon, settings, levels.tolist(), horizon), streams)))
    increments = np.abs(ell[:, iy] - ell[:, ix]) ** p
    moments = increments.mean(axis=0)
    stderrs = increments.std(axis=0, ddof=1) / np.sqrt(ell.shape[0]) if ell.shape[0] > 1 else np.zeros_like(moments)
    separations = np.abs(pair_arr[:, 1] - pair_arr[:, 0])

    usable = (separations > 0.0) & (moments > 0.0)
    fit = slope_fit(np.log(separations[usable]), np.log(moments[usable]))
    logger.info("increment scaling exponent %.4f +/- %.4f", fit.slope, fit.stderr)
    return ScalingResult(separations, moments, stderrs, fit)
