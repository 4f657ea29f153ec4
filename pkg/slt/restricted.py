"""
The process restricted to [0, b]: time spent outside the strip is cut out, so jumps
across b stop short at b and returns from below 0 re-enter at their landing value.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import partial
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from slt.errors import ParameterError
from slt.estimators import Mapper, PathSettings
from slt.sampling import RngStream
from slt.specfun import theta_b_closed
from slt.stablepath import PathSkeleton

logger = logging.getLogger(__name__)

Pieces = Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]

CENSORING_LIMIT = 0.05
CHUNK_STEPS = 256


@dataclass(frozen=True, eq=False)
class RestrictedPath:
    """
    Linear pieces of the restricted path.

    Piece ``i`` runs over restricted times ``[r0[i], r1[i]]`` and original times
    ``[t0[i], t1[i]]``, moving linearly from ``v0[i]`` to ``v1[i]``.
    """

    b: float
    r0: np.ndarray
    r1: np.ndarray
    t0: np.ndarray
    t1: np.ndarray
    v0: np.ndarray
    v1: np.ndarray
    base: Optional[PathSkeleton] = None

    @property
    def total_time(self) -> float:
        return float(self.r1[-1]) if self.r1.size else 0.0

    @property
    def n_pieces(self) -> int:
        return int(self.r0.size)

    def _locate(self, r: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        idx = np.clip(np.searchsorted(self.r0, r, side="right") - 1, 0, self.n_pieces - 1)
        span = self.r1[idx] - self.r0[idx]
        frac = np.clip(np.divide(r - self.r0[idx], span, out=np.zeros_like(span), where=span > 0.0), 0.0, 1.0)
        return idx, frac

    def time_map(self, r: float | np.ndarray) -> float | np.ndarray:
        """Original time tau(r) at restricted time ``r``, right-continuous at excisions."""
        if self.n_pieces == 0:
            raise ParameterError("the restricted path is empty")
        rr = np.clip(np.asarray(r, dtype=float), 0.0, self.total_time)
        idx, frac = self._locate(rr)
        out = self.t0[idx] + frac * (self.t1[idx] - self.t0[idx])
        return float(out) if np.ndim(r) == 0 else out

    def values_at(self, r: float | np.ndarray) -> float | np.ndarray:
        if self.n_pieces == 0:
            raise ParameterError("the restricted path is empty")
        rr = np.clip(np.asarray(r, dtype=float), 0.0, self.total_time)
        idx, frac = self._locate(rr)
        out = self.v0[idx] + frac * (self.v1[idx] - self.v0[idx])
        return float(out) if np.ndim(r) == 0 else out

    @property
    def values(self) -> np.ndarray:
        """Value at the start of every piece, then the final value."""
        if self.n_pieces == 0:
            return np.empty(0)
        return np.append(self.v0, self.v1[-1])


def _clip_pieces(t0: np.ndarray, t1: np.ndarray, v0: np.ndarray, v1: np.ndarray, b: float) -> Pieces:
    """Sub-pieces of linear segments spent inside [0, b], with exact crossing times."""
    slope = v1 - v0
    flat = slope == 0.0
    safe = np.where(flat, 1.0, slope)
    s_zero = -v0 / safe
    s_top = (b - v0) / safe
    lo = np.where(flat, 0.0, np.maximum(0.0, np.minimum(s_zero, s_top)))
    hi = np.where(flat, 1.0, np.minimum(1.0, np.maximum(s_zero, s_top)))
    inside_flat = (v0 >= 0.0) & (v0 <= b)
    keep = np.where(flat, inside_flat, hi > lo) & (t1 > t0)

    lo, hi = lo[keep], hi[keep]
    a0, a1, u0, u1 = t0[keep], t1[keep], v0[keep], v1[keep]
    dt = a1 - a0
    new_t0 = np.where(lo == 0.0, a0, a0 + lo * dt)
    new_t1 = np.where(hi == 1.0, a1, a0 + hi * dt)
    new_v0 = np.clip(np.where(lo == 0.0, u0, u0 + lo * (u1 - u0)), 0.0, b)
    new_v1 = np.clip(np.where(hi == 1.0, u1, u0 + hi * (u1 - u0)), 0.0, b)
    long_enough = new_t1 > new_t0
    return new_t0[long_enough], new_t1[long_enough], new_v0[long_enough], new_v1[long_enough]


def _assemble(b: float, pieces: Pieces, base: Optional[PathSkeleton]) -> RestrictedPath:
    t0, t1, v0, v1 = pieces
    r1 = np.cumsum(t1 - t0)
    r0 = np.concatenate([[0.0], r1[:-1]]) if r1.size else np.empty(0)
    return RestrictedPath(b=float(b), r0=r0, r1=r1, t0=t0, t1=t1, v0=v0, v1=v1, base=base)


def restrict_path(path: Union[PathSkeleton, RestrictedPath], b: float) -> RestrictedPath:
    """
    Cut out the time a skeleton spends outside [0, b].

    Segments between events are linear, so boundary crossings are snapped to their
    interpolated times. A jump from inside to above b continues at b once the path has
    come back down; a return from below 0 continues at the landing value, or at b if
    the landing is above b.
    """
    if not b > 0.0:
        raise ParameterError(f"b must be positive, got {b}")
    if isinstance(path, RestrictedPath):
        pieces = _clip_pieces(path.t0, path.t1, path.v0, path.v1, b)
        return _assemble(b, pieces, path.base)
    t0, t1, v0, v1 = path.segments()
    return _assemble(b, _clip_pieces(t0, t1, v0, v1, b), path)


# --- Local time at 0 ----------------------------------------------------------------


def _band_occupancy(d: np.ndarray, v0: np.ndarray, v1: np.ndarray, w: float) -> Tuple[np.ndarray, np.ndarray]:
    """Offset and length of the part of each linear piece spent in [0, w)."""
    start = np.zeros_like(d)
    length = np.zeros_like(d)
    below0, below1 = v0 < w, v1 < w
    both = below0 & below1
    length[both] = d[both]
    rising = below0 & ~below1
    length[rising] = d[rising] * (w - v0[rising]) / (v1[rising] - v0[rising])
    falling = ~below0 & below1
    start[falling] = d[falling] * (v0[falling] - w) / (v0[falling] - v1[falling])
    length[falling] = d[falling] - start[falling]
    return start, length


def restricted_occupation(
    path: RestrictedPath, bandwidth: float, r_grid: Optional[Sequence[float] | np.ndarray] = None
) -> float | np.ndarray:
    """
    Local time at 0 of the restricted path from the one-sided band [0, w).

    Returns the value at the end of the path, or at each restricted time of ``r_grid``.
    """
    if not bandwidth > 0.0:
        raise ParameterError(f"bandwidth must be positive, got {bandwidth}")
    start, length = _band_occupancy(path.r1 - path.r0, path.v0, path.v1, bandwidth)
    if r_grid is None:
        return float(length.sum() / bandwidth)
    rr = np.asarray(r_grid, dtype=float)
    begin = path.r0 + start
    covered = np.clip(rr[:, np.newaxis] - begin[np.newaxis, :], 0.0, length[np.newaxis, :])
    return covered.sum(axis=1) / bandwidth


def inverse_restricted_local_time(path: RestrictedPath, bandwidth: float, s: float) -> float:
    """First restricted time at which the local time at 0 exceeds ``s``; inf if never."""
    if not bandwidth > 0.0:
        raise ParameterError(f"bandwidth must be positive, got {bandwidth}")
    if s < 0.0:
        raise ParameterError(f"s must be non-negative, got {s}")
    start, length = _band_occupancy(path.r1 - path.r0, path.v0, path.v1, bandwidth)
    target = s * bandwidth
    cumulative = np.cumsum(length)
    hit = np.flatnonzero(cumulative > target)
    if hit.size == 0:
        return float("inf")
    i = int(hit[0])
    before = cumulative[i] - length[i]
    return float(path.r0[i] + start[i] + (target - before))


# --- Direct simulation of the restricted process ------------------------------------


def _advance(chunk: PathSkeleton, start: float, b: float, depth: float) -> Tuple[Pieces, str, float, float]:
    """
    Follow one simulated chunk from ``start`` until it jumps above b, falls below -depth or ends.

    Returns:
        The segments kept, the exit kind (``"top"``, ``"deep"`` or ``"none"``), the chunk
        time used and the end value
    """
    k = chunk.knots()
    t0, t1, v0, v1 = chunk.segments()
    v0, v1 = v0 + start, v1 + start
    pre, post = k.pre[1:] + start, k.post[1:] + start

    by_jump = np.where((post > b) & (pre <= b), k.times[1:], np.inf)
    slope = v1 - v0
    safe = np.where(slope == 0.0, 1.0, slope)
    rising = (v0 <= b) & (v1 > b)
    by_rise = np.where(rising, t0 + (b - v0) / safe * (t1 - t0), np.inf)
    sinking = (v0 >= -depth) & (v1 < -depth)
    by_sink = np.where(sinking, t0 + (-depth - v0) / safe * (t1 - t0), np.inf)

    top = min(float(by_jump.min(initial=np.inf)), float(by_rise.min(initial=np.inf)))
    deep = float(by_sink.min(initial=np.inf))
    t_exit = min(top, deep)
    if not math.isfinite(t_exit):
        return (t0, t1, v0, v1), "none", chunk.T, start + float(chunk.values[-1])

    keep = t0 < t_exit
    t0, t1, v0, v1 = t0[keep], t1[keep], v0[keep], v1[keep]
    cut = t1 > t_exit
    frac = np.divide(t_exit - t0, t1 - t0, out=np.ones_like(t0), where=cut)
    v1 = np.where(cut, v0 + frac * (v1 - v0), v1)
    t1 = np.where(cut, t_exit, t1)
    return (t0, t1, v0, v1), ("top" if top <= deep else "deep"), t_exit, b if top <= deep else -depth


def landing_from_below(depth: float, alpha: float, s: RngStream) -> float:
    """
    Value at which a path started at -depth first lands above 0.

    The landing is depth * G / (1 - G) with G ~ Beta(1 - alpha, alpha).
    """
    g = float(s.beta(1.0 - alpha, alpha))
    return depth * g / (1.0 - g)


def simulate_restricted(
    settings: PathSettings,
    b: float,
    s: RngStream,
    horizon: float,
    stop_local_time: float = float("inf"),
    depth: Optional[float] = None,
    chunk_steps: int = CHUNK_STEPS,
) -> RestrictedPath:
    """
    Simulate the restricted process directly, without following long excursions out of [0, b].

    Excursions above b are skipped since they return continuously to b. Excursions that
    reach ``-depth`` are skipped by drawing their landing above 0. Original times of the
    result count simulated time only.

    Args:
        settings: Simulation knobs
        b: Upper boundary
        s: Stream consumed by the simulation
        horizon: Restricted time at which to stop
        stop_local_time: Stop early once the local time at 0 exceeds this at both w and w/2
        depth: Depth below 0 at which an excursion is skipped; defaults to b
        chunk_steps: Grid steps simulated per chunk
    """
    if not b > 0.0:
        raise ParameterError(f"b must be positive, got {b}")
    if not horizon > 0.0:
        raise ParameterError(f"horizon must be positive, got {horizon}")
    depth = b if depth is None else depth
    w = settings.bandwidth
    chunk_T = chunk_steps * settings.dt
    max_virtual = 1000.0 * horizon

    collected: List[Pieces] = []
    offset = 0.0
    restricted = 0.0
    occupied = np.zeros(2)
    value = 0.0
    while restricted < horizon and offset < max_virtual:
        chunk = settings.simulate(chunk_T, s)
        segments, kind, used, end = _advance(chunk, value, b, depth)
        t0, t1, v0, v1 = _clip_pieces(*segments, b)
        collected.append((t0 + offset, t1 + offset, v0, v1))
        restricted += float(np.sum(t1 - t0))
        for j, width in enumerate((w, w / 2.0)):
            occupied[j] += float(_band_occupancy(t1 - t0, v0, v1, width)[1].sum()) / width
        offset += used
        if kind == "top":
            value = b
        elif kind == "deep":
            value = min(landing_from_below(depth, settings.params.alpha, s), b)
        else:
            value = end
        if np.all(occupied > stop_local_time):
            break

    pieces = tuple(np.concatenate([p[i] for p in collected]) for i in range(4))
    return _assemble(b, pieces, None)  # type: ignore[arg-type]


# --- Laplace exponent of the inverse local time -------------------------------------


def sigma_b_replica(
    settings: PathSettings, b: float, horizon: float, s_level: float, s: RngStream
) -> Tuple[float, float]:
    """Inverse local time at ``s_level`` of one restricted path, at bandwidths w and w/2."""
    path = simulate_restricted(settings, b, s, horizon, stop_local_time=s_level)
    w = settings.bandwidth
    sigmas = []
    for width in (w, w / 2.0):
        sigma = inverse_restricted_local_time(path, width, s_level)
        sigmas.append(sigma if sigma <= horizon else float("inf"))
    return sigmas[0], sigmas[1]


@dataclass(frozen=True)
class SigmaBResult:
    q: np.ndarray
    empirical: np.ndarray
    theta_b: np.ndarray
    censored_frac: float
    moments: np.ndarray
    n_replicas: int

    @property
    def rel_diff(self) -> np.ndarray:
        return np.abs(self.empirical - self.theta_b) / np.where(self.theta_b > 0.0, self.theta_b, 1.0)

    @property
    def censoring_ok(self) -> bool:
        return self.censored_frac <= CENSORING_LIMIT


def _empirical_exponent(sigmas: np.ndarray, q: float) -> float:
    if q == 0.0:
        return 0.0
    finite = np.isfinite(sigmas)
    return -math.log(float(np.sum(np.exp(-q * sigmas[finite]))) / sigmas.size)


def sigma_b_experiment(
    settings: PathSettings,
    b: float,
    q_list: Sequence[float],
    streams: Sequence[RngStream],
    horizon: float = 20.0,
    s_level: float = 1.0,
    mapper: Mapper = map,
) -> SigmaBResult:
    """
    Compare the empirical Laplace exponent of the restricted inverse local time with its closed form.

    Exponents at bandwidths w and w/2 are extrapolated to 2 E(w/2) - E(w). Censored
    replicas contribute e^(-q sigma) = 0.
    """
    qs = np.asarray(q_list, dtype=float)
    if np.any(qs < 0.0):
        raise ParameterError("q values must be non-negative")
    if len(streams) < 1000:
        logger.warning("only %d replicas for the restricted experiment", len(streams))
    pairs = np.array(list(mapper(partial(sigma_b_replica, settings, b, horizon, s_level), streams)), dtype=float)
    wide, narrow = pairs[:, 0], pairs[:, 1]
    censored = ~(np.isfinite(wide) & np.isfinite(narrow))
    censored_frac = float(censored.mean())
    if censored_frac > CENSORING_LIMIT:
        logger.warning("%.1f%% of replicas censored at horizon %s", 100.0 * censored_frac, horizon)

    empirical = np.array(
        [2.0 * _empirical_exponent(narrow, q) - _empirical_exponent(wide, q) for q in qs]
    )
    alpha, a = settings.params.alpha, settings.params.a
    theta = np.array([theta_b_closed(alpha, a, b, q) for q in qs])
    observed = narrow[~censored]
    moments = np.array([np.mean(observed**k) for k in range(1, 5)]) if observed.size else np.full(4, np.nan)
    return SigmaBResult(qs, empirical, theta, censored_frac, moments, int(pairs.shape[0]))
