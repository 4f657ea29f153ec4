"""
Self-similar marking kernels, BESQ simulation, Holder diagnostics and the aggregate field.

A kernel with exponent q attaches to a jump of size x the path s -> x^q Z(s/x),
0 <= s <= x, where Z is a unit path drawn from the kernel.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np
from scipy.special import gamma

from slt.errors import ContractError, ParameterError
from slt.sampling import RngStream, sample_ncchisq
from slt.stablepath import PathSkeleton

logger = logging.getLogger(__name__)

UnitSampler = Callable[[RngStream, int], np.ndarray]

MC_CHUNK = 10_000


class KernelVariant(str, Enum):
    HAT = "hat"
    BESQ_EXC = "besq"
    CUSTOM = "custom"


def unit_grid(resolution: int) -> np.ndarray:
    """Uniform grid of ``resolution`` points on [0, 1]."""
    if resolution < 2:
        raise ParameterError(f"resolution must be at least 2, got {resolution}")
    return np.linspace(0.0, 1.0, resolution)


def tent(s: np.ndarray | float) -> np.ndarray | float:
    """The tent z(s) = s ^ (1 - s) on [0, 1]."""
    return np.minimum(s, 1.0 - s)


@dataclass(frozen=True)
class MarkKernel:
    """
    A kappa_q marking kernel.

    Use the constructors :meth:`hat`, :meth:`besq_excursion` and :meth:`custom`.
    """

    variant: KernelVariant
    q: float
    resolution: int
    alpha: Optional[float] = None
    sampler: Optional[UnitSampler] = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if not self.q > 0.0:
            raise ParameterError(f"q must be positive, got {self.q}")
        if self.resolution < 2:
            raise ParameterError(f"resolution must be at least 2, got {self.resolution}")
        if self.variant is KernelVariant.HAT and self.q != 1.0:
            raise ParameterError("the hat kernel has q = 1")
        if self.variant is KernelVariant.BESQ_EXC:
            if self.q != 1.0:
                raise ParameterError("BESQ excursion kernels have q = 1")
            if self.alpha is None or not 0.0 < self.alpha < 1.0:
                raise ParameterError("BESQ excursion kernels need alpha in (0, 1)")
        if self.variant is KernelVariant.CUSTOM and self.sampler is None:
            raise ParameterError("custom kernels need a unit-path sampler")

    @classmethod
    def hat(cls, resolution: int = 101) -> "MarkKernel":
        return cls(KernelVariant.HAT, 1.0, resolution)

    @classmethod
    def besq_excursion(cls, alpha: float, resolution: int = 101) -> "MarkKernel":
        return cls(KernelVariant.BESQ_EXC, 1.0, resolution, alpha=alpha)

    @classmethod
    def custom(cls, sampler: UnitSampler, q: float, resolution: int) -> "MarkKernel":
        return cls(KernelVariant.CUSTOM, q, resolution, sampler=sampler)

    @property
    def grid(self) -> np.ndarray:
        return unit_grid(self.resolution)

    def sample_units(self, s: RngStream, n: int) -> np.ndarray:
        """Unit samples of ``n`` independent paths, shape (n, resolution)."""
        if self.variant is KernelVariant.HAT:
            return np.tile(tent(self.grid), (n, 1))
        if self.variant is KernelVariant.BESQ_EXC:
            return besq_bridge_samples(4.0 + 2.0 * self.alpha, self.resolution, s, n)
        samples = np.asarray(self.sampler(s, n), dtype=float)
        if samples.shape != (n, self.resolution):
            raise ContractError(
                f"custom sampler returned shape {samples.shape}, expected {(n, self.resolution)}"
            )
        return samples


@dataclass(frozen=True, eq=False)
class MarkPath:
    """A mark on a jump of size ``jump_size``: samples of x^q Z(s/x) on a uniform grid of [0, x]."""

    jump_size: float
    q: float
    samples: np.ndarray
    variant: KernelVariant = KernelVariant.CUSTOM

    def __post_init__(self) -> None:
        if self.samples[0] != 0.0 or self.samples[-1] != 0.0:
            raise ContractError("mark paths vanish at both endpoints")

    @property
    def grid(self) -> np.ndarray:
        return self.jump_size * unit_grid(self.samples.size)


def sample_unit_path(kernel: MarkKernel, s: RngStream) -> MarkPath:
    """Draw one unit path (jump size 1) from ``kernel``."""
    samples = kernel.sample_units(s, 1)[0]
    return MarkPath(jump_size=1.0, q=kernel.q, samples=samples, variant=kernel.variant)


def scale_mark(unit: MarkPath, x: float) -> MarkPath:
    """Rescale a mark to a jump ``x`` times longer: samples times x^q."""
    if not x > 0.0:
        raise ParameterError(f"x must be positive, got {x}")
    return MarkPath(
        jump_size=unit.jump_size * x,
        q=unit.q,
        samples=unit.samples * x**unit.q,
        variant=unit.variant,
    )


def eval_mark(mark: MarkPath, s: float) -> float:
    """Mark value at position ``s``; exactly 0 outside (0, x)."""
    x = mark.jump_size
    if not 0.0 < s < x:
        return 0.0
    if mark.variant is KernelVariant.HAT:
        return float(x**mark.q * tent(s / x))
    return float(np.interp(s / x, unit_grid(mark.samples.size), mark.samples))


# --- BESQ -----------------------------------------------------------------------------


def besq_from_zero(
    delta: float,
    x0: float,
    time_grid: Sequence[float] | np.ndarray,
    s: RngStream,
    n_paths: Optional[int] = None,
) -> np.ndarray:
    """
    Exact BESQ(delta) values on ``time_grid`` started from ``x0``.

    Transitions over a step h are h * ncchisq(delta, X/h).

    Returns:
        Array of shape (len(time_grid),) or (n_paths, len(time_grid))
    """
    if delta < 0.0:
        raise ParameterError(f"delta must be non-negative, got {delta}")
    if x0 < 0.0:
        raise ParameterError(f"x0 must be non-negative, got {x0}")
    times = np.asarray(time_grid, dtype=float)
    if times.size == 0 or times[0] != 0.0 or np.any(np.diff(times) <= 0.0):
        raise ParameterError("time_grid must be ascending from 0")

    n = 1 if n_paths is None else n_paths
    out = np.empty((n, times.size))
    out[:, 0] = x0
    for j, h in enumerate(np.diff(times), start=1):
        out[:, j] = h * sample_ncchisq(delta, out[:, j - 1] / h, s)
    return out[0] if n_paths is None else out


def besq_bridge_samples(delta: float, resolution: int, s: RngStream, n: int) -> np.ndarray:
    """
    BESQ(delta) bridges from 0 to 0 on the unit grid, by time inversion Z_u = u^2 X_{1/u - 1}.

    The smallest positive grid point is 1/(resolution - 1); Z_0 is pinned to 0.
    """
    u = unit_grid(resolution)
    descending = u[:0:-1]
    times = 1.0 / descending - 1.0
    x = besq_from_zero(delta, 0.0, times, s, n_paths=n)
    z = np.zeros((n, resolution))
    z[:, 1:] = (descending**2 * x)[:, ::-1]
    z[:, -1] = 0.0
    return z


def besq_bridge(alpha: float, resolution: int, s: RngStream) -> MarkPath:
    """A normalised BESQ(-2 alpha) excursion, realised as a BESQ(4 + 2 alpha) bridge."""
    if not 0.0 < alpha < 1.0:
        raise ParameterError(f"alpha must lie in (0, 1), got {alpha}")
    samples = besq_bridge_samples(4.0 + 2.0 * alpha, resolution, s, 1)[0]
    return MarkPath(jump_size=1.0, q=1.0, samples=samples, variant=KernelVariant.BESQ_EXC)


def besq_bridge_mean(delta: float, u: np.ndarray | float) -> np.ndarray | float:
    """Mean of a BESQ(delta) bridge from 0 to 0 at time u: delta u (1 - u)."""
    return delta * np.asarray(u) * (1.0 - np.asarray(u))


# --- Holder diagnostics -------------------------------------------------------------


def holder_quotient(samples: np.ndarray, grid: np.ndarray, gamma_: float) -> float:
    """Max over grid pairs of |f(t) - f(s)| / |t - s|^gamma."""
    if not gamma_ > 0.0:
        raise ParameterError(f"gamma must be positive, got {gamma_}")
    f = np.asarray(samples, dtype=float)
    t = np.asarray(grid, dtype=float)
    if f.size < 2 or f.size != t.size:
        raise ParameterError("need at least two samples on a matching grid")
    best = 0.0
    for lag in range(1, f.size):
        quotients = np.abs(f[lag:] - f[:-lag]) / np.abs(t[lag:] - t[:-lag]) ** gamma_
        best = max(best, float(quotients.max()))
    return best


def holder_quotients(samples: np.ndarray, grid: np.ndarray, gamma_: float) -> np.ndarray:
    """Row-wise :func:`holder_quotient` of a (n_paths, n_grid) matrix."""
    f = np.atleast_2d(np.asarray(samples, dtype=float))
    t = np.asarray(grid, dtype=float)
    best = np.zeros(f.shape[0])
    for lag in range(1, t.size):
        quotients = np.abs(f[:, lag:] - f[:, :-lag]) / np.abs(t[lag:] - t[:-lag]) ** gamma_
        best = np.maximum(best, quotients.max(axis=1))
    return best


def uniform_holder_constant(
    unit_quotients: np.ndarray, jump_sizes: np.ndarray, q: float, gamma_: float
) -> float:
    """Grid Holder constant over all scaled marks: max_j x_j^(q - gamma) D_j."""
    if unit_quotients.size == 0:
        return 0.0
    return float(np.max(np.asarray(jump_sizes) ** (q - gamma_) * np.asarray(unit_quotients)))


# --- Constants ----------------------------------------------------------------------


def mark_constant_c(
    kernel: MarkKernel,
    alpha: float,
    s: Optional[RngStream] = None,
    n_samples: int = 10**6,
) -> float:
    """
    c = (1+alpha) / Gamma(1-alpha) * E[Z(U)^(alpha/q)].

    Closed forms for the hat and BESQ excursion kernels; Monte Carlo for custom kernels.
    """
    if not 0.0 < alpha < 1.0:
        raise ParameterError(f"alpha must lie in (0, 1), got {alpha}")
    if not kernel.q > alpha:
        raise ParameterError(f"kernel exponent q={kernel.q} must exceed alpha={alpha}")
    if kernel.variant is KernelVariant.HAT:
        return 2.0 ** (-alpha) / gamma(1.0 - alpha)
    if kernel.variant is KernelVariant.BESQ_EXC:
        return 2.0**alpha * gamma(1.0 + alpha) / gamma(1.0 - alpha)

    if s is None:
        raise ContractError("custom kernels need a stream for the Monte Carlo constant")
    grid = kernel.grid
    total = 0.0
    remaining = n_samples
    while remaining > 0:
        n = min(MC_CHUNK, remaining)
        units = kernel.sample_units(s, n)
        u = s.uniform(n)
        pos = u * (kernel.resolution - 1)
        left = np.minimum(pos.astype(int), kernel.resolution - 2)
        w = pos - left
        rows = np.arange(n)
        z = (1.0 - w) * units[rows, left] + w * units[rows, left + 1]
        total += float(np.sum(np.maximum(z, 0.0) ** (alpha / kernel.q)))
        remaining -= n
    expectation = total / n_samples
    logger.debug("custom kernel expectation E[Z(U)^(alpha/q)] = %.6g from %d samples", expectation, n_samples)
    return (1.0 + alpha) / gamma(1.0 - alpha) * expectation


# --- Marks attached to jumps --------------------------------------------------------


@dataclass(frozen=True, eq=False)
class JumpMarks:
    """Marks for every jump of a skeleton, stored as unit samples (None for the exact hat)."""

    kernel: MarkKernel
    jump_sizes: np.ndarray
    unit_samples: Optional[np.ndarray]

    def mark(self, j: int) -> MarkPath:
        x = float(self.jump_sizes[j])
        if self.unit_samples is None:
            unit = tent(self.kernel.grid)
        else:
            unit = self.unit_samples[j]
        return MarkPath(x, self.kernel.q, unit * x**self.kernel.q, self.kernel.variant)

    def unit_quotients(self, gamma_: float) -> np.ndarray:
        """Grid gamma-Holder quotient of every jump's unit mark."""
        grid = self.kernel.grid
        if self.unit_samples is None:
            return np.full(self.jump_sizes.size, holder_quotient(tent(grid), grid, gamma_))
        if self.unit_samples.shape[0] == 0:
            return np.zeros(0)
        return holder_quotients(self.unit_samples, grid, gamma_)

    def evaluate(self, indices: np.ndarray, positions: np.ndarray) -> np.ndarray:
        """Vectorised :func:`eval_mark` for jumps ``indices`` at ``positions``."""
        indices = np.asarray(indices, dtype=int)
        positions = np.asarray(positions, dtype=float)
        x = self.jump_sizes[indices]
        inside = (positions > 0.0) & (positions < x)
        rel = np.where(inside, positions / np.where(x > 0.0, x, 1.0), 0.0)
        scale = x**self.kernel.q
        if self.unit_samples is None:
            return np.where(inside, scale * tent(rel), 0.0)
        r = self.kernel.resolution
        pos = rel * (r - 1)
        left = np.minimum(pos.astype(int), r - 2)
        w = pos - left
        z = (1.0 - w) * self.unit_samples[indices, left] + w * self.unit_samples[indices, left + 1]
        return np.where(inside, scale * z, 0.0)


def sample_jump_marks(kernel: MarkKernel, jump_sizes: np.ndarray, s: RngStream) -> JumpMarks:
    """Attach an independent mark to every jump."""
    sizes = np.asarray(jump_sizes, dtype=float)
    if kernel.variant is KernelVariant.HAT:
        return JumpMarks(kernel, sizes, None)
    units = kernel.sample_units(s, sizes.size) if sizes.size else np.zeros((0, kernel.resolution))
    return JumpMarks(kernel, sizes, units)


def cmj_aggregate(
    path: PathSkeleton,
    marks: JumpMarks,
    level_grid: Sequence[float] | np.ndarray,
    T: Optional[float] = None,
) -> np.ndarray:
    """
    Aggregate field Z_[0,T](y): sum over jumps spanning y of the mark value at y - X_{t-}.
    """
    if marks.jump_sizes.size != path.n_jumps:
        raise ContractError("every jump must carry a mark")
    horizon = path.T if T is None else T
    levels = np.asarray(level_grid, dtype=float)
    alive = np.flatnonzero(path.jump_times <= horizon)
    lo = path.jump_pre[alive]
    hi = lo + path.jump_sizes[alive]
    out = np.zeros(levels.size)
    for i, y in enumerate(levels):
        spanning = (lo < y) & (y < hi)
        if np.any(spanning):
            idx = alive[spanning]
            out[i] = float(marks.evaluate(idx, y - path.jump_pre[idx]).sum())
    return out


class FieldHolder(NamedTuple):
    """Grid Holder quotients of the aggregate field on a coarse grid and its refinement."""

    coarse: float
    fine: float

    @property
    def growth(self) -> float:
        if self.coarse == 0.0:
            return 1.0 if self.fine == 0.0 else float("inf")
        return self.fine / self.coarse


def cmj_holder_refinement(
    path: PathSkeleton,
    marks: JumpMarks,
    gamma_: float,
    n_levels: int = 201,
    factor: int = 4,
) -> FieldHolder:
    """
    Grid gamma-quotient of y -> Z_[0,T](y) over the range of the jump intervals,
    on ``n_levels`` levels and again on the grid refined ``factor`` times.

    The fine grid contains the coarse one, so its quotient is never smaller.
    """
    if n_levels < 2 or factor < 1:
        raise ParameterError("need at least two levels and a refinement factor >= 1")
    if path.n_jumps == 0:
        return FieldHolder(0.0, 0.0)
    lo = float(path.jump_pre.min())
    hi = float((path.jump_pre + path.jump_sizes).max())
    coarse = np.linspace(lo, hi, n_levels)
    fine = np.linspace(lo, hi, factor * (n_levels - 1) + 1)
    result = FieldHolder(
        holder_quotient(cmj_aggregate(path, marks, coarse), coarse, gamma_),
        holder_quotient(cmj_aggregate(path, marks, fine), fine, gamma_),
    )
    logger.debug("aggregate field quotients %.4g -> %.4g under %dx refinement", result.coarse, result.fine, factor)
    return result
