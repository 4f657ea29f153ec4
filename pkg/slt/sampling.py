"""
Reproducible random streams and the primitive samplers used across the toolkit.

Every stream is derived from ``(master_seed, stream_index, *lineage)`` through a
``numpy.random.SeedSequence`` feeding a counter-based Philox generator, so replica
``i`` draws the same numbers regardless of which worker runs it.
"""
from __future__ import annotations

import copy
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from slt.errors import ParameterError

ArrayLike = Union[float, np.ndarray]


class RngStream:
    """A single reproducible random stream.

    Args:
        master_seed: 64-bit unsigned master seed
        stream_index: Index of the stream under the master seed
        lineage: Labels of derived sub-streams (empty for a root stream)
    """

    __slots__ = ("master_seed", "stream_index", "lineage", "_generator")

    def __init__(self, master_seed: int, stream_index: int, lineage: Sequence[int] = ()):
        if master_seed < 0 or master_seed >= 2**64:
            raise ParameterError(f"master_seed must be a 64-bit unsigned integer, got {master_seed}")
        if stream_index < 0:
            raise ParameterError(f"stream_index must be non-negative, got {stream_index}")
        self.master_seed = int(master_seed)
        self.stream_index = int(stream_index)
        self.lineage: Tuple[int, ...] = tuple(int(label) for label in lineage)
        entropy = [self.master_seed, self.stream_index, *self.lineage]
        self._generator = np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))

    def __repr__(self) -> str:
        return f"RngStream(master_seed={self.master_seed}, stream_index={self.stream_index}, lineage={self.lineage})"

    @property
    def generator(self) -> np.random.Generator:
        return self._generator

    @property
    def state(self) -> dict:
        """Counter state of the underlying Philox bit generator."""
        return self._generator.bit_generator.state

    def derive(self, label: int) -> "RngStream":
        """Return an independent child stream identified by ``label``."""
        return RngStream(self.master_seed, self.stream_index, (*self.lineage, label))

    def clone(self) -> "RngStream":
        """Return a copy that continues from exactly the same counter state."""
        twin = RngStream.__new__(RngStream)
        twin.master_seed = self.master_seed
        twin.stream_index = self.stream_index
        twin.lineage = self.lineage
        twin._generator = copy.deepcopy(self._generator)
        return twin

    def uniform(self, size: Optional[int] = None) -> ArrayLike:
        """Uniform draws on the open interval (0, 1)."""
        u = self._generator.random(size)
        # random() is on [0, 1); reflect the (measure-zero) zero onto the open interval
        if size is None:
            return 1.0 - u
        return 1.0 - np.asarray(u)

    def normal(self, scale: ArrayLike = 1.0, size: Optional[int] = None) -> ArrayLike:
        return self._generator.normal(0.0, scale, size)

    def exponential(self, scale: ArrayLike = 1.0, size: Optional[int] = None) -> ArrayLike:
        return self._generator.exponential(scale, size)

    def poisson(self, lam: ArrayLike, size: Optional[int] = None) -> ArrayLike:
        return self._generator.poisson(lam, size)

    def gamma(self, shape: ArrayLike, scale: ArrayLike = 1.0, size: Optional[int] = None) -> ArrayLike:
        return self._generator.gamma(shape, scale, size)

    def beta(self, a: float, b: float, size: Optional[int] = None) -> ArrayLike:
        return self._generator.beta(a, b, size)

    def integers(self, low: int, high: int, size: Optional[int] = None) -> ArrayLike:
        return self._generator.integers(low, high, size)


def make_streams(master_seed: int, n: int) -> List[RngStream]:
    """
    Create ``n`` independent streams with indices ``0..n-1``.

    Args:
        master_seed: 64-bit unsigned master seed
        n: Number of streams, at least 1

    Returns:
        The streams, ordered by stream index
    """
    if n < 1:
        raise ParameterError(f"n must be at least 1, got {n}")
    return [RngStream(master_seed, index) for index in range(n)]


def sample_truncated_jump(alpha: float, eps: float, u: ArrayLike) -> ArrayLike:
    """
    Inverse-CDF sampler for a jump of the stable Levy measure conditioned to exceed ``eps``.

    The normalised tail is ``P(J > x) = (x/eps)^(-(1+alpha))`` for ``x >= eps``.

    Args:
        alpha: Index in (0, 1)
        eps: Truncation level, > 0
        u: Uniform draw(s) in (0, 1)

    Returns:
        Jump size(s) ``eps * u^(-1/(1+alpha))``
    """
    if not 0.0 < alpha < 1.0:
        raise ParameterError(f"alpha must lie in (0, 1), got {alpha}")
    if not eps > 0.0:
        raise ParameterError(f"eps must be positive, got {eps}")
    u_arr = np.asarray(u, dtype=float)
    if np.any(u_arr <= 0.0) or np.any(u_arr >= 1.0):
        raise ParameterError("u must lie in the open interval (0, 1)")
    jumps = eps * u_arr ** (-1.0 / (1.0 + alpha))
    if np.ndim(u) == 0:
        return float(jumps)
    return jumps


def sample_poisson_events(rate: float, horizon: float, s: RngStream) -> np.ndarray:
    """
    Event times of a homogeneous Poisson process on ``[0, horizon]``, generated by exponential spacings.

    Args:
        rate: Events per unit time, >= 0
        horizon: Time horizon, >= 0
        s: Stream consumed by the draw

    Returns:
        Sorted array of event times
    """
    if not (np.isfinite(rate) and rate >= 0.0):
        raise ParameterError(f"rate must be finite and non-negative, got {rate}")
    if not (np.isfinite(horizon) and horizon >= 0.0):
        raise ParameterError(f"horizon must be finite and non-negative, got {horizon}")
    if rate == 0.0 or horizon == 0.0:
        return np.empty(0)

    mean = rate * horizon
    chunk = int(mean + 6.0 * np.sqrt(mean) + 16)
    chunks = []
    last = 0.0
    while True:
        times = last + np.cumsum(s.exponential(1.0 / rate, chunk))
        inside = times[times <= horizon]
        chunks.append(inside)
        if inside.size < times.size:
            break
        last = float(times[-1])
        chunk = max(16, chunk // 4)
    return np.concatenate(chunks)


def sample_ncchisq(df: float, nc: ArrayLike, s: RngStream, size: Optional[int] = None) -> ArrayLike:
    """
    Noncentral chi-square draw(s) as a Poisson(nc/2) mixture of Gamma(df/2 + K, scale 2) variates.

    Exact for every ``df >= 0``; ``df = nc = 0`` returns 0.

    Args:
        df: Degrees of freedom, >= 0
        nc: Noncentrality (scalar or array), >= 0
        s: Stream consumed by the draw
        size: Number of draws when ``nc`` is scalar

    Returns:
        Draw(s) with mean ``df + nc`` and variance ``2(df + 2 nc)``
    """
    if df < 0.0:
        raise ParameterError(f"df must be non-negative, got {df}")
    nc_arr = np.asarray(nc, dtype=float)
    if np.any(nc_arr < 0.0):
        raise ParameterError("nc must be non-negative")
    if nc_arr.ndim == 0 and size is None:
        k = s.poisson(float(nc_arr) / 2.0)
        return float(2.0 * s.gamma(df / 2.0 + k))
    if nc_arr.ndim == 0:
        nc_arr = np.full(size, float(nc_arr))
    k = s.poisson(nc_arr / 2.0)
    return 2.0 * s.gamma(df / 2.0 + k)
