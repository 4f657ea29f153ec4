"""
First-fit piling of jumps into piles of pairwise disjoint level intervals.

Jumps are taken in decreasing size (earlier jump first on ties); each joins the
first pile none of whose intervals meet its own ``[x_pre, x_pre + dx]``.
Intervals that only touch at an endpoint count as meeting.
"""
from __future__ import annotations

import logging
from bisect import bisect_left
from dataclasses import dataclass
from typing import List, Sequence, Tuple, Union

import numpy as np

from slt.errors import ContractError
from slt.estimators import slope_fit
from slt.marks import uniform_holder_constant
from slt.stablepath import JumpEvent, PathSkeleton

logger = logging.getLogger(__name__)

JumpSource = Union[PathSkeleton, Sequence[JumpEvent]]


@dataclass(frozen=True, eq=False)
class PileSet:
    piles: Tuple[Tuple[int, ...], ...]
    source: Tuple[JumpEvent, ...]

    @property
    def n_piles(self) -> int:
        return len(self.piles)

    def largest_jumps(self) -> np.ndarray:
        """Size of the bottom (largest) jump of every pile, in pile order."""
        return np.array([self.source[p[0]].dx for p in self.piles])

    def check(self) -> None:
        """Raise :class:`ContractError` unless the partition and disjointness invariants hold."""
        seen = sorted(j for pile in self.piles for j in pile)
        if seen != list(range(len(self.source))):
            raise ContractError("piles do not partition the jumps")
        for k, pile in enumerate(self.piles):
            intervals = sorted((self.source[j].x_pre, self.source[j].x_pre + self.source[j].dx) for j in pile)
            for (_, r), (l, _) in zip(intervals, intervals[1:]):
                if l <= r:
                    raise ContractError(f"pile {k} holds intersecting intervals")
            if any(self.source[j].dx > self.source[pile[0]].dx for j in pile):
                raise ContractError(f"pile {k} does not start with its largest jump")


def _as_events(jumps: JumpSource) -> Tuple[JumpEvent, ...]:
    if isinstance(jumps, PathSkeleton):
        return jumps.jumps
    return tuple(JumpEvent(*j) for j in jumps)


def _placement_order(events: Tuple[JumpEvent, ...]) -> np.ndarray:
    times = np.array([e.t for e in events])
    sizes = np.array([e.dx for e in events])
    return np.lexsort((times, -sizes))


class _Pile:
    """Disjoint closed intervals kept sorted by left endpoint."""

    def __init__(self) -> None:
        self.starts: List[float] = []
        self.ends: List[float] = []
        self.members: List[int] = []

    def fits(self, lo: float, hi: float) -> bool:
        pos = bisect_left(self.starts, lo)
        if pos > 0 and self.ends[pos - 1] >= lo:
            return False
        if pos < len(self.starts) and self.starts[pos] <= hi:
            return False
        return True

    def add(self, j: int, lo: float, hi: float) -> None:
        pos = bisect_left(self.starts, lo)
        self.starts.insert(pos, lo)
        self.ends.insert(pos, hi)
        self.members.append(j)


def pile_jumps(jumps: JumpSource) -> PileSet:
    """
    Greedy first-fit piling with a sorted interval set per pile.

    Args:
        jumps: A skeleton or a sequence of ``(t, x_pre, dx)`` events

    Returns:
        The piles as tuples of jump indices, each pile in placement order
    """
    events = _as_events(jumps)
    piles: List[_Pile] = []
    for j in _placement_order(events):
        e = events[j]
        lo, hi = e.x_pre, e.x_pre + e.dx
        for pile in piles:
            if pile.fits(lo, hi):
                pile.add(int(j), lo, hi)
                break
        else:
            pile = _Pile()
            pile.add(int(j), lo, hi)
            piles.append(pile)
    logger.debug("piled %d jumps into %d piles", len(events), len(piles))
    return PileSet(tuple(tuple(p.members) for p in piles), events)


def pile_jumps_naive(jumps: JumpSource) -> PileSet:
    """Same piling by scanning every interval of every pile."""
    events = _as_events(jumps)
    piles: List[List[int]] = []
    for j in _placement_order(events):
        e = events[j]
        for pile in piles:
            if all(
                events[i].x_pre + events[i].dx < e.x_pre or events[i].x_pre > e.x_pre + e.dx
                for i in pile
            ):
                pile.append(int(j))
                break
        else:
            piles.append([int(j)])
    return PileSet(tuple(tuple(p) for p in piles), events)


def pile_crossing_depths(pileset: PileSet) -> np.ndarray:
    """
    For the bottom jump of every pile, the number of earlier-placed jumps whose interval
    contains its start level or its end level, whichever is larger.

    Each earlier pile holds a jump that meets the bottom jump of pile k and is at least
    as large, so it contains one of the two endpoints: depth_k >= floor(k / 2).
    """
    events = pileset.source
    if not events:
        return np.zeros(0, dtype=int)
    lo = np.array([e.x_pre for e in events])
    hi = lo + np.array([e.dx for e in events])
    order = _placement_order(events)
    rank = np.empty(order.size, dtype=int)
    rank[order] = np.arange(order.size)

    depths = np.empty(pileset.n_piles, dtype=int)
    for k, pile in enumerate(pileset.piles):
        j = pile[0]
        before = order[: rank[j]]
        b_lo, b_hi = lo[before], hi[before]
        at_start = np.count_nonzero((b_lo <= lo[j]) & (lo[j] <= b_hi))
        at_end = np.count_nonzero((b_lo <= hi[j]) & (hi[j] <= b_hi))
        depths[k] = max(at_start, at_end)
    return depths


def check_crossing_depths(pileset: PileSet) -> None:
    """Raise :class:`ContractError` if some pile k has crossing depth below floor(k / 2)."""
    depths = pile_crossing_depths(pileset)
    k = np.arange(1, depths.size + 1)
    short = np.flatnonzero(depths < k // 2)
    if short.size:
        first = int(short[0])
        raise ContractError(f"pile {first + 1} has crossing depth {depths[first]} < {(first + 1) // 2}")


def pile_decay_slope(pileset: PileSet, k_min: int = 5) -> Tuple[float, float]:
    """Least-squares slope of log(largest jump of pile k) against log k over k in [k_min, K/2]."""
    largest = pileset.largest_jumps()
    k = np.arange(1, largest.size + 1)
    window = (k >= k_min) & (k <= largest.size / 2)
    if np.count_nonzero(window) < 3:
        raise ContractError(f"only {pileset.n_piles} piles: too few for a decay fit")
    fit = slope_fit(np.log(k[window]), np.log(largest[window]))
    return fit.slope, fit.stderr


def pile_holder_constants(
    pileset: PileSet, unit_quotients: np.ndarray, jump_sizes: np.ndarray, q: float, gamma_: float
) -> np.ndarray:
    """
    Grid Holder constant D^k of the marks in each pile.

    Args:
        pileset: The piles
        unit_quotients: Grid Holder quotient of every unit mark, indexed by jump
        jump_sizes: Jump sizes, indexed by jump
        q: Kernel exponent
        gamma_: Holder exponent

    Returns:
        One constant per pile, in pile order
    """
    quotients = np.asarray(unit_quotients, dtype=float)
    sizes = np.asarray(jump_sizes, dtype=float)
    return np.array(
        [uniform_holder_constant(quotients[list(p)], sizes[list(p)], q, gamma_) for p in pileset.piles]
    )
