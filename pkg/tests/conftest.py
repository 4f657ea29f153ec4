import numpy as np
import pytest

from slt.sampling import RngStream
from slt.stablepath import PathSkeleton, StableParams


@pytest.fixture
def small_path() -> PathSkeleton:
    """
    A hand-built skeleton on [0, 1] with grid step 0.5 and one jump.

    Knots: t=0 at 0, t=0.5 at -0.1, a jump at t=0.75 from -0.15 to 0.35, t=1 at 0.3.
    """
    return PathSkeleton(
        params=StableParams(0.5),
        T=1.0,
        eps=0.01,
        dt=0.5,
        values=np.array([0.0, -0.1, 0.3]),
        jump_times=np.array([0.75]),
        jump_pre=np.array([-0.15]),
        jump_sizes=np.array([0.5]),
    )


@pytest.fixture
def stream() -> RngStream:
    return RngStream(12345, 0)
