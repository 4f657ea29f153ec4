import numpy as np
import pytest

from slt.errors import ContractError
from slt.experiments.piling import naive_agrees, random_instance
from slt.piling import (
    PileSet,
    check_crossing_depths,
    pile_crossing_depths,
    pile_decay_slope,
    pile_holder_constants,
    pile_jumps,
    pile_jumps_naive,
)
from slt.sampling import make_streams
from slt.stablepath import JumpEvent, StableParams, simulate_path


# A = [0, 1], B = [0.5, 1.3], C = [1.2, 1.5], D = [2, 2.3]
HAND = [
    JumpEvent(0.0, 0.0, 1.0),
    JumpEvent(1.0, 0.5, 0.8),
    JumpEvent(2.0, 1.2, 0.3),
    JumpEvent(3.0, 2.0, 0.3),
]


def test_hand_example():
    piles = pile_jumps(HAND)
    assert piles.piles == ((0, 2, 3), (1,))
    piles.check()
    assert np.allclose(piles.largest_jumps(), [1.0, 0.8])


def test_touching_intervals_meet():
    piles = pile_jumps([JumpEvent(0.0, 0.0, 1.0), JumpEvent(1.0, 1.0, 0.5)])
    assert piles.piles == ((0,), (1,))


def test_ties_place_the_earlier_jump_first():
    piles = pile_jumps([JumpEvent(2.0, 0.0, 1.0), JumpEvent(1.0, 0.5, 1.0)])
    assert piles.piles == ((1,), (0,))


def test_small_path_is_one_pile(small_path):
    piles = pile_jumps(small_path)
    assert piles.piles == ((0,),)


def test_fast_and_naive_agree_on_random_instances():
    assert all(naive_agrees(0.5, s.derive(7)) for s in make_streams(11, 100))


def test_naive_matches_on_hand_example():
    assert pile_jumps_naive(HAND).piles == pile_jumps(HAND).piles


def test_check_catches_bad_piles():
    events = tuple(HAND)
    with pytest.raises(ContractError, match="intersecting"):
        PileSet(((0, 1), (2, 3)), events).check()
    with pytest.raises(ContractError, match="partition"):
        PileSet(((0, 2), (1,)), events).check()
    with pytest.raises(ContractError, match="largest"):
        PileSet(((2, 0), (1,), (3,)), events).check()


def test_decay_slope_is_exact_for_power_sizes():
    events = [JumpEvent(float(k), 0.0, float(k) ** -2) for k in range(1, 41)]
    piles = pile_jumps(events)
    assert piles.n_piles == 40
    slope, stderr = pile_decay_slope(piles)
    assert slope == pytest.approx(-2.0)
    assert stderr == pytest.approx(0.0, abs=1e-6)


def test_decay_slope_needs_piles():
    events = [JumpEvent(float(k), 0.0, 1.0 / k) for k in range(1, 7)]
    with pytest.raises(ContractError):
        pile_decay_slope(pile_jumps(events))


def test_pile_holder_constants():
    piles = pile_jumps(HAND)
    sizes = np.array([e.dx for e in HAND])
    constants = pile_holder_constants(piles, np.ones(4), sizes, 1.0, 0.5)
    assert np.allclose(constants, [1.0, np.sqrt(0.8)])


def test_crossing_depths_on_hand_example():
    piles = pile_jumps(HAND)
    # B = [0.5, 1.3] starts inside the larger A = [0, 1]
    assert list(pile_crossing_depths(piles)) == [0, 1]
    check_crossing_depths(piles)


def test_crossing_depth_bound_on_a_stack():
    # nested intervals around 0 force one pile per jump
    events = [JumpEvent(float(k), -1.0 / k, 2.0 / k) for k in range(1, 21)]
    piles = pile_jumps(events)
    assert piles.n_piles == 20
    depths = pile_crossing_depths(piles)
    assert np.all(depths >= np.arange(1, 21) // 2)


def test_crossing_depth_bound_on_random_instances():
    for s in make_streams(13, 30):
        check_crossing_depths(pile_jumps(random_instance(0.5, s.derive(7))))


def test_crossing_depth_check_rejects_bad_piles():
    # the far-away smallest jump cannot sit at the bottom of pile 2
    events = (JumpEvent(0.0, 0.0, 1.0), JumpEvent(1.0, 0.0, 0.9), JumpEvent(2.0, 5.0, 0.1))
    with pytest.raises(ContractError, match="crossing depth"):
        check_crossing_depths(PileSet(((0,), (2,), (1,)), events))


@pytest.mark.slow
def test_pile_invariants_on_a_simulated_path():
    path = simulate_path(StableParams(0.5), 1.0, 2e-4, 1e-4, "drift_only", make_streams(3, 1)[0])
    piles = pile_jumps(path)
    piles.check()
    check_crossing_depths(piles)
    slope, _ = pile_decay_slope(piles)
    # the largest jump per pile decays, though more slowly than k^(-1/alpha) at this size
    assert -2.3 < slope < -1.0
