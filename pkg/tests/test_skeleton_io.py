import io

import numpy as np
import pytest

from slt.errors import ContractError
from slt.sampling import RngStream
from slt.skeleton_io import MAGIC, dump_skeleton, load_skeleton
from slt.stablepath import SmallJumpMode, StableParams, simulate_path


def test_simulated_skeleton_survives_dump_and_load(tmp_path):
    path = simulate_path(StableParams(0.4, a=1.5), 0.5, 1e-2, 1e-3, "gaussian", RngStream(21, 3))
    target = tmp_path / "replica.skel"
    dump_skeleton(path, target)
    loaded = load_skeleton(target)

    assert loaded.params == path.params
    assert (loaded.T, loaded.eps, loaded.dt) == (path.T, path.eps, path.dt)
    assert loaded.small_jump_mode is SmallJumpMode.GAUSSIAN
    assert (loaded.seed, loaded.stream_index) == (21, 3)
    assert np.array_equal(loaded.values, path.values)
    assert np.array_equal(loaded.jump_times, path.jump_times)
    assert np.array_equal(loaded.jump_pre, path.jump_pre)
    assert np.array_equal(loaded.jump_sizes, path.jump_sizes)


def test_header_layout(small_path):
    buffer = io.BytesIO()
    dump_skeleton(small_path, buffer)
    raw = buffer.getvalue()
    assert raw.startswith(MAGIC)
    assert raw[7] == 1
    # header, one jump record and three grid values
    assert len(raw) == 81 + 24 + 3 * 8


def test_bad_magic():
    with pytest.raises(ContractError, match="magic"):
        load_skeleton(io.BytesIO(b"NOTSKEL\x01" + bytes(100)))


def test_unknown_version(small_path):
    buffer = io.BytesIO()
    dump_skeleton(small_path, buffer)
    raw = bytearray(buffer.getvalue())
    raw[7] = 9
    with pytest.raises(ContractError, match="version"):
        load_skeleton(io.BytesIO(bytes(raw)))


def test_truncated_file(small_path):
    buffer = io.BytesIO()
    dump_skeleton(small_path, buffer)
    raw = buffer.getvalue()
    with pytest.raises(ContractError, match="truncated"):
        load_skeleton(io.BytesIO(raw[:-5]))
    with pytest.raises(ContractError, match="truncated"):
        load_skeleton(io.BytesIO(raw[:20]))
