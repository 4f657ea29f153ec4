"""
Binary dump and load of path skeletons. Layout: docs/skeleton_format.md
"""
from __future__ import annotations

import struct
from pathlib import Path
from typing import BinaryIO, Union

import numpy as np

from slt.errors import ContractError
from slt.stablepath import PathSkeleton, SmallJumpMode, StableParams

MAGIC = b"SLTSKEL"
VERSION = 1
# alpha, a, T, eps, dt, mode, seed, stream_index, n_grid, n_jumps
HEADER = struct.Struct("<dddddBQQQQ")
MODES = {SmallJumpMode.DRIFT_ONLY: 0, SmallJumpMode.GAUSSIAN: 1}


def dump_skeleton(path: PathSkeleton, target: Union[str, Path, BinaryIO]) -> None:
    """Write ``path`` to a file name or an open binary stream."""
    if isinstance(target, (str, Path)):
        with open(target, "wb") as f:
            dump_skeleton(path, f)
        return
    target.write(MAGIC)
    target.write(bytes([VERSION]))
    target.write(
        HEADER.pack(
            path.params.alpha,
            path.params.a,
            path.T,
            path.eps,
            path.dt,
            MODES[path.small_jump_mode],
            path.seed,
            path.stream_index,
            path.values.size,
            path.n_jumps,
        )
    )
    records = np.column_stack([path.jump_times, path.jump_pre, path.jump_sizes]).astype("<f8")
    target.write(records.tobytes())
    target.write(np.asarray(path.values, dtype="<f8").tobytes())


def load_skeleton(source: Union[str, Path, BinaryIO]) -> PathSkeleton:
    """Read a skeleton written by :func:`dump_skeleton`."""
    if isinstance(source, (str, Path)):
        with open(source, "rb") as f:
            return load_skeleton(f)
    magic = source.read(len(MAGIC))
    if magic != MAGIC:
        raise ContractError("not a skeleton file (bad magic bytes)")
    version = source.read(1)
    if not version or version[0] != VERSION:
        raise ContractError(f"unsupported skeleton format version {version[0] if version else None}")
    header = source.read(HEADER.size)
    if len(header) != HEADER.size:
        raise ContractError("skeleton file is truncated")
    alpha, a, T, eps, dt, mode, seed, stream_index, n_grid, n_jumps = HEADER.unpack(header)
    if mode not in MODES.values():
        raise ContractError(f"unknown small-jump mode {mode}")
    body = source.read(24 * n_jumps + 8 * n_grid)
    if len(body) != 24 * n_jumps + 8 * n_grid:
        raise ContractError("skeleton file is truncated")
    records = np.frombuffer(body[: 24 * n_jumps], dtype="<f8").reshape(n_jumps, 3)
    values = np.frombuffer(body[24 * n_jumps :], dtype="<f8").copy()
    return PathSkeleton(
        params=StableParams(alpha, a),
        T=T,
        eps=eps,
        dt=dt,
        values=values,
        jump_times=records[:, 0].copy(),
        jump_pre=records[:, 1].copy(),
        jump_sizes=records[:, 2].copy(),
        small_jump_mode={v: k for k, v in MODES.items()}[mode],
        seed=seed,
        stream_index=stream_index,
    )
