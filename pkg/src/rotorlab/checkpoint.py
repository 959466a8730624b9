"""Binary checkpoints for long quantum runs.

Layout (little endian)::

    8 bytes   magic b"RLCKPT\\x00\\x00"
    uint32    format version
    uint64    header length H
    H bytes   UTF-8 JSON header (kick_count, grid_n, params, initial, n_samples, ...)
    n*n       complex128 amplitudes, C order, FFT index order
    3*S       float64 width samples: t row, s1 row, s2 row

Files are written to a temporary sibling and renamed into place, so a crash
mid-write leaves the previous checkpoint intact.
"""

from __future__ import annotations

import json
import os
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from rotorlab.errors import CheckpointMismatchError
from rotorlab.model import SystemParams
from rotorlab.quantum import GridSpec, QuantumState, WidthSeries

MAGIC = b"RLCKPT\x00\x00"
FORMAT_VERSION = 1
_PRELUDE = struct.Struct("<8sIQ")


@dataclass
class Checkpoint:
    state: QuantumState
    series: WidthSeries
    params: SystemParams
    meta: dict


def write_checkpoint(path, state: QuantumState, series: WidthSeries, params: SystemParams, meta: dict | None = None) -> None:
    path = Path(path)
    header = {
        "kick_count": int(state.kick_count),
        "grid_n": state.grid.n,
        "params": params.to_dict(),
        "n_samples": len(series),
        "meta": meta or {},
    }
    blob = json.dumps(header, sort_keys=True).encode()
    widths = np.stack([series.t.astype(float), series.s1, series.s2]).astype("<f8")
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(_PRELUDE.pack(MAGIC, FORMAT_VERSION, len(blob)))
        fh.write(blob)
        fh.write(np.ascontiguousarray(state.amplitudes, dtype="<c16").tobytes())
        fh.write(widths.tobytes())
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)


def read_checkpoint(path) -> Checkpoint:
    with open(path, "rb") as fh:
        magic, version, hlen = _PRELUDE.unpack(fh.read(_PRELUDE.size))
        if magic != MAGIC:
            raise CheckpointMismatchError(f"{path}: not a checkpoint file")
        if version != FORMAT_VERSION:
            raise CheckpointMismatchError(f"{path}: unsupported format version {version}")
        header = json.loads(fh.read(hlen).decode())
        n = header["grid_n"]
        amps = np.frombuffer(fh.read(16 * n * n), dtype="<c16").reshape(n, n).copy()
        k = header["n_samples"]
        widths = np.frombuffer(fh.read(8 * 3 * k), dtype="<f8").reshape(3, k)
    grid = GridSpec(n)
    params = SystemParams(**header["params"])
    series = WidthSeries(widths[0].astype(np.int64), widths[1], widths[2], params, grid)
    state = QuantumState(amps, grid, header["kick_count"])
    return Checkpoint(state, series, params, header.get("meta", {}))


def check_compatible(ckpt: Checkpoint, params: SystemParams, grid_n: int, meta: dict) -> None:
    """Refuse to resume from a checkpoint written for a different run."""
    problems = []
    if ckpt.params != params:
        problems.append(f"params {ckpt.params} != {params}")
    if ckpt.state.grid.n != grid_n:
        problems.append(f"grid_n {ckpt.state.grid.n} != {grid_n}")
    for key, value in meta.items():
        if ckpt.meta.get(key) != value:
            problems.append(f"{key} {ckpt.meta.get(key)!r} != {value!r}")
    if problems:
        raise CheckpointMismatchError("checkpoint does not match config: " + "; ".join(problems))
