"""Binary checkpoint format.

Layout (all integers little-endian)::

    b"GSIMCKPT"             magic
    u32                     format version
    u64                     Adam step counter
    u32                     entry count
    entries:
        u32 + bytes         UTF-8 name
        u32 + u64 * ndim    shape
        f64 * prod(shape)   values

Parameters are stored under their own names, Adam moments under
``adam_m/<name>`` and ``adam_v/<name>``.
"""

from __future__ import annotations

import io
import os
import struct
from typing import BinaryIO

import numpy as np

from .nn import ParamStore

MAGIC = b"GSIMCKPT"
VERSION = 1


class CheckpointError(ValueError):
    pass


def _write_entry(f: BinaryIO, name: str, arr: np.ndarray) -> None:
    raw = name.encode("utf-8")
    f.write(struct.pack("<I", len(raw)))
    f.write(raw)
    f.write(struct.pack("<I", arr.ndim))
    f.write(struct.pack(f"<{arr.ndim}Q", *arr.shape))
    f.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def _read_exact(f: BinaryIO, n: int) -> bytes:
    data = f.read(n)
    if len(data) != n:
        raise CheckpointError("truncated checkpoint")
    return data


def _read_entry(f: BinaryIO) -> tuple[str, np.ndarray]:
    (name_len,) = struct.unpack("<I", _read_exact(f, 4))
    name = _read_exact(f, name_len).decode("utf-8")
    (ndim,) = struct.unpack("<I", _read_exact(f, 4))
    shape = struct.unpack(f"<{ndim}Q", _read_exact(f, 8 * ndim))
    count = int(np.prod(shape, dtype=np.int64))
    values = np.frombuffer(_read_exact(f, 8 * count), dtype="<f8").astype(np.float64)
    return name, values.reshape(shape)


def dump_checkpoint(store: ParamStore) -> bytes:
    f = io.BytesIO()
    f.write(MAGIC)
    f.write(struct.pack("<IQI", VERSION, store.step, 3 * len(store)))
    for name in store:
        _write_entry(f, name, store[name].value)
    for name in store:
        _write_entry(f, f"adam_m/{name}", store.adam_m[name])
    for name in store:
        _write_entry(f, f"adam_v/{name}", store.adam_v[name])
    return f.getvalue()


def parse_checkpoint(data: bytes) -> tuple[int, dict[str, np.ndarray]]:
    f = io.BytesIO(data)
    if f.read(len(MAGIC)) != MAGIC:
        raise CheckpointError("not a checkpoint file (bad magic)")
    version, step, count = struct.unpack("<IQI", _read_exact(f, 16))
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version} (expected {VERSION})")
    entries = dict(_read_entry(f) for _ in range(count))
    if f.read(1):
        raise CheckpointError("trailing bytes after last entry")
    return step, entries


def save_checkpoint(store: ParamStore, path: str | os.PathLike) -> None:
    data = dump_checkpoint(store)
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as f:
        f.write(data)
    os.replace(tmp, path)


def load_checkpoint(path: str | os.PathLike, into: ParamStore) -> ParamStore:
    """Load values into ``into``, whose names and shapes must match exactly."""
    with open(path, "rb") as f:
        step, entries = parse_checkpoint(f.read())
    expected = set(into.names())
    stored = {k for k in entries if not k.startswith(("adam_m/", "adam_v/"))}
    if stored != expected:
        missing = sorted(expected - stored)
        extra = sorted(stored - expected)
        raise CheckpointError(f"checkpoint does not match model: missing {missing[:5]}, "
                              f"unexpected {extra[:5]}")
    for name in into:
        target = into[name]
        for key in (name, f"adam_m/{name}", f"adam_v/{name}"):
            if key not in entries:
                raise CheckpointError(f"checkpoint lacks entry {key!r}")
            if entries[key].shape != target.shape:
                raise CheckpointError(f"tensor {key!r}: checkpoint shape {entries[key].shape}, "
                                      f"model expects {target.shape}")
        target.value[...] = entries[name]
        into.adam_m[name][...] = entries[f"adam_m/{name}"]
        into.adam_v[name][...] = entries[f"adam_v/{name}"]
    into.step = step
    return into
