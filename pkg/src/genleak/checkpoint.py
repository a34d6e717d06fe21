"""Binary checkpoint format for flat parameter vectors.

Layout (all integers little-endian):

    bytes 0-3   magic "GLNK"
    u32         format version (currently 1)
    u32         role length R, then R bytes of UTF-8 role tag ("" for plain
                vectors; trainers use "generator", "critic", "encoder", ...)
    u32         number of layer sizes L, then L u32 layer sizes
    u64         parameter count C (must equal the count the sizes imply)
    C float64   parameter values

Readers reject wrong magic, unknown versions, count/layout disagreement and
trailing bytes.
"""
from __future__ import annotations

import hashlib
import struct
from pathlib import Path

import numpy as np

__all__ = ["MAGIC", "FORMAT_VERSION", "save_params", "load_params", "file_sha256"]

MAGIC = b"GLNK"
FORMAT_VERSION = 1


def _implied_count(layer_sizes: tuple[int, ...]) -> int:
    return sum(a * b + b for a, b in zip(layer_sizes[:-1], layer_sizes[1:]))


def save_params(
    path: str | Path,
    layer_sizes: tuple[int, ...],
    values: np.ndarray,
    role: str = "",
) -> Path:
    """Write one parameter vector; returns the path written."""
    values = np.ascontiguousarray(values, dtype="<f8")
    layer_sizes = tuple(int(s) for s in layer_sizes)
    if len(layer_sizes) < 2 or any(s <= 0 for s in layer_sizes):
        raise ValueError(f"invalid layer sizes {layer_sizes}")
    if values.ndim != 1 or values.size != _implied_count(layer_sizes):
        raise ValueError(
            f"value count {values.size} does not match layout for sizes {layer_sizes}"
        )
    role_bytes = role.encode("utf-8")
    path = Path(path)
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", FORMAT_VERSION))
        f.write(struct.pack("<I", len(role_bytes)))
        f.write(role_bytes)
        f.write(struct.pack("<I", len(layer_sizes)))
        f.write(struct.pack(f"<{len(layer_sizes)}I", *layer_sizes))
        f.write(struct.pack("<Q", values.size))
        f.write(values.tobytes())
    return path


def load_params(path: str | Path) -> tuple[tuple[int, ...], np.ndarray, str]:
    """Read a checkpoint; returns (layer_sizes, values, role)."""
    blob = Path(path).read_bytes()

    def take(fmt: str, offset: int):
        size = struct.calcsize(fmt)
        if offset + size > len(blob):
            raise ValueError(f"truncated checkpoint file {path}")
        return struct.unpack_from(fmt, blob, offset), offset + size

    if blob[:4] != MAGIC:
        raise ValueError(f"bad magic in {path}: {blob[:4]!r}")
    (version,), off = take("<I", 4)
    if version != FORMAT_VERSION:
        raise ValueError(f"unsupported checkpoint version {version}")
    (role_len,), off = take("<I", off)
    if off + role_len > len(blob):
        raise ValueError(f"truncated checkpoint file {path}")
    role = blob[off : off + role_len].decode("utf-8")
    off += role_len
    (n_layers,), off = take("<I", off)
    sizes, off = take(f"<{n_layers}I", off)
    (count,), off = take("<Q", off)
    if count != _implied_count(sizes):
        raise ValueError(f"declared count {count} disagrees with layer sizes {sizes}")
    expected = off + 8 * count
    if len(blob) != expected:
        raise ValueError(
            f"payload length mismatch in {path}: have {len(blob)} bytes, expected {expected}"
        )
    values = np.frombuffer(blob, dtype="<f8", count=count, offset=off).astype(np.float64)
    return tuple(int(s) for s in sizes), values, role


def file_sha256(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
