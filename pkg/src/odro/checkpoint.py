"""Binary state checkpoints.

Layout: 8-byte magic ``ODROCHK1``, unsigned 64-bit little-endian length
(number of values), the values as IEEE-754 binary64 little-endian, then an
8-byte checksum: the 64-bit sum of the value bytes modulo 2^64.  Round-trips
are bit-exact.
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .core import Array, ConfigurationError, OdroError

MAGIC = b"ODROCHK1"


class CheckpointError(OdroError):
    """Base class for malformed checkpoint files."""


class BadMagic(CheckpointError):
    pass


class LengthMismatch(CheckpointError):
    pass


class ChecksumMismatch(CheckpointError):
    pass


def _checksum(payload: bytes) -> int:
    return sum(payload) & 0xFFFFFFFFFFFFFFFF


def write_checkpoint(state: Array, path: str | Path) -> None:
    """Serialize a finite state vector; overwrites any existing file."""
    values = np.ascontiguousarray(np.asarray(state, dtype="<f8").ravel())
    if not np.all(np.isfinite(values)):
        raise ConfigurationError("refusing to checkpoint a non-finite state")
    payload = values.tobytes()
    blob = MAGIC + struct.pack("<Q", values.size) + payload + struct.pack("<Q", _checksum(payload))
    Path(path).write_bytes(blob)


def read_checkpoint(path: str | Path) -> Array:
    """Deserialize a state vector, validating magic, length, and checksum."""
    blob = Path(path).read_bytes()
    if len(blob) < len(MAGIC) + 8 or blob[: len(MAGIC)] != MAGIC:
        raise BadMagic(f"{path}: not a checkpoint file")
    (count,) = struct.unpack_from("<Q", blob, len(MAGIC))
    expected = len(MAGIC) + 8 + 8 * count + 8
    if len(blob) != expected:
        raise LengthMismatch(
            f"{path}: file is {len(blob)} bytes, expected {expected} for {count} values"
        )
    payload = blob[len(MAGIC) + 8 : len(MAGIC) + 8 + 8 * count]
    (stored,) = struct.unpack_from("<Q", blob, len(MAGIC) + 8 + 8 * count)
    if stored != _checksum(payload):
        raise ChecksumMismatch(f"{path}: checksum {stored} does not match payload")
    return np.frombuffer(payload, dtype="<f8").astype(float, copy=True)
