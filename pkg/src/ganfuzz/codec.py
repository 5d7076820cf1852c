"""Byte-string <-> tanh-space codec for the generator networks."""

from __future__ import annotations

import numpy as np

from .errors import UsageError


def encode_bytes(data: bytes, length: int) -> np.ndarray:
    """Map bytes to [-1, 1] floats; pad with zero bytes / truncate to `length`."""
    if length <= 0:
        raise UsageError(f"encode length must be positive, got {length}")
    buf = data[:length].ljust(length, b"\x00")
    return np.frombuffer(buf, dtype=np.uint8).astype(np.float64) / 127.5 - 1.0


def decode_floats(values: np.ndarray) -> bytes:
    """Inverse of encode_bytes; rounding and clamping make this total."""
    v = np.rint((np.asarray(values, dtype=np.float64) + 1.0) * 127.5)
    return np.clip(v, 0, 255).astype(np.uint8).tobytes()
