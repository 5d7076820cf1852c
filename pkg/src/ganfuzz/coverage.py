"""AFL-style bucketed edge-pair coverage map.

Each executed edge pair hashes to one of 65,536 cells by XOR of consecutive
edge ids. Per-run hit counts are quantized into the classic hit-count buckets
{1, 2, 3, 4-7, 8-15, 16-31, 32-127, 128+}; a run is novel when it sets a
bucket bit no earlier run has set.
"""

from __future__ import annotations

import numpy as np

from .targets import Trace

MAP_SIZE = 65536

# Bucket lower bounds; bucket index = searchsorted position.
_BUCKET_BOUNDS = (1, 2, 3, 4, 8, 16, 32, 128)


def bucket_index(count: int) -> int:
    """Bucket index (0..7) for a positive hit count; -1 for zero hits."""
    if count <= 0:
        return -1
    idx = 0
    for i, low in enumerate(_BUCKET_BOUNDS):
        if count >= low:
            idx = i
    return idx


def _build_lut(max_count: int = 4096) -> np.ndarray:
    lut = np.zeros(max_count + 1, dtype=np.uint8)
    for c in range(1, max_count + 1):
        lut[c] = 1 << bucket_index(c)
    return lut


_LUT = _build_lut()
_LUT_MAX = len(_LUT) - 1


def trace_cells(trace: Trace) -> tuple[np.ndarray, np.ndarray]:
    """Return (cell indices, bucket bitmasks) for one run's hit counts."""
    raw = trace.edges
    if isinstance(raw, (bytes, bytearray)):
        edges = np.frombuffer(bytes(raw), dtype=np.uint8).astype(np.uint32)
    else:
        edges = np.asarray(raw, dtype=np.uint32)
    prev = np.empty_like(edges)
    prev[0] = 0
    prev[1:] = edges[:-1]
    idx = (prev ^ edges) & (MAP_SIZE - 1)
    # bincount only up to the largest observed index; targets with small
    # dense edge ids stay cheap this way.
    counts = np.bincount(idx)
    hit = np.nonzero(counts)[0]
    bits = _LUT[np.minimum(counts[hit], _LUT_MAX)]
    return hit, bits


class CoverageMap:
    """Global bucket-bit accumulator; mutated only through update()."""

    def __init__(self):
        self.cells = np.zeros(MAP_SIZE, dtype=np.uint8)

    def update(self, trace: Trace) -> bool:
        """Fold one trace in; True iff any previously unset bucket bit was set."""
        if not trace.edges:
            return False
        hit, bits = trace_cells(trace)
        seen = self.cells[hit]
        novel = bool(np.any(bits & ~seen))
        self.cells[hit] = seen | bits
        return novel

    def would_be_novel(self, trace: Trace) -> bool:
        if not trace.edges:
            return False
        hit, bits = trace_cells(trace)
        return bool(np.any(bits & ~self.cells[hit]))

    def merge(self, other: "CoverageMap") -> None:
        self.cells |= other.cells

    def copy(self) -> "CoverageMap":
        out = CoverageMap()
        out.cells = self.cells.copy()
        return out


def coverage_update(cov_map: CoverageMap, trace: Trace) -> bool:
    return cov_map.update(trace)
