"""Lattice points of the probability simplex."""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .errors import DomainError, ResourceError

DEFAULT_GRID_CAP = 10**8


def simplex_size(dim: int, resolution: int) -> int:
    """Number of pmfs on ``dim`` symbols with all masses multiples of 1/resolution."""
    return math.comb(resolution + dim - 1, dim - 1)


@lru_cache(maxsize=64)
def _compositions(total: int, parts: int) -> np.ndarray:
    if parts == 1:
        return np.array([[total]], dtype=np.int64)
    blocks = []
    for first in range(total + 1):
        rest = _compositions(total - first, parts - 1)
        blocks.append(np.column_stack([np.full(len(rest), first, dtype=np.int64), rest]))
    out = np.concatenate(blocks)
    out.setflags(write=False)
    return out


def simplex_compositions(dim: int, resolution: int, cap: int = DEFAULT_GRID_CAP) -> np.ndarray:
    """Integer compositions of ``resolution`` into ``dim`` parts, lexicographic order."""
    if dim < 1:
        raise DomainError(f"simplex dimension must be >= 1, got {dim}")
    if resolution < 1:
        raise DomainError(f"resolution must be >= 1, got {resolution}")
    count = simplex_size(dim, resolution)
    if count > cap:
        raise ResourceError(
            f"simplex grid dim={dim} resolution={resolution} has {count} points, cap is {cap}",
            required=count,
        )
    return _compositions(resolution, dim)


def simplex_grid(dim: int, resolution: int, cap: int = DEFAULT_GRID_CAP) -> np.ndarray:
    """All pmfs on ``dim`` symbols with step 1/resolution.

    Rows are in lexicographic order of the integer compositions, so
    ``simplex_grid(2, 2)`` is ``[[0, 1], [0.5, 0.5], [1, 0]]``. The row count is
    C(resolution + dim - 1, dim - 1).
    """
    return simplex_compositions(dim, resolution, cap) / resolution
