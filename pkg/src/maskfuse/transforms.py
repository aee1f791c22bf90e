"""Geometric test-time augmentations with exact inverses.

Five transforms: identity, horizontal flip, vertical flip, and the two
90-degree rotations. All are pixel-exact permutations, so round-trips are
bit-exact and areas/IoUs are preserved. Coordinate convention: x grows
rightward, y grows downward; hflip reflects x; rot90cw maps a pixel
(x, y) of an H-row image to (H-1-y, x).
"""

from __future__ import annotations

from enum import Enum

import numpy as np

from .maskcore import PredictionSet, ScoredInstance

__all__ = ["Transform", "apply", "invert", "apply_set", "invert_set"]


class Transform(str, Enum):
    IDENTITY = "identity"
    HFLIP = "hflip"
    VFLIP = "vflip"
    ROT90CW = "rot90cw"
    ROT90CCW = "rot90ccw"

    @property
    def inverse(self) -> "Transform":
        return _INVERSE[self]

    @property
    def swaps_axes(self) -> bool:
        return self in (Transform.ROT90CW, Transform.ROT90CCW)

    def __str__(self) -> str:  # serialize as the bare kind name
        return self.value


_INVERSE = {
    Transform.IDENTITY: Transform.IDENTITY,
    Transform.HFLIP: Transform.HFLIP,
    Transform.VFLIP: Transform.VFLIP,
    Transform.ROT90CW: Transform.ROT90CCW,
    Transform.ROT90CCW: Transform.ROT90CW,
}

# Canonical ordering: the original image first, then the four augmentations.
ALL_TRANSFORMS = (
    Transform.IDENTITY,
    Transform.HFLIP,
    Transform.VFLIP,
    Transform.ROT90CW,
    Transform.ROT90CCW,
)


def apply(t: Transform, grid: np.ndarray) -> np.ndarray:
    """Transform a 2-D array (mask or label map). Rotations swap the axes."""
    grid = np.asarray(grid)
    if grid.ndim != 2:
        raise ValueError(f"expected 2-D array, got shape {grid.shape}")
    t = Transform(t)
    if t is Transform.IDENTITY:
        out = grid
    elif t is Transform.HFLIP:
        out = grid[:, ::-1]
    elif t is Transform.VFLIP:
        out = grid[::-1, :]
    elif t is Transform.ROT90CW:
        out = np.rot90(grid, k=-1)
    else:
        out = np.rot90(grid, k=1)
    return np.ascontiguousarray(out)


def invert(t: Transform, grid: np.ndarray) -> np.ndarray:
    """Undo ``apply(t, ...)``: ``invert(t, apply(t, g)) == g`` bit-exactly."""
    return apply(Transform(t).inverse, grid)


def apply_set(t: Transform, ps: PredictionSet) -> PredictionSet:
    """Transform every instance mask; scores, votes and order are unchanged."""
    t = Transform(t)
    w, h = (ps.height, ps.width) if t.swaps_axes else (ps.width, ps.height)
    instances = tuple(
        ScoredInstance(mask=apply(t, inst.mask), score=inst.score, votes=inst.votes)
        for inst in ps.instances
    )
    return PredictionSet(width=w, height=h, instances=instances)


def invert_set(t: Transform, ps: PredictionSet) -> PredictionSet:
    return apply_set(Transform(t).inverse, ps)
