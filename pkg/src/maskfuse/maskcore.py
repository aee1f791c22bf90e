"""Core mask and label-map primitives.

Conventions used across the package:

* A binary mask is a 2-D ``numpy`` array of dtype ``bool`` with shape
  ``(height, width)``; row-major, x grows rightward, y grows downward.
* A label map is a 2-D integer array of the same layout where 0 is
  background and each positive value is one instance id.

Arrays are treated as immutable once handed to these functions; nothing
here mutates its inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

__all__ = [
    "ScoredInstance",
    "PredictionSet",
    "as_mask",
    "as_label_map",
    "area",
    "intersection_area",
    "iou",
    "dice",
    "canonicalize_label_map",
    "label_map_to_instances",
    "instances_to_label_map",
    "connected_components",
]

OVERLAP_RULES = ("votes", "score")


def as_mask(arr) -> np.ndarray:
    """Validate and return ``arr`` as a 2-D boolean mask."""
    m = np.asarray(arr)
    if m.ndim != 2:
        raise ValueError(f"mask must be 2-D, got shape {m.shape}")
    if m.shape[0] < 1 or m.shape[1] < 1:
        raise ValueError(f"mask must be at least 1x1, got shape {m.shape}")
    if m.dtype != bool:
        m = m.astype(bool)
    return m


def as_label_map(arr) -> np.ndarray:
    """Validate and return ``arr`` as a 2-D non-negative integer label map."""
    lm = np.asarray(arr)
    if lm.ndim != 2:
        raise ValueError(f"label map must be 2-D, got shape {lm.shape}")
    if lm.shape[0] < 1 or lm.shape[1] < 1:
        raise ValueError(f"label map must be at least 1x1, got shape {lm.shape}")
    if not np.issubdtype(lm.dtype, np.integer):
        if np.issubdtype(lm.dtype, np.bool_):
            lm = lm.astype(np.int32)
        else:
            raise ValueError(f"label map must be integer, got dtype {lm.dtype}")
    if lm.size and lm.min() < 0:
        raise ValueError("label map ids must be non-negative")
    return lm


def _check_same_shape(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")


@dataclass(frozen=True)
class ScoredInstance:
    """One predicted instance: a binary mask plus a detection confidence.

    ``votes`` is optional bookkeeping set by the fusion stage (how many
    versions contributed to the mask); it participates in the "votes"
    overlap rule when flattening overlapping instances.
    """

    mask: np.ndarray
    score: float
    votes: int | None = None

    def __post_init__(self):
        m = as_mask(self.mask)
        object.__setattr__(self, "mask", m)
        if not (0.0 <= self.score <= 1.0):
            raise ValueError(f"score must be in [0,1], got {self.score}")
        if not m.any():
            raise ValueError("instance mask must have at least one positive pixel")

    @property
    def area(self) -> int:
        return int(np.count_nonzero(self.mask))


@dataclass(frozen=True)
class PredictionSet:
    """All scored instances predicted for one image version.

    Instances may overlap each other; flattening to a label map resolves
    overlaps (see :func:`instances_to_label_map`).
    """

    width: int
    height: int
    instances: tuple[ScoredInstance, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError(f"invalid dimensions {self.width}x{self.height}")
        object.__setattr__(self, "instances", tuple(self.instances))
        for k, inst in enumerate(self.instances):
            if inst.mask.shape != (self.height, self.width):
                raise ValueError(
                    f"instance {k} has shape {inst.mask.shape}, "
                    f"set is {self.height}x{self.width}"
                )

    def __len__(self) -> int:
        return len(self.instances)

    @property
    def scores(self) -> list[float]:
        return [inst.score for inst in self.instances]


def area(mask) -> int:
    """Number of positive pixels."""
    return int(np.count_nonzero(as_mask(mask)))


def intersection_area(a, b) -> int:
    """Number of pixels positive in both masks (must share dimensions)."""
    a = as_mask(a)
    b = as_mask(b)
    _check_same_shape(a, b)
    return int(np.count_nonzero(a & b))


def iou(a, b) -> float:
    """Intersection over union. Undefined (raises) when both masks are empty."""
    a = as_mask(a)
    b = as_mask(b)
    _check_same_shape(a, b)
    inter = int(np.count_nonzero(a & b))
    union = int(np.count_nonzero(a | b))
    if union == 0:
        raise ValueError("iou undefined for two empty masks")
    return inter / union


def dice(a, b) -> float:
    """Dice coefficient 2|a∩b| / (|a|+|b|). Raises when both masks are empty."""
    a = as_mask(a)
    b = as_mask(b)
    _check_same_shape(a, b)
    total = int(np.count_nonzero(a)) + int(np.count_nonzero(b))
    if total == 0:
        raise ValueError("dice undefined for two empty masks")
    inter = int(np.count_nonzero(a & b))
    return 2.0 * inter / total


def canonicalize_label_map(lm) -> np.ndarray:
    """Relabel arbitrary positive ids to a dense 1..K range.

    Ids are reassigned in ascending original-id order; background stays 0.
    """
    lm = as_label_map(lm)
    ids = np.unique(lm)
    ids = ids[ids > 0]
    if ids.size == 0:
        return np.zeros(lm.shape, dtype=np.int32)
    lut = np.zeros(int(ids.max()) + 1, dtype=np.int32)
    lut[ids] = np.arange(1, ids.size + 1, dtype=np.int32)
    return lut[lm]


def label_map_to_instances(lm) -> PredictionSet:
    """Explode a label map into one unit-score instance per positive id.

    Instances come out in ascending original-id order, which is also the
    canonicalized id order.
    """
    lm = as_label_map(lm)
    h, w = lm.shape
    ids = np.unique(lm)
    ids = ids[ids > 0]
    instances = tuple(ScoredInstance(mask=(lm == i), score=1.0) for i in ids)
    return PredictionSet(width=w, height=h, instances=instances)


def _overlap_priority(ps: PredictionSet, rule: str) -> list[int]:
    # Higher priority first. Missing vote counts rank below any recorded count.
    if rule == "votes":
        key = lambda k: (-(ps.instances[k].votes or 0), -ps.instances[k].score, k)
    elif rule == "score":
        key = lambda k: (-ps.instances[k].score, k)
    else:
        raise ValueError(f"unknown overlap rule {rule!r}, expected one of {OVERLAP_RULES}")
    return sorted(range(len(ps.instances)), key=key)


def instances_to_label_map(ps: PredictionSet, overlap_rule: str = "votes") -> np.ndarray:
    """Flatten possibly-overlapping instances into a partition label map.

    Contested pixels go to the highest-priority covering instance:
    ``"votes"`` ranks by vote count, then score, then instance index;
    ``"score"`` by score then index. The result is canonicalized to dense
    ids 1..K in ascending instance-index order.
    """
    lm = np.zeros((ps.height, ps.width), dtype=np.int32)
    for k in _overlap_priority(ps, overlap_rule):
        inst = ps.instances[k]
        lm[(lm == 0) & inst.mask] = k + 1
    return canonicalize_label_map(lm)


_STRUCT_4 = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)
_STRUCT_8 = np.ones((3, 3), dtype=bool)


def connected_components(mask, connectivity: int = 4) -> list[np.ndarray]:
    """Split a mask into its connected components.

    Returns one boolean mask per component, ordered by the scanline
    (row-major) position of each component's first pixel.
    """
    mask = as_mask(mask)
    if connectivity == 4:
        structure = _STRUCT_4
    elif connectivity == 8:
        structure = _STRUCT_8
    else:
        raise ValueError(f"connectivity must be 4 or 8, got {connectivity}")
    labels, n = ndimage.label(mask, structure=structure)
    if n == 0:
        return []
    flat = labels.ravel()
    first = np.full(n + 1, flat.size, dtype=np.int64)
    nz = np.flatnonzero(flat)
    # last write wins, so walk backwards to record first occurrences
    first[flat[nz[::-1]]] = nz[::-1]
    order = np.argsort(first[1:], kind="stable")
    return [labels == (lab + 1) for lab in order]
