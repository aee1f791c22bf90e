"""Alignment and pixel-wise majority-vote fusion of augmented predictions.

The pipeline receives one prediction set per geometric transform, already
de-augmented back to original-image coordinates (or de-augments them
itself, see :func:`tta_pipeline`). The version with the most instances
becomes the reference; every reference instance collects at most one
matching instance per other version (greedy, descending IoU, only pairs
above the match threshold), and each matched group is fused by per-pixel
majority vote.

Design points that the voting depends on:

* the majority denominator is the number of matched members of that
  instance, not the total number of versions, so an instance found in
  only a couple of versions is not voted out of existence (a switch
  selects the all-versions denominator for comparison);
* an exact split vote is resolved by the reference member's pixel;
* the fused confidence is the arithmetic mean of member scores.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .maskcore import PredictionSet, ScoredInstance
from .transforms import ALL_TRANSFORMS, Transform, invert_set

__all__ = [
    "FusionConfig",
    "AlignedInstance",
    "select_reference",
    "align",
    "fuse",
    "tta_pipeline",
]


@dataclass(frozen=True)
class FusionConfig:
    # IoU above which two instances from different versions count as the same leaf
    match_threshold: float = 0.5
    # minimum number of member versions for a fused instance to be emitted
    min_versions: int = 1
    # vote against the full version count instead of the matched-member count
    count_absent_versions: bool = False

    def __post_init__(self):
        if not (0.0 < self.match_threshold < 1.0):
            raise ValueError(f"match_threshold must be in (0,1), got {self.match_threshold}")
        if self.min_versions < 1:
            raise ValueError(f"min_versions must be >= 1, got {self.min_versions}")


@dataclass(frozen=True)
class AlignedInstance:
    """One reference instance plus its matched counterparts.

    ``members`` holds (version index, instance index, IoU with the
    reference); the reference member itself is included with IoU 1.0.
    ``fused_score`` is the mean of the member scores.
    """

    reference_index: int
    members: tuple[tuple[int, int, float], ...] = field(default_factory=tuple)
    fused_score: float = 0.0

    @property
    def member_count(self) -> int:
        return len(self.members)


def select_reference(versions: list[PredictionSet]) -> int:
    """Index of the version with the most instances; ties go to the lowest index."""
    if not versions:
        raise ValueError("no prediction sets to choose a reference from")
    counts = [len(ps) for ps in versions]
    return int(np.argmax(counts))


def _check_versions(versions: list[PredictionSet]) -> None:
    if not versions:
        raise ValueError("no prediction sets given")
    w, h = versions[0].width, versions[0].height
    for k, ps in enumerate(versions):
        if (ps.width, ps.height) != (w, h):
            raise ValueError(
                f"version {k} is {ps.width}x{ps.height}, expected {w}x{h} "
                "(de-augment before fusing)"
            )


def _iou_pairs(ref: PredictionSet, other: PredictionSet, threshold: float):
    """Candidate (iou, ref_idx, other_idx) pairs with IoU strictly above threshold."""
    pairs = []
    for i, ri in enumerate(ref.instances):
        r = ri.mask
        r_area = ri.area
        for j, oj in enumerate(other.instances):
            inter = int(np.count_nonzero(r & oj.mask))
            if inter == 0:
                continue
            union = r_area + oj.area - inter
            v = inter / union
            if v > threshold:
                pairs.append((v, i, j))
    return pairs


def align(
    versions: list[PredictionSet],
    ref: int,
    cfg: FusionConfig = FusionConfig(),
) -> list[AlignedInstance]:
    """Match instances of every version against the reference version.

    Matching is one-to-one per version: candidate pairs above the
    threshold are taken greedily in descending IoU order (ties broken by
    reference index, then version-instance index). Instances of other
    versions that match nothing are discarded.
    """
    _check_versions(versions)
    if not (0 <= ref < len(versions)):
        raise ValueError(f"reference index {ref} out of range")
    ref_set = versions[ref]
    members: list[list[tuple[int, int, float]]] = [
        [(ref, i, 1.0)] for i in range(len(ref_set))
    ]
    for v, other in enumerate(versions):
        if v == ref:
            continue
        pairs = _iou_pairs(ref_set, other, cfg.match_threshold)
        pairs.sort(key=lambda p: (-p[0], p[1], p[2]))
        ref_taken = set()
        other_taken = set()
        for iou_v, i, j in pairs:
            if i in ref_taken or j in other_taken:
                continue
            ref_taken.add(i)
            other_taken.add(j)
            members[i].append((v, j, iou_v))
    return [
        AlignedInstance(
            reference_index=i,
            members=tuple(ms),
            fused_score=_mean_score([versions[v].instances[j].score for v, j, _ in ms]),
        )
        for i, ms in enumerate(members)
    ]


def _mean_score(scores: list[float]) -> float:
    # exact when all members agree, so fusing identical sets is idempotent;
    # fsum keeps the general case independent of member order
    if all(s == scores[0] for s in scores):
        return scores[0]
    return math.fsum(scores) / len(scores)


def _vote(
    masks: list[np.ndarray],
    ref_mask: np.ndarray,
    denominator: int,
) -> np.ndarray:
    votes = np.zeros(ref_mask.shape, dtype=np.int32)
    for m in masks:
        votes += m
    # strict majority; an exact half split follows the reference pixel
    out = (2 * votes > denominator) | ((2 * votes == denominator) & ref_mask)
    return out


def fuse(
    versions: list[PredictionSet],
    cfg: FusionConfig = FusionConfig(),
) -> PredictionSet:
    """Align all versions against the reference and majority-vote each group.

    Emits one instance per aligned group with at least ``min_versions``
    members and a non-empty voted mask. The fused score is the mean of
    the member scores; ``votes`` records the member count.
    """
    _check_versions(versions)
    ref = select_reference(versions)
    aligned = align(versions, ref, cfg)
    denominator_all = len(versions)
    fused = []
    for group in aligned:
        if group.member_count < cfg.min_versions:
            continue
        masks = [versions[v].instances[j].mask for v, j, _ in group.members]
        ref_mask = versions[ref].instances[group.reference_index].mask
        denom = denominator_all if cfg.count_absent_versions else group.member_count
        voted = _vote(masks, ref_mask, denom)
        if not voted.any():
            continue
        fused.append(
            ScoredInstance(mask=voted, score=group.fused_score, votes=group.member_count)
        )
    return PredictionSet(
        width=versions[0].width, height=versions[0].height, instances=tuple(fused)
    )


def tta_pipeline(
    predictions: dict[Transform, PredictionSet],
    cfg: FusionConfig = FusionConfig(),
) -> PredictionSet:
    """De-augment per-transform predictions, align and fuse them.

    ``predictions`` maps each applied transform to the predictions made on
    that transformed image, in transformed coordinates. The identity entry
    is required and fixes the original image dimensions. Versions are
    ordered canonically (identity first), so the identity version is
    version 0 for reference tie-breaking.
    """
    keyed = {Transform(t): ps for t, ps in predictions.items()}
    if Transform.IDENTITY not in keyed:
        raise ValueError("predictions must include the identity transform")
    base = keyed[Transform.IDENTITY]
    versions = []
    for t in ALL_TRANSFORMS:
        if t not in keyed:
            continue
        ps = keyed[t]
        expect = (base.height, base.width) if t.swaps_axes else (base.width, base.height)
        if (ps.width, ps.height) != expect:
            raise ValueError(
                f"{t.value} predictions are {ps.width}x{ps.height}, "
                f"expected {expect[0]}x{expect[1]} for a "
                f"{base.width}x{base.height} image"
            )
        versions.append(invert_set(t, ps))
    return fuse(versions, cfg)
