"""Leaf segmentation and counting metrics over label maps.

Best Dice of labeling A against labeling B averages, over the instances
of A, the best Dice score each one achieves against any instance of B
(instances of B may be reused):

    BD(A, B) = (1/M) * sum_i max_j  2|A_i ∩ B_j| / (|A_i| + |B_j|)

Symmetric Best Dice takes the worse direction, SBD = min(BD(pred, gt),
BD(gt, pred)). DiC is the signed count difference (predicted minus
ground truth), so chronic under-counting shows up as negative DiC.

Empty-map conventions, pinned by tests: both maps empty -> SBD 1.0,
exactly one empty -> SBD 0.0.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

import numpy as np

from .maskcore import PredictionSet, as_label_map, instances_to_label_map

__all__ = [
    "EvalResult",
    "EvalReport",
    "best_dice",
    "sbd",
    "dic",
    "evaluate_pair",
    "evaluate_corpus",
]


def _dense_labels(lm: np.ndarray) -> tuple[np.ndarray, int]:
    """Map arbitrary positive ids to 1..K (ascending id order); return (map, K)."""
    ids, inverse = np.unique(lm, return_inverse=True)
    dense = inverse.reshape(lm.shape).astype(np.int64)
    if ids[0] != 0:
        dense += 1  # no background pixel present
        return dense, ids.size
    return dense, ids.size - 1


def _pair_dice_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Dice between every instance of a and of b, as a (Ka, Kb) matrix."""
    da, ka = _dense_labels(a)
    db, kb = _dense_labels(b)
    contingency = np.bincount(
        da.ravel() * (kb + 1) + db.ravel(), minlength=(ka + 1) * (kb + 1)
    ).reshape(ka + 1, kb + 1)
    areas_a = contingency.sum(axis=1)[1:]
    areas_b = contingency.sum(axis=0)[1:]
    inter = contingency[1:, 1:].astype(np.float64)
    return 2.0 * inter / (areas_a[:, None] + areas_b[None, :])


def _count_instances(lm: np.ndarray) -> int:
    ids = np.unique(lm)
    return int(np.count_nonzero(ids > 0))


def best_dice(a, b) -> float:
    """Mean over a's instances of the best Dice against any b instance."""
    a = as_label_map(a)
    b = as_label_map(b)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    if _count_instances(a) == 0:
        raise ValueError("best_dice needs at least one instance on the first map")
    if _count_instances(b) == 0:
        return 0.0
    d = _pair_dice_matrix(a, b)
    return float(np.mean(d.max(axis=1)))


def sbd(pred, gt) -> float:
    """Symmetric Best Dice: min of both Best Dice directions."""
    pred = as_label_map(pred)
    gt = as_label_map(gt)
    if pred.shape != gt.shape:
        raise ValueError(f"dimension mismatch: {pred.shape} vs {gt.shape}")
    np_, ng = _count_instances(pred), _count_instances(gt)
    if np_ == 0 and ng == 0:
        return 1.0
    if np_ == 0 or ng == 0:
        return 0.0
    return min(best_dice(pred, gt), best_dice(gt, pred))


def dic(pred, gt) -> int:
    """Signed difference in count: predicted instances minus ground truth."""
    return _count_instances(as_label_map(pred)) - _count_instances(as_label_map(gt))


@dataclass(frozen=True)
class EvalResult:
    sbd: float
    dic: int
    abs_dic: int
    pred_count: int
    gt_count: int

    def as_dict(self) -> dict:
        return {
            "sbd": self.sbd,
            "dic": self.dic,
            "abs_dic": self.abs_dic,
            "pred_count": self.pred_count,
            "gt_count": self.gt_count,
        }


def evaluate_pair(
    pred: PredictionSet, gt, overlap_rule: str = "votes"
) -> EvalResult:
    """Flatten a prediction set against a ground-truth label map and score it."""
    gt = as_label_map(gt)
    if (pred.width, pred.height) != (gt.shape[1], gt.shape[0]):
        raise ValueError(
            f"prediction is {pred.width}x{pred.height}, "
            f"ground truth is {gt.shape[1]}x{gt.shape[0]}"
        )
    lm = instances_to_label_map(pred, overlap_rule)
    pred_count = _count_instances(lm)
    gt_count = _count_instances(gt)
    d = pred_count - gt_count
    return EvalResult(
        sbd=sbd(lm, gt),
        dic=d,
        abs_dic=abs(d),
        pred_count=pred_count,
        gt_count=gt_count,
    )


@dataclass(frozen=True)
class EvalReport:
    per_image: tuple[tuple[str, EvalResult], ...]
    mean_sbd: float
    mean_dic: float
    mean_abs_dic: float
    n_images: int

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["image_id", "sbd", "dic", "abs_dic", "pred_count", "gt_count"])
        for image_id, r in self.per_image:
            writer.writerow(
                [image_id, _fmt(r.sbd), r.dic, r.abs_dic, r.pred_count, r.gt_count]
            )
        writer.writerow(
            ["MEAN", _fmt(self.mean_sbd), _fmt(self.mean_dic), _fmt(self.mean_abs_dic), "", ""]
        )
        return buf.getvalue()

    def to_json(self) -> str:
        payload = {
            "per_image": [
                {"image_id": image_id, **r.as_dict()} for image_id, r in self.per_image
            ],
            "mean_sbd": self.mean_sbd,
            "mean_dic": self.mean_dic,
            "mean_abs_dic": self.mean_abs_dic,
            "n_images": self.n_images,
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _fmt(x: float) -> str:
    return format(float(x), ".10g")


def evaluate_corpus(
    pairs, overlap_rule: str = "votes"
) -> EvalReport:
    """Evaluate (image_id, PredictionSet, LabelMap) triples, ordered by id.

    Aggregates are plain arithmetic means of the per-image values. Errors
    during a single image are re-raised with the image id attached.
    """
    results = []
    for image_id, pred, gt in sorted(pairs, key=lambda p: p[0]):
        try:
            results.append((str(image_id), evaluate_pair(pred, gt, overlap_rule)))
        except ValueError as exc:
            raise ValueError(f"image {image_id!r}: {exc}") from exc
    n = len(results)
    if n == 0:
        return EvalReport(per_image=(), mean_sbd=0.0, mean_dic=0.0, mean_abs_dic=0.0, n_images=0)
    return EvalReport(
        per_image=tuple(results),
        mean_sbd=float(np.mean([r.sbd for _, r in results])),
        mean_dic=float(np.mean([r.dic for _, r in results])),
        mean_abs_dic=float(np.mean([r.abs_dic for _, r in results])),
        n_images=n,
    )
