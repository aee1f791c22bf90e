"""Detection-threshold filtering and the sweep harness.

The detection threshold trades segmentation quality against counting:
raising it discards low-confidence instances (typically the corrupted
ones), which helps per-instance overlap but starves the count. The sweep
runs the full evaluation at each threshold so that trade-off can be
charted.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .maskcore import PredictionSet
from .metrics import evaluate_corpus
from .transforms import Transform
from .tta_fusion import FusionConfig, tta_pipeline

__all__ = ["SweepConfig", "SweepRow", "SweepTable", "filter_by_score", "sweep"]

DEFAULT_TAUS = (0.5, 0.6, 0.7, 0.8, 0.9)

SWEEP_CSV_HEADER = "tau,mean_sbd,mean_dic,mean_abs_dic,mean_pred_count,n_images"


@dataclass(frozen=True)
class SweepConfig:
    taus: tuple[float, ...] = DEFAULT_TAUS
    apply_tta: bool = False
    fusion: FusionConfig = FusionConfig()
    overlap_rule: str = "votes"

    def __post_init__(self):
        taus = tuple(float(t) for t in self.taus)
        object.__setattr__(self, "taus", taus)
        if not taus:
            raise ValueError("taus must be non-empty")
        for t in taus:
            if not (0.0 <= t <= 1.0):
                raise ValueError(f"tau {t} outside [0,1]")
        if any(b <= a for a, b in zip(taus, taus[1:])):
            raise ValueError(f"taus must be strictly increasing, got {taus}")


def filter_by_score(ps: PredictionSet, tau: float) -> PredictionSet:
    """Keep instances with score >= tau (inclusive), order preserved."""
    if not (0.0 <= tau <= 1.0):
        raise ValueError(f"tau must be in [0,1], got {tau}")
    return PredictionSet(
        width=ps.width,
        height=ps.height,
        instances=tuple(inst for inst in ps.instances if inst.score >= tau),
    )


@dataclass(frozen=True)
class SweepRow:
    tau: float
    mean_sbd: float
    mean_dic: float
    mean_abs_dic: float
    mean_pred_count: float


@dataclass(frozen=True)
class SweepTable:
    rows: tuple[SweepRow, ...] = field(default_factory=tuple)
    n_images: int = 0

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(SWEEP_CSV_HEADER.split(","))
        for r in self.rows:
            writer.writerow(
                [
                    format(r.tau, ".10g"),
                    format(r.mean_sbd, ".10g"),
                    format(r.mean_dic, ".10g"),
                    format(r.mean_abs_dic, ".10g"),
                    format(r.mean_pred_count, ".10g"),
                    self.n_images,
                ]
            )
        return buf.getvalue()


def sweep(corpus, cfg: SweepConfig = SweepConfig()) -> SweepTable:
    """Filter, optionally fuse, and evaluate the corpus at each threshold.

    ``corpus`` is a list of (image id, {transform: predictions}, ground
    truth). Filtering happens per version before fusion; without TTA only
    the identity version is evaluated.
    """
    rows = []
    n_images = len(corpus)
    for tau in cfg.taus:
        pairs = []
        counts = []
        for image_id, versions, gt in corpus:
            filtered = {
                Transform(t): filter_by_score(ps, tau) for t, ps in versions.items()
            }
            if Transform.IDENTITY not in filtered:
                raise ValueError(f"image {image_id!r}: no identity version")
            if cfg.apply_tta:
                pred = tta_pipeline(filtered, cfg.fusion)
            else:
                pred = filtered[Transform.IDENTITY]
            counts.append(len(pred))
            pairs.append((image_id, pred, gt))
        report = evaluate_corpus(pairs, overlap_rule=cfg.overlap_rule)
        rows.append(
            SweepRow(
                tau=float(tau),
                mean_sbd=report.mean_sbd,
                mean_dic=report.mean_dic,
                mean_abs_dic=report.mean_abs_dic,
                mean_pred_count=float(np.mean(counts)) if counts else 0.0,
            )
        )
    return SweepTable(rows=tuple(rows), n_images=n_images)
