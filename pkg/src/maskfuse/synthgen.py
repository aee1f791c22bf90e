"""Synthetic rosette ground truth and a noisy-prediction simulator.

Rosettes are built from elliptical leaves radiating around the image
center, painted in order so that later leaves occlude earlier ones. This
reproduces the one property that matters for exercising the fusion and
threshold machinery: heavy mutual occlusion near the center.

All randomness comes from numpy's PCG64 generator seeded through
``SeedSequence``, and rasterization is integer-only, so outputs are
bit-identical across platforms for a given config. A leaf ellipse is
rasterized from its two foci: with foci f1, f2 and squared string length
C2, a pixel p is inside iff

    A + B <= C2  and  4*A*B <= (C2 - A - B)^2,   A = |p-f1|^2, B = |p-f2|^2

which is the exact integer form of sqrt(A) + sqrt(B) <= sqrt(C2). The
only floating point anywhere is the one-time Q15 sine/cosine degree
table used to turn leaf angles into integer direction vectors.

The corruption model mimics the dominant inference failure on rosettes:
two occluded leaves emitted as a single instance. Independent corruption
draws per augmented version are what give test-time augmentation
something to recover.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from math import isqrt

import numpy as np
from scipy import ndimage

from .maskcore import PredictionSet, ScoredInstance, as_label_map, connected_components
from .transforms import ALL_TRANSFORMS, Transform, apply

__all__ = [
    "RosetteConfig",
    "ScoreModel",
    "NoiseConfig",
    "generate_rosette",
    "corrupt",
    "simulate_versions",
    "generate_corpus",
    "derive_seed",
]

_Q15 = 1 << 15
_COS_Q15 = np.round(_Q15 * np.cos(np.radians(np.arange(360)))).astype(np.int64)
_SIN_Q15 = np.round(_Q15 * np.sin(np.radians(np.arange(360)))).astype(np.int64)

_STRUCT_4 = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)
_STRUCT_8 = np.ones((3, 3), dtype=bool)

_MAX_PLACEMENT_ATTEMPTS = 40
_MAX_ROSETTE_RESTARTS = 25


def derive_seed(base: int, *key: int) -> int:
    """Stable 64-bit sub-seed for (base seed, integer key path)."""
    ss = np.random.SeedSequence(entropy=base, spawn_key=tuple(key))
    return int(ss.generate_state(1, np.uint64)[0])


def _rng(seed: int, *key: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(key))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass(frozen=True)
class RosetteConfig:
    width: int = 256
    height: int = 256
    leaf_count: int = 8
    leaf_length_range: tuple[int, int] = (60, 100)
    leaf_width_range: tuple[int, int] = (18, 30)
    center_jitter: int = 6
    seed: int = 0

    def __post_init__(self):
        if self.leaf_count < 1:
            raise ValueError("leaf_count must be >= 1")
        if self.width < 8 or self.height < 8:
            raise ValueError("image must be at least 8x8")
        lo, hi = self.leaf_length_range
        wlo, whi = self.leaf_width_range
        if not (2 <= lo <= hi) or not (1 <= wlo <= whi):
            raise ValueError("invalid leaf length/width ranges")
        if self.center_jitter < 0:
            raise ValueError("center_jitter must be >= 0")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        reach = hi + self.center_jitter + whi // 2 + 2
        if reach > min(self.width, self.height) // 2:
            raise ValueError(
                f"leaf dimensions exceed image bounds: reach {reach}px vs "
                f"{min(self.width, self.height) // 2}px available from center"
            )


def _raster_leaf(
    h: int, w: int, bx: int, by: int, tx: int, ty: int, leaf_w: int
) -> np.ndarray:
    """Rasterize the ellipse with foci (bx,by)-(tx,ty) and minor axis leaf_w."""
    d2 = (tx - bx) ** 2 + (ty - by) ** 2
    c2 = d2 + leaf_w * leaf_w
    half = isqrt(c2) // 2 + 2
    mx, my = (bx + tx) // 2, (by + ty) // 2
    x0, x1 = max(0, mx - half), min(w - 1, mx + half)
    y0, y1 = max(0, my - half), min(h - 1, my + half)
    if x0 > x1 or y0 > y1:
        return np.zeros((h, w), dtype=bool)
    ys = np.arange(y0, y1 + 1, dtype=np.int64)[:, None]
    xs = np.arange(x0, x1 + 1, dtype=np.int64)[None, :]
    a = (xs - bx) ** 2 + (ys - by) ** 2
    b = (xs - tx) ** 2 + (ys - ty) ** 2
    t = c2 - a - b
    inside = (t >= 0) & (4 * a * b <= t * t)
    mask = np.zeros((h, w), dtype=bool)
    mask[y0 : y1 + 1, x0 : x1 + 1] = inside
    return mask


def _round_q15(v: int) -> int:
    return (v + (1 << 14)) >> 15


def _is_single_component(visible: np.ndarray, connectivity: int) -> bool:
    rows = np.flatnonzero(visible.any(axis=1))
    cols = np.flatnonzero(visible.any(axis=0))
    crop = visible[rows[0] : rows[-1] + 1, cols[0] : cols[-1] + 1]
    return len(connected_components(crop, connectivity=connectivity)) == 1


def _leaves_intact(lm: np.ndarray, ids, connectivity: int) -> bool:
    for i in ids:
        visible = lm == i
        if not visible.any():
            return False
        if not _is_single_component(visible, connectivity):
            return False
    return True


def generate_rosette(cfg: RosetteConfig, connectivity: int = 4) -> np.ndarray:
    """Generate a rosette label map: ids 1..leaf_count, later leaves on top.

    Placement is rejection-sampled: a draw that would wipe out or split
    an already-placed leaf's visible region (under the given pixel
    connectivity) is retried,
    so every id in the result is a single non-empty component. If a
    sector becomes unplaceable (earlier leaves left no room), the whole
    rosette is redrawn; all draws come from one PCG64 stream, so results
    stay a pure function of the config. Draw order per attempt: angle
    jitter, length, width, base x offset, base y offset.
    """
    rng = _rng(cfg.seed)
    h, w = cfg.height, cfg.width
    cx, cy = w // 2, h // 2
    lo, hi = cfg.leaf_length_range
    wlo, whi = cfg.leaf_width_range
    angle_jitter = max(1, 120 // cfg.leaf_count)
    for _restart in range(_MAX_ROSETTE_RESTARTS):
        lm = np.zeros((h, w), dtype=np.int32)
        abandoned = False
        for k in range(cfg.leaf_count):
            base_deg = (360 * k) // cfg.leaf_count
            for _attempt in range(_MAX_PLACEMENT_ATTEMPTS):
                theta = (base_deg + int(rng.integers(-angle_jitter, angle_jitter + 1))) % 360
                length = int(rng.integers(lo, hi + 1))
                leaf_w = min(int(rng.integers(wlo, whi + 1)), max(1, length - 2))
                bx = cx + int(rng.integers(-cfg.center_jitter, cfg.center_jitter + 1))
                by = cy + int(rng.integers(-cfg.center_jitter, cfg.center_jitter + 1))
                tx = bx + _round_q15(length * int(_COS_Q15[theta]))
                ty = by + _round_q15(length * int(_SIN_Q15[theta]))
                leaf = _raster_leaf(h, w, bx, by, tx, ty, leaf_w)
                if not leaf.any():
                    continue
                candidate = lm.copy()
                candidate[leaf] = k + 1
                # only leaves the new one overwrote can have changed
                touched = [int(i) for i in np.unique(lm[leaf]) if i > 0] + [k + 1]
                if _leaves_intact(candidate, touched, connectivity):
                    lm = candidate
                    break
            else:
                abandoned = True
                break
        if not abandoned:
            return lm
    raise ValueError(
        f"could not build a {cfg.leaf_count}-leaf rosette after "
        f"{_MAX_ROSETTE_RESTARTS} fresh attempts; relax the config"
    )


@dataclass(frozen=True)
class ScoreModel:
    """Maps corruption level to detection confidence.

    score = 1 - merge_penalty*(merged) - boundary_penalty*(corrupted
    fraction, capped at 1) + uniform(-jitter, +jitter), clamped to [0,1].
    """

    merge_penalty: float = 0.3
    boundary_penalty: float = 0.2
    jitter: float = 0.05

    def __post_init__(self):
        for name in ("merge_penalty", "boundary_penalty", "jitter"):
            v = getattr(self, name)
            if v < 0:
                raise ValueError(f"{name} must be >= 0")


@dataclass(frozen=True)
class NoiseConfig:
    merge_prob: float = 0.0
    drop_prob: float = 0.0
    boundary_noise: int = 0
    score_model: ScoreModel = ScoreModel()
    seed: int = 0

    def __post_init__(self):
        for name in ("merge_prob", "drop_prob"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"{name} must be in [0,1], got {v}")
        if self.boundary_noise < 0:
            raise ValueError("boundary_noise must be >= 0")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")

    @classmethod
    def none(cls, seed: int = 0) -> "NoiseConfig":
        """Completely noiseless config (score jitter included)."""
        return cls(score_model=ScoreModel(jitter=0.0), seed=seed)


def _touching(a: np.ndarray, b: np.ndarray) -> bool:
    grown = ndimage.binary_dilation(a, structure=_STRUCT_8)
    return bool(np.any(grown & b))


def corrupt(
    gt, noise: NoiseConfig, rng: np.random.Generator | None = None
) -> PredictionSet:
    """Simulate an imperfect inference pass over a ground-truth label map.

    In order: each leaf is dropped with ``drop_prob``; surviving adjacent
    pairs are merged into one union instance with ``merge_prob`` (greedy
    over pairs in ascending id order, each leaf in at most one merge);
    each emitted mask gets a random erosion or dilation of up to
    ``boundary_noise`` pixels (an erosion that would empty the mask is
    skipped); scores come from the score model, merged and corrupted
    instances scoring systematically lower.
    """
    lm = as_label_map(gt)
    h, w = lm.shape
    if rng is None:
        rng = _rng(noise.seed)
    ids = [int(i) for i in np.unique(lm) if i > 0]
    masks = {i: lm == i for i in ids}

    kept = [i for i in ids if float(rng.random()) >= noise.drop_prob]

    merged_with: dict[int, int] = {}
    for a_idx in range(len(kept)):
        for b_idx in range(a_idx + 1, len(kept)):
            i, j = kept[a_idx], kept[b_idx]
            if i in merged_with or j in merged_with:
                continue
            if not _touching(masks[i], masks[j]):
                continue
            if float(rng.random()) < noise.merge_prob:
                merged_with[i] = j
                merged_with[j] = i

    sm = noise.score_model
    instances = []
    for i in kept:
        partner = merged_with.get(i)
        if partner is not None and partner < i:
            continue  # emitted with its smaller partner
        merged = partner is not None
        mask = (masks[i] | masks[partner]) if merged else masks[i]
        base_area = int(np.count_nonzero(mask))
        noisy = mask
        if noise.boundary_noise > 0:
            radius = int(rng.integers(0, noise.boundary_noise + 1))
            grow = bool(rng.integers(0, 2))
            if radius > 0:
                op = ndimage.binary_dilation if grow else ndimage.binary_erosion
                candidate = op(mask, structure=_STRUCT_4, iterations=radius)
                if candidate.any():
                    noisy = candidate
        frac = min(1.0, int(np.count_nonzero(noisy ^ mask)) / base_area)
        score = 1.0 - sm.merge_penalty * merged - sm.boundary_penalty * frac
        if sm.jitter > 0:
            score += float(rng.uniform(-sm.jitter, sm.jitter))
        score = min(1.0, max(0.0, score))
        instances.append(ScoredInstance(mask=noisy, score=score))
    return PredictionSet(width=w, height=h, instances=tuple(instances))


def simulate_versions(
    gt,
    noise: NoiseConfig,
    transforms: tuple[Transform, ...] = ALL_TRANSFORMS,
) -> dict[Transform, PredictionSet]:
    """Corrupt each augmented view of the ground truth independently.

    Each transform gets its own noise stream, seeded from the base seed
    and the transform's position in ``transforms``; the returned sets are
    in transformed coordinates, ready for the fusion pipeline.
    """
    ts = [Transform(t) for t in transforms]
    if Transform.IDENTITY not in ts:
        raise ValueError("transforms must include the identity")
    lm = as_label_map(gt)
    out = {}
    for idx, t in enumerate(ts):
        out[t] = corrupt(apply(t, lm), noise, rng=_rng(noise.seed, idx))
    return out


def generate_corpus(
    n_images: int,
    rosette: RosetteConfig = RosetteConfig(),
    noise: NoiseConfig = NoiseConfig(),
    transforms: tuple[Transform, ...] = ALL_TRANSFORMS,
) -> list[tuple[str, dict[Transform, PredictionSet], np.ndarray]]:
    """Seeded corpus of (image id, per-transform predictions, ground truth).

    Image i uses rosette seed derive_seed(rosette.seed, 0, i) and noise
    seed derive_seed(noise.seed, 1, i), so corpora are reproducible and
    images are independent.
    """
    corpus = []
    for i in range(n_images):
        cfg_i = replace(rosette, seed=derive_seed(rosette.seed, 0, i))
        noise_i = replace(noise, seed=derive_seed(noise.seed, 1, i))
        gt = generate_rosette(cfg_i)
        corpus.append((f"img_{i:04d}", simulate_versions(gt, noise_i, transforms), gt))
    return corpus
