"""Acceptance suite: one test per criterion, tolerances pinned here.

Run with `pytest tests/test_acceptance.py -v` for one pass/fail line per
criterion (each test also prints an `[acceptance] ... PASS` line).
"""

import time

import numpy as np
import pytest

import maskfuse as mf
from maskfuse.cli import main as cli_main
from maskfuse.maskcore import PredictionSet, ScoredInstance
from maskfuse.transforms import ALL_TRANSFORMS

from conftest import random_mask
from test_metrics import oracle_sbd, random_label_map


def _passed(name):
    print(f"[acceptance] {name}: PASS")


# Seeded corpus shared by the TTA-recovery and threshold-shape criteria.
RECOVERY_SEED = 0
RECOVERY_NOISE = mf.NoiseConfig(merge_prob=0.35, drop_prob=0.05, seed=RECOVERY_SEED)


@pytest.fixture(scope="module")
def recovery_corpus():
    return mf.generate_corpus(100, mf.RosetteConfig(seed=RECOVERY_SEED), RECOVERY_NOISE)


def test_metric_oracle_equivalence():
    rng = np.random.Generator(np.random.PCG64(2024))
    start = time.monotonic()
    for _ in range(200):
        h = int(rng.integers(1, 33))
        w = int(rng.integers(1, 33))
        a = random_label_map(rng, h, w, int(rng.integers(0, 7)))
        b = random_label_map(rng, h, w, int(rng.integers(0, 7)))
        assert abs(mf.sbd(a, b) - oracle_sbd(a, b)) <= 1e-12
    elapsed = time.monotonic() - start
    assert elapsed < 10.0, f"oracle comparison took {elapsed:.1f}s"
    _passed("metric oracle equivalence (200 pairs, 1e-12)")


def test_transform_round_trip_and_iou_equivariance():
    rng = np.random.Generator(np.random.PCG64(2025))
    for t in ALL_TRANSFORMS:
        for _ in range(100):
            h = int(rng.integers(1, 40))
            w = int(rng.integers(1, 40))
            m = random_mask(rng, h, w)
            assert np.array_equal(mf.invert(t, mf.apply(t, m)), m)
    for _ in range(100):
        h = int(rng.integers(1, 40))
        w = int(rng.integers(1, 40))
        a = random_mask(rng, h, w)
        b = random_mask(rng, h, w)
        if not (a | b).any():
            continue
        base = mf.iou(a, b)
        for t in ALL_TRANSFORMS:
            assert mf.iou(mf.apply(t, a), mf.apply(t, b)) == base
    _passed("transform round-trip bit-exact, IoU equivariance exact")


def test_fusion_idempotence_on_50_random_sets():
    rng = np.random.Generator(np.random.PCG64(2026))
    for _ in range(50):
        w = int(rng.integers(4, 24))
        h = int(rng.integers(4, 24))
        instances = []
        for _ in range(int(rng.integers(1, 7))):
            m = random_mask(rng, h, w, 0.35)
            if not m.any():
                m[int(rng.integers(0, h)), int(rng.integers(0, w))] = True
            instances.append(ScoredInstance(mask=m, score=float(rng.random())))
        ps = PredictionSet(width=w, height=h, instances=tuple(instances))
        out = mf.fuse([ps] * 5)
        assert len(out) == len(ps)
        for a, b in zip(out.instances, ps.instances):
            assert np.array_equal(a.mask, b.mask)
            assert a.score == b.score
    _passed("fusion idempotence (50 sets x 5 copies, bit-identical)")


def test_tta_recovery_margins(recovery_corpus):
    start = time.monotonic()
    identity_pairs = []
    fused_pairs = []
    for image_id, versions, gt in recovery_corpus:
        identity_pairs.append((image_id, versions[mf.Transform.IDENTITY], gt))
        fused_pairs.append((image_id, mf.tta_pipeline(versions), gt))
    identity = mf.evaluate_corpus(identity_pairs)
    fused = mf.evaluate_corpus(fused_pairs)
    elapsed = time.monotonic() - start
    sbd_gain = fused.mean_sbd - identity.mean_sbd
    dic_gain = identity.mean_abs_dic - fused.mean_abs_dic
    assert sbd_gain >= 0.02, f"SBD margin {sbd_gain:.4f} < 0.02"
    assert dic_gain >= 0.3, f"|DiC| margin {dic_gain:.3f} < 0.3"
    assert elapsed < 60.0, f"recovery experiment took {elapsed:.1f}s"
    _passed(
        f"TTA recovery (SBD +{sbd_gain:.4f} >= 0.02, |DiC| -{dic_gain:.3f} >= 0.3)"
    )


# Regression rows from the first verified run of the sweep on the
# recovery corpus (merge 0.35, drop 0.05, default score model, seed 0).
PINNED_SWEEP_ROWS = (
    (0.5, 0.7708420308113589, -2.54, 2.54, 5.46),
    (0.6, 0.7708420308113589, -2.54, 2.54, 5.46),
    (0.7, 0.6058305541714036, -3.54, 3.54, 4.46),
    (0.8, 0.40625, -4.75, 4.75, 3.25),
    (0.9, 0.40625, -4.75, 4.75, 3.25),
)


def test_threshold_trade_off_shape(recovery_corpus):
    table = mf.sweep(recovery_corpus, mf.SweepConfig(apply_tta=False))
    counts = [r.mean_pred_count for r in table.rows]
    assert all(b <= a for a, b in zip(counts, counts[1:])), counts
    assert table.rows[-1].mean_abs_dic > table.rows[0].mean_abs_dic
    assert table.n_images == 100
    assert len(table.rows) == len(PINNED_SWEEP_ROWS)
    for row, pinned in zip(table.rows, PINNED_SWEEP_ROWS):
        got = (row.tau, row.mean_sbd, row.mean_dic, row.mean_abs_dic, row.mean_pred_count)
        assert got == pytest.approx(pinned, abs=1e-12), (got, pinned)
    _passed("threshold trade-off shape + pinned sweep rows")


def test_empty_and_degenerate_conventions():
    empty = np.zeros((8, 8), dtype=np.int32)
    three = empty.copy()
    three[0, 0], three[2, 2], three[4, 4] = 1, 2, 3
    assert mf.sbd(empty, empty) == 1.0
    assert mf.sbd(empty, three) == 0.0
    assert mf.sbd(three, empty) == 0.0
    fused = mf.fuse([PredictionSet(width=8, height=8) for _ in range(5)])
    assert len(fused) == 0
    entries = {t: mf.apply_set(t, PredictionSet(width=8, height=6)) for t in ALL_TRANSFORMS}
    assert len(mf.tta_pipeline(entries)) == 0
    _passed("empty/degenerate conventions")


def test_fuse_performance_500px_20_instances():
    cfg = mf.RosetteConfig(
        width=500, height=500, leaf_count=20,
        leaf_length_range=(90, 180), leaf_width_range=(24, 44), seed=3,
    )
    gt = mf.generate_rosette(cfg)
    versions = mf.simulate_versions(gt, mf.NoiseConfig(boundary_noise=2, seed=5))
    start = time.monotonic()
    fused = mf.tta_pipeline(versions)
    elapsed = time.monotonic() - start
    assert elapsed < 1.0, f"fuse took {elapsed:.2f}s"
    assert len(fused) > 0
    _passed(f"fuse 5 versions 500x500x20 in {elapsed:.2f}s < 1s")


def test_evaluate_performance_100_images_500px():
    rng_ids = range(100)
    gts = [
        mf.generate_rosette(
            mf.RosetteConfig(
                width=500, height=500, leaf_count=12,
                leaf_length_range=(90, 180), leaf_width_range=(24, 44),
                seed=mf.derive_seed(11, i),
            )
        )
        for i in range(10)
    ]
    pairs = [
        (
            f"img_{i:03d}",
            mf.corrupt(gts[i % 10], mf.NoiseConfig(merge_prob=0.3, boundary_noise=2, seed=i)),
            gts[i % 10],
        )
        for i in rng_ids
    ]
    start = time.monotonic()
    report = mf.evaluate_corpus(pairs)
    elapsed = time.monotonic() - start
    assert elapsed < 30.0, f"evaluate took {elapsed:.1f}s"
    assert report.n_images == 100
    _passed(f"evaluate 100x500x500 corpus in {elapsed:.1f}s < 30s")


def test_cli_outputs_byte_identical_across_runs(tmp_path):
    def run_once(root):
        corpus = root / "corpus"
        args = [
            "gen", "--out", str(corpus), "--images", "6", "--leaves", "6",
            "--seed", "33", "--merge-prob", "0.4", "--drop-prob", "0.05",
            "--boundary-noise", "1", "--score-jitter", "0.05",
        ]
        assert cli_main(args) == 0
        fused = root / "fused"
        assert cli_main(["fuse", "--pred-dir", str(corpus / "pred"), "--out", str(fused)]) == 0
        assert (
            cli_main(
                [
                    "sweep", "--pred-dir", str(corpus / "pred"),
                    "--gt", str(corpus / "gt"), "--out", str(root / "sweep.csv"),
                ]
            )
            == 0
        )
        return {
            str(p.relative_to(root)): p.read_bytes()
            for p in sorted(root.rglob("*"))
            if p.is_file()
        }

    first = run_once(tmp_path / "run1")
    second = run_once(tmp_path / "run2")
    assert first.keys() == second.keys()
    for name in first:
        assert first[name] == second[name], f"{name} differs between runs"
    _passed("gen+fuse+sweep byte-identical across runs")
