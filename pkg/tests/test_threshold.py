import numpy as np
import pytest

from maskfuse.maskcore import PredictionSet, ScoredInstance, label_map_to_instances
from maskfuse.metrics import evaluate_corpus
from maskfuse.synthgen import NoiseConfig, RosetteConfig, generate_corpus, generate_rosette
from maskfuse.threshold import SweepConfig, filter_by_score, sweep
from maskfuse.transforms import Transform

from conftest import mask


def _scored(w, scores):
    m = np.zeros((1, w), dtype=bool)
    instances = []
    for k, s in enumerate(scores):
        mm = m.copy()
        mm[0, k] = True
        instances.append(ScoredInstance(mask=mm, score=s))
    return PredictionSet(width=w, height=1, instances=tuple(instances))


def test_filter_noop_at_zero():
    ps = _scored(3, [0.95, 0.7, 0.55])
    out = filter_by_score(ps, 0.0)
    assert out.scores == ps.scores


def test_filter_above_everything():
    ps = _scored(3, [0.95, 0.7, 0.55])
    assert len(filter_by_score(ps, 0.96)) == 0


def test_filter_is_inclusive():
    ps = _scored(3, [0.95, 0.7, 0.55])
    out = filter_by_score(ps, 0.7)
    assert out.scores == [0.95, 0.7]


def test_filter_idempotent():
    ps = _scored(4, [0.9, 0.8, 0.4, 0.2])
    once = filter_by_score(ps, 0.5)
    twice = filter_by_score(once, 0.5)
    assert once.scores == twice.scores and len(once) == 2


def test_filter_monotone_counts():
    rng = np.random.Generator(np.random.PCG64(3))
    ps = _scored(20, list(rng.random(20)))
    counts = [len(filter_by_score(ps, t)) for t in np.linspace(0, 1, 11)]
    assert counts == sorted(counts, reverse=True)


def test_filter_rejects_bad_tau():
    with pytest.raises(ValueError):
        filter_by_score(_scored(2, [0.5, 0.5]), 1.5)


def test_sweep_config_validation():
    with pytest.raises(ValueError, match="strictly increasing"):
        SweepConfig(taus=(0.5, 0.5))
    with pytest.raises(ValueError, match="strictly increasing"):
        SweepConfig(taus=(0.9, 0.5))
    with pytest.raises(ValueError):
        SweepConfig(taus=(0.5, 1.5))
    with pytest.raises(ValueError):
        SweepConfig(taus=())


def _perfect_corpus(n=4):
    corpus = []
    for i in range(n):
        gt = generate_rosette(RosetteConfig(leaf_count=5, seed=100 + i))
        corpus.append((f"img{i}", {Transform.IDENTITY: label_map_to_instances(gt)}, gt))
    return corpus


def test_sweep_perfect_predictions():
    table = sweep(_perfect_corpus(), SweepConfig(taus=(0.5, 0.7, 0.9)))
    assert table.n_images == 4
    for row in table.rows:
        assert row.mean_sbd == 1.0
        assert row.mean_abs_dic == 0.0
        assert row.mean_pred_count == 5.0


def test_sweep_counts_non_increasing_and_deterministic():
    noise = NoiseConfig(merge_prob=0.35, drop_prob=0.05, boundary_noise=1, seed=19)
    corpus = generate_corpus(10, RosetteConfig(seed=19), noise)
    cfg = SweepConfig(apply_tta=False)
    t1 = sweep(corpus, cfg)
    t2 = sweep(corpus, cfg)
    assert t1 == t2
    assert t1.to_csv() == t2.to_csv()
    counts = [r.mean_pred_count for r in t1.rows]
    assert all(b <= a for a, b in zip(counts, counts[1:]))


def test_sweep_single_tau_matches_direct_evaluation():
    noise = NoiseConfig(merge_prob=0.3, boundary_noise=1, seed=23)
    corpus = generate_corpus(6, RosetteConfig(seed=23), noise, (Transform.IDENTITY,))
    tau = 0.8
    table = sweep(corpus, SweepConfig(taus=(tau,), apply_tta=False))
    pairs = [
        (image_id, filter_by_score(versions[Transform.IDENTITY], tau), gt)
        for image_id, versions, gt in corpus
    ]
    report = evaluate_corpus(pairs)
    row = table.rows[0]
    assert row.mean_sbd == report.mean_sbd
    assert row.mean_dic == report.mean_dic
    assert row.mean_abs_dic == report.mean_abs_dic


def test_sweep_requires_identity_version():
    gt = generate_rosette(RosetteConfig(leaf_count=3, seed=1))
    corpus = [("x", {Transform.HFLIP: label_map_to_instances(gt)}, gt)]
    with pytest.raises(ValueError, match="identity"):
        sweep(corpus, SweepConfig())


def test_sweep_csv_header():
    table = sweep(_perfect_corpus(1), SweepConfig(taus=(0.5,)))
    lines = table.to_csv().splitlines()
    assert lines[0] == "tau,mean_sbd,mean_dic,mean_abs_dic,mean_pred_count,n_images"
    assert lines[1] == "0.5,1,0,0,5,1"


def test_sweep_with_tta_uses_all_versions():
    noise = NoiseConfig(merge_prob=0.5, seed=31)
    corpus = generate_corpus(6, RosetteConfig(seed=31), noise)
    plain = sweep(corpus, SweepConfig(taus=(0.5,), apply_tta=False))
    fused = sweep(corpus, SweepConfig(taus=(0.5,), apply_tta=True))
    assert fused.rows[0].mean_abs_dic <= plain.rows[0].mean_abs_dic
