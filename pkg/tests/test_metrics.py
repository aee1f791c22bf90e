import numpy as np
import pytest

from maskfuse.maskcore import label_map_to_instances
from maskfuse.metrics import EvalResult, best_dice, dic, evaluate_corpus, evaluate_pair, sbd

from conftest import labels


# ---------------------------------------------------------------- oracle
# Brute force over every (instance, instance) pair, straight from the
# definition; deliberately shares no code with the implementation.


def oracle_best_dice(a: np.ndarray, b: np.ndarray) -> float:
    a_ids = [i for i in np.unique(a) if i > 0]
    b_ids = [i for i in np.unique(b) if i > 0]
    assert a_ids, "oracle_best_dice needs instances on the first map"
    total = 0.0
    for i in a_ids:
        ai = a == i
        best = 0.0
        for j in b_ids:
            bj = b == j
            d = 2.0 * np.sum(ai & bj) / (np.sum(ai) + np.sum(bj))
            best = max(best, d)
        total += best
    return total / len(a_ids)


def oracle_sbd(pred: np.ndarray, gt: np.ndarray) -> float:
    p = bool((pred > 0).any())
    g = bool((gt > 0).any())
    if not p and not g:
        return 1.0
    if not p or not g:
        return 0.0
    return min(oracle_best_dice(pred, gt), oracle_best_dice(gt, pred))


def random_label_map(rng, h, w, max_ids) -> np.ndarray:
    lm = rng.integers(0, max_ids + 1, size=(h, w))
    return lm.astype(np.int32)


# ----------------------------------------------------------------- tests


def test_best_dice_identical_maps():
    lm = labels("112\n.22")
    assert best_dice(lm, lm) == 1.0


def test_best_dice_split_instance():
    a = labels("111111")
    b = labels("111222")
    # best single piece covers half: 2*3/(6+3)
    expected = 2 * 3 / 9
    assert best_dice(a, b) == pytest.approx(expected, abs=1e-15)
    assert oracle_best_dice(a, b) == pytest.approx(expected, abs=1e-15)


def test_best_dice_empty_opponent_is_zero():
    a = labels("11..")
    b = labels("....")
    assert best_dice(a, b) == 0.0


def test_best_dice_empty_first_map_is_an_error():
    with pytest.raises(ValueError):
        best_dice(labels("...."), labels("11.."))


def test_best_dice_dimension_mismatch():
    with pytest.raises(ValueError, match="mismatch"):
        best_dice(labels("11"), labels("1"))


def test_sbd_identical_and_conventions():
    lm = labels("12\n12")
    assert sbd(lm, lm) == 1.0
    empty = labels("..\n..")
    assert sbd(empty, empty) == 1.0
    assert sbd(empty, lm) == 0.0
    assert sbd(lm, empty) == 0.0


def test_sbd_split_case_both_directions():
    a = labels("111111")
    b = labels("111222")
    assert sbd(a, b) == pytest.approx(2 / 3, abs=1e-15)
    assert sbd(a, b) == pytest.approx(oracle_sbd(a, b), abs=0)


def test_sbd_symmetry_and_relabeling(rng):
    for _ in range(30):
        a = random_label_map(rng, 8, 8, 3)
        b = random_label_map(rng, 8, 8, 3)
        assert sbd(a, b) == sbd(b, a)
    a = random_label_map(rng, 10, 10, 4)
    perm = np.array([0, 3, 1, 4, 2])  # relabel ids, keep partition
    assert sbd(a, perm[a]) == 1.0
    assert sbd(perm[a], perm[a]) == 1.0


def test_best_dice_does_not_increase_when_b_splits():
    a = labels("1111\n1111")
    whole = labels("1111\n1111")
    split = labels("1122\n1122")
    assert best_dice(a, split) <= best_dice(a, whole)


def test_dic_signs():
    five = labels("12345")
    six = labels("123456")
    assert dic(five, six) == -1
    assert dic(six, six) == 0
    eight = labels("12345678")
    assert dic(eight, six) == 2


def test_dic_antisymmetric(rng):
    for _ in range(10):
        a = random_label_map(rng, 6, 6, 4)
        b = random_label_map(rng, 6, 6, 4)
        assert dic(a, b) == -dic(b, a)


def test_oracle_equivalence_on_random_maps(rng):
    for _ in range(100):
        h, w = int(rng.integers(2, 20)), int(rng.integers(2, 20))
        a = random_label_map(rng, h, w, int(rng.integers(1, 5)))
        b = random_label_map(rng, h, w, int(rng.integers(1, 5)))
        assert sbd(a, b) == pytest.approx(oracle_sbd(a, b), abs=1e-12)


def test_evaluate_pair_round_trip():
    gt = labels("1122\n1122\n3333")
    pred = label_map_to_instances(gt)
    r = evaluate_pair(pred, gt)
    assert r == EvalResult(sbd=1.0, dic=0, abs_dic=0, pred_count=3, gt_count=3)


def test_evaluate_pair_empty_prediction():
    from maskfuse.maskcore import PredictionSet

    gt = labels("123\n123")
    r = evaluate_pair(PredictionSet(width=3, height=2), gt)
    assert r.sbd == 0.0 and r.dic == -3 and r.abs_dic == 3


def test_evaluate_pair_matches_oracle_on_corrupted_rosette():
    from maskfuse.synthgen import NoiseConfig, RosetteConfig, corrupt, generate_rosette
    from maskfuse.maskcore import instances_to_label_map

    gt = generate_rosette(RosetteConfig(leaf_count=5, seed=9))
    pred = corrupt(gt, NoiseConfig(merge_prob=1.0, seed=3))
    r = evaluate_pair(pred, gt)
    flat = instances_to_label_map(pred)
    assert r.sbd == pytest.approx(oracle_sbd(flat, gt), abs=1e-12)
    assert r.dic == len(np.unique(flat)) - 1 - 5


def test_evaluate_corpus_single_and_mean():
    gt = labels("11\n22")
    pred = label_map_to_instances(gt)
    rep = evaluate_corpus([("a", pred, gt)])
    assert rep.n_images == 1
    assert rep.mean_sbd == rep.per_image[0][1].sbd == 1.0

    half = labels("11\n11")  # one instance covering everything
    rep2 = evaluate_corpus([("a", pred, gt), ("b", label_map_to_instances(half), gt)])
    per = dict(rep2.per_image)
    assert rep2.mean_sbd == pytest.approx((per["a"].sbd + per["b"].sbd) / 2, abs=0)
    assert rep2.mean_dic == pytest.approx((per["a"].dic + per["b"].dic) / 2, abs=0)


def test_evaluate_corpus_ordering_and_error_context():
    gt = labels("11")
    pred = label_map_to_instances(gt)
    rep = evaluate_corpus([("b", pred, gt), ("a", pred, gt)])
    assert [i for i, _ in rep.per_image] == ["a", "b"]

    bad_gt = labels("11\n11")
    with pytest.raises(ValueError, match="image 'b'"):
        evaluate_corpus([("a", pred, gt), ("b", pred, bad_gt)])


def test_corpus_means_match_per_image_oracle(rng):
    pairs = []
    expected = []
    for k in range(20):
        gt = random_label_map(rng, 10, 10, 4)
        noisy = random_label_map(rng, 10, 10, 4)
        pairs.append((f"img{k:02d}", label_map_to_instances(noisy), gt))
        expected.append(oracle_sbd(noisy, gt))
    rep = evaluate_corpus(pairs)
    assert rep.mean_sbd == pytest.approx(float(np.mean(expected)), abs=1e-12)


def test_report_csv_and_json_shape():
    gt = labels("12")
    rep = evaluate_corpus([("x", label_map_to_instances(gt), gt)])
    csv_text = rep.to_csv()
    lines = csv_text.strip().splitlines()
    assert lines[0] == "image_id,sbd,dic,abs_dic,pred_count,gt_count"
    assert lines[1].startswith("x,1,")
    assert lines[-1].startswith("MEAN,")
    payload = rep.to_json()
    assert '"mean_sbd": 1.0' in payload
