import numpy as np
import pytest

from burnscan import (
    DataError,
    EvalReport,
    GridMismatchError,
    GroundTruthMask,
    SeverityMap,
    auprc,
    auprc_of,
    build_eval_report,
    confusion_matrix,
    f1_per_class,
    load_eval_report,
    load_mask,
    pr_curve,
    save_eval_report,
)
from burnscan.geotiff import write_raster


def auprc_ref(scores, gt):
    # independent oracle: walk the descending ranking one group at a time
    s = np.asarray(scores, dtype=np.float64).ravel()
    y = np.asarray(gt).ravel().astype(bool)
    keep = np.isfinite(s)
    s, y = s[keep], y[keep]
    order = np.argsort(-s, kind="stable")
    s, y = s[order], y[order]
    pos = y.sum()
    ap, tp, seen, prev_recall = 0.0, 0, 0, 0.0
    i = 0
    while i < len(s):
        j = i
        while j < len(s) and s[j] == s[i]:
            tp += y[j]
            seen += 1
            j += 1
        recall = tp / pos
        ap += (recall - prev_recall) * (tp / seen)
        prev_recall = recall
        i = j
    return ap


class TestPRCurve:
    def test_perfect_ranking_is_one(self):
        scores = np.array([[0.9, 0.8], [0.2, 0.1]])
        gt = np.array([[1, 1], [0, 0]])
        assert auprc_of(scores, gt) == 1.0

    def test_hand_case_four_pixels(self):
        # ranking [4,3,2,1] vs gt [1,0,1,0]:
        # AP = 1/2 * 1 + 1/2 * 2/3 = 5/6
        scores = np.array([[4.0, 3.0, 2.0, 1.0]])
        gt = np.array([[1, 0, 1, 0]])
        assert abs(auprc_of(scores, gt) - 5.0 / 6.0) < 1e-9

    def test_all_equal_scores_equal_positive_rate(self):
        rng = np.random.default_rng(0)
        gt = (rng.random((20, 20)) < 0.3).astype(int)
        scores = np.full((20, 20), 0.5)
        want = gt.mean()
        assert abs(auprc_of(scores, gt) - want) < 1e-12

    def test_matches_reference_on_random_instances(self):
        rng = np.random.default_rng(1)
        for trial in range(30):
            n = int(rng.integers(5, 60))
            scores = rng.choice([0.1, 0.3, 0.5, 0.7, 0.9], n).reshape(1, n)
            gt = rng.integers(0, 2, n).reshape(1, n)
            if gt.sum() in (0, n):
                continue
            assert abs(auprc_of(scores, gt) - auprc_ref(scores, gt)) < 1e-12

    def test_monotone_transform_invariance(self):
        rng = np.random.default_rng(2)
        scores = rng.random((15, 15))
        gt = (rng.random((15, 15)) < 0.4).astype(int)
        base = auprc_of(scores, gt)
        for f in (lambda s: 2 * s + 1, np.exp, lambda s: s ** 3,
                  np.tanh, lambda s: np.log1p(s)):
            assert abs(auprc_of(f(scores), gt) - base) < 1e-12

    def test_ties_grouped_into_one_point(self):
        scores = np.array([[0.5, 0.5, 0.5, 0.1]])
        gt = np.array([[1, 0, 1, 0]])
        curve = pr_curve(scores, gt)
        assert len(curve.points) == 2
        assert curve.points[0] == (1.0, 2.0 / 3.0)

    def test_nan_scores_excluded(self):
        scores = np.array([[0.9, np.nan, 0.1]])
        gt = np.array([[1, 1, 0]])
        curve = pr_curve(scores, gt)
        assert curve.total == 2
        assert curve.positives == 1
        assert auprc(curve) == 1.0

    def test_nonzero_labels_count_as_positive(self):
        scores = np.array([[0.9, 0.1]])
        assert auprc_of(scores, np.array([[2, 0]])) == 1.0

    def test_requires_both_classes(self):
        scores = np.array([[0.5, 0.6]])
        with pytest.raises(DataError, match="no positives"):
            pr_curve(scores, np.zeros((1, 2)))
        with pytest.raises(DataError, match="no negatives"):
            pr_curve(scores, np.ones((1, 2)))

    def test_shape_mismatch(self):
        with pytest.raises(GridMismatchError):
            pr_curve(np.zeros((2, 2)), np.zeros((3, 2)))


class TestF1:
    def two_maps(self):
        pred = SeverityMap(labels=np.array([[0, 1, 2], [0, 1, 2]], dtype=np.uint8))
        gt = GroundTruthMask(labels=np.array([[0, 1, 2], [2, 1, 0]]),
                             label_set=(0, 1, 2))
        return pred, gt

    def test_hand_counts(self):
        pred, gt = self.two_maps()
        f1 = f1_per_class(pred, gt)
        # unburned: tp=1 fp=1 fn=1 -> 0.5; black: tp=2 -> 1.0; white: 0.5
        assert f1 == {"unburned": 0.5, "black_ash": 1.0, "white_ash": 0.5}

    def test_perfect_prediction(self):
        labels = np.array([[0, 1], [2, 0]], dtype=np.uint8)
        f1 = f1_per_class(SeverityMap(labels=labels),
                          GroundTruthMask(labels=labels.astype(np.int64),
                                          label_set=(0, 1, 2)))
        assert all(v == 1.0 for v in f1.values())

    def test_invalid_pixels_excluded_pairwise(self):
        pred = SeverityMap(labels=np.array([[0, 255], [2, 1]], dtype=np.uint8))
        gt = GroundTruthMask(labels=np.array([[0, 1], [255, 1]]),
                             label_set=(0, 1, 255))
        with pytest.warns(UserWarning, match="white_ash.*absent"):
            f1 = f1_per_class(pred, gt)
        # only pixels (0,0) and (1,1) are compared
        assert f1["unburned"] == 1.0
        assert f1["black_ash"] == 1.0

    def test_absent_class_is_nan_with_warning(self):
        pred = SeverityMap(labels=np.zeros((2, 2), dtype=np.uint8))
        gt = GroundTruthMask(labels=np.zeros((2, 2), dtype=np.int64),
                             label_set=(0,))
        with pytest.warns(UserWarning, match="absent"):
            f1 = f1_per_class(pred, gt)
        assert f1["unburned"] == 1.0
        assert np.isnan(f1["black_ash"]) and np.isnan(f1["white_ash"])

    def test_shape_mismatch(self):
        pred = SeverityMap(labels=np.zeros((2, 2), dtype=np.uint8))
        gt = GroundTruthMask(labels=np.zeros((3, 3), dtype=np.int64),
                             label_set=(0,))
        with pytest.raises(GridMismatchError):
            f1_per_class(pred, gt)

    def test_confusion_rows_are_ground_truth(self):
        pred, gt = self.two_maps()
        mat = confusion_matrix(pred, gt)
        assert mat.tolist() == [[1, 0, 1], [0, 2, 0], [1, 0, 1]]
        assert mat.sum() == 6

    def test_mask_rejects_unknown_label(self):
        with pytest.raises(DataError, match="unknown label: 7"):
            GroundTruthMask(labels=np.array([[0, 7]]), label_set=(0, 1))


class TestLoadMask:
    def test_round_trip(self, tmp_path):
        labels = np.array([[0, 1], [2, 0]], dtype=np.uint8)
        path = tmp_path / "mask.tif"
        write_raster(path, labels, (0.0, 0.0, 10.0), "synthetic-utm")
        gt = load_mask(path, label_set=(0, 1, 2))
        assert np.array_equal(gt.labels, labels)
        assert gt.labels.dtype == np.int64

    def test_expected_shape_enforced(self, tmp_path):
        path = tmp_path / "mask.tif"
        write_raster(path, np.zeros((4, 4), dtype=np.uint8), (0, 0, 1), "")
        with pytest.raises(GridMismatchError):
            load_mask(path, label_set=(0,), expected_shape=(8, 8))

    def test_rejects_multiband(self, tmp_path):
        path = tmp_path / "mask.tif"
        write_raster(path, np.zeros((4, 4, 2), dtype=np.uint8), (0, 0, 1), "")
        with pytest.raises(DataError, match="single-band"):
            load_mask(path, label_set=(0,))

    def test_rejects_fractional_floats(self, tmp_path):
        path = tmp_path / "mask.tif"
        write_raster(path, np.full((4, 4), 0.5, dtype=np.float32), (0, 0, 1), "")
        with pytest.raises(DataError, match="non-integer"):
            load_mask(path, label_set=(0,))

    def test_integral_floats_accepted(self, tmp_path):
        path = tmp_path / "mask.tif"
        write_raster(path, np.ones((4, 4), dtype=np.float32), (0, 0, 1), "")
        gt = load_mask(path, label_set=(1,))
        assert gt.labels.dtype == np.int64


class TestEvalReport:
    def make_report(self):
        scores = np.array([[0.9, 0.8], [0.2, np.nan]])
        burned = np.array([[1, 1], [0, 0]])
        return build_eval_report(scores, burned)

    def test_scores_only_report(self):
        rep = self.make_report()
        assert rep.auprc == 1.0
        assert all(np.isnan(v) for v in rep.f1.values())
        assert rep.ignored_pixels == 1
        assert rep.confusion == [[0, 0, 0]] * 3

    def test_full_report(self):
        scores = np.array([[0.9, 0.8], [0.2, 0.1]])
        burned = np.array([[1, 1], [0, 0]])
        labels = np.array([[2, 1], [0, 0]], dtype=np.uint8)
        pred = SeverityMap(labels=labels)
        gt = GroundTruthMask(labels=labels.astype(np.int64), label_set=(0, 1, 2))
        rep = build_eval_report(scores, burned, pred=pred, severity_gt=gt)
        assert rep.auprc == 1.0
        assert all(v == 1.0 for v in rep.f1.values())
        assert np.trace(np.asarray(rep.confusion)) == 4

    def test_invalid_labels_counted_ignored(self):
        scores = np.array([[0.9, 0.8], [0.2, 0.1]])
        burned = np.array([[1, 1], [0, 0]])
        pred = SeverityMap(labels=np.array([[2, 255], [0, 0]], dtype=np.uint8))
        gt = GroundTruthMask(labels=np.array([[2, 0], [0, 0]]), label_set=(0, 2))
        with pytest.warns(UserWarning, match="black_ash.*absent"):
            rep = build_eval_report(scores, burned, pred=pred, severity_gt=gt)
        assert rep.ignored_pixels == 1

    def test_json_round_trip_with_nan(self, tmp_path):
        rep = self.make_report()
        path = tmp_path / "report.json"
        save_eval_report(rep, path)
        text = path.read_text()
        assert "NaN" not in text and "null" in text
        back = load_eval_report(path)
        assert back.auprc == rep.auprc
        assert back.ignored_pixels == rep.ignored_pixels
        for k, v in rep.f1.items():
            assert (np.isnan(v) and np.isnan(back.f1[k])) or v == back.f1[k]

    def test_save_deterministic(self, tmp_path):
        rep = self.make_report()
        save_eval_report(rep, tmp_path / "a.json")
        save_eval_report(rep, tmp_path / "b.json")
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()

    def test_load_rejects_malformed(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{\"auprc\": 1.0}")
        with pytest.raises(DataError, match="malformed evaluation report"):
            load_eval_report(path)
