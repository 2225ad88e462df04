import math

import pytest
from hypothesis import given, strategies as st

from helpers import box
from qsqs.evaluation import (ApMode, GroundTruth, MatchFlag,
                             average_precision, evaluate,
                             log_average_miss_rate, match_detections,
                             mean_ap)
from qsqs.exceptions import InvalidInputError, UndefinedMetricError

TP, FP, IGN = MatchFlag.TP, MatchFlag.FP, MatchFlag.IGNORED


def gt_of(boxes, ignore=None, image_id="img"):
    return GroundTruth(image_id=image_id, boxes=tuple(boxes),
                       ignore_flags=tuple(ignore) if ignore else ())


# One image, two targets, three detections: hit, miss, hit.  This is the
# standing fixture for both the AP value and the miss-rate sweep.
def tp_fp_tp_fixture():
    gt = gt_of([box(0, 0, 10, 10, score=1.0),
                box(100, 0, 110, 10, score=1.0, source_index=1)])
    dets = [box(0, 0, 10, 10, score=0.9, source_index=0),
            box(50, 50, 60, 60, score=0.8, source_index=1),
            box(100, 0, 110, 10, score=0.7, source_index=2)]
    return dets, gt


class TestMatchDetections:
    def test_exact_match(self):
        gt = gt_of([box(0, 0, 10, 10, score=1.0)])
        flags = match_detections([box(0, 0, 10, 10, score=0.9)], gt, 0.5)
        assert flags == [TP]

    def test_double_detection_single_gt(self):
        gt = gt_of([box(0, 0, 10, 10, score=1.0)])
        dets = [box(0, 0, 10, 10, score=0.9, source_index=0),
                box(0, 0, 10, 10, score=0.8, source_index=1)]
        assert match_detections(dets, gt, 0.5) == [TP, FP]

    def test_low_iou_is_fp(self):
        gt = gt_of([box(0, 0, 10, 10, score=1.0)])
        flags = match_detections([box(6, 0, 16, 10, score=0.9)], gt, 0.5)
        assert flags == [FP]

    def test_flags_align_with_input_order(self):
        gt = gt_of([box(0, 0, 10, 10, score=1.0)])
        dets = [box(50, 50, 60, 60, score=0.2, source_index=0),
                box(0, 0, 10, 10, score=0.9, source_index=1)]
        assert match_detections(dets, gt, 0.5) == [FP, TP]

    def test_higher_score_wins_contested_gt(self):
        gt = gt_of([box(0, 0, 10, 10, score=1.0)])
        dets = [box(0, 0, 10, 10, score=0.5, source_index=0),
                box(1, 0, 11, 10, score=0.9, source_index=1)]
        flags = match_detections(dets, gt, 0.5)
        assert flags == [FP, TP]

    def test_class_mismatch_is_fp(self):
        gt = gt_of([box(0, 0, 10, 10, score=1.0, class_id=1)])
        flags = match_detections([box(0, 0, 10, 10, score=0.9, class_id=0)],
                                 gt, 0.5)
        assert flags == [FP]

    def test_ignore_region_absorbs(self):
        gt = gt_of([box(0, 0, 10, 10, score=1.0)], ignore=[True])
        dets = [box(0, 0, 10, 10, score=0.9, source_index=0),
                box(1, 0, 11, 10, score=0.8, source_index=1)]
        assert match_detections(dets, gt, 0.5) == [IGN, IGN]

    def test_real_gt_preferred_over_ignore(self):
        real = box(0, 0, 10, 10, score=1.0, source_index=0)
        region = box(0, 0, 12, 10, score=1.0, source_index=1)
        gt = gt_of([real, region], ignore=[False, True])
        flags = match_detections([box(0, 0, 10, 10, score=0.9)], gt, 0.5)
        assert flags == [TP]

    def test_each_gt_matched_once(self):
        gt = gt_of([box(0, 0, 10, 10, score=1.0),
                    box(30, 0, 40, 10, score=1.0, source_index=1)])
        dets = [box(0, 0, 10, 10, score=0.9, source_index=i)
                for i in range(5)]
        flags = match_detections(dets, gt, 0.5)
        assert flags.count(TP) == 1


class TestAveragePrecision:
    def test_tp_fp_tp_all_point(self):
        value = average_precision([TP, FP, TP], [0.9, 0.8, 0.7], 2,
                                  ApMode.ALL_POINT)
        assert value == pytest.approx(5.0 / 6.0, abs=1e-12)

    def test_tp_fp_tp_eleven_point(self):
        value = average_precision([TP, FP, TP], [0.9, 0.8, 0.7], 2,
                                  ApMode.ELEVEN_POINT)
        assert value == pytest.approx(28.0 / 33.0, abs=1e-12)

    def test_perfect_detector_both_modes(self):
        flags, scores = [TP, TP], [0.9, 0.8]
        for mode in ApMode:
            assert average_precision(flags, scores, 2, mode) == \
                pytest.approx(1.0, abs=1e-12)

    def test_all_fp_both_modes(self):
        for mode in ApMode:
            assert average_precision([FP, FP], [0.9, 0.8], 3, mode) == 0.0

    def test_no_detections(self):
        assert average_precision([], [], 4, ApMode.ALL_POINT) == 0.0

    def test_zero_gt_undefined(self):
        with pytest.raises(UndefinedMetricError):
            average_precision([TP], [0.9], 0, ApMode.ALL_POINT)

    def test_ignored_flags_do_not_count(self):
        with_ign = average_precision([TP, IGN, TP], [0.9, 0.8, 0.7], 2,
                                     ApMode.ALL_POINT)
        without = average_precision([TP, TP], [0.9, 0.7], 2,
                                    ApMode.ALL_POINT)
        assert with_ign == without == 1.0

    @given(st.lists(st.tuples(st.sampled_from([TP, FP]),
                              st.floats(0.01, 0.99)),
                    min_size=1, max_size=12))
    def test_monotone_score_transform_invariance(self, pairs):
        flags = [p[0] for p in pairs]
        scores = [p[1] for p in pairs]
        warped = [s ** 3 + s for s in scores]
        num_gt = max(flags.count(TP), 1)
        for mode in ApMode:
            assert average_precision(flags, scores, num_gt, mode) == \
                pytest.approx(average_precision(flags, warped, num_gt, mode),
                              abs=1e-12)

    @given(st.lists(st.tuples(st.sampled_from([TP, FP]),
                              st.floats(0.3, 0.99)),
                    min_size=1, max_size=12))
    def test_appending_weak_fp_never_helps(self, pairs):
        flags = [p[0] for p in pairs]
        scores = [p[1] for p in pairs]
        num_gt = max(flags.count(TP), 1)
        for mode in ApMode:
            base = average_precision(flags, scores, num_gt, mode)
            worse = average_precision(flags + [FP], scores + [0.05],
                                      num_gt, mode)
            assert worse <= base + 1e-12


class TestMeanAp:
    def test_single_class(self):
        assert mean_ap({0: 0.75}) == 0.75

    def test_two_classes(self):
        assert mean_ap({0: 1.0, 1: 0.0}) == 0.5

    def test_arithmetic(self):
        assert mean_ap({0: 5.0 / 6.0, 3: 1.0}) == pytest.approx(11.0 / 12.0)

    def test_empty_undefined(self):
        with pytest.raises(UndefinedMetricError):
            mean_ap({})


def lamr_oracle(dets_by_image, gts, iou_threshold=0.5):
    """Brute-force miss-rate sweep, written independently of the library.

    Enumerates every distinct score as a cut, recounts TP/FP from
    scratch at each cut, then applies the nine-point sampling rule.
    """
    num_images = len(gts)
    num_gt = sum(sum(1 for i, b in enumerate(g.boxes)
                     if not (g.ignore_flags[i] if g.ignore_flags else False))
                 for g in gts)
    scores = sorted({b.score for dets in dets_by_image.values()
                     for b in dets}, reverse=True)
    points = []
    for cut in scores:
        tp = fp = 0
        for g in gts:
            dets = [d for d in dets_by_image.get(g.image_id, [])
                    if d.score >= cut]
            flags = match_detections(dets, g, iou_threshold)
            tp += flags.count(TP)
            fp += flags.count(FP)
        points.append((fp / num_images, 1.0 - tp / num_gt))
    total = 0.0
    for k in range(9):
        ref = 10.0 ** (-2.0 + k / 4.0)
        reachable = [mr for fppi, mr in points if fppi <= ref]
        if reachable:
            mr = reachable[-1]
        elif points:
            mr = points[0][1]
        else:
            mr = 1.0
        total += math.log(max(mr, 1e-10))
    return math.exp(total / 9.0)


class TestLogAverageMissRate:
    def test_perfect_detector_clamped(self):
        gt = gt_of([box(0, 0, 10, 10, score=1.0)])
        dets = {"img": [box(0, 0, 10, 10, score=0.9)]}
        lamr, curve = log_average_miss_rate(dets, [gt])
        assert lamr <= 1e-9
        assert curve[-1] == (0.0, 0.0)

    def test_zero_detections_is_one(self):
        gt = gt_of([box(0, 0, 10, 10, score=1.0)])
        lamr, curve = log_average_miss_rate({"img": []}, [gt])
        assert lamr == 1.0
        assert curve == ()

    def test_three_detection_fixture_matches_oracle(self):
        dets, gt = tp_fp_tp_fixture()
        by_image = {"img": dets}
        lamr, curve = log_average_miss_rate(by_image, [gt])
        assert lamr == pytest.approx(lamr_oracle(by_image, [gt]), abs=1e-9)
        assert curve[0] == (0.0, 0.5)
        assert curve[-1] == (1.0, 0.0)

    def test_fixture_value_by_hand(self):
        # Eight reference points below FPPI 1 resolve to miss rate 0.5,
        # the ninth reaches the final (1.0, 0.0) point, clamped.
        dets, gt = tp_fp_tp_fixture()
        lamr, _ = log_average_miss_rate({"img": dets}, [gt])
        expected = math.exp((8 * math.log(0.5) + math.log(1e-10)) / 9.0)
        assert lamr == pytest.approx(expected, abs=1e-12)

    def test_removing_fp_never_hurts(self):
        dets, gt = tp_fp_tp_fixture()
        with_fp, _ = log_average_miss_rate({"img": dets}, [gt])
        without, _ = log_average_miss_rate(
            {"img": [dets[0], dets[2]]}, [gt])
        assert without <= with_fp + 1e-12

    def test_multi_image_pooling(self):
        g1 = gt_of([box(0, 0, 10, 10, score=1.0)], image_id="a")
        g2 = gt_of([box(0, 0, 10, 10, score=1.0)], image_id="b")
        dets = {"a": [box(0, 0, 10, 10, score=0.9)],
                "b": [box(50, 50, 60, 60, score=0.8)]}
        lamr, _ = log_average_miss_rate(dets, [g1, g2])
        assert lamr == pytest.approx(lamr_oracle(dets, [g1, g2]), abs=1e-9)

    def test_zero_gt_undefined(self):
        with pytest.raises(UndefinedMetricError):
            log_average_miss_rate({"img": []}, [gt_of([])])

    def test_random_cases_match_oracle(self):
        import numpy as np
        rng = np.random.default_rng(0)
        for trial in range(10):
            gts, dets = [], {}
            for i in range(3):
                image_id = f"im{i}"
                targets = [box(j * 30, 0, j * 30 + 10, 10, score=1.0,
                               source_index=j)
                           for j in range(int(rng.integers(1, 4)))]
                gts.append(gt_of(targets, image_id=image_id))
                found = []
                for j, t in enumerate(targets):
                    if rng.random() < 0.7:
                        found.append(box(t.x1, t.y1, t.x2, t.y2,
                                         score=float(rng.uniform(0.3, 1.0)),
                                         source_index=len(found)))
                for _ in range(int(rng.integers(0, 3))):
                    x = float(rng.uniform(200, 400))
                    found.append(box(x, 0, x + 10, 10,
                                     score=float(rng.uniform(0.1, 0.9)),
                                     source_index=len(found)))
                dets[image_id] = found
            lamr, _ = log_average_miss_rate(dets, gts)
            assert lamr == pytest.approx(lamr_oracle(dets, gts), abs=1e-9)


class TestEvaluate:
    def test_report_shape(self):
        dets, gt = tp_fp_tp_fixture()
        report = evaluate({"img": dets}, [gt])
        assert set(report.per_class) == {0}
        assert report.per_class[0].ap == pytest.approx(5.0 / 6.0, abs=1e-12)
        assert report.per_class[0].num_gt == 2
        assert report.mean_ap == pytest.approx(5.0 / 6.0, abs=1e-12)
        assert report.num_images == 1
        assert 0.0 < report.lamr < 1.0

    def test_multiclass(self):
        gt = GroundTruth(image_id="img", boxes=(
            box(0, 0, 10, 10, score=1.0, class_id=0, source_index=0),
            box(40, 0, 50, 10, score=1.0, class_id=1, source_index=1)))
        dets = {"img": [box(0, 0, 10, 10, score=0.9, class_id=0,
                            source_index=0)]}
        report = evaluate(dets, [gt])
        assert report.per_class[0].ap == 1.0
        assert report.per_class[1].ap == 0.0
        assert report.mean_ap == 0.5

    def test_class_without_gt_excluded(self):
        gt = gt_of([box(0, 0, 10, 10, score=1.0, class_id=0)])
        dets = {"img": [box(0, 0, 10, 10, score=0.9, class_id=0,
                            source_index=0),
                        box(40, 0, 50, 10, score=0.8, class_id=7,
                            source_index=1)]}
        report = evaluate(dets, [gt])
        assert set(report.per_class) == {0}

    def test_detections_on_unknown_image_count_as_fp(self):
        gt = gt_of([box(0, 0, 10, 10, score=1.0)], image_id="a")
        dets = {"a": [box(0, 0, 10, 10, score=0.9)],
                "b": [box(0, 0, 10, 10, score=0.8)]}
        report = evaluate(dets, [gt])
        assert report.num_images == 2
        # recall was already complete, so AP stays 1.0, but the stray
        # detection is visible as the final precision point
        assert report.per_class[0].ap == 1.0
        assert report.per_class[0].precision[-1] == 0.5

    def test_duplicate_image_ids_rejected(self):
        gt = gt_of([box(0, 0, 10, 10, score=1.0)])
        with pytest.raises(InvalidInputError):
            evaluate({"img": []}, [gt, gt])

    def test_no_evaluable_class(self):
        with pytest.raises(UndefinedMetricError):
            evaluate({"img": []}, [gt_of([])])

    def test_json_dict(self):
        dets, gt = tp_fp_tp_fixture()
        payload = evaluate({"img": dets}, [gt]).to_json_dict()
        assert payload["format_version"] == 1
        assert payload["per_class"]["0"]["num_gt"] == 2
        assert payload["map"] == pytest.approx(5.0 / 6.0)
        assert "lamr" in payload
