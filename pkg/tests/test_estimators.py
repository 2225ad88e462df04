import math

import numpy as np
import pytest
from sklearn.base import clone

from helpers import box, occlusion_pair
from qsqs.estimators import (NmsSuppressor, QuboSuppressor, SoftNmsSuppressor,
                             check_detections, detections_to_array,
                             make_suppressor)
from qsqs.exceptions import InvalidInputError
from qsqs.geometry import BoundingBox
from qsqs.solvers import ExhaustiveSampler
from qsqs.suppression import Scheme, SuppressionConfig


class TestCheckDetections:
    def test_list_passthrough(self):
        boxes = occlusion_pair()
        assert check_detections(boxes) == boxes

    def test_duplicate_source_index_rejected(self):
        a = box(0, 0, 5, 5, source_index=1)
        b = box(9, 9, 14, 14, source_index=1)
        with pytest.raises(InvalidInputError):
            check_detections([a, b])

    def test_array_five_columns(self):
        arr = np.array([[0, 0, 10, 10, 0.9],
                        [5, 0, 15, 10, 0.8]])
        boxes = check_detections(arr)
        assert [b.source_index for b in boxes] == [0, 1]
        assert all(b.class_id == 0 for b in boxes)
        assert boxes[1].score == 0.8

    def test_array_six_columns_carries_class(self):
        arr = np.array([[0, 0, 10, 10, 0.9, 2]])
        boxes = check_detections(arr)
        assert boxes[0].class_id == 2

    def test_bad_width_rejected(self):
        with pytest.raises(InvalidInputError):
            check_detections(np.zeros((2, 4)))

    def test_invalid_row_named(self):
        arr = np.array([[0, 0, 10, 10, 0.9],
                        [5, 0, 5, 10, 0.8]])
        with pytest.raises(InvalidInputError, match="row 1"):
            check_detections(arr)

    def test_non_finite_rejected(self):
        arr = np.array([[0, 0, 10, np.nan, 0.9]])
        with pytest.raises(InvalidInputError):
            check_detections(arr)

    def test_round_trip_through_array(self):
        boxes = check_detections(np.array([[1, 2, 3, 4, 0.5, 7]]))
        arr = detections_to_array(boxes, n_columns=6)
        assert np.allclose(arr, [[1, 2, 3, 4, 0.5, 7]])


class TestNmsSuppressor:
    def test_array_in_array_out(self):
        arr = np.array([[0, 0, 10, 10, 0.9],
                        [0, 0, 10, 10, 0.8]])
        out = NmsSuppressor(iou_threshold=0.5).fit_transform(arr)
        assert isinstance(out, np.ndarray)
        assert out.shape == (1, 5)
        assert out[0, 4] == 0.9

    def test_list_in_list_out(self):
        pair = occlusion_pair()
        out = NmsSuppressor(iou_threshold=0.3).fit(pair).transform(pair)
        assert isinstance(out, list)
        assert len(out) == 1
        assert isinstance(out[0], BoundingBox)

    def test_six_column_round_trip(self):
        arr = np.array([[0, 0, 10, 10, 0.9, 1],
                        [40, 0, 50, 10, 0.8, 2]])
        out = NmsSuppressor().fit_transform(arr)
        assert out.shape == (2, 6)
        assert sorted(out[:, 5].tolist()) == [1.0, 2.0]

    def test_fit_returns_self(self):
        est = NmsSuppressor()
        assert est.fit(np.array([[0, 0, 1, 1, 0.5]])) is est


class TestSoftNmsSuppressor:
    def test_decays_scores(self):
        out = SoftNmsSuppressor(sigma=0.5).fit_transform(occlusion_pair())
        assert out[1].score == pytest.approx(0.6 * math.exp(-0.5), abs=1e-12)

    def test_threshold_drops(self):
        arr = np.array([[0, 0, 10, 10, 0.9],
                        [0, 0, 10, 10, 0.05]])
        out = SoftNmsSuppressor(sigma=0.5, score_threshold=0.02).fit_transform(arr)
        assert out.shape == (1, 5)


class TestQuboSuppressor:
    def test_recovers_occluded_partner(self):
        est = QuboSuppressor(pre_nms_threshold=0.6, solver=ExhaustiveSampler())
        out = est.fit_transform(occlusion_pair())
        assert len(out) == 2
        assert out[1].score == pytest.approx(0.6 * math.exp(-0.5), abs=1e-9)

    def test_hard_mode_discards(self):
        est = QuboSuppressor(pre_nms_threshold=0.6, soft_rescore=False,
                             solver=ExhaustiveSampler())
        out = est.fit_transform(occlusion_pair())
        assert len(out) == 1

    def test_enhance_requires_soft_rescore(self):
        est = QuboSuppressor(enhance=True, soft_rescore=False)
        with pytest.raises(InvalidInputError):
            est.fit_transform(occlusion_pair())

    def test_enhance_scheme_runs(self):
        est = QuboSuppressor(pre_nms_threshold=0.6, enhance=True,
                             solver=ExhaustiveSampler())
        assert len(est.fit_transform(occlusion_pair())) == 2

    def test_default_solver_is_seeded(self):
        arr = np.array([[0, 0, 10, 10, 0.9],
                        [4, 0, 14, 10, 0.7],
                        [30, 0, 40, 10, 0.6]])
        a = QuboSuppressor(random_state=3).fit_transform(arr)
        b = QuboSuppressor(random_state=3).fit_transform(arr)
        assert np.array_equal(a, b)

    def test_weight_validation_surfaces(self):
        est = QuboSuppressor(weights=(0.7, 0.3, 0.3))
        with pytest.raises(InvalidInputError):
            est.fit_transform(occlusion_pair())

    def test_clone_keeps_params(self):
        est = QuboSuppressor(weights=(0.5, 0.25, 0.25), qubit_cap=10,
                             sigma=0.4, random_state=8)
        params = clone(est).get_params()
        assert params["weights"] == (0.5, 0.25, 0.25)
        assert params["qubit_cap"] == 10
        assert params["sigma"] == 0.4

    def test_multiclass_array(self):
        arr = np.array([[0, 0, 10, 10, 0.9, 0],
                        [0, 0, 10, 10, 0.8, 1]])
        out = QuboSuppressor(solver=ExhaustiveSampler()).fit_transform(arr)
        assert out.shape == (2, 6)


class TestMakeSuppressor:
    def test_scheme_dispatch(self):
        assert isinstance(make_suppressor(SuppressionConfig(scheme=Scheme.NMS)),
                          NmsSuppressor)
        assert isinstance(
            make_suppressor(SuppressionConfig(scheme=Scheme.SOFT_NMS)),
            SoftNmsSuppressor)
        for scheme in (Scheme.QQS, Scheme.QSQS, Scheme.QSQS_ENH):
            est = make_suppressor(SuppressionConfig(scheme=scheme))
            assert isinstance(est, QuboSuppressor)

    def test_config_fields_transferred(self):
        cfg = SuppressionConfig(scheme=Scheme.QSQS, pre_nms_threshold=0.45,
                                qubit_cap=20, sigma=0.7)
        est = make_suppressor(cfg)
        assert est.pre_nms_threshold == 0.45
        assert est.qubit_cap == 20
        assert est.sigma == 0.7
        assert est.soft_rescore is True
        assert est.enhance is False

    def test_qqs_maps_to_hard_mode(self):
        est = make_suppressor(SuppressionConfig(scheme=Scheme.QQS))
        assert est.soft_rescore is False
