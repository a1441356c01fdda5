"""Unit tests for mean precision and recall."""

import numpy as np
import pytest

from src.bonet.evaluation import (
    EvaluationError,
    eval_dataset,
    eval_mprec_mrec,
    greedy_match,
    point_iou,
)
from src.bonet.inference import InstanceLabels

GT = InstanceLabels(
    point_ids=np.array([0, 0, 0, 0, 1, 1, 1, 1, -1, -1]),
    semantics={0: 0, 1: 1},
)


class TestPointIoU:
    """Test IoU of boolean point masks."""

    def test_partial_overlap(self):
        """Test that 2 shared of 4 covered points gives 0.5."""
        a = np.array([1, 1, 1, 0], dtype=bool)
        b = np.array([0, 1, 1, 1], dtype=bool)
        assert point_iou(a, b) == 0.5

    def test_empty_union(self):
        """Test that two empty masks have IoU 0."""
        assert point_iou(np.zeros(3, bool), np.zeros(3, bool)) == 0.0


class TestGreedyMatch:
    """Test one-to-one matching by descending IoU."""

    def test_highest_first(self):
        """Test that the best pair is taken before weaker ones."""
        iou = np.array([[0.6, 0.9], [0.7, 0.1]])
        assert greedy_match(iou, 0.5) == [(0, 1), (1, 0)]

    def test_threshold(self):
        """Test that pairs below the threshold never match."""
        assert greedy_match(np.array([[0.49]]), 0.5) == []


class TestMprecMrec:
    """Test the per-class averaged scores."""

    def test_perfect_prediction(self):
        """Test that the ground truth scores (1, 1) against itself."""
        assert eval_mprec_mrec(GT, GT) == (1.0, 1.0)

    def test_no_predictions(self):
        """Test that predicting nothing gives precision and recall 0."""
        pred = InstanceLabels(point_ids=np.full(10, -1), semantics={})
        assert eval_mprec_mrec(pred, GT) == (0.0, 0.0)

    def test_wrong_class_is_a_miss(self):
        """Test that a correct mask with the wrong class does not count."""
        pred = InstanceLabels(point_ids=GT.point_ids.copy(), semantics={0: 0, 1: 0})
        mprec, mrec = eval_mprec_mrec(pred, GT)
        assert mrec == pytest.approx(0.5)
        assert mprec == pytest.approx(0.25)

    def test_split_instance_counts_once(self):
        """Test that two halves of one instance give one match and one false hit."""
        ids = GT.point_ids.copy()
        ids[:3] = 0
        ids[3] = 2
        pred = InstanceLabels(point_ids=ids, semantics={0: 0, 1: 1, 2: 0})
        mprec, mrec = eval_mprec_mrec(pred, GT)
        assert mrec == 1.0
        assert mprec == pytest.approx((0.5 + 1.0) / 2.0)

    def test_no_ground_truth(self):
        """Test that recall is undefined without ground-truth instances."""
        empty = InstanceLabels(point_ids=np.full(10, -1), semantics={})
        with pytest.raises(EvaluationError, match="undefined"):
            eval_mprec_mrec(empty, empty)

    def test_point_count_mismatch(self):
        """Test that labelings must cover the same points."""
        short = InstanceLabels(point_ids=np.zeros(3, dtype=int), semantics={0: 0})
        with pytest.raises(EvaluationError):
            eval_mprec_mrec(short, GT)

    def test_dataset_pools_counts(self):
        """Test that counts are summed over scenes before averaging."""
        miss = InstanceLabels(point_ids=np.full(10, -1), semantics={})
        mprec, mrec = eval_dataset([(GT, GT), (miss, GT)])
        assert mrec == pytest.approx(0.5)
        assert mprec == pytest.approx(1.0)
