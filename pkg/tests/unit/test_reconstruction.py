"""Unit tests for reconstruction losses and metrics."""

import numpy as np
import pytest

from src.reconstruction import (
    MetricError,
    MetricsConfig,
    binary_cross_entropy,
    joint_gen_loss,
    mean_feature,
    mean_iou,
    threshold_search,
    voxel_ce,
    voxel_iou,
    weighted_bce,
)
from src.tensor.core import Tensor

GT = np.array([1.0, 1.0, 0.0, 0.0])


class TestVoxelIoU:
    """Test thresholded IoU."""

    def test_hand_case(self):
        """Test one hit, one miss and one false positive."""
        pred = np.array([0.9, 0.1, 0.6, 0.2])
        assert voxel_iou(pred, GT, 0.5) == pytest.approx(1.0 / 3.0)

    def test_strict_threshold(self):
        """Test that a probability equal to the threshold is empty."""
        assert voxel_iou(np.array([0.5, 0.5, 0.0, 0.0]), GT, 0.5) == 0.0

    def test_empty_union(self):
        """Test that empty prediction and gt make IoU undefined."""
        with pytest.raises(MetricError, match="empty union"):
            voxel_iou(np.zeros(4), np.zeros(4), 0.5)

    def test_non_binary_gt(self):
        """Test that soft ground truth is rejected."""
        with pytest.raises(MetricError, match="binary"):
            voxel_iou(np.zeros(2), np.array([0.5, 1.0]), 0.5)

    def test_shape_mismatch(self):
        """Test that grids of different shapes are rejected."""
        with pytest.raises(MetricError):
            voxel_iou(np.zeros(3), GT, 0.5)


class TestLosses:
    """Test cross-entropy variants."""

    def test_ce_matches_tensor_bce(self, rng):
        """Test that the metric equals the differentiable loss value."""
        pred = rng.uniform(0.01, 0.99, size=4)
        assert voxel_ce(pred, GT) == pytest.approx(
            binary_cross_entropy(Tensor(pred), GT).item()
        )

    def test_ce_clamps_extremes(self):
        """Test that certain wrong predictions stay finite."""
        assert np.isfinite(voxel_ce(np.array([0.0, 0.0, 1.0, 1.0]), GT))

    def test_weighted_half_is_half_bce(self, rng):
        """Test that alpha = 0.5 gives half the plain BCE."""
        pred = Tensor(rng.uniform(0.05, 0.95, size=4))
        assert weighted_bce(pred, GT, alpha=0.5).item() == pytest.approx(
            0.5 * binary_cross_entropy(pred, GT).item()
        )

    def test_weighted_favors_occupied(self):
        """Test that missing an occupied cell costs more than a false one."""
        miss = weighted_bce(Tensor([0.1, 0.9, 0.0, 0.0]), GT).item()
        false = weighted_bce(Tensor([0.9, 0.9, 0.9, 0.0]), GT).item()
        assert miss > false

    def test_shape_mismatch(self):
        """Test that loss inputs must match."""
        with pytest.raises(MetricError):
            binary_cross_entropy(Tensor([0.5, 0.5]), GT)

    def test_gradient_sign(self):
        """Test that BCE pushes occupied cells up and empty cells down."""
        pred = Tensor(np.full(4, 0.5), requires_grad=True)
        binary_cross_entropy(pred, GT).backward()
        assert np.all(pred.grad[:2] < 0.0) and np.all(pred.grad[2:] > 0.0)


class TestGanHelpers:
    """Test mean-feature critic reduction and the blended generator loss."""

    def test_mean_feature_vector(self):
        """Test that a feature vector reduces to its mean."""
        assert mean_feature(Tensor([1.0, 2.0, 6.0])).item() == pytest.approx(3.0)

    def test_mean_feature_batch(self):
        """Test that a batch reduces row-wise to B x 1."""
        out = mean_feature(Tensor([[1.0, 3.0], [2.0, 2.0]]))
        np.testing.assert_array_equal(out.data, [[2.0], [2.0]])

    def test_joint_gen_loss(self):
        """Test the beta blend of reconstruction and adversarial terms."""
        assert joint_gen_loss(1.0, 2.0, beta=0.2) == pytest.approx(1.8)


class TestThresholdSearch:
    """Test the occupancy threshold sweep."""

    def test_grid(self):
        """Test that the default grid spans 0.1 to 0.9 in 0.05 steps."""
        grid = MetricsConfig().grid()
        assert len(grid) == 17
        assert grid[0] == 0.1 and grid[-1] == 0.9

    def test_picks_best_and_smallest_on_ties(self):
        """Test that the smallest threshold reaching the best IoU wins."""
        pairs = [(np.array([0.7, 0.7, 0.2, 0.2]), GT)]
        best, table = threshold_search(pairs)
        assert best == 0.2
        assert table[0.2] == 1.0
        assert table[0.1] == 0.5

    def test_invalid_config(self):
        """Test that inconsistent sweep ranges are rejected."""
        config = MetricsConfig(search_low=0.8, search_high=0.2)
        with pytest.raises(MetricError):
            threshold_search([(GT, GT)], config)

    def test_mean_iou_needs_pairs(self):
        """Test that the mean over no pairs is undefined."""
        with pytest.raises(MetricError):
            mean_iou([], 0.5)
