"""Unit tests for the instance-segmentation network."""

import numpy as np
import pytest

from src.bonet.model import BonetConfigError, BonetModel, BonetModelConfig


class TestBonetModelConfig:
    """Test width validation."""

    def test_defaults_valid(self):
        """Test that the default widths pass validation."""
        BonetModelConfig().validate()

    def test_rejects_bad_values(self):
        """Test that zero widths and odd channel counts are reported together."""
        with pytest.raises(BonetConfigError) as exc_info:
            BonetModelConfig(num_boxes=0, channels=4).validate()
        assert "num_boxes" in str(exc_info.value)
        assert "channels" in str(exc_info.value)


class TestBonetModel:
    """Test output shapes and point-order behavior."""

    def test_output_shapes(self, small_scene, small_bonet_config):
        """Test H boxes, H x N masks and N x S semantics."""
        model = BonetModel(small_bonet_config, np.random.default_rng(0))
        out = model(small_scene.points)
        assert out.boxes.boxes.shape == (4, 2, 3)
        assert out.boxes.scores.shape == (4,)
        assert out.masks.shape == (4, 16)
        assert out.semantics.shape == (16, 3)

    def test_probabilities_in_range(self, small_scene, small_bonet_config):
        """Test that scores, masks and class probabilities are valid."""
        model = BonetModel(small_bonet_config, np.random.default_rng(0))
        out = model(small_scene.points)
        assert np.all((out.masks.data > 0.0) & (out.masks.data < 1.0))
        assert np.all((out.boxes.scores.data > 0.0) & (out.boxes.scores.data < 1.0))
        np.testing.assert_allclose(out.semantics.data.sum(axis=1), 1.0)

    def test_point_permutation(self, small_scene, small_bonet_config, rng):
        """Test that boxes ignore point order and per-point outputs follow it."""
        model = BonetModel(small_bonet_config, np.random.default_rng(0))
        perm = rng.permutation(small_scene.n)
        base = model(small_scene.points)
        shuffled = model(small_scene.points[perm])
        np.testing.assert_allclose(shuffled.boxes.boxes.data, base.boxes.boxes.data)
        np.testing.assert_allclose(shuffled.masks.data, base.masks.data[:, perm])
        np.testing.assert_allclose(shuffled.semantics.data, base.semantics.data[perm])

    def test_wrong_channel_count(self, small_bonet_config):
        """Test that points with the wrong width are refused."""
        model = BonetModel(small_bonet_config, np.random.default_rng(0))
        with pytest.raises(BonetConfigError, match="points"):
            model(np.zeros((5, 6)))

    def test_color_channels(self):
        """Test that a six-channel model accepts xyz plus rgb."""
        widths = dict(point_hidden=4, embed_width=4, feature_width=4, box_hidden=4)
        config = BonetModelConfig(
            channels=6,
            num_boxes=2,
            mask_width=4,
            mask_hidden=4,
            semantic_hidden=4,
            **widths,
        )
        model = BonetModel(config, np.random.default_rng(0))
        points = np.random.default_rng(1).uniform(size=(7, 6))
        assert model(points).masks.shape == (2, 7)
