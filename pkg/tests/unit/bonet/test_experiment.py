"""Unit tests for bonet experiment settings and acceptance checks."""

import numpy as np
import pandas as pd
import pytest

from src.bonet.experiment import (
    BonetExperimentConfig,
    BonetExperimentError,
    acceptance_failures,
    evaluate_model,
    infer_blocks,
    load_model,
)
from src.bonet.inference import infer_scene
from src.bonet.model import BonetModel
from tests.fixtures.test_data import tiny_synth_config


class TestBonetExperimentConfig:
    """Test experiment validation."""

    def test_defaults_valid(self):
        """Test that the default settings validate."""
        BonetExperimentConfig().validate()

    def test_threshold_range(self):
        """Test that thresholds must lie in (0, 1]."""
        with pytest.raises(BonetExperimentError, match="score_threshold"):
            BonetExperimentConfig(score_threshold=0.0).validate()

    def test_no_seeds(self):
        """Test that at least one seed is required."""
        with pytest.raises(BonetExperimentError, match="seed"):
            BonetExperimentConfig(seeds=()).validate()

    def test_model_config_uses_scene_channels(self):
        """Test that the network width follows the synthesized channels."""
        synth = tiny_synth_config(channels=6)
        assert BonetExperimentConfig().model_config(synth).channels == 6


class TestAcceptanceFailures:
    """Test the held-out precision and recall floors."""

    def test_passes(self):
        """Test that high held-out scores produce no failures."""
        table = pd.DataFrame(
            [
                {"seed": 0, "split": "test", "mprec": 0.9, "mrec": 0.8},
                {"seed": 1, "split": "test", "mprec": 0.8, "mrec": 0.8},
                {"seed": 0, "split": "train", "mprec": 0.1, "mrec": 0.1},
            ]
        )
        assert acceptance_failures(table) == []

    def test_reports_each_floor(self):
        """Test that low precision and recall are both named."""
        table = pd.DataFrame([{"seed": 0, "split": "test", "mprec": 0.5, "mrec": 0.6}])
        failures = acceptance_failures(table)
        assert len(failures) == 2
        assert "mPrec" in failures[0]

    def test_missing_split(self):
        """Test that an evaluation without held-out rows fails."""
        table = pd.DataFrame([{"seed": 0, "split": "train", "mprec": 1.0, "mrec": 1.0}])
        assert acceptance_failures(table) == ["no held-out evaluation rows"]


class TestLoadModel:
    """Test checkpoint lookup."""

    def test_missing_checkpoint(self, tmp_path):
        """Test that a missing seed directory is reported."""
        with pytest.raises(BonetExperimentError, match="no checkpoint"):
            load_model(BonetExperimentConfig(), tiny_synth_config(), tmp_path, 3)


def _same_partition(a: np.ndarray, b: np.ndarray) -> bool:
    together_a = (a[:, None] == a[None, :]) & (a[:, None] >= 0)
    together_b = (b[:, None] == b[None, :]) & (b[:, None] >= 0)
    return bool(np.array_equal(together_a, together_b) and np.array_equal(a < 0, b < 0))


class TestBlockMode:
    """Test block-wise inference against whole-scene inference."""

    def test_scene_within_one_block_matches_scene_mode(
        self, small_scene, small_bonet_config
    ):
        """Test that a scene smaller than a block gets the whole-scene labels."""
        model = BonetModel(small_bonet_config, np.random.default_rng(2))
        cfg = BonetExperimentConfig(
            block_mode=True,
            block_size=3.0,
            block_stride=1.5,
            score_threshold=0.1,
            mask_threshold=0.1,
        )
        whole = infer_scene(small_scene, model, 0.1, 0.1)
        blocked = infer_blocks(small_scene, model, cfg)
        assert _same_partition(whole.point_ids, blocked.point_ids)

        scene_cfg = BonetExperimentConfig(score_threshold=0.1, mask_threshold=0.1)
        assert evaluate_model(model, [small_scene], cfg) == evaluate_model(
            model, [small_scene], scene_cfg
        )
