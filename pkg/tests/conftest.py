"""Pytest configuration and shared fixtures."""

import numpy as np
import pytest

from src.bonet.model import BonetModelConfig
from src.gradcheck_suite import scene16
from tests.fixtures.test_data import box_scene, tiny_synth_config


@pytest.fixture
def rng():
    """Seeded generator, fresh per test."""
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_synth():
    """Small SynthConfig for fast generation."""
    return tiny_synth_config()


@pytest.fixture
def two_box_scene():
    """Two well-separated boxes with some clutter."""
    return box_scene(
        [([0.0, 0.0, 0.0], [1.0, 1.0, 1.0]), ([2.0, 2.0, 0.0], [3.0, 3.0, 1.0])],
        points_per_box=10,
        clutter=4,
    )


@pytest.fixture
def small_scene():
    """The 16-point scene used by the gradient suite."""
    return scene16()


@pytest.fixture
def small_bonet_config():
    """Narrow network widths for fast forward passes."""
    return BonetModelConfig(
        point_hidden=8,
        embed_width=8,
        feature_width=8,
        box_hidden=8,
        num_boxes=4,
        mask_width=6,
        mask_hidden=6,
        semantic_hidden=6,
    )
