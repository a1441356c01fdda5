"""Unit tests for synthetic data generation."""

import numpy as np
import pytest

from src.bonet.scene import CLUTTER
from src.synthesis import (
    SynthesisError,
    make_multiview_split,
    make_projections,
    make_scene,
    make_scene_split,
    make_voxel_shape,
    partial_view,
    partial_view_indices,
    sample_rng,
    scene_view,
    voxel_indices,
    voxelize_points,
)
from tests.fixtures.test_data import tiny_synth_config


class TestSynthConfig:
    """Test generator settings validation."""

    def test_collects_errors(self):
        """Test that every invalid field is listed."""
        cfg = tiny_synth_config(grid_size=1, channels=4, min_objects=5)
        with pytest.raises(SynthesisError) as exc_info:
            cfg.validate()
        message = str(exc_info.value)
        assert "grid_size" in message
        assert "channels" in message
        assert "min_objects" in message

    def test_objects_must_fit(self):
        """Test that oversize objects are rejected against the extent."""
        with pytest.raises(SynthesisError, match="fit"):
            tiny_synth_config(max_half_size=1.5).validate()


class TestMultiView:
    """Test multi-view sample generation."""

    def test_voxel_shape_is_solid_cuboid(self, rng):
        """Test that the target is one axis-aligned block of at least 2 cells."""
        grid = make_voxel_shape(tiny_synth_config(grid_size=6), rng)
        filled = np.argwhere(grid == 1.0)
        extent = filled.max(axis=0) - filled.min(axis=0) + 1
        assert np.all(extent >= 2)
        assert len(filled) == int(np.prod(extent))

    def test_split_shapes(self, tiny_synth):
        """Test view and target shapes for every sample."""
        samples = make_multiview_split(tiny_synth, make_projections(tiny_synth))
        assert len(samples) == 12
        assert samples[0].views.shape == (4, 10)
        assert samples[0].target.shape == (64,)

    def test_deterministic(self, tiny_synth):
        """Test that regeneration with the same seed is bit-identical."""
        a = make_multiview_split(tiny_synth, make_projections(tiny_synth), False)
        b = make_multiview_split(tiny_synth, make_projections(tiny_synth), False)
        for x, y in zip(a, b):
            np.testing.assert_array_equal(x.views, y.views)
            np.testing.assert_array_equal(x.target, y.target)

    def test_train_and_test_differ(self, tiny_synth):
        """Test that the splits draw from different streams."""
        projections = make_projections(tiny_synth)
        train = make_multiview_split(tiny_synth, projections, True)
        test = make_multiview_split(tiny_synth, projections, False)
        assert not np.array_equal(train[0].views, test[0].views)

    def test_noise_free_views_are_projections(self):
        """Test that zero noise gives the exact linear projections."""
        cfg = tiny_synth_config(noise=0.0)
        projections = make_projections(cfg)
        sample = make_multiview_split(cfg, projections)[0]
        np.testing.assert_allclose(sample.views, projections @ sample.target)


class TestScenes:
    """Test labeled scene generation."""

    def test_scene_labels(self, tiny_synth):
        """Test object counts, point counts and semantic classes."""
        scene = make_scene(tiny_synth, sample_rng(tiny_synth.seed, 2, 0))
        assert scene.n == 64
        assert 2 <= scene.t <= 3
        assert set(np.unique(scene.semantic_ids)) <= {0, 1, 2}
        assert np.all(scene.semantic_ids[scene.instance_ids == CLUTTER] == 2)

    def test_points_inside_extent(self, tiny_synth):
        """Test that every point lies within the scene extent."""
        for scene in make_scene_split(tiny_synth):
            assert np.all(scene.xyz >= 0.0)
            assert np.all(scene.xyz <= tiny_synth.extent)

    def test_color_channels(self):
        """Test that six-channel scenes carry rgb in [0, 1]."""
        cfg = tiny_synth_config(channels=6)
        scene = make_scene_split(cfg)[0]
        assert scene.channels == 6
        assert np.all((scene.points[:, 3:] >= 0.0) & (scene.points[:, 3:] <= 1.0))

    def test_deterministic(self, tiny_synth):
        """Test that scene splits regenerate identically."""
        a, b = make_scene_split(tiny_synth), make_scene_split(tiny_synth)
        for x, y in zip(a, b):
            np.testing.assert_array_equal(x.points, y.points)
            np.testing.assert_array_equal(x.instance_ids, y.instance_ids)

    def test_crowded_scene_fails(self):
        """Test that an impossible layout reports the scene it failed on."""
        cfg = tiny_synth_config(
            extent_x=1.3,
            extent_y=1.3,
            extent_z=1.3,
            min_half_size=0.6,
            max_half_size=0.6,
            min_objects=3,
            max_objects=3,
        )
        with pytest.raises(SynthesisError, match="could not place"):
            make_scene_split(cfg)


class TestVoxelize:
    """Test point voxelization."""

    def test_shared_face_goes_to_lower_cell(self):
        """Test the boundary rule on a 2-cell grid."""
        idx = voxel_indices(np.array([[0.5, 0.0, 1.0]]), 2, 1.0)
        np.testing.assert_array_equal(idx, [[0, 0, 1]])

    def test_grid(self):
        """Test that occupied cells are marked once."""
        points = np.array([[0.1, 0.1, 0.1], [0.2, 0.2, 0.2], [0.9, 0.9, 0.9]])
        grid = voxelize_points(points, 2, 1.0)
        assert grid.sum() == 2.0
        assert grid[0, 0, 0] == 1.0 and grid[1, 1, 1] == 1.0

    def test_outside_extent(self):
        """Test that points beyond the extent are rejected."""
        with pytest.raises(SynthesisError, match="outside"):
            voxelize_points(np.array([[1.5, 0.0, 0.0]]), 2, 1.0)

    def test_matches_direct_binning(self, rng):
        """Test that occupancy equals the set of floor-binned cells."""
        extent = np.array([4.0, 4.0, 2.0])
        points = rng.uniform(0.0, extent, size=(200, 3))
        expected = {
            tuple(int(np.floor(v * 8 / e)) for v, e in zip(point, extent))
            for point in points
        }
        grid = voxelize_points(points, 8, extent)
        occupied = {tuple(int(i) for i in cell) for cell in np.argwhere(grid == 1.0)}
        assert occupied == expected


class TestPartialView:
    """Test z-buffer culling."""

    def test_keeps_front_layer(self):
        """Test that only the nearest cell per column survives."""
        points = np.array(
            [[0.0, 0.0, 0.0], [0.0, 0.0, 1.0], [1.0, 1.0, 1.0], [1.0, 1.0, 0.5]]
        )
        rng = np.random.default_rng(0)
        kept = partial_view_indices(points, rng, grid=2, axis=2, direction=1)
        np.testing.assert_array_equal(kept, [0, 3])

    def test_reverse_direction(self):
        """Test that looking the other way keeps the far layer."""
        points = np.array([[0.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
        rng = np.random.default_rng(0)
        kept = partial_view(points, rng, grid=2, axis=2, direction=-1)
        np.testing.assert_array_equal(kept, [[0.0, 0.0, 1.0]])

    def test_empty(self):
        """Test that an empty cloud yields no indices."""
        rng = np.random.default_rng(0)
        assert partial_view_indices(np.zeros((0, 3)), rng).size == 0

    def test_columns_follow_scene_extent(self):
        """Test that columns are cut from the extent, not the bounding box."""
        points = np.array([[0.1, 0.1, 0.2], [0.3, 0.3, 3.0]])
        rng = np.random.default_rng(0)
        boxed = partial_view_indices(points, rng, grid=2, axis=2, direction=1)
        gridded = partial_view_indices(
            points, rng, grid=2, axis=2, direction=1, extent=4.0
        )
        np.testing.assert_array_equal(boxed, [0, 1])
        np.testing.assert_array_equal(gridded, [0])

    def test_scene_view_keeps_labels(self, tiny_synth):
        """Test that a scene view is a labeled subset of the scene."""
        scene = make_scene(tiny_synth, np.random.default_rng(3))
        view = scene_view(scene, tiny_synth, np.random.default_rng(4))
        assert 0 < view.n <= scene.n
        rows = {tuple(row) for row in scene.points.tolist()}
        assert all(tuple(row) in rows for row in view.points.tolist())
        assert set(view.instance_ids) <= set(scene.instance_ids)
