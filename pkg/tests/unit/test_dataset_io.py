"""Unit tests for the plain-text dataset formats."""

import numpy as np
import pytest

from src.dataset_io import (
    MANIFEST_NAME,
    DatasetFormatError,
    format_scene,
    format_views,
    format_voxels,
    generate_dataset,
    parse_scene,
    parse_views,
    parse_voxels,
    read_dataset,
    write_dataset,
)
from src.reporting import ArtifactWriter
from src.synthesis import MultiViewSample


class TestSceneFormat:
    """Test the scene record format."""

    def test_header_and_row_count(self, two_box_scene):
        """Test that the header declares points, channels and classes."""
        lines = format_scene(two_box_scene).splitlines()
        assert lines[0] == "scene points=24 channels=3 classes=3"
        assert len(lines) == 25
        assert lines[-1].split()[-2:] == ["-1", "2"]

    def test_parse_restores_exact_values(self, two_box_scene):
        """Test that parsing gives back bit-identical points and labels."""
        parsed = parse_scene(format_scene(two_box_scene))
        np.testing.assert_array_equal(parsed.points, two_box_scene.points)
        np.testing.assert_array_equal(
            parsed.instance_ids, two_box_scene.instance_ids
        )
        np.testing.assert_array_equal(
            parsed.semantic_ids, two_box_scene.semantic_ids
        )
        assert parsed.num_classes == 3

    def test_wrong_header_kind(self):
        """Test that a file of another kind is refused."""
        with pytest.raises(DatasetFormatError, match="'scene' header"):
            parse_scene("voxgrid d=2\n0 0 0 0 0 0 0 0\n")

    def test_missing_header_field(self):
        """Test that a header without classes is refused."""
        with pytest.raises(DatasetFormatError, match="missing classes"):
            parse_scene("scene points=1 channels=3\n0 0 0 0 0\n")

    def test_row_count_mismatch(self):
        """Test that the declared point count must match the rows."""
        with pytest.raises(DatasetFormatError, match="declares 2 points"):
            parse_scene("scene points=2 channels=3 classes=1\n0 0 0 0 0\n")

    def test_short_row(self):
        """Test that a row with missing values names the row."""
        with pytest.raises(DatasetFormatError, match="scene row 0"):
            parse_scene("scene points=1 channels=3 classes=1\n0 0 0 0\n")

    def test_label_outside_classes(self):
        """Test that an invalid semantic label is reported as a format error."""
        with pytest.raises(DatasetFormatError, match="invalid scene"):
            parse_scene("scene points=1 channels=3 classes=1\n0 0 0 0 5\n")


class TestVoxelFormat:
    """Test the voxel grid record format."""

    def test_integers_written_without_decimals(self):
        """Test that binary occupancy is written as 0 and 1."""
        grid = np.zeros((2, 2, 2))
        grid[0, 0, 1] = 1.0
        assert format_voxels(grid) == "voxgrid d=2\n0 1 0 0 0 0 0 0\n"

    def test_z_is_fastest_axis(self):
        """Test that the flattening order is restored on parse."""
        grid = np.arange(8.0).reshape(2, 2, 2)
        np.testing.assert_array_equal(parse_voxels(format_voxels(grid)), grid)

    def test_non_cubic_grid_rejected(self):
        """Test that only D x D x D grids can be written."""
        with pytest.raises(DatasetFormatError, match="D x D x D"):
            format_voxels(np.zeros((2, 2, 3)))

    def test_value_count_checked(self):
        """Test that a value line of the wrong length is refused."""
        with pytest.raises(DatasetFormatError, match="expected 8 values"):
            parse_voxels("voxgrid d=2\n0 0 0\n")


class TestViewsFormat:
    """Test the multi-view sample record format."""

    def test_parse_restores_views_and_target(self, rng):
        """Test that views and the flattened target survive a write."""
        sample = MultiViewSample(
            views=rng.normal(size=(3, 5)), target=np.array([0.0, 1.0] * 4)
        )
        text = format_views(sample, d=2)
        assert text.splitlines()[0] == "views v=3 din=5 d=2"
        parsed = parse_views(text)
        np.testing.assert_array_equal(parsed.views, sample.views)
        np.testing.assert_array_equal(parsed.target, sample.target)

    def test_target_size_must_match_grid(self):
        """Test that a target of the wrong size cannot be written."""
        sample = MultiViewSample(views=np.ones((1, 2)), target=np.ones(5))
        with pytest.raises(DatasetFormatError, match="expected 8"):
            format_views(sample, d=2)

    def test_view_count_mismatch(self):
        """Test that the declared view count must match the rows."""
        with pytest.raises(DatasetFormatError, match="declares 2 views"):
            parse_views("views v=2 din=1 d=1\n0.5\n1\n")


class TestDatasetDirectory:
    """Test generation, writing and reading of a whole dataset."""

    def test_manifest_counts(self, tmp_path, tiny_synth):
        """Test that the manifest records one count per split."""
        writer = ArtifactWriter(tmp_path)
        manifest = write_dataset(generate_dataset(tiny_synth), tiny_synth, writer)
        assert manifest["counts"] == {
            "multiview_train": 12,
            "multiview_test": 6,
            "scenes_train": 3,
            "scenes_test": 2,
        }
        assert (tmp_path / MANIFEST_NAME).exists()
        assert "scenes/train/000000.scene" in writer.relative_paths()
        assert "multiview/test/000005.views" in writer.relative_paths()

    def test_read_back_matches_generated(self, tmp_path, tiny_synth):
        """Test that reading the directory gives the generated arrays."""
        dataset = generate_dataset(tiny_synth)
        write_dataset(dataset, tiny_synth, ArtifactWriter(tmp_path))
        loaded = read_dataset(tmp_path)
        for original, parsed in zip(dataset.scenes["train"], loaded.scenes["train"]):
            np.testing.assert_array_equal(parsed.points, original.points)
        for original, parsed in zip(
            dataset.multiview["test"], loaded.multiview["test"]
        ):
            np.testing.assert_array_equal(parsed.views, original.views)
        np.testing.assert_array_equal(
            loaded.voxels["test"][1], dataset.voxels["test"][1]
        )

    def test_missing_file_detected(self, tmp_path, tiny_synth):
        """Test that a deleted record makes the manifest disagree."""
        dataset = generate_dataset(tiny_synth)
        write_dataset(dataset, tiny_synth, ArtifactWriter(tmp_path))
        (tmp_path / "scenes" / "test" / "000001.vox").unlink()
        with pytest.raises(DatasetFormatError, match="scenes/test"):
            read_dataset(tmp_path)

    def test_generation_is_deterministic(self, tiny_synth):
        """Test that the same seed generates identical files."""
        first = generate_dataset(tiny_synth)
        second = generate_dataset(tiny_synth)
        assert format_scene(first.scenes["test"][0]) == format_scene(
            second.scenes["test"][0]
        )
        assert format_views(first.multiview["train"][3], 4) == format_views(
            second.multiview["train"][3], 4
        )
