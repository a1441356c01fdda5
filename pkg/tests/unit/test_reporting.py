"""Unit tests for the artifact writer and figures."""

import json

import pandas as pd
import pytest

from src.reporting import (
    PLOT_DIV_ID,
    ArtifactError,
    ArtifactWriter,
    line_figure,
    loss_curve_figure,
    view_count_figure,
)


@pytest.fixture
def writer(tmp_path):
    """Writer rooted at a fresh run directory."""
    return ArtifactWriter(tmp_path / "run")


class TestArtifactWriter:
    """Test file writing and bookkeeping."""

    def test_creates_nested_directories(self, writer):
        """Test that parent directories are created on demand."""
        path = writer.write_text("a/b/c.txt", "hello\n")
        assert path.read_text(encoding="utf-8") == "hello\n"

    def test_same_path_twice_rejected(self, writer):
        """Test that a run cannot overwrite one of its own files."""
        writer.write_text("x.txt", "1")
        with pytest.raises(ArtifactError, match="already written"):
            writer.write_text("x.txt", "2")

    def test_relative_paths_sorted(self, writer):
        """Test that recorded paths come back sorted and relative."""
        writer.write_text("b.txt", "")
        writer.write_text("a/z.txt", "")
        assert writer.relative_paths() == ["a/z.txt", "b.txt"]

    def test_failed_write_not_recorded(self, writer):
        """Test that a path blocked by a file raises and is not recorded."""
        writer.write_text("blocker", "")
        with pytest.raises(ArtifactError, match="Cannot write"):
            writer.write_text("blocker/inner.txt", "")
        assert writer.relative_paths() == ["blocker"]

    def test_csv_is_deterministic(self, writer):
        """Test that CSV output has no index and LF line endings."""
        frame = pd.DataFrame({"n": [1, 2], "iou": [0.5, 0.25]})
        path = writer.write_csv("curve.csv", frame)
        assert path.read_bytes() == b"n,iou\n1,0.5\n2,0.25\n"

    def test_json_keys_sorted(self, writer):
        """Test that JSON payloads are written with sorted keys."""
        path = writer.write_json("m.json", {"b": 1, "a": 2})
        text = path.read_text(encoding="utf-8")
        assert text.index('"a"') < text.index('"b"')
        assert json.loads(text) == {"a": 2, "b": 1}

    def test_plot_uses_fixed_div_id(self, writer):
        """Test that two writes of one figure give identical HTML."""
        figure = line_figure(
            pd.DataFrame({"x": [1, 2], "y": [3, 4], "s": ["a", "a"]}),
            "x",
            "y",
            "s",
            "t",
            "x",
            "y",
        )
        first = writer.write_plot("one.html", figure).read_text(encoding="utf-8")
        second = writer.write_plot("two.html", figure).read_text(encoding="utf-8")
        assert PLOT_DIV_ID in first
        assert first == second


class TestFigures:
    """Test trace construction for the report figures."""

    def test_one_trace_per_series_in_x_order(self):
        """Test that every series becomes a line sorted by x."""
        frame = pd.DataFrame(
            {
                "n": [2, 1, 1, 2],
                "iou": [0.6, 0.5, 0.4, 0.3],
                "model": ["a", "a", "b", "b"],
            }
        )
        figure = view_count_figure(frame)
        assert [trace.name for trace in figure.data] == ["a", "b"]
        assert list(figure.data[0].x) == [1, 2]
        assert list(figure.data[0].y) == [0.5, 0.6]

    def test_loss_curves_average_over_seeds(self):
        """Test that rows sharing a step are averaged per loss term."""
        curves = pd.DataFrame(
            {
                "step": [0, 0, 1, 1],
                "sem": [1.0, 3.0, 0.5, 0.5],
                "total": [2.0, 2.0, 1.0, 3.0],
            }
        )
        figure = loss_curve_figure(curves, ["sem", "total"])
        by_name = {trace.name: list(trace.y) for trace in figure.data}
        assert by_name == {"sem": [2.0, 0.5], "total": [2.0, 2.0]}
