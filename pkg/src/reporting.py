"""Artifact output: one writer per run, deterministic file contents.

All files of a run go through a single ArtifactWriter so concurrent workers
never write the same path and every produced file is recorded.
"""

from __future__ import annotations

import json
import logging
import threading
from contextlib import contextmanager
from pathlib import Path
from typing import Any

import pandas as pd
import plotly.graph_objects as go
import plotly.io as pio

logger = logging.getLogger(__name__)

PLOT_DIV_ID = "attsets-lab-plot"


class ArtifactError(Exception):
    """Raised when an output file cannot be written."""

    pass


class ArtifactWriter:
    """Thread-safe writer rooted at one output directory.

    Args:
        root: Output directory (created if missing)

    Raises:
        ArtifactError: If the directory cannot be created
    """

    def __init__(self, root: Path):
        self.root = Path(root)
        self.written: list[Path] = []
        self._lock = threading.Lock()
        try:
            self.root.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            logger.error(
                f"Failed to create output directory {self.root}: {e}", exc_info=True
            )
            raise ArtifactError(f"Cannot create output directory: {e}") from e

    @contextmanager
    def _target(self, relative: str):
        """Yield the absolute path for ``relative`` while holding the write lock.

        Raises:
            ArtifactError: If the path is claimed twice or writing fails
        """
        path = self.root / relative
        with self._lock:
            if path in self.written:
                raise ArtifactError(f"{relative} was already written in this run")
            try:
                path.parent.mkdir(parents=True, exist_ok=True)
                yield path
            except OSError as e:
                logger.error(f"Failed to write {path}: {e}", exc_info=True)
                raise ArtifactError(f"Cannot write {relative}: {e}") from e
            self.written.append(path)

    def write_text(self, relative: str, text: str) -> Path:
        with self._target(relative) as path:
            path.write_text(text, encoding="utf-8", newline="\n")
        return path

    def write_csv(self, relative: str, frame: pd.DataFrame) -> Path:
        return self.write_text(relative, frame.to_csv(index=False, lineterminator="\n"))

    def write_json(self, relative: str, payload: Any) -> Path:
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
        return self.write_text(relative, text)

    def write_plot(self, relative: str, figure: go.Figure) -> Path:
        html = pio.to_html(
            figure, include_plotlyjs="cdn", full_html=True, div_id=PLOT_DIV_ID
        )
        return self.write_text(relative, html)

    def relative_paths(self) -> list[str]:
        return sorted(str(p.relative_to(self.root)) for p in self.written)


def line_figure(
    frame: pd.DataFrame,
    x: str,
    y: str,
    series: str,
    title: str,
    x_title: str,
    y_title: str,
) -> go.Figure:
    """One line per value of ``series``, points in ``x`` order."""
    figure = go.Figure()
    for name, group in frame.groupby(series, sort=False):
        ordered = group.sort_values(x)
        figure.add_trace(
            go.Scatter(
                x=ordered[x].tolist(),
                y=ordered[y].tolist(),
                mode="lines+markers",
                name=str(name),
            )
        )
    figure.update_layout(
        title=title, xaxis_title=x_title, yaxis_title=y_title, template="plotly_white"
    )
    return figure


def view_count_figure(summary: pd.DataFrame) -> go.Figure:
    """Mean IoU against the number of aggregated views, one series per model."""
    return line_figure(
        summary,
        "n",
        "iou",
        "model",
        "Mean IoU by number of views",
        "views (N)",
        "mean IoU",
    )


def loss_curve_figure(
    curves: pd.DataFrame, columns: list[str], x: str = "step"
) -> go.Figure:
    """Seed-averaged loss terms over training steps."""
    averaged = curves.groupby(x, sort=True)[columns].mean().reset_index()
    long = averaged.melt(
        id_vars=[x], value_vars=columns, var_name="term", value_name="value"
    )
    return line_figure(long, x, "value", "term", "Training losses", x, "loss")
