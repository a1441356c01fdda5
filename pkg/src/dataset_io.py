"""Plain-text dataset files.

Formats (one record per file):

- scene:   ``scene points=<N> channels=<k0> classes=<S>`` then N lines
  ``x y z [r g b] inst sem``
- voxels:  ``voxgrid d=<D>`` then one line of D^3 values, z fastest
- views:   ``views v=<V> din=<Din> d=<D>`` then V view rows, then one line
  with the flattened D^3 target

Floats are written with ``repr`` (shortest round-trip decimal), so parsing a
file gives back the exact arrays that were written.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from src.bonet.scene import Scene, SceneError
from src.reporting import ArtifactWriter
from src.synthesis import (
    MultiViewSample,
    SynthConfig,
    make_multiview_split,
    make_projections,
    make_scene_split,
    voxelize_points,
)

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"

_HEADER = re.compile(r"^(\w+)((?:\s+\w+=\d+)*)\s*$")


class DatasetFormatError(Exception):
    """Raised when a dataset file does not follow its format."""

    pass


def _float(value: float) -> str:
    return repr(float(value))


def _grid_value(value: float) -> str:
    number = float(value)
    return str(int(number)) if number.is_integer() else repr(number)


def _parse_header(line: str, kind: str, keys: tuple[str, ...]) -> dict[str, int]:
    match = _HEADER.match(line.strip())
    if match is None or match.group(1) != kind:
        raise DatasetFormatError(f"expected a '{kind}' header, got {line.strip()!r}")
    fields = dict(part.split("=") for part in match.group(2).split())
    missing = [key for key in keys if key not in fields]
    if missing:
        raise DatasetFormatError(f"'{kind}' header is missing {', '.join(missing)}")
    return {key: int(fields[key]) for key in keys}


def _numbers(line: str, count: int, what: str) -> np.ndarray:
    parts = line.split()
    if len(parts) != count:
        raise DatasetFormatError(f"{what}: expected {count} values, got {len(parts)}")
    try:
        return np.array([float(part) for part in parts])
    except ValueError as e:
        raise DatasetFormatError(f"{what}: {e}") from e


def _lines(text: str) -> list[str]:
    return [line for line in text.splitlines() if line.strip()]


# --- scenes ---------------------------------------------------------------


def format_scene(scene: Scene) -> str:
    n, channels = scene.points.shape
    rows = [f"scene points={n} channels={channels} classes={scene.num_classes}"]
    for point, inst, sem in zip(scene.points, scene.instance_ids, scene.semantic_ids):
        values = [_float(v) for v in point]
        rows.append(" ".join([*values, str(int(inst)), str(int(sem))]))
    return "\n".join(rows) + "\n"


def parse_scene(text: str) -> Scene:
    """Inverse of :func:`format_scene`.

    Raises:
        DatasetFormatError: If the header, a row or the labels are malformed
    """
    lines = _lines(text)
    if not lines:
        raise DatasetFormatError("empty scene file")
    header = _parse_header(lines[0], "scene", ("points", "channels", "classes"))
    n, channels = header["points"], header["channels"]
    if len(lines) - 1 != n:
        raise DatasetFormatError(
            f"scene declares {n} points but has {len(lines) - 1} rows"
        )
    rows = np.zeros((0, channels + 2))
    if n:
        rows = np.stack(
            [
                _numbers(line, channels + 2, f"scene row {i}")
                for i, line in enumerate(lines[1:])
            ]
        )
    try:
        return Scene(
            points=rows[:, :channels],
            instance_ids=rows[:, channels].astype(np.int64),
            semantic_ids=rows[:, channels + 1].astype(np.int64),
            num_classes=header["classes"],
        )
    except SceneError as e:
        raise DatasetFormatError(f"invalid scene: {e}") from e


# --- voxel grids ----------------------------------------------------------


def format_voxels(grid: np.ndarray) -> str:
    grid = np.asarray(grid)
    d = grid.shape[0]
    if grid.shape != (d, d, d):
        raise DatasetFormatError(f"voxel grid must be D x D x D, got {grid.shape}")
    values = " ".join(_grid_value(v) for v in grid.reshape(-1))
    return f"voxgrid d={d}\n{values}\n"


def parse_voxels(text: str) -> np.ndarray:
    lines = _lines(text)
    if len(lines) != 2:
        raise DatasetFormatError(
            f"voxel file needs a header and one value line, got {len(lines)} lines"
        )
    d = _parse_header(lines[0], "voxgrid", ("d",))["d"]
    return _numbers(lines[1], d**3, "voxel values").reshape(d, d, d)


# --- multi-view samples ---------------------------------------------------


def format_views(sample: MultiViewSample, d: int) -> str:
    views = np.asarray(sample.views)
    v, din = views.shape
    if sample.target.size != d**3:
        raise DatasetFormatError(
            f"target has {sample.target.size} cells, expected {d**3}"
        )
    rows = [f"views v={v} din={din} d={d}"]
    rows.extend(" ".join(_float(x) for x in row) for row in views)
    rows.append(" ".join(_grid_value(x) for x in np.asarray(sample.target).reshape(-1)))
    return "\n".join(rows) + "\n"


def parse_views(text: str) -> MultiViewSample:
    lines = _lines(text)
    if not lines:
        raise DatasetFormatError("empty views file")
    header = _parse_header(lines[0], "views", ("v", "din", "d"))
    v, din, d = header["v"], header["din"], header["d"]
    if len(lines) != v + 2:
        raise DatasetFormatError(
            f"views file declares {v} views but has {len(lines) - 2}"
        )
    views = np.stack(
        [_numbers(line, din, f"view {i}") for i, line in enumerate(lines[1:-1])]
    )
    return MultiViewSample(views=views, target=_numbers(lines[-1], d**3, "target"))


# --- whole datasets -------------------------------------------------------


@dataclass
class SynthDataset:
    """Everything ``synth`` writes, held in memory."""

    multiview: dict[str, list[MultiViewSample]]
    scenes: dict[str, list[Scene]]
    voxels: dict[str, list[np.ndarray]]


def _record_name(index: int, suffix: str) -> str:
    return f"{index:06d}.{suffix}"


def generate_dataset(cfg: SynthConfig) -> SynthDataset:
    """Build both datasets and the scene voxelizations from one config."""
    cfg.validate()
    projections = make_projections(cfg)
    multiview = {
        split: make_multiview_split(cfg, projections, train=split == "train")
        for split in ("train", "test")
    }
    scenes = {
        split: make_scene_split(cfg, train=split == "train")
        for split in ("train", "test")
    }
    voxels = {
        split: [voxelize_points(s.xyz, cfg.scene_voxels, cfg.extent) for s in items]
        for split, items in scenes.items()
    }
    return SynthDataset(multiview=multiview, scenes=scenes, voxels=voxels)


def write_dataset(
    dataset: SynthDataset, cfg: SynthConfig, writer: ArtifactWriter
) -> dict:
    """Write every record plus ``manifest.json``; returns the manifest."""
    counts: dict[str, int] = {}
    for split, samples in dataset.multiview.items():
        for i, sample in enumerate(samples):
            writer.write_text(
                f"multiview/{split}/{_record_name(i, 'views')}",
                format_views(sample, cfg.grid_size),
            )
        counts[f"multiview_{split}"] = len(samples)
    for split, scenes in dataset.scenes.items():
        for i, (scene, grid) in enumerate(zip(scenes, dataset.voxels[split])):
            prefix = f"scenes/{split}/{i:06d}"
            writer.write_text(f"{prefix}.scene", format_scene(scene))
            writer.write_text(f"{prefix}.vox", format_voxels(grid))
        counts[f"scenes_{split}"] = len(scenes)
    manifest = {
        "seed": cfg.seed,
        "counts": counts,
        "grid_size": cfg.grid_size,
        "scene_voxels": cfg.scene_voxels,
        "views": cfg.views,
        "input_width": cfg.input_width,
        "channels": cfg.channels,
    }
    writer.write_json(MANIFEST_NAME, manifest)
    logger.info(f"Wrote dataset with seed {cfg.seed}: {counts}")
    return manifest


def _read(path: Path) -> str:
    return path.read_text(encoding="utf-8")


def read_dataset(root: Path) -> SynthDataset:
    """Load a directory written by :func:`write_dataset`.

    Raises:
        DatasetFormatError: If the manifest counts disagree with the files
    """
    root = Path(root)
    manifest = json.loads(_read(root / MANIFEST_NAME))
    counts = manifest["counts"]
    multiview, scenes, voxels = {}, {}, {}
    for split in ("train", "test"):
        view_files = sorted((root / "multiview" / split).glob("*.views"))
        scene_files = sorted((root / "scenes" / split).glob("*.scene"))
        vox_files = sorted((root / "scenes" / split).glob("*.vox"))
        if len(view_files) != counts[f"multiview_{split}"]:
            raise DatasetFormatError(
                f"manifest and files disagree on multiview/{split}"
            )
        if not len(scene_files) == len(vox_files) == counts[f"scenes_{split}"]:
            raise DatasetFormatError(f"manifest and files disagree on scenes/{split}")
        multiview[split] = [parse_views(_read(p)) for p in view_files]
        scenes[split] = [parse_scene(_read(p)) for p in scene_files]
        voxels[split] = [parse_voxels(_read(p)) for p in vox_files]
    return SynthDataset(multiview=multiview, scenes=scenes, voxels=voxels)
