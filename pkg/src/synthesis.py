"""Deterministic synthetic data.

Two kinds of datasets are produced:

- multi-view samples: a solid cuboid in a D^3 grid seen through V fixed
  random linear projections plus Gaussian noise
- labeled scenes: boxes and ellipsoids scattered over a 4m x 4m x 2m extent
  with uniform clutter

Every sample draws from its own generator seeded by (master seed, stream,
index), so samples can be produced in any order or in parallel.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from tenacity import (
    before_sleep_log,
    retry,
    retry_if_exception_type,
    stop_after_attempt,
)

from src.bonet.scene import CLUTTER, Scene

logger = logging.getLogger(__name__)

MAX_PLACEMENT_ATTEMPTS = 100

BOX, SPHERE, CLUTTER_CLASS = 0, 1, 2

TRAIN_VIEWS, TEST_VIEWS, TRAIN_SCENES, TEST_SCENES, PROJECTIONS = range(5)


class SynthesisError(Exception):
    """Raised when a dataset cannot be generated."""

    pass


class PlacementError(SynthesisError):
    """Raised when a candidate object collides with placed ones."""

    pass


@dataclass
class SynthConfig:
    """Every knob of the synthetic data generators."""

    seed: int = 0
    grid_size: int = 8
    train_samples: int = 1024
    test_samples: int = 256
    views: int = 8
    input_width: int = 48
    noise: float = 0.1
    train_scenes: int = 64
    test_scenes: int = 16
    extent_x: float = 4.0
    extent_y: float = 4.0
    extent_z: float = 2.0
    min_objects: int = 2
    max_objects: int = 5
    points_per_scene: int = 512
    clutter_fraction: float = 0.1
    surface_fraction: float = 0.5
    min_half_size: float = 0.2
    max_half_size: float = 0.6
    object_gap: float = 0.05
    channels: int = 3
    view_grid: int = 32
    scene_voxels: int = 16

    @property
    def extent(self) -> np.ndarray:
        return np.array([self.extent_x, self.extent_y, self.extent_z])

    def validate(self) -> None:
        """Raise SynthesisError listing every invalid field."""
        errors = []
        positive = (
            "grid_size", "train_samples", "test_samples", "views", "input_width",
            "train_scenes", "test_scenes", "extent_x", "extent_y", "extent_z",
            "min_objects", "max_objects", "points_per_scene", "min_half_size",
            "max_half_size", "view_grid", "scene_voxels",
        )
        for name in positive:
            if getattr(self, name) <= 0:
                errors.append(f"{name} must be positive, got {getattr(self, name)}")
        if self.seed < 0:
            errors.append(f"seed must be non-negative, got {self.seed}")
        if self.noise < 0:
            errors.append(f"noise must be non-negative, got {self.noise}")
        if self.grid_size < 2:
            errors.append(f"grid_size must be at least 2, got {self.grid_size}")
        if not 0.0 <= self.clutter_fraction < 1.0:
            errors.append(
                f"clutter_fraction must lie in [0, 1), got {self.clutter_fraction}"
            )
        if not 0.0 <= self.surface_fraction <= 1.0:
            errors.append(
                f"surface_fraction must lie in [0, 1], got {self.surface_fraction}"
            )
        if self.min_objects > self.max_objects:
            errors.append(
                f"min_objects {self.min_objects} exceeds max_objects {self.max_objects}"
            )
        if self.min_half_size > self.max_half_size:
            errors.append("min_half_size exceeds max_half_size")
        if self.channels not in (3, 6):
            errors.append(f"channels must be 3 or 6, got {self.channels}")
        if 2 * self.max_half_size > min(self.extent_x, self.extent_y, self.extent_z):
            errors.append("objects of max_half_size do not fit in the scene extent")
        if self.points_per_scene < self.max_objects:
            errors.append("points_per_scene must cover at least one point per object")
        if errors:
            raise SynthesisError("; ".join(errors))


def sample_rng(seed: int, stream: int, index: int = 0) -> np.random.Generator:
    """Independent generator for one sample of one stream."""
    return np.random.default_rng([seed, stream, index])


# --- multi-view samples ---------------------------------------------------


@dataclass
class MultiViewSample:
    """V raw views of width D_in plus the flattened D^3 binary target."""

    views: np.ndarray
    target: np.ndarray


def make_voxel_shape(cfg: SynthConfig, rng: np.random.Generator) -> np.ndarray:
    """Random solid cuboid, at least 2 cells per side, inside a D^3 grid."""
    d = cfg.grid_size
    grid = np.zeros((d, d, d))
    sides = rng.integers(2, d + 1, size=3)
    origin = [int(rng.integers(0, d - side + 1)) for side in sides]
    grid[
        origin[0] : origin[0] + sides[0],
        origin[1] : origin[1] + sides[1],
        origin[2] : origin[2] + sides[2],
    ] = 1.0
    return grid


def make_projections(cfg: SynthConfig) -> np.ndarray:
    """V x D_in x D^3 projection matrices shared by every sample of a dataset."""
    rng = sample_rng(cfg.seed, PROJECTIONS)
    cells = cfg.grid_size**3
    shape = (cfg.views, cfg.input_width, cells)
    return rng.normal(0.0, 1.0 / np.sqrt(cells), size=shape)


def make_view_set(
    shape: np.ndarray,
    projections: np.ndarray,
    cfg: SynthConfig,
    rng: np.random.Generator,
) -> np.ndarray:
    """Project a voxel shape through each view matrix and add noise."""
    flat = np.asarray(shape, dtype=np.float64).reshape(-1)
    clean = projections @ flat
    if cfg.noise == 0.0:
        return clean
    return clean + rng.normal(0.0, cfg.noise, size=clean.shape)


def make_multiview_sample(
    cfg: SynthConfig, projections: np.ndarray, stream: int, index: int
) -> MultiViewSample:
    rng = sample_rng(cfg.seed, stream, index)
    shape = make_voxel_shape(cfg, rng)
    return MultiViewSample(
        views=make_view_set(shape, projections, cfg, rng), target=shape.reshape(-1)
    )


def make_multiview_split(
    cfg: SynthConfig, projections: np.ndarray, train: bool = True
) -> list[MultiViewSample]:
    stream, count = (
        (TRAIN_VIEWS, cfg.train_samples) if train else (TEST_VIEWS, cfg.test_samples)
    )
    return [make_multiview_sample(cfg, projections, stream, i) for i in range(count)]


# --- scenes ---------------------------------------------------------------


@dataclass
class _PlacedObject:
    kind: int
    center: np.ndarray
    half: np.ndarray

    @property
    def lower(self) -> np.ndarray:
        return self.center - self.half

    @property
    def upper(self) -> np.ndarray:
        return self.center + self.half


def _sample_object(cfg: SynthConfig, rng: np.random.Generator) -> _PlacedObject:
    kind = int(rng.integers(0, 2))
    half = rng.uniform(cfg.min_half_size, cfg.max_half_size, size=3)
    center = rng.uniform(half, cfg.extent - half)
    return _PlacedObject(kind=kind, center=center, half=half)


def _overlaps(a: _PlacedObject, b: _PlacedObject, gap: float) -> bool:
    return bool(np.all(a.lower - gap < b.upper) and np.all(b.lower - gap < a.upper))


@retry(
    retry=retry_if_exception_type(PlacementError),
    stop=stop_after_attempt(MAX_PLACEMENT_ATTEMPTS),
    reraise=True,
    before_sleep=before_sleep_log(logger, logging.DEBUG),
)
def _place_object(
    placed: list[_PlacedObject], cfg: SynthConfig, rng: np.random.Generator
) -> _PlacedObject:
    candidate = _sample_object(cfg, rng)
    for other in placed:
        if _overlaps(candidate, other, cfg.object_gap):
            raise PlacementError("candidate overlaps a placed object")
    return candidate


def _object_points(
    obj: _PlacedObject, count: int, cfg: SynthConfig, rng: np.random.Generator
) -> np.ndarray:
    on_surface = rng.random(count) < cfg.surface_fraction
    if obj.kind == BOX:
        unit = rng.uniform(-1.0, 1.0, size=(count, 3))
        axis = rng.integers(0, 3, size=count)
        side = np.where(rng.random(count) < 0.5, -1.0, 1.0)
        rows = np.flatnonzero(on_surface)
        unit[rows, axis[rows]] = side[rows]
    else:
        direction = rng.normal(size=(count, 3))
        direction /= np.maximum(np.linalg.norm(direction, axis=1, keepdims=True), 1e-12)
        radius = np.where(on_surface, 1.0, np.cbrt(rng.random(count)))
        unit = direction * radius[:, None]
    return obj.center + unit * obj.half


def _clutter_points(
    placed: list[_PlacedObject], count: int, cfg: SynthConfig, rng: np.random.Generator
) -> np.ndarray:
    kept: list[np.ndarray] = []
    total = 0
    while total < count:
        candidates = rng.uniform(0.0, cfg.extent, size=(2 * count, 3))
        outside = np.ones(len(candidates), dtype=bool)
        for obj in placed:
            outside &= ~np.all(
                (candidates >= obj.lower) & (candidates <= obj.upper), axis=1
            )
        kept.append(candidates[outside])
        total += int(outside.sum())
    return np.concatenate(kept)[:count]


def make_scene(cfg: SynthConfig, rng: np.random.Generator, label: str = "") -> Scene:
    """Scatter 2-5 labeled objects plus clutter over the scene extent.

    Semantic ids: 0 box, 1 ellipsoid, 2 clutter.

    Raises:
        SynthesisError: If an object cannot be placed within the attempt budget
    """
    count = int(rng.integers(cfg.min_objects, cfg.max_objects + 1))
    placed: list[_PlacedObject] = []
    for i in range(count):
        try:
            placed.append(_place_object(placed, cfg, rng))
        except PlacementError as e:
            raise SynthesisError(
                f"could not place object {i + 1} of {count} after "
                f"{MAX_PLACEMENT_ATTEMPTS} attempts ({label or 'unlabeled scene'})"
            ) from e

    clutter = int(round(cfg.clutter_fraction * cfg.points_per_scene))
    per_object = np.full(count, (cfg.points_per_scene - clutter) // count)
    per_object[: (cfg.points_per_scene - clutter) % count] += 1

    xyz, instance_ids, semantic_ids = [], [], []
    for instance, (obj, n) in enumerate(zip(placed, per_object)):
        xyz.append(_object_points(obj, int(n), cfg, rng))
        instance_ids.append(np.full(n, instance))
        semantic_ids.append(np.full(n, obj.kind))
    if clutter:
        xyz.append(_clutter_points(placed, clutter, cfg, rng))
        instance_ids.append(np.full(clutter, CLUTTER))
        semantic_ids.append(np.full(clutter, CLUTTER_CLASS))

    points = np.clip(np.concatenate(xyz), 0.0, cfg.extent)
    if cfg.channels == 6:
        palette = rng.uniform(0.0, 1.0, size=(count + 1, 3))
        owner = np.concatenate(instance_ids)
        colors = palette[np.where(owner == CLUTTER, count, owner)]
        colors = np.clip(colors + rng.normal(0.0, 0.02, size=colors.shape), 0.0, 1.0)
        points = np.hstack([points, colors])

    order = rng.permutation(len(points))
    return Scene(
        points=points[order],
        instance_ids=np.concatenate(instance_ids)[order],
        semantic_ids=np.concatenate(semantic_ids)[order],
        num_classes=3,
    )


def make_scene_split(cfg: SynthConfig, train: bool = True) -> list[Scene]:
    stream, count = (
        (TRAIN_SCENES, cfg.train_scenes) if train else (TEST_SCENES, cfg.test_scenes)
    )
    return [
        make_scene(
            cfg, sample_rng(cfg.seed, stream, i), label=f"seed={cfg.seed} index={i}"
        )
        for i in range(count)
    ]


# --- voxelization and depth views ----------------------------------------


def voxel_indices(
    points: np.ndarray,
    d: int,
    extent: np.ndarray | float,
    origin: np.ndarray | float = 0.0,
) -> np.ndarray:
    """Integer cell coordinates; a point on a shared face falls in the lower cell."""
    xyz = np.asarray(points, dtype=np.float64)[:, :3]
    extent = np.broadcast_to(np.asarray(extent, dtype=np.float64), (3,))
    origin = np.broadcast_to(np.asarray(origin, dtype=np.float64), (3,))
    scaled = np.divide(
        (xyz - origin) * d, extent, out=np.zeros_like(xyz), where=extent > 0
    )
    return np.clip(np.ceil(scaled).astype(np.int64) - 1, 0, d - 1)


def voxelize_points(
    points: np.ndarray,
    d: int,
    extent: np.ndarray | float,
    origin: np.ndarray | float = 0.0,
) -> np.ndarray:
    """D^3 occupancy grid: a cell is 1 iff at least one point lies in it.

    Raises:
        SynthesisError: If a point lies outside the gridded extent
    """
    xyz = np.asarray(points, dtype=np.float64)[:, :3]
    low = np.broadcast_to(np.asarray(origin, dtype=np.float64), (3,))
    high = low + np.broadcast_to(np.asarray(extent, dtype=np.float64), (3,))
    if xyz.size and (np.any(xyz < low) or np.any(xyz > high)):
        raise SynthesisError(f"points outside the voxel extent [{low}, {high}]")
    grid = np.zeros((d, d, d))
    if xyz.size:
        idx = voxel_indices(xyz, d, high - low, low)
        grid[idx[:, 0], idx[:, 1], idx[:, 2]] = 1.0
    return grid


def partial_view_indices(
    points: np.ndarray,
    rng: np.random.Generator,
    grid: int = 32,
    axis: int | None = None,
    direction: int | None = None,
    extent: np.ndarray | float | None = None,
) -> np.ndarray:
    """Indices of the points visible from one axis-aligned depth view.

    Per transverse column only the points in the frontmost occupied cell are
    kept. ``direction=+1`` looks along the positive axis, so smaller
    coordinates are in front. Columns span ``extent`` from the origin (the
    scene extent); without it they span the cloud's bounding box.
    """
    xyz = np.asarray(points, dtype=np.float64)[:, :3]
    if xyz.shape[0] == 0:
        return np.zeros(0, dtype=np.int64)
    axis = int(rng.integers(0, 3)) if axis is None else axis
    direction = int(rng.choice([-1, 1])) if direction is None else direction
    if extent is None:
        low = xyz.min(axis=0)
        cells = voxel_indices(xyz, grid, xyz.max(axis=0) - low, low)
    else:
        cells = voxel_indices(xyz, grid, extent)
    across = [a for a in range(3) if a != axis]
    column = cells[:, across[0]] * grid + cells[:, across[1]]
    depth = cells[:, axis] if direction > 0 else grid - 1 - cells[:, axis]
    front = np.full(grid * grid, grid, dtype=np.int64)
    np.minimum.at(front, column, depth)
    return np.flatnonzero(depth == front[column])


def partial_view(
    points: np.ndarray,
    rng: np.random.Generator,
    grid: int = 32,
    axis: int | None = None,
    direction: int | None = None,
    extent: np.ndarray | float | None = None,
) -> np.ndarray:
    """Subset of ``points`` that survives z-buffer culling of one depth view."""
    points = np.asarray(points, dtype=np.float64)
    return points[partial_view_indices(points, rng, grid, axis, direction, extent)]


def scene_view(scene: Scene, cfg: SynthConfig, rng: np.random.Generator) -> Scene:
    """The part of a labeled scene one depth view sees, gridded over the extent."""
    kept = partial_view_indices(scene.points, rng, cfg.view_grid, extent=cfg.extent)
    return scene.subset(kept)
