"""Splitting large scenes into overlapping blocks and merging their labels.

Merging keeps a global grid of small cells next to per-point votes. An
instance that shares points with earlier blocks adopts the dominant label of
those points when it holds at least half of them. An instance with no
labeled points falls back to the cells it occupies and adopts their dominant
label only when at least half of its own points land there. Anything else
gets a new id.
"""

from __future__ import annotations

import logging
from collections import Counter, defaultdict
from dataclasses import dataclass

import numpy as np

from src.bonet.inference import renumber_by_first_appearance
from src.bonet.scene import CLUTTER, Scene

logger = logging.getLogger(__name__)


class BlockError(Exception):
    """Raised for scenes or blocks that cannot be partitioned or merged."""

    pass


@dataclass
class Block:
    """Indices of the scene points inside one x-y block."""

    origin: tuple[float, float]
    indices: np.ndarray


def _origins(low: float, high: float, block: float, stride: float) -> np.ndarray:
    count = int(np.ceil(max(0.0, high - low - block) / stride)) + 1
    return low + stride * np.arange(count)


def block_partition(
    points: Scene | np.ndarray, block: float = 1.0, stride: float = 0.5
) -> list[Block]:
    """Cover the scene's x-y footprint with ``block``-sized squares every ``stride``.

    Blocks are closed squares anchored at the scene's minimum corner; empty
    blocks are dropped. Every point lands in at least one block.

    Raises:
        BlockError: If the scene is empty or the sizes are not positive
    """
    if isinstance(points, Scene):
        xyz = points.xyz
    else:
        xyz = np.asarray(points, dtype=np.float64)
    if xyz.ndim != 2 or xyz.shape[0] == 0:
        raise BlockError("cannot partition an empty scene")
    if block <= 0.0 or stride <= 0.0:
        raise BlockError(f"block ({block}) and stride ({stride}) must be positive")
    if not np.all(np.isfinite(xyz[:, :2])):
        raise BlockError("scene extent is not finite")

    low, high = xyz[:, :2].min(axis=0), xyz[:, :2].max(axis=0)
    blocks = []
    for x0 in _origins(low[0], high[0], block, stride):
        for y0 in _origins(low[1], high[1], block, stride):
            inside = (
                (xyz[:, 0] >= x0)
                & (xyz[:, 0] <= x0 + block)
                & (xyz[:, 1] >= y0)
                & (xyz[:, 1] <= y0 + block)
            )
            if np.any(inside):
                origin = (float(x0), float(y0))
                blocks.append(Block(origin=origin, indices=np.flatnonzero(inside)))
    logger.debug(f"Partitioned {xyz.shape[0]} points into {len(blocks)} blocks")
    return blocks


def _majority(votes: Counter) -> int:
    # highest count wins; ties go to the smaller label
    return min(votes.items(), key=lambda item: (-item[1], item[0]))[0]


def _match_existing(
    members: np.ndarray,
    point_votes: list[Counter],
    grid: dict[tuple, Counter],
    keys: list[tuple],
) -> int | None:
    # shared points decide first; cells only when no member was labeled before
    shared = [
        _majority(point_votes[i])
        for i in members
        if point_votes[i] and _majority(point_votes[i]) != CLUTTER
    ]
    if shared:
        votes = Counter(shared)
        visited = sum(1 for i in members if point_votes[i])
        top = _majority(votes)
        return top if votes[top] * 2 >= visited else None

    seen = Counter(_majority(grid[keys[i]]) for i in members if grid[keys[i]])
    if not seen:
        return None
    top = _majority(seen)
    # a few touching cells must not pull a separate object in
    return top if seen[top] * 2 >= len(members) else None


def block_merge(
    xyz: np.ndarray,
    blocks: list[Block],
    block_labels: list[np.ndarray],
    cell: float = 0.1,
) -> np.ndarray:
    """Merge per-block instance labels into one consistent labeling of the scene.

    Args:
        xyz: N x 3 scene coordinates
        blocks: Blocks from block_partition (processed in order)
        block_labels: Per-block instance labels aligned with each block's
            indices (-1 for clutter)
        cell: Edge length of the vote grid cells (meters)

    Returns:
        Length-N instance ids renumbered by first appearance, -1 for clutter

    Raises:
        BlockError: If labels do not align with blocks or a point is uncovered
    """
    xyz = np.asarray(xyz, dtype=np.float64)[:, :3]
    if len(blocks) != len(block_labels):
        raise BlockError(f"{len(blocks)} blocks but {len(block_labels)} label arrays")
    cells = np.floor((xyz - xyz.min(axis=0)) / cell).astype(np.int64)
    keys = [tuple(c) for c in cells.tolist()]

    grid: dict[tuple, Counter] = defaultdict(Counter)
    point_votes: list[Counter] = [Counter() for _ in range(len(xyz))]
    next_id = 0

    for block, labels in zip(blocks, block_labels):
        labels = np.asarray(labels, dtype=np.int64)
        if labels.shape != block.indices.shape:
            raise BlockError(
                f"block at {block.origin} has {block.indices.size} points "
                f"but {labels.size} labels"
            )
        for index in block.indices[labels == CLUTTER]:
            point_votes[index][CLUTTER] += 1
        for local in np.unique(labels[labels != CLUTTER]):
            members = block.indices[labels == local]
            merged = _match_existing(members, point_votes, grid, keys)
            if merged is None:
                merged = next_id
                next_id += 1
            for i in members:
                grid[keys[i]][merged] += 1
                point_votes[i][merged] += 1

    uncovered = [i for i, votes in enumerate(point_votes) if not votes]
    if uncovered:
        raise BlockError(f"{len(uncovered)} points are not covered by any block")

    merged_ids = np.array(
        [_resolve(votes) for votes in point_votes], dtype=np.int64
    )
    logger.debug(f"Merged {len(blocks)} blocks into {next_id} provisional instances")
    return renumber_by_first_appearance(merged_ids)


def _resolve(votes: Counter) -> int:
    # instance votes beat clutter on ties
    ranked = min(votes.items(), key=lambda kv: (-kv[1], kv[0] == CLUTTER, kv[0]))
    return ranked[0]
