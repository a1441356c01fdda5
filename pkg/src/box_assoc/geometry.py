"""Axis-aligned boxes and point containment, soft and hard."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from src.tensor.core import (
    Tensor,
    as_tensor,
    clamp,
    expand,
    min_axis,
    mul,
    reshape,
    sigmoid,
    sub,
    take,
)

logger = logging.getLogger(__name__)

THETA1 = 100.0
THETA2 = 20.0


class AssociationError(Exception):
    """Base exception for box association errors."""

    pass


@dataclass
class BBox:
    """Axis-aligned box given by its minimum and maximum vertices (meters)."""

    vmin: np.ndarray
    vmax: np.ndarray

    def __post_init__(self):
        self.vmin = np.asarray(self.vmin, dtype=np.float64).reshape(3)
        self.vmax = np.asarray(self.vmax, dtype=np.float64).reshape(3)

    @classmethod
    def from_points(cls, points: np.ndarray) -> BBox:
        points = np.asarray(points, dtype=np.float64)
        if points.ndim != 2 or points.shape[0] == 0:
            raise AssociationError(f"cannot bound an empty point set {points.shape}")
        return cls(points[:, :3].min(axis=0), points[:, :3].max(axis=0))

    def as_array(self) -> np.ndarray:
        """2 x 3 array: row 0 is vmin, row 1 is vmax."""
        return np.stack([self.vmin, self.vmax])

    @property
    def is_valid(self) -> bool:
        return bool(np.all(self.vmin <= self.vmax))


@dataclass
class BoxSet:
    """H predicted boxes (H x 2 x 3) with H scores in (0, 1)."""

    boxes: Tensor
    scores: Tensor

    def __post_init__(self):
        if self.boxes.ndim != 3 or self.boxes.shape[1:] != (2, 3):
            raise AssociationError(f"boxes must be H x 2 x 3, got {self.boxes.shape}")
        if self.scores.shape != (self.boxes.shape[0],):
            raise AssociationError(
                f"expected {self.boxes.shape[0]} scores, got shape {self.scores.shape}"
            )

    @property
    def h(self) -> int:
        return self.boxes.shape[0]


def soft_point_in_boxes(
    points: Tensor | np.ndarray,
    boxes: Tensor | np.ndarray,
    theta1: float = THETA1,
    theta2: float = THETA2,
) -> Tensor:
    """Soft membership of N points in each of H boxes, as an H x N tensor.

    Per axis the signed margin product ``(vmin - P) * (P - vmax)`` is scaled by
    ``theta1``, clamped to +/- ``theta2`` and squashed by a sigmoid; the
    probability is the minimum over the three axes.
    """
    points = as_tensor(points)
    boxes = as_tensor(boxes)
    n, h = points.shape[0], boxes.shape[0]
    xyz = take(points, (slice(None), slice(0, 3))) if points.shape[1] != 3 else points
    p = expand(reshape(xyz, (1, n, 3)), (h, n, 3))
    vmin = expand(reshape(take(boxes, (slice(None), 0)), (h, 1, 3)), (h, n, 3))
    vmax = expand(reshape(take(boxes, (slice(None), 1)), (h, 1, 3)), (h, n, 3))
    delta = mul(sub(vmin, p), sub(p, vmax))
    probs = sigmoid(clamp(theta1 * delta, -theta2, theta2))
    return min_axis(probs, axis=2)


def soft_point_in_box(
    points: Tensor | np.ndarray,
    box: BBox | Tensor,
    theta1: float = THETA1,
    theta2: float = THETA2,
) -> Tensor:
    """Soft membership of N points in a single box, as a length-N tensor."""
    corners = as_tensor(box.as_array()) if isinstance(box, BBox) else as_tensor(box)
    probs = soft_point_in_boxes(points, reshape(corners, (1, 2, 3)), theta1, theta2)
    return reshape(probs, (probs.shape[1],))


def hard_point_in_boxes(points: np.ndarray, boxes: np.ndarray) -> np.ndarray:
    """Closed-interval containment of N points in T boxes, as a T x N 0/1 array."""
    xyz = np.asarray(points, dtype=np.float64)[:, :3]
    boxes = np.asarray(boxes, dtype=np.float64)
    inside = (xyz[None, :, :] >= boxes[:, None, 0, :]) & (
        xyz[None, :, :] <= boxes[:, None, 1, :]
    )
    return np.all(inside, axis=2).astype(np.float64)


def hard_point_in_box(points: np.ndarray, box: BBox) -> np.ndarray:
    return hard_point_in_boxes(points, box.as_array()[None])[0]
