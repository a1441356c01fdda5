"""Labeled point-cloud scenes."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from src.box_assoc.geometry import hard_point_in_boxes

logger = logging.getLogger(__name__)

CLUTTER = -1


class SceneError(Exception):
    """Raised for malformed scenes."""

    pass


@dataclass
class Scene:
    """Point cloud with per-point instance and semantic labels.

    Attributes:
        points: N x k0 array, xyz first (meters), optional rgb in [0, 1]
        instance_ids: Length-N ints, -1 for clutter
        semantic_ids: Length-N ints in [0, num_classes)
        num_classes: Number of semantic classes S
        instances: Sorted instance ids that own at least one point
        gt_boxes: T x 2 x 3 boxes aligned with ``instances``
    """

    points: np.ndarray
    instance_ids: np.ndarray
    semantic_ids: np.ndarray
    num_classes: int = 3
    instances: np.ndarray = field(init=False)
    gt_boxes: np.ndarray = field(init=False)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64)
        self.instance_ids = np.asarray(self.instance_ids, dtype=np.int64)
        self.semantic_ids = np.asarray(self.semantic_ids, dtype=np.int64)
        self.validate()
        self.instances = np.unique(self.instance_ids[self.instance_ids != CLUTTER])
        self.gt_boxes = np.stack(
            [self._bounds(instance) for instance in self.instances]
        ) if self.instances.size else np.zeros((0, 2, 3))

    def _bounds(self, instance: int) -> np.ndarray:
        xyz = self.xyz[self.instance_ids == instance]
        return np.stack([xyz.min(axis=0), xyz.max(axis=0)])

    def validate(self) -> None:
        """Check shapes and label ranges, reporting every problem at once.

        Raises:
            SceneError: If any check fails
        """
        errors = []
        if self.points.ndim != 2 or self.points.shape[0] == 0:
            errors.append(
                f"points must be a non-empty N x k0 array, got {self.points.shape}"
            )
        elif self.points.shape[1] not in (3, 6):
            errors.append(f"points need 3 or 6 channels, got {self.points.shape[1]}")
        n = self.points.shape[0] if self.points.ndim == 2 else -1
        if self.instance_ids.shape != (n,):
            errors.append(f"expected {n} instance ids, got {self.instance_ids.shape}")
        if self.semantic_ids.shape != (n,):
            errors.append(f"expected {n} semantic ids, got {self.semantic_ids.shape}")
        elif self.semantic_ids.size and (
            self.semantic_ids.min() < 0 or self.semantic_ids.max() >= self.num_classes
        ):
            errors.append(f"semantic ids must lie in [0, {self.num_classes})")
        if self.instance_ids.size and self.instance_ids.min() < CLUTTER:
            errors.append("instance ids below -1 are not allowed")
        if self.points.size and not np.all(np.isfinite(self.points)):
            errors.append("points contain non-finite values")
        if errors:
            raise SceneError("; ".join(errors))

    @property
    def n(self) -> int:
        return int(self.points.shape[0])

    @property
    def t(self) -> int:
        return int(self.instances.shape[0])

    @property
    def channels(self) -> int:
        return int(self.points.shape[1])

    @property
    def xyz(self) -> np.ndarray:
        return self.points[:, :3]

    def instance_masks(self) -> np.ndarray:
        """T x N membership masks aligned with ``instances``."""
        members = self.instance_ids[None, :] == self.instances[:, None]
        return members.astype(np.float64)

    def box_masks(self) -> np.ndarray:
        """T x N masks of points lying inside each gt box (closed)."""
        return hard_point_in_boxes(self.xyz, self.gt_boxes)

    def instance_semantics(self) -> np.ndarray:
        """Majority semantic id of each instance, aligned with ``instances``."""
        return np.array(
            [
                np.bincount(
                    self.semantic_ids[self.instance_ids == instance],
                    minlength=self.num_classes,
                ).argmax()
                for instance in self.instances
            ],
            dtype=np.int64,
        )

    def subset(self, indices: np.ndarray) -> Scene:
        indices = np.asarray(indices, dtype=np.int64)
        return Scene(
            points=self.points[indices],
            instance_ids=self.instance_ids[indices],
            semantic_ids=self.semantic_ids[indices],
            num_classes=self.num_classes,
        )
