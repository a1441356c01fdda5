"""Turning network outputs into per-point instance labels."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from src.bonet.model import BonetModel
from src.bonet.scene import CLUTTER, Scene

logger = logging.getLogger(__name__)


@dataclass
class InstanceLabels:
    """Per-point instance ids (-1 clutter) and one semantic id per instance."""

    point_ids: np.ndarray
    semantics: dict[int, int]

    @property
    def instances(self) -> list[int]:
        return sorted(self.semantics)

    @classmethod
    def from_scene(cls, scene: Scene) -> InstanceLabels:
        return cls(
            point_ids=scene.instance_ids.copy(),
            semantics=dict(
                zip(scene.instances.tolist(), scene.instance_semantics().tolist())
            ),
        )


def renumber_by_first_appearance(point_ids: np.ndarray) -> np.ndarray:
    """Relabel instances 0, 1, ... in order of first occurrence; clutter stays -1."""
    point_ids = np.asarray(point_ids, dtype=np.int64)
    mapping: dict[int, int] = {}
    out = np.full_like(point_ids, CLUTTER)
    for i, label in enumerate(point_ids.tolist()):
        if label == CLUTTER:
            continue
        if label not in mapping:
            mapping[label] = len(mapping)
        out[i] = mapping[label]
    return out


def assign_points(
    scores: np.ndarray,
    masks: np.ndarray,
    semantic_probs: np.ndarray,
    score_threshold: float = 0.5,
    mask_threshold: float = 0.5,
) -> InstanceLabels:
    """Label points from box scores, H x N mask probabilities and N x S semantics.

    Boxes scoring at least ``score_threshold`` are kept. A point joins the
    kept instance with the highest mask probability among those whose
    binarized mask claims it (ties go to the lower box index); unclaimed
    points are clutter. Instance ids follow box order over boxes that end up
    owning points.
    """
    scores = np.asarray(scores, dtype=np.float64)
    masks = np.asarray(masks, dtype=np.float64)
    n = masks.shape[1]
    kept = np.flatnonzero(scores >= score_threshold)
    point_ids = np.full(n, CLUTTER, dtype=np.int64)
    if kept.size == 0:
        return InstanceLabels(point_ids=point_ids, semantics={})

    candidate = np.where(masks[kept] >= mask_threshold, masks[kept], -np.inf)
    best = np.argmax(candidate, axis=0)
    claimed = np.isfinite(candidate[best, np.arange(n)])
    owner = np.where(claimed, kept[best], CLUTTER)

    point_semantics = np.argmax(np.asarray(semantic_probs), axis=1)
    num_classes = np.asarray(semantic_probs).shape[1]
    semantics: dict[int, int] = {}
    for box in kept:
        members = owner == box
        if not np.any(members):
            continue
        instance = len(semantics)
        point_ids[members] = instance
        votes = np.bincount(point_semantics[members], minlength=num_classes)
        semantics[instance] = int(np.argmax(votes))
    return InstanceLabels(point_ids=point_ids, semantics=semantics)


def infer_scene(
    scene: Scene,
    model: BonetModel,
    score_threshold: float = 0.5,
    mask_threshold: float = 0.5,
) -> InstanceLabels:
    """Run the network on a scene and label its points."""
    prediction = model(scene.points)
    labels = assign_points(
        prediction.boxes.scores.data,
        prediction.masks.data,
        prediction.semantics.data,
        score_threshold,
        mask_threshold,
    )
    logger.debug(
        f"Inferred {len(labels.semantics)} instances over {scene.n} points "
        f"({int(np.count_nonzero(labels.point_ids == CLUTTER))} clutter)"
    )
    return labels
