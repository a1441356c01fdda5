"""Semantic loss and the combined instance-segmentation objective."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from src.bonet.model import InstancePrediction
from src.bonet.scene import Scene
from src.box_assoc.assignment import Assignment
from src.box_assoc.costs import CRITERIA
from src.box_assoc.losses import (
    GRADIENT_MODES,
    AssociationResult,
    assoc_and_losses,
    bce_mask_loss,
    focal_mask_loss,
)
from src.reconstruction import binary_cross_entropy
from src.tensor.core import Tensor, clamp, log, mean, take

logger = logging.getLogger(__name__)

EPS = 1e-7
MASK_LOSSES = ("focal", "bce")


class LabelError(Exception):
    """Raised for semantic labels outside the configured classes."""

    pass


class LossConfigError(Exception):
    """Raised for inconsistent loss switches."""

    pass


@dataclass
class LossConfig:
    """Switches for the full objective and its ablations."""

    score_loss: bool = True
    box_supervision: bool = True
    criteria: tuple[str, ...] = CRITERIA
    mask_loss: str = "focal"
    focal_alpha: float = 0.75
    focal_gamma: float = 2.0
    assignment_gradient: str = "constant"
    temperature: float = 1.0

    def validate(self) -> None:
        errors = []
        unknown = [c for c in self.criteria if c not in CRITERIA]
        if unknown or not self.criteria:
            errors.append(f"criteria must be a non-empty subset of {CRITERIA}")
        if self.mask_loss not in MASK_LOSSES:
            errors.append(
                f"mask_loss must be one of {MASK_LOSSES}, got {self.mask_loss!r}"
            )
        if self.assignment_gradient not in GRADIENT_MODES:
            errors.append(
                f"assignment_gradient must be one of {GRADIENT_MODES}, "
                f"got {self.assignment_gradient!r}"
            )
        if not 0.0 <= self.focal_alpha <= 1.0:
            errors.append(f"focal_alpha must lie in [0, 1], got {self.focal_alpha}")
        if self.focal_gamma < 0.0 or self.temperature <= 0.0:
            errors.append("focal_gamma must be >= 0 and temperature > 0")
        if errors:
            raise LossConfigError("; ".join(errors))


@dataclass
class LossBreakdown:
    """Each term of the objective plus the total that is back-propagated."""

    sem: Tensor
    bbox: Tensor
    bbs: Tensor
    pmask: Tensor
    total: Tensor
    included: tuple[str, ...] = field(default=("sem", "bbox", "bbs", "pmask"))

    def as_dict(self) -> dict[str, float]:
        return {
            "sem": self.sem.item(),
            "bbox": self.bbox.item(),
            "bbs": self.bbs.item(),
            "pmask": self.pmask.item(),
            "total": self.total.item(),
        }


def semantic_loss(probs: Tensor, labels: np.ndarray) -> Tensor:
    """Mean cross-entropy of N x S class probabilities against integer labels.

    Raises:
        LabelError: If a label is not in [0, S)
    """
    labels = np.asarray(labels, dtype=np.int64)
    n, s = probs.shape
    if labels.shape != (n,):
        raise LabelError(f"expected {n} labels, got shape {labels.shape}")
    bad = labels[(labels < 0) | (labels >= s)]
    if bad.size:
        raise LabelError(f"labels {sorted(set(bad.tolist()))} outside [0, {s})")
    picked = take(probs, (np.arange(n), labels))
    return -mean(log(clamp(picked, EPS, 1.0)))


def combined_loss(
    scene: Scene,
    prediction: InstancePrediction,
    config: LossConfig | None = None,
    assignment: Assignment | None = None,
) -> tuple[LossBreakdown, AssociationResult | None]:
    """Sum of semantic, box, score and mask losses for one scene.

    Switched-off terms are still computed and reported but left out of the
    total. A scene without instances contributes only the semantic loss and
    a score loss pushing every score to zero.

    Args:
        scene: Ground truth
        prediction: Network outputs for ``scene.points``
        config: Loss switches (full objective by default)
        assignment: Hold the association fixed instead of solving it

    Returns:
        (LossBreakdown, association result or None when the scene is empty)
    """
    config = config or LossConfig()
    config.validate()
    sem = semantic_loss(prediction.semantics, scene.semantic_ids)

    if scene.t == 0:
        zero = Tensor(0.0)
        scores = prediction.boxes.scores
        bbs = binary_cross_entropy(scores, np.zeros(prediction.boxes.h))
        total = sem + bbs if config.score_loss else sem
        return LossBreakdown(sem=sem, bbox=zero, bbs=bbs, pmask=zero, total=total), None

    association = assoc_and_losses(
        prediction.boxes,
        scene.gt_boxes,
        scene.box_masks(),
        scene.points,
        criteria=config.criteria,
        assignment=assignment,
        gradient=config.assignment_gradient,
        temperature=config.temperature,
    )
    paired_masks = take(prediction.masks, association.assignment.pred_index)
    if config.mask_loss == "focal":
        pmask = focal_mask_loss(
            paired_masks, scene.instance_masks(), config.focal_alpha, config.focal_gamma
        )
    else:
        pmask = bce_mask_loss(paired_masks, scene.instance_masks())

    included = ["sem"]
    total = sem
    if config.box_supervision:
        total = total + association.bbox_loss
        included.append("bbox")
    if config.score_loss:
        total = total + association.score_loss
        included.append("bbs")
    total = total + pmask
    included.append("pmask")

    breakdown = LossBreakdown(
        sem=sem,
        bbox=association.bbox_loss,
        bbs=association.score_loss,
        pmask=pmask,
        total=total,
        included=tuple(included),
    )
    return breakdown, association
