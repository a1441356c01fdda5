"""Box, score and mask losses driven by the optimal association.

By default the assignment is a constant during backward: gradients reach
predictions only through the costs of the pairs it selected.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from src.box_assoc.assignment import Assignment, hungarian
from src.box_assoc.costs import CRITERIA, CostMatrix, cost_matrix
from src.box_assoc.geometry import AssociationError, BoxSet
from src.reconstruction import binary_cross_entropy
from src.tensor.core import (
    Tensor,
    as_tensor,
    clamp,
    detach,
    log,
    mean,
    mul,
    power,
    softmax,
    sub,
    sum_axis,
    take,
)

logger = logging.getLogger(__name__)

EPS = 1e-7
GRADIENT_MODES = ("constant", "straight_through")


@dataclass
class AssociationResult:
    bbox_loss: Tensor
    score_loss: Tensor
    assignment: Assignment
    costs: CostMatrix


def paired_costs(costs: CostMatrix, assignment: Assignment) -> Tensor:
    """Length-T tensor of the costs selected by the assignment."""
    return take(costs.total, (assignment.pred_index, np.arange(assignment.t)))


def score_loss(scores: Tensor, assignment: Assignment) -> Tensor:
    """BCE of the H scores against 1 for assigned predictions, 0 otherwise."""
    return binary_cross_entropy(scores, assignment.assigned_mask())


def assoc_and_losses(
    pred: BoxSet,
    gt_boxes: np.ndarray,
    gt_masks: np.ndarray,
    points: np.ndarray,
    criteria: Sequence[str] = CRITERIA,
    assignment: Assignment | None = None,
    gradient: str = "constant",
    temperature: float = 1.0,
) -> AssociationResult:
    """Associate predictions with ground truth and compute the box and score losses.

    Args:
        pred: H predicted boxes with scores
        gt_boxes: T x 2 x 3 ground-truth boxes
        gt_masks: T x N hard masks of points inside each gt box
        points: N x k0 scene points
        criteria: Cost criteria used for both association and box supervision
        assignment: Reuse a fixed assignment instead of solving for one
        gradient: "constant" treats the assignment as fixed; "straight_through"
            keeps the hard forward value but back-propagates through a
            softmax of -C / temperature over predictions
        temperature: Softness of the straight-through relaxation

    Returns:
        AssociationResult with the mean paired cost and the score loss

    Raises:
        AssociationError: For an unknown gradient mode or a mismatched assignment
    """
    if gradient not in GRADIENT_MODES:
        raise AssociationError(
            f"gradient must be one of {GRADIENT_MODES}, got {gradient!r}"
        )
    costs = cost_matrix(pred, gt_boxes, gt_masks, points, criteria)
    if assignment is None:
        assignment = hungarian(costs)
    elif assignment.h != pred.h or assignment.t != costs.shape[1]:
        raise AssociationError(
            f"assignment is {assignment.h} x {assignment.t}, costs are {costs.shape}"
        )

    bbox_loss = mean(paired_costs(costs, assignment))
    if gradient == "straight_through":
        weights = softmax(mul(costs.total, -1.0 / temperature), axis=0)
        relaxed = mean(sum_axis(mul(weights, costs.total), axis=0))
        bbox_loss = bbox_loss + sub(relaxed, detach(relaxed))

    return AssociationResult(
        bbox_loss=bbox_loss,
        score_loss=score_loss(pred.scores, assignment),
        assignment=assignment,
        costs=costs,
    )


def focal_mask_loss(
    pred_masks: Tensor, gt_masks: np.ndarray, alpha: float = 0.75, gamma: float = 2.0
) -> Tensor:
    """Focal loss over T x N mask probabilities against 0/1 instance masks."""
    gt_masks = np.asarray(gt_masks, dtype=np.float64)
    if pred_masks.shape != gt_masks.shape:
        raise AssociationError(
            f"mask shapes differ: {pred_masks.shape} vs {gt_masks.shape}"
        )
    m = clamp(pred_masks, EPS, 1.0 - EPS)
    target = as_tensor(gt_masks)
    positive = mul(mul(power(sub(1.0, m), gamma), target), log(m))
    negative = mul(mul(power(m, gamma), sub(1.0, target)), log(sub(1.0, m)))
    return -mean(alpha * positive + (1.0 - alpha) * negative)


def bce_mask_loss(pred_masks: Tensor, gt_masks: np.ndarray) -> Tensor:
    """Plain mean BCE on masks (the focal-loss ablation)."""
    return binary_cross_entropy(pred_masks, np.asarray(gt_masks, dtype=np.float64))
