"""Association cost criteria between predicted and ground-truth boxes.

Pairwise functions work on plain arrays and serve as reference evaluations.
``cost_matrix`` builds all H x T entries at once on the tape.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from src.box_assoc.geometry import AssociationError, BBox, BoxSet, soft_point_in_boxes
from src.tensor.core import (
    Tensor,
    as_tensor,
    clamp,
    div,
    expand,
    log,
    matmul,
    mean,
    mul,
    neg,
    reshape,
    sub,
    sum_axis,
    transpose,
)

logger = logging.getLogger(__name__)

EPS = 1e-7
CRITERIA = ("ed", "siou", "ces")


def cost_euclidean(bi: BBox, bj: BBox) -> float:
    """Mean squared difference over the six vertex coordinates."""
    return float(np.sum((bi.as_array() - bj.as_array()) ** 2) / 6.0)


def cost_siou(q: np.ndarray, q_hard: np.ndarray) -> float:
    """Negative soft IoU between a soft mask and a hard mask, in [-1, 0].

    Raises:
        AssociationError: If lengths differ or both masks are all zero
    """
    q = np.asarray(q, dtype=np.float64)
    q_hard = np.asarray(q_hard, dtype=np.float64)
    if q.shape != q_hard.shape:
        raise AssociationError(f"mask lengths differ: {q.shape} vs {q_hard.shape}")
    intersection = float(np.sum(q * q_hard))
    denominator = float(np.sum(q) + np.sum(q_hard)) - intersection
    if float(np.sum(q) + np.sum(q_hard)) == 0.0:
        raise AssociationError("soft IoU undefined: both masks are empty")
    return -intersection / denominator


def cost_ces(q: np.ndarray, q_hard: np.ndarray) -> float:
    """Mean binary cross-entropy of the soft mask against the hard one."""
    q = np.clip(np.asarray(q, dtype=np.float64), EPS, 1.0 - EPS)
    q_hard = np.asarray(q_hard, dtype=np.float64)
    return float(np.mean(-q_hard * np.log(q) - (1.0 - q_hard) * np.log(1.0 - q)))


@dataclass
class CostMatrix:
    """H x T association costs with the per-criterion components kept."""

    total: Tensor
    components: dict[str, Tensor] = field(default_factory=dict)
    soft_masks: Tensor | None = None

    @property
    def values(self) -> np.ndarray:
        return self.total.data

    @property
    def shape(self) -> tuple[int, int]:
        return self.total.shape


def _validate_criteria(criteria: Sequence[str]) -> tuple[str, ...]:
    chosen = tuple(criteria)
    unknown = [c for c in chosen if c not in CRITERIA]
    if unknown or not chosen:
        raise AssociationError(
            f"criteria must be a non-empty subset of {CRITERIA}, got {chosen}"
        )
    return chosen


def euclidean_costs(pred_boxes: Tensor, gt_boxes: np.ndarray) -> Tensor:
    h, t = pred_boxes.shape[0], gt_boxes.shape[0]
    pred = expand(reshape(pred_boxes, (h, 1, 6)), (h, t, 6))
    gt = expand(as_tensor(np.asarray(gt_boxes).reshape(1, t, 6)), (h, t, 6))
    diff = sub(pred, gt)
    return mean(mul(diff, diff), axis=2)


def siou_costs(soft_masks: Tensor, gt_masks: np.ndarray) -> Tensor:
    h, t = soft_masks.shape[0], gt_masks.shape[0]
    hard = as_tensor(gt_masks)
    intersection = matmul(soft_masks, transpose(hard))
    soft_total = expand(sum_axis(soft_masks, axis=1, keepdims=True), (h, t))
    hard_total = np.broadcast_to(gt_masks.sum(axis=1)[None, :], (h, t))
    if np.any(soft_total.data + hard_total == 0.0):
        raise AssociationError("soft IoU undefined: a pair of masks is empty")
    return neg(div(intersection, sub(soft_total + as_tensor(hard_total), intersection)))


def ces_costs(soft_masks: Tensor, gt_masks: np.ndarray) -> Tensor:
    n = soft_masks.shape[1]
    q = clamp(soft_masks, EPS, 1.0 - EPS)
    hard = as_tensor(gt_masks)
    inside = matmul(log(q), transpose(hard))
    outside = matmul(log(sub(1.0, q)), transpose(sub(1.0, hard)))
    return mul(inside + outside, -1.0 / n)


def cost_matrix(
    pred: BoxSet,
    gt_boxes: np.ndarray,
    gt_masks: np.ndarray,
    points: np.ndarray,
    criteria: Sequence[str] = CRITERIA,
) -> CostMatrix:
    """Sum the selected criteria over all prediction / ground-truth pairs.

    Args:
        pred: Predicted boxes and scores
        gt_boxes: T x 2 x 3 ground-truth boxes
        gt_masks: T x N hard point-in-gt-box masks
        points: N x k0 scene points (first three columns are xyz)
        criteria: Any non-empty subset of ("ed", "siou", "ces")

    Raises:
        AssociationError: If H < T, shapes disagree, or a criterion is unknown
    """
    chosen = _validate_criteria(criteria)
    gt_boxes = np.asarray(gt_boxes, dtype=np.float64)
    gt_masks = np.asarray(gt_masks, dtype=np.float64)
    h, t = pred.h, gt_boxes.shape[0]
    if h < t:
        raise AssociationError(
            f"{h} predicted boxes cannot cover {t} ground-truth boxes"
        )
    if gt_masks.shape != (t, len(points)):
        raise AssociationError(
            f"gt masks must be {t} x {len(points)}, got {gt_masks.shape}"
        )

    soft_masks = soft_point_in_boxes(points, pred.boxes)
    components: dict[str, Tensor] = {}
    if "ed" in chosen:
        components["ed"] = euclidean_costs(pred.boxes, gt_boxes)
    if "siou" in chosen:
        components["siou"] = siou_costs(soft_masks, gt_masks)
    if "ces" in chosen:
        components["ces"] = ces_costs(soft_masks, gt_masks)

    total = None
    for name in CRITERIA:
        if name in components:
            total = components[name] if total is None else total + components[name]
    total.check_finite("cost matrix")
    return CostMatrix(total=total, components=components, soft_masks=soft_masks)
