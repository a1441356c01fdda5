"""Bounding-box association: containment, costs, assignment and losses."""

from src.box_assoc.assignment import Assignment, brute_force_assignment, hungarian
from src.box_assoc.costs import (
    CRITERIA,
    CostMatrix,
    cost_ces,
    cost_euclidean,
    cost_matrix,
    cost_siou,
)
from src.box_assoc.geometry import (
    AssociationError,
    BBox,
    BoxSet,
    hard_point_in_box,
    hard_point_in_boxes,
    soft_point_in_box,
    soft_point_in_boxes,
)
from src.box_assoc.losses import (
    AssociationResult,
    assoc_and_losses,
    bce_mask_loss,
    focal_mask_loss,
    score_loss,
)

__all__ = [
    "CRITERIA",
    "Assignment",
    "AssociationError",
    "AssociationResult",
    "BBox",
    "BoxSet",
    "CostMatrix",
    "assoc_and_losses",
    "bce_mask_loss",
    "brute_force_assignment",
    "cost_ces",
    "cost_euclidean",
    "cost_matrix",
    "cost_siou",
    "focal_mask_loss",
    "hard_point_in_box",
    "hard_point_in_boxes",
    "hungarian",
    "score_loss",
    "soft_point_in_box",
    "soft_point_in_boxes",
]
