"""Optimal one-to-one association of ground-truth boxes to predictions."""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from src.box_assoc.geometry import AssociationError

logger = logging.getLogger(__name__)

BRUTE_FORCE_LIMIT = 8


@dataclass
class Assignment:
    """Injective map from each of T ground truths to one of H predictions.

    Attributes:
        pred_index: Length-T array; entry t is the prediction paired with gt t
        total_cost: Sum of the paired costs
        h: Number of predictions
    """

    pred_index: np.ndarray
    total_cost: float
    h: int

    @property
    def t(self) -> int:
        return int(self.pred_index.shape[0])

    def matrix(self) -> np.ndarray:
        """H x T 0/1 matrix: one 1 per column, at most one per row."""
        a = np.zeros((self.h, self.t))
        a[self.pred_index, np.arange(self.t)] = 1.0
        return a

    def assigned_mask(self) -> np.ndarray:
        """Length-H 0/1 vector marking predictions paired with some ground truth."""
        mask = np.zeros(self.h)
        mask[self.pred_index] = 1.0
        return mask

    def satisfies_constraints(self) -> bool:
        a = self.matrix()
        return bool(np.all(a.sum(axis=0) == 1.0) and np.all(a.sum(axis=1) <= 1.0))


def _as_cost_array(costs) -> np.ndarray:
    values = np.asarray(getattr(costs, "values", costs), dtype=np.float64)
    if values.ndim != 2:
        raise AssociationError(f"cost matrix must be H x T, got shape {values.shape}")
    h, t = values.shape
    if h < t:
        raise AssociationError(f"{h} predictions cannot cover {t} ground truths")
    if not np.all(np.isfinite(values)):
        raise AssociationError("cost matrix has non-finite entries")
    return values


def _total(values: np.ndarray, pred_index: np.ndarray) -> float:
    total = 0.0
    for t, h in enumerate(pred_index):
        total += float(values[h, t])
    return total


def hungarian(costs) -> Assignment:
    """Minimum-cost injective assignment of every column (gt) to a row (prediction).

    Args:
        costs: H x T array or CostMatrix

    Raises:
        AssociationError: If H < T or entries are not finite
    """
    values = _as_cost_array(costs)
    gt_index, pred_index = linear_sum_assignment(values.T)
    order = np.argsort(gt_index)
    pred_index = pred_index[order].astype(np.int64)
    return Assignment(
        pred_index=pred_index,
        total_cost=_total(values, pred_index),
        h=values.shape[0],
    )


def brute_force_assignment(costs) -> Assignment:
    """Exhaustive search over all injective maps; H is limited to 8.

    Raises:
        AssociationError: If H exceeds the enumeration limit
    """
    values = _as_cost_array(costs)
    h, t = values.shape
    if h > BRUTE_FORCE_LIMIT:
        raise AssociationError(
            f"brute force limited to H <= {BRUTE_FORCE_LIMIT}, got {h}"
        )
    best_index, best_cost = None, np.inf
    for candidate in itertools.permutations(range(h), t):
        index = np.asarray(candidate, dtype=np.int64)
        cost = _total(values, index)
        if cost < best_cost:
            best_index, best_cost = index, cost
    return Assignment(pred_index=best_index, total_cost=best_cost, h=h)
