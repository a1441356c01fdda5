"""Mean precision and recall of predicted instances at a point-IoU threshold."""

from __future__ import annotations

import logging
from collections.abc import Iterable
from dataclasses import dataclass, field

import numpy as np

from src.bonet.inference import InstanceLabels

logger = logging.getLogger(__name__)


class EvaluationError(Exception):
    """Raised when precision or recall is undefined."""

    pass


@dataclass
class ClassCounts:
    true_positives: int = 0
    predictions: int = 0
    ground_truths: int = 0


@dataclass
class MatchCounts:
    """Per-class tallies that can be accumulated over scenes."""

    per_class: dict[int, ClassCounts] = field(default_factory=dict)

    def add(self, other: MatchCounts) -> None:
        for cls, counts in other.per_class.items():
            mine = self.per_class.setdefault(cls, ClassCounts())
            mine.true_positives += counts.true_positives
            mine.predictions += counts.predictions
            mine.ground_truths += counts.ground_truths

    def scores(self) -> tuple[float, float]:
        """(mPrec, mRec) averaged over classes that have ground truth.

        A class with no predictions has precision 0.

        Raises:
            EvaluationError: If no class has any ground-truth instance
        """
        present = [c for c in self.per_class.values() if c.ground_truths > 0]
        if not present:
            raise EvaluationError("no ground-truth instances: recall is undefined")
        precision = [
            c.true_positives / c.predictions if c.predictions else 0.0 for c in present
        ]
        recall = [c.true_positives / c.ground_truths for c in present]
        return float(np.mean(precision)), float(np.mean(recall))


def point_iou(a: np.ndarray, b: np.ndarray) -> float:
    union = int(np.count_nonzero(a | b))
    return float(np.count_nonzero(a & b)) / union if union else 0.0


def greedy_match(iou: np.ndarray, threshold: float) -> list[tuple[int, int]]:
    """Pair predictions (rows) with ground truths (columns) by descending IoU.

    Each row and column is used at most once; pairs below ``threshold`` never
    match. Equal IoUs are taken in row-then-column order.
    """
    candidates = [
        (-iou[p, g], p, g)
        for p in range(iou.shape[0])
        for g in range(iou.shape[1])
        if iou[p, g] >= threshold
    ]
    used_p, used_g, pairs = set(), set(), []
    for _, p, g in sorted(candidates):
        if p in used_p or g in used_g:
            continue
        used_p.add(p)
        used_g.add(g)
        pairs.append((p, g))
    return pairs


def match_counts(
    pred: InstanceLabels, gt: InstanceLabels, iou_threshold: float = 0.5
) -> MatchCounts:
    """Tally true positives per semantic class for one scene."""
    if pred.point_ids.shape != gt.point_ids.shape:
        raise EvaluationError(
            f"prediction covers {pred.point_ids.size} points, gt {gt.point_ids.size}"
        )
    counts = MatchCounts()
    classes = sorted(set(pred.semantics.values()) | set(gt.semantics.values()))
    for cls in classes:
        preds = [i for i in pred.instances if pred.semantics[i] == cls]
        gts = [i for i in gt.instances if gt.semantics[i] == cls]
        iou = np.zeros((len(preds), len(gts)))
        for a, p in enumerate(preds):
            for b, g in enumerate(gts):
                iou[a, b] = point_iou(pred.point_ids == p, gt.point_ids == g)
        matched = greedy_match(iou, iou_threshold) if preds and gts else []
        counts.per_class[cls] = ClassCounts(
            true_positives=len(matched), predictions=len(preds), ground_truths=len(gts)
        )
    return counts


def eval_mprec_mrec(
    pred: InstanceLabels, gt: InstanceLabels, iou_threshold: float = 0.5
) -> tuple[float, float]:
    """(mPrec, mRec) for one scene."""
    return match_counts(pred, gt, iou_threshold).scores()


def eval_dataset(
    pairs: Iterable[tuple[InstanceLabels, InstanceLabels]], iou_threshold: float = 0.5
) -> tuple[float, float]:
    """(mPrec, mRec) with counts pooled over scenes, then averaged over classes."""
    total = MatchCounts()
    for pred, gt in pairs:
        total.add(match_counts(pred, gt, iou_threshold))
    return total.scores()
