"""Mean voxel IoU as a function of how many views are aggregated."""

from __future__ import annotations

import logging
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from typing import Protocol

import numpy as np
import pandas as pd

from src.reconstruction import voxel_ce, voxel_iou
from src.synthesis import MultiViewSample

logger = logging.getLogger(__name__)

DEFAULT_THRESHOLD = 0.35


class EvaluationError(Exception):
    """Raised for invalid evaluation requests."""

    pass


class Predictor(Protocol):
    def predict(self, views: np.ndarray) -> np.ndarray: ...


def _evaluate_n(
    model: Predictor,
    samples: Sequence[MultiViewSample],
    n: int,
    threshold: float,
    permutation: np.ndarray | None,
) -> dict:
    ious, ces = [], []
    for sample in samples:
        views = sample.views if permutation is None else sample.views[permutation]
        probs = model.predict(views[:n])
        ious.append(voxel_iou(probs, sample.target, threshold))
        ces.append(voxel_ce(probs, sample.target))
    return {"n": n, "iou": float(np.mean(ious)), "ce": float(np.mean(ces))}


def evaluate_over_view_counts(
    model: Predictor,
    samples: Sequence[MultiViewSample],
    ns: Sequence[int],
    threshold: float = DEFAULT_THRESHOLD,
    permutation: np.ndarray | None = None,
    jobs: int = 1,
) -> pd.DataFrame:
    """Mean IoU and CE over the test set for each requested view count.

    Each sample contributes its first N views in stored order, optionally
    reordered by ``permutation`` first.

    Args:
        model: Anything with ``predict(views) -> probabilities``
        samples: Test samples
        ns: View counts to evaluate
        threshold: Occupancy threshold for IoU
        permutation: View reordering applied to every sample
        jobs: Evaluate view counts on this many threads

    Returns:
        DataFrame with columns n, iou, ce (one row per requested n, in order)

    Raises:
        EvaluationError: If ns is empty or asks for more views than available
    """
    if not ns:
        raise EvaluationError("at least one view count is required")
    if not samples:
        raise EvaluationError("test set is empty")
    available = min(len(sample.views) for sample in samples)
    too_many = [n for n in ns if n < 1 or n > available]
    if too_many:
        raise EvaluationError(
            f"view counts {too_many} outside [1, {available}] available views"
        )

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(
                pool.map(
                    lambda n: _evaluate_n(model, samples, n, threshold, permutation), ns
                )
            )
    else:
        rows = [_evaluate_n(model, samples, n, threshold, permutation) for n in ns]
    return pd.DataFrame(rows, columns=["n", "iou", "ce"])
