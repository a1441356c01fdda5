"""Voxel reconstruction losses and metrics.

Probability grids are compared with binary ground truth. Every logarithm is
taken on probabilities clamped to [1e-7, 1 - 1e-7].
"""

from __future__ import annotations

import logging
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from typing import Union

import numpy as np

from src.tensor.core import Tensor, as_tensor, clamp, log, mean, mul, sub

logger = logging.getLogger(__name__)

EPS = 1e-7

Scalar = Union[float, Tensor]


class MetricError(Exception):
    """Raised when a metric is undefined for its inputs."""

    pass


@dataclass
class MetricsConfig:
    """Occupancy threshold plus the grid swept by threshold_search."""

    threshold: float = 0.35
    search_low: float = 0.1
    search_high: float = 0.9
    search_step: float = 0.05

    def validate(self) -> None:
        errors = []
        if not 0.0 < self.threshold < 1.0:
            errors.append(f"threshold must lie in (0, 1), got {self.threshold}")
        if not 0.0 < self.search_low <= self.search_high < 1.0:
            errors.append(
                f"search range must satisfy 0 < low <= high < 1, got "
                f"[{self.search_low}, {self.search_high}]"
            )
        if self.search_step <= 0.0:
            errors.append(f"search_step must be positive, got {self.search_step}")
        if errors:
            raise MetricError("; ".join(errors))

    def grid(self) -> np.ndarray:
        count = int(round((self.search_high - self.search_low) / self.search_step)) + 1
        return np.round(self.search_low + self.search_step * np.arange(count), 10)


def _check_grids(pred: np.ndarray, gt: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if pred.shape != gt.shape:
        raise MetricError(f"grid shapes differ: {pred.shape} vs {gt.shape}")
    if not np.all((gt == 0.0) | (gt == 1.0)):
        raise MetricError("ground-truth grid must be binary")
    return pred, gt


def voxel_iou(pred: np.ndarray, gt: np.ndarray, p: float) -> float:
    """Intersection over union of ``pred > p`` and the occupied gt cells.

    Raises:
        MetricError: If shapes differ, gt is not binary, or the union is empty
    """
    pred, gt = _check_grids(pred, gt)
    occupied = pred > p
    truth = gt == 1.0
    union = int(np.count_nonzero(occupied | truth))
    if union == 0:
        raise MetricError(f"IoU undefined: empty union at threshold {p}")
    return float(np.count_nonzero(occupied & truth)) / union


def voxel_ce(pred: np.ndarray, gt: np.ndarray) -> float:
    """Mean binary cross-entropy between a probability grid and binary gt."""
    pred, gt = _check_grids(pred, gt)
    y = np.clip(pred, EPS, 1.0 - EPS)
    return float(np.mean(-gt * np.log(y) - (1.0 - gt) * np.log(1.0 - y)))


def _log_terms(pred: Tensor, target: np.ndarray) -> tuple[Tensor, Tensor]:
    if pred.shape != np.shape(target):
        raise MetricError(
            f"prediction {pred.shape} and target {np.shape(target)} differ"
        )
    y = clamp(pred, EPS, 1.0 - EPS)
    t = as_tensor(target)
    positive = mul(t, log(y))
    negative = mul(sub(1.0, t), log(sub(1.0, y)))
    return positive, negative


def binary_cross_entropy(pred: Tensor, target: np.ndarray) -> Tensor:
    """Differentiable mean BCE over every entry of ``pred``."""
    positive, negative = _log_terms(pred, target)
    return -mean(positive + negative)


def weighted_bce(pred: Tensor, target: np.ndarray, alpha: float = 0.85) -> Tensor:
    """BCE with weight ``alpha`` on occupied cells and ``1 - alpha`` on empty ones."""
    positive, negative = _log_terms(pred, target)
    return -mean(alpha * positive + (1.0 - alpha) * negative)


def mean_feature(m: Tensor) -> Tensor:
    """Reduce a critic's feature vector (or a batch of them, row-wise) to its mean."""
    m = as_tensor(m)
    if m.ndim == 1:
        return mean(m)
    return mean(m, axis=m.ndim - 1, keepdims=True)


def joint_gen_loss(l_en: Scalar, l_g_gan: Scalar, beta: float = 0.2) -> Scalar:
    """Blend the reconstruction loss with the adversarial generator loss."""
    return beta * l_en + (1.0 - beta) * l_g_gan


def mean_iou(pairs: Iterable[tuple[np.ndarray, np.ndarray]], p: float) -> float:
    scores = [voxel_iou(pred, gt, p) for pred, gt in pairs]
    if not scores:
        raise MetricError("mean IoU needs at least one (pred, gt) pair")
    return float(np.mean(scores))


def threshold_search(
    pairs: Sequence[tuple[np.ndarray, np.ndarray]], config: MetricsConfig | None = None
) -> tuple[float, dict[float, float]]:
    """Sweep occupancy thresholds and return the one with the best mean IoU.

    Ties go to the smaller threshold.

    Returns:
        (best threshold, mean IoU per swept threshold)
    """
    config = config or MetricsConfig()
    config.validate()
    table: dict[float, float] = {}
    best_p, best_iou = None, -np.inf
    for p in config.grid():
        score = mean_iou(pairs, float(p))
        table[float(p)] = score
        if score > best_iou:
            best_p, best_iou = float(p), score
    logger.debug(f"threshold_search: best p={best_p} (mean IoU {best_iou:.4f})")
    return best_p, table
