"""Permutation-invariant aggregation of feature sets.

Every aggregator maps an N x D set to a 1 x D vector and does not depend on
row order. The attentional variants weight each element by a softmax taken
across the set, either per feature column or once per row.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

from src.tensor.core import (
    Tensor,
    expand,
    max_axis,
    mean,
    mul,
    softmax_over_set,
    sum_axis,
)

logger = logging.getLogger(__name__)


class AggregationError(Exception):
    """Raised for empty sets or mismatched feature widths."""

    pass


class AttentionMode(str, Enum):
    FEATURE = "feature"
    ELEMENT = "element"


@dataclass
class FeatureSet:
    """N x D matrix, one row per set element."""

    values: Tensor

    def __post_init__(self):
        if self.values.ndim != 2:
            raise AggregationError(f"FeatureSet must be N x D, got {self.values.shape}")
        self.values.check_finite("FeatureSet")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @classmethod
    def from_rows(cls, rows: np.ndarray | list) -> FeatureSet:
        array = np.asarray(rows, dtype=np.float64)
        if array.ndim != 2 or array.shape[0] == 0:
            raise AggregationError(
                f"FeatureSet needs at least one row, got {array.shape}"
            )
        return cls(Tensor(array))


@dataclass
class AttentionParams:
    """Attention weights: D x D (feature-wise) or D x 1 (element-wise)."""

    weight: Tensor
    mode: AttentionMode = AttentionMode.FEATURE

    def __post_init__(self):
        self.mode = AttentionMode(self.mode)
        rows, cols = self.weight.shape if self.weight.ndim == 2 else (0, 0)
        if self.mode is AttentionMode.FEATURE and (rows != cols or rows == 0):
            raise AggregationError(
                "feature-wise attention needs a square D x D weight, "
                f"got {self.weight.shape}"
            )
        if self.mode is AttentionMode.ELEMENT and (cols != 1 or rows == 0):
            raise AggregationError(
                f"element-wise attention needs a D x 1 weight, got {self.weight.shape}"
            )

    @property
    def width(self) -> int:
        return self.weight.shape[0]

    @classmethod
    def init(
        cls, width: int, mode: AttentionMode | str, rng: np.random.Generator
    ) -> AttentionParams:
        """Trainable weights drawn uniformly in +/- sqrt(1/width)."""
        mode = AttentionMode(mode)
        cols = width if mode is AttentionMode.FEATURE else 1
        bound = float(np.sqrt(1.0 / width))
        values = rng.uniform(-bound, bound, size=(width, cols))
        weight = Tensor(values, requires_grad=True)
        return cls(weight=weight, mode=mode)


def _check(
    feature_set: FeatureSet, params: AttentionParams, mode: AttentionMode
) -> None:
    if params.mode is not mode:
        raise AggregationError(
            f"expected {mode.value}-wise params, got {params.mode.value}"
        )
    if params.width != feature_set.width:
        raise AggregationError(
            f"attention width {params.width} does not match "
            f"feature width {feature_set.width}"
        )


def attention_scores(feature_set: FeatureSet, params: AttentionParams) -> Tensor:
    """Per-element attention weights, N x D, each column summing to one."""
    x = feature_set.values
    activations = x @ params.weight
    if params.mode is AttentionMode.ELEMENT:
        activations = expand(activations, x.shape)
    return softmax_over_set(activations)


def attsets_feature(feature_set: FeatureSet, params: AttentionParams) -> Tensor:
    """Feature-wise attentional sum: ``y^d = sum_n x_n^d * softmax_n(xW)^d``."""
    _check(feature_set, params, AttentionMode.FEATURE)
    scores = attention_scores(feature_set, params)
    return sum_axis(mul(feature_set.values, scores), axis=0, keepdims=True)


def attsets_element(feature_set: FeatureSet, params: AttentionParams) -> Tensor:
    """One softmax score per element, shared across the element's features."""
    _check(feature_set, params, AttentionMode.ELEMENT)
    scores = attention_scores(feature_set, params)
    return sum_axis(mul(feature_set.values, scores), axis=0, keepdims=True)


def pool_max(feature_set: FeatureSet) -> Tensor:
    return max_axis(feature_set.values, axis=0, keepdims=True)


def pool_mean(feature_set: FeatureSet) -> Tensor:
    return mean(feature_set.values, axis=0, keepdims=True)


def pool_sum(feature_set: FeatureSet) -> Tensor:
    return sum_axis(feature_set.values, axis=0, keepdims=True)


POOLING: dict[str, Callable[[FeatureSet], Tensor]] = {
    "max": pool_max,
    "mean": pool_mean,
    "sum": pool_sum,
}


def aggregate(
    feature_set: FeatureSet, kind: str, params: AttentionParams | None = None
) -> Tensor:
    """Dispatch by aggregator name: attsets, attsets_element, max, mean or sum."""
    if kind in POOLING:
        return POOLING[kind](feature_set)
    if params is None:
        raise AggregationError(f"aggregator '{kind}' needs attention params")
    if kind == "attsets":
        return attsets_feature(feature_set, params)
    if kind == "attsets_element":
        return attsets_element(feature_set, params)
    raise AggregationError(f"Unknown aggregator: {kind}")
