"""Toy per-point network with box, point-mask and semantic branches."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from src.box_assoc.geometry import BoxSet
from src.tensor.core import (
    Tensor,
    broadcast_rows,
    concat,
    leaky_relu,
    max_axis,
    reshape,
    sigmoid,
    softmax,
    take,
)
from src.tensor.nn import MLP, Linear, Module

logger = logging.getLogger(__name__)


class BonetConfigError(Exception):
    """Raised for invalid network widths."""

    pass


@dataclass
class BonetModelConfig:
    """Layer widths. H (num_boxes) is the fixed number of predicted boxes."""

    channels: int = 3
    point_hidden: int = 32
    embed_width: int = 64
    feature_width: int = 64
    box_hidden: int = 64
    num_boxes: int = 8
    mask_width: int = 32
    mask_hidden: int = 32
    semantic_hidden: int = 32
    num_classes: int = 3

    def validate(self) -> None:
        errors = [
            f"{name} must be positive, got {value}"
            for name, value in self.__dict__.items()
            if value <= 0
        ]
        if self.channels not in (3, 6):
            errors.append(f"channels must be 3 or 6, got {self.channels}")
        if errors:
            raise BonetConfigError("; ".join(errors))


@dataclass
class BackboneOutput:
    local: Tensor
    global_: Tensor
    embedding: Tensor


@dataclass
class InstancePrediction:
    """Network outputs for one scene.

    Attributes:
        boxes: H boxes and scores
        masks: H x N point-mask probabilities, row h belongs to box h
        semantics: N x S class probabilities
    """

    boxes: BoxSet
    masks: Tensor
    semantics: Tensor
    features: BackboneOutput | None = None


class Backbone(Module):
    """Shared per-point perceptron with max aggregation over points."""

    def __init__(self, config: BonetModelConfig, rng: np.random.Generator):
        self.point_mlp = MLP(
            [
                config.channels,
                config.point_hidden,
                config.embed_width,
                config.embed_width,
            ],
            rng,
            final_activation="leaky_relu",
        )
        self.project = Linear(2 * config.embed_width, config.feature_width, rng)

    def forward(self, points: Tensor) -> BackboneOutput:
        embedding = self.point_mlp(points)
        global_ = max_axis(embedding, axis=0, keepdims=True)
        mixed = concat([embedding, broadcast_rows(global_, points.shape[0])], axis=1)
        local = leaky_relu(self.project(mixed))
        return BackboneOutput(local=local, global_=global_, embedding=embedding)


class BoxBranch(Module):
    """Two shared layers, then parallel heads for 6H vertices and H scores."""

    def __init__(self, config: BonetModelConfig, rng: np.random.Generator):
        self._num_boxes = config.num_boxes
        self.shared = MLP(
            [config.embed_width, config.box_hidden, config.box_hidden],
            rng,
            final_activation="leaky_relu",
        )
        self.vertex_head = Linear(config.box_hidden, 6 * config.num_boxes, rng)
        self.score_head = Linear(config.box_hidden, config.num_boxes, rng)

    def forward(self, global_: Tensor) -> BoxSet:
        hidden = self.shared(global_)
        boxes = reshape(self.vertex_head(hidden), (self._num_boxes, 2, 3))
        scores = reshape(sigmoid(self.score_head(hidden)), (self._num_boxes,))
        return BoxSet(boxes=boxes, scores=scores)


class MaskBranch(Module):
    """Box-aware per-point mask prediction, shared across boxes."""

    def __init__(self, config: BonetModelConfig, rng: np.random.Generator):
        self.compress_local = Linear(config.feature_width, config.mask_width, rng)
        self.compress_global = Linear(config.embed_width, config.mask_width, rng)
        self.fuse = Linear(2 * config.mask_width, config.mask_width, rng)
        self.head = MLP([config.mask_width + 7, config.mask_hidden, 1], rng, "sigmoid")

    def mixed_features(self, local: Tensor, global_: Tensor) -> Tensor:
        n = local.shape[0]
        compressed = concat(
            [
                leaky_relu(self.compress_local(local)),
                broadcast_rows(leaky_relu(self.compress_global(global_)), n),
            ],
            axis=1,
        )
        return leaky_relu(self.fuse(compressed))

    def mask_row(self, mixed: Tensor, box: Tensor, score: Tensor) -> Tensor:
        """N mask probabilities for one box (2 x 3 vertices plus a scalar score)."""
        n = mixed.shape[0]
        box_values = concat([reshape(box, (1, 6)), reshape(score, (1, 1))], axis=1)
        fused = concat([mixed, broadcast_rows(box_values, n)], axis=1)
        return reshape(self.head(fused), (n,))

    def forward(self, local: Tensor, global_: Tensor, boxes: BoxSet) -> Tensor:
        mixed = self.mixed_features(local, global_)
        rows = [
            reshape(
                self.mask_row(mixed, take(boxes.boxes, h), take(boxes.scores, h)),
                (1, mixed.shape[0]),
            )
            for h in range(boxes.h)
        ]
        return concat(rows, axis=0)


class SemanticBranch(Module):
    def __init__(self, config: BonetModelConfig, rng: np.random.Generator):
        self.head = MLP(
            [config.feature_width, config.semantic_hidden, config.num_classes], rng
        )

    def forward(self, local: Tensor) -> Tensor:
        return softmax(self.head(local), axis=1)


class BonetModel(Module):
    """Backbone plus the three prediction branches."""

    def __init__(self, config: BonetModelConfig, rng: np.random.Generator):
        config.validate()
        self._config = config
        self.backbone = Backbone(config, rng)
        self.box_branch = BoxBranch(config, rng)
        self.mask_branch = MaskBranch(config, rng)
        self.semantic_branch = SemanticBranch(config, rng)

    @property
    def config(self) -> BonetModelConfig:
        return self._config

    def forward(self, points: np.ndarray | Tensor) -> InstancePrediction:
        points = points if isinstance(points, Tensor) else Tensor(points)
        if points.ndim != 2 or points.shape[1] != self._config.channels:
            raise BonetConfigError(
                f"expected N x {self._config.channels} points, got {points.shape}"
            )
        features = self.backbone(points)
        boxes = self.box_branch(features.global_)
        masks = self.mask_branch(features.local, features.global_, boxes)
        semantics = self.semantic_branch(features.local)
        return InstancePrediction(
            boxes=boxes, masks=masks, semantics=semantics, features=features
        )
