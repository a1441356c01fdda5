"""Toy multi-view encoder / aggregator / voxel decoder."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from src.aggregators import (
    POOLING,
    AttentionMode,
    AttentionParams,
    FeatureSet,
    aggregate,
)
from src.tensor.core import Tensor, concat, take
from src.tensor.nn import MLP, Module

logger = logging.getLogger(__name__)

AGGREGATORS = ("attsets", "attsets_element", *POOLING)


class ModelConfigError(Exception):
    """Raised for invalid model settings."""

    pass


@dataclass
class FasetModelConfig:
    """Layer widths of the toy reconstruction network."""

    input_width: int = 48
    encoder_hidden: int = 64
    feature_width: int = 32
    decoder_hidden: int = 128
    grid_size: int = 8
    aggregator: str = "attsets"

    def validate(self) -> None:
        errors = []
        widths = ("input_width", "encoder_hidden", "feature_width", "decoder_hidden")
        for name in widths:
            if getattr(self, name) <= 0:
                errors.append(f"{name} must be positive, got {getattr(self, name)}")
        if self.grid_size < 2:
            errors.append(f"grid_size must be at least 2, got {self.grid_size}")
        if self.aggregator not in AGGREGATORS:
            errors.append(
                f"aggregator must be one of {AGGREGATORS}, got {self.aggregator!r}"
            )
        if errors:
            raise ModelConfigError("; ".join(errors))


class MultiViewModel(Module):
    """Shared view encoder, set aggregator and voxel decoder.

    Trainable tensors split into the base network (encoder and decoder) and
    the attention weights. Pooling aggregators own no attention weights.
    """

    def __init__(self, config: FasetModelConfig, rng: np.random.Generator):
        config.validate()
        self._config = config
        self.encoder = MLP(
            [config.input_width, config.encoder_hidden, config.feature_width],
            rng,
            final_activation="leaky_relu",
        )
        self.decoder = MLP(
            [config.feature_width, config.decoder_hidden, config.grid_size**3],
            rng,
            final_activation="sigmoid",
        )
        self.attention_weight: Tensor | None = None
        if config.aggregator.startswith("attsets"):
            mode = (
                AttentionMode.ELEMENT
                if config.aggregator == "attsets_element"
                else AttentionMode.FEATURE
            )
            self.attention_weight = AttentionParams.init(
                config.feature_width, mode, rng
            ).weight

    @property
    def config(self) -> FasetModelConfig:
        return self._config

    @property
    def aggregator(self) -> str:
        return self._config.aggregator

    def attention_parameters(self) -> list[Tensor]:
        return [] if self.attention_weight is None else [self.attention_weight]

    def base_parameters(self) -> list[Tensor]:
        attention = {id(p) for p in self.attention_parameters()}
        return [p for p in self.parameters() if id(p) not in attention]

    def _attention(self) -> AttentionParams | None:
        if self.attention_weight is None:
            return None
        mode = (
            AttentionMode.ELEMENT
            if self.aggregator == "attsets_element"
            else AttentionMode.FEATURE
        )
        return AttentionParams(weight=self.attention_weight, mode=mode)

    def forward(self, view_sets: list[np.ndarray]) -> Tensor:
        """Decode one probability grid per view set.

        Args:
            view_sets: M arrays of shape N_m x D_in (N_m may differ)

        Returns:
            M x D^3 tensor of occupancy probabilities
        """
        sizes = [len(views) for views in view_sets]
        if not sizes or min(sizes) < 1:
            raise ModelConfigError("every view set needs at least one view")
        features = self.encoder(Tensor(np.concatenate(view_sets, axis=0)))
        params = self._attention()
        rows = []
        start = 0
        for size in sizes:
            members = take(features, slice(start, start + size))
            rows.append(aggregate(FeatureSet(members), self.aggregator, params))
            start += size
        return self.decoder(concat(rows, axis=0))

    def predict(self, views: np.ndarray) -> np.ndarray:
        """Occupancy probabilities for one view set, flattened to D^3."""
        return self.forward([np.asarray(views, dtype=np.float64)]).data[0].copy()
