"""Two-stage (base, then attention) and joint training of multi-view models.

All three regimes draw batches from the same seeded sampler, so runs that
differ only in which parameters the optimizer owns see identical data.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
from tqdm import tqdm

from src.faset.model import MultiViewModel
from src.reconstruction import binary_cross_entropy
from src.synthesis import MultiViewSample
from src.tensor.core import Tensor
from src.tensor.optim import Adam

logger = logging.getLogger(__name__)

STAGES = ("stage1", "stage2", "joint")


class TrainConfigError(Exception):
    """Raised when a training configuration is invalid for its stage."""

    pass


@dataclass
class TrainConfig:
    """One training run.

    ``n`` fixes the set size; a positive ``n_max`` instead samples each set's
    size uniformly from [1, n_max].
    """

    stage: str = "stage1"
    n: int = 1
    n_max: int = 0
    batch_size: int = 16
    iterations: int = 500
    lr: float = 1e-3
    baseline_lr: float = 1e-5
    seed: int = 0
    log_every: int = 50
    progress: bool = False

    @property
    def sampled(self) -> bool:
        return self.n_max > 0

    def validate(self) -> None:
        errors = []
        if self.stage not in STAGES:
            errors.append(f"stage must be one of {STAGES}, got {self.stage!r}")
        if self.n < 1:
            errors.append(f"n must be at least 1, got {self.n}")
        if self.n_max < 0:
            errors.append(f"n_max must be non-negative, got {self.n_max}")
        if self.batch_size < 1:
            errors.append(f"batch_size must be at least 1, got {self.batch_size}")
        if self.iterations < 0:
            errors.append(f"iterations must be non-negative, got {self.iterations}")
        if self.lr <= 0 or self.baseline_lr <= 0:
            errors.append("learning rates must be positive")
        if self.stage == "stage1" and (self.n != 1 or self.sampled):
            errors.append(f"stage1 trains on single views only, got n={self.n}")
        if self.stage == "stage2" and self.n == 1 and not self.sampled:
            errors.append("stage2 needs sets of more than one view, got n=1")
        if errors:
            raise TrainConfigError("; ".join(errors))


@dataclass
class TrainResult:
    model: MultiViewModel
    history: list[dict] = field(default_factory=list)

    @property
    def final_loss(self) -> float:
        return self.history[-1]["loss"] if self.history else float("nan")


class BatchSampler:
    """Seeded draws of (sample, view subset) batches."""

    def __init__(self, data: Sequence[MultiViewSample], config: TrainConfig):
        if not data:
            raise TrainConfigError("training data is empty")
        self.data = data
        self.config = config
        self.rng = np.random.default_rng(config.seed)
        self.available = min(len(sample.views) for sample in data)
        largest = config.n_max if config.sampled else config.n
        if largest > self.available:
            raise TrainConfigError(
                f"sets of {largest} views requested but samples carry {self.available}"
            )

    def draw(self) -> tuple[list[np.ndarray], np.ndarray]:
        indices = self.rng.integers(0, len(self.data), size=self.config.batch_size)
        view_sets, targets = [], []
        for index in indices:
            sample = self.data[int(index)]
            size = (
                int(self.rng.integers(1, self.config.n_max + 1))
                if self.config.sampled
                else self.config.n
            )
            chosen = self.rng.choice(len(sample.views), size=size, replace=False)
            view_sets.append(sample.views[chosen])
            targets.append(sample.target)
        return view_sets, np.stack(targets)


def batch_loss(
    model: MultiViewModel, view_sets: list[np.ndarray], targets: np.ndarray
) -> Tensor:
    """Mean voxel BCE of the aggregated prediction of every set in the batch."""
    return binary_cross_entropy(model(view_sets), targets)


def _optimizer(model: MultiViewModel, config: TrainConfig) -> Adam:
    if config.stage == "stage1":
        return Adam(model.base_parameters(), lr=config.lr)
    if config.stage == "joint":
        return Adam(model.parameters(), lr=config.lr)
    if model.attention_parameters():
        return Adam(model.attention_parameters(), lr=config.lr)
    # pooling has no attention weights: fine-tune everything gently instead
    return Adam(model.parameters(), lr=config.baseline_lr)


def train(
    model: MultiViewModel, data: Sequence[MultiViewSample], config: TrainConfig
) -> TrainResult:
    """Run ``config.iterations`` Adam steps of the configured stage.

    Parameters outside the optimizer's list are never written.
    """
    config.validate()
    sampler = BatchSampler(data, config)
    optimizer = _optimizer(model, config)
    result = TrainResult(model=model)
    logger.info(
        f"Training {model.aggregator} ({config.stage}, "
        f"{'n<=' + str(config.n_max) if config.sampled else 'n=' + str(config.n)}) "
        f"for {config.iterations} iterations"
    )

    steps = range(config.iterations)
    for iteration in tqdm(steps, desc=config.stage, disable=not config.progress):
        view_sets, targets = sampler.draw()
        model.zero_grad()
        loss = batch_loss(model, view_sets, targets)
        loss.check_finite(f"{config.stage} loss")
        loss.backward()
        optimizer.step()
        result.history.append(
            {"stage": config.stage, "iteration": iteration, "loss": loss.item()}
        )
        if config.log_every and iteration % config.log_every == 0:
            logger.debug(
                f"{config.stage} iteration {iteration}: loss {loss.item():.5f}"
            )

    logger.info(f"Finished {config.stage}: final loss {result.final_loss:.5f}")
    return result


def _with_stage(config: TrainConfig, stage: str) -> TrainConfig:
    values = dict(config.__dict__)
    values["stage"] = stage
    return TrainConfig(**values)


def train_stage1(
    model: MultiViewModel, data: Sequence[MultiViewSample], config: TrainConfig
) -> TrainResult:
    """Optimize the base network on single-view sets.

    Raises:
        TrainConfigError: If the config asks for sets larger than one view
    """
    return train(model, data, _with_stage(config, "stage1"))


def train_stage2(
    model: MultiViewModel, data: Sequence[MultiViewSample], config: TrainConfig
) -> TrainResult:
    """Optimize only the attention weights on multi-view sets."""
    return train(model, data, _with_stage(config, "stage2"))


def train_joint(
    model: MultiViewModel, data: Sequence[MultiViewSample], config: TrainConfig
) -> TrainResult:
    """Optimize every parameter with a single loss."""
    return train(model, data, _with_stage(config, "joint"))
