"""Training loop for the instance-segmentation network."""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
from tqdm import tqdm

from src.bonet.losses import LossConfig, combined_loss
from src.bonet.model import BonetModel
from src.bonet.scene import Scene
from src.tensor.optim import Adam

logger = logging.getLogger(__name__)


class BonetTrainError(Exception):
    """Raised for invalid training settings."""

    pass


@dataclass
class BonetTrainConfig:
    iterations: int = 2000
    lr: float = 1e-3
    seed: int = 0
    log_every: int = 10
    progress: bool = False

    def validate(self) -> None:
        errors = []
        if self.iterations < 0:
            errors.append(f"iterations must be non-negative, got {self.iterations}")
        if self.lr <= 0:
            errors.append(f"lr must be positive, got {self.lr}")
        if self.log_every < 1:
            errors.append(f"log_every must be at least 1, got {self.log_every}")
        if errors:
            raise BonetTrainError("; ".join(errors))


@dataclass
class BonetTrainResult:
    model: BonetModel
    history: list[dict] = field(default_factory=list)


def train_bonet(
    model: BonetModel,
    scenes: Sequence[Scene],
    loss_config: LossConfig,
    config: BonetTrainConfig,
) -> BonetTrainResult:
    """Adam on one randomly drawn scene per step.

    Every ``log_every`` steps (and the last one) the separate loss terms are
    appended to the history.
    """
    config.validate()
    loss_config.validate()
    if not scenes:
        raise BonetTrainError("no training scenes")
    rng = np.random.default_rng(config.seed)
    optimizer = Adam(model.parameters(), lr=config.lr)
    result = BonetTrainResult(model=model)
    logger.info(f"Training on {len(scenes)} scenes for {config.iterations} steps")

    steps = range(config.iterations)
    for step in tqdm(steps, desc="bonet", disable=not config.progress):
        index = int(rng.integers(0, len(scenes)))
        scene = scenes[index]
        model.zero_grad()
        breakdown, _ = combined_loss(scene, model(scene.points), loss_config)
        breakdown.total.check_finite("combined loss")
        breakdown.total.backward()
        optimizer.step()
        if step % config.log_every == 0 or step == config.iterations - 1:
            result.history.append({"step": step, "scene": index, **breakdown.as_dict()})
            logger.debug(f"step {step}: total {breakdown.total.item():.5f}")

    if result.history:
        final = result.history[-1]["total"]
        logger.info(f"Finished training: final total loss {final:.5f}")
    return result
