"""Conditional WGAN-GP losses with a mean-feature critic, plus a 2-D demo.

The gradient penalty needs the critic's gradient with respect to its input.
It is estimated by central differences over the input coordinates, which
keeps the penalty differentiable in the critic parameters without a second
backward pass.
"""

from __future__ import annotations

import logging
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
import pandas as pd

from src.reconstruction import joint_gen_loss, mean_feature
from src.tensor.core import (
    Tensor,
    as_tensor,
    concat,
    expand,
    mean,
    mul,
    reshape,
    sqrt,
    sub,
    sum_axis,
    transpose,
)
from src.tensor.nn import MLP, Module
from src.tensor.optim import Adam

logger = logging.getLogger(__name__)

Critic = Callable[[Tensor, np.ndarray], Tensor]


class CriticError(Exception):
    """Raised when a critic does not produce one scalar per sample."""

    pass


@dataclass
class DiscOutput:
    """Critic feature vectors and their per-sample means."""

    features: Tensor
    value: Tensor


class MeanFeatureCritic(Module):
    """MLP on concat(sample, condition) whose output is its mean feature."""

    def __init__(
        self,
        sample_width: int,
        condition_width: int,
        rng: np.random.Generator,
        hidden: int = 32,
        features: int = 8,
        constant_init: bool = True,
    ):
        self.net = MLP([sample_width + condition_width, hidden, hidden, features], rng)
        if constant_init:
            last = self.net.layers[-1]
            last.weight.data = np.zeros_like(last.weight.data)
            last.bias.data = np.zeros_like(last.bias.data)

    def describe(self, samples: Tensor, condition: np.ndarray) -> DiscOutput:
        features = self.net(concat([as_tensor(samples), as_tensor(condition)], axis=1))
        return DiscOutput(features=features, value=mean_feature(features))

    def forward(self, samples: Tensor, condition: np.ndarray) -> Tensor:
        return self.describe(samples, condition).value


def critic_values(
    critic: Critic, samples: Tensor | np.ndarray, condition: np.ndarray
) -> Tensor:
    """Evaluate the critic and insist on a B x 1 output."""
    samples = as_tensor(samples)
    out = critic(samples, condition)
    if out.shape != (samples.shape[0], 1):
        raise CriticError(
            f"critic must return one scalar per sample ({samples.shape[0]} x 1), "
            f"got {out.shape}"
        )
    return out


def input_gradients(
    critic: Critic, samples: np.ndarray, condition: np.ndarray, h: float = 1e-4
) -> Tensor:
    """Central-difference estimate of dD/dx for every sample, as B x d."""
    samples = np.asarray(samples, dtype=np.float64)
    condition = np.asarray(condition, dtype=np.float64)
    b, d = samples.shape
    offsets = np.eye(d) * h
    base = samples[None, :, :]
    shifted = np.concatenate(
        [base + offsets[:, None, :], base - offsets[:, None, :]]
    ).reshape(2 * d * b, d)
    tiled = np.tile(condition, (2 * d, 1))
    values = reshape(critic_values(critic, shifted, tiled), (2, d, b))
    return transpose(mul(sub(values[0], values[1]), 1.0 / (2.0 * h)))


def gradient_penalty(
    critic: Critic, samples: np.ndarray, condition: np.ndarray, h: float = 1e-4
) -> Tensor:
    """Mean of (||dD/dx|| - 1)^2 over the batch (unweighted)."""
    grads = input_gradients(critic, samples, condition, h)
    norms = sqrt(sum_axis(mul(grads, grads), axis=1))
    gap = sub(norms, 1.0)
    return mean(mul(gap, gap))


@dataclass
class GanLosses:
    generator: Tensor
    critic: Tensor
    penalty: Tensor
    wasserstein: float


def wgan_gp_losses(
    critic: Critic,
    condition: np.ndarray,
    fake: Tensor | np.ndarray,
    real: np.ndarray,
    rng: np.random.Generator,
    lam: float = 10.0,
    h: float = 1e-4,
) -> GanLosses:
    """Generator and critic losses with the gradient penalty.

    Interpolates ``eps * real + (1 - eps) * fake`` use one ``eps ~ U[0, 1]``
    per sample; the penalty is averaged over the batch.

    Returns:
        GanLosses where ``critic`` already includes ``lam`` times the penalty
        and ``wasserstein`` is E[D(real)] - E[D(fake)]
    """
    fake = as_tensor(fake)
    real = np.asarray(real, dtype=np.float64)
    if fake.shape != real.shape:
        raise CriticError(f"fake {fake.shape} and real {real.shape} batches differ")
    d_fake = critic_values(critic, fake, condition)
    d_real = critic_values(critic, real, condition)
    eps = rng.uniform(0.0, 1.0, size=(real.shape[0], 1))
    interpolates = eps * real + (1.0 - eps) * fake.data
    penalty = gradient_penalty(critic, interpolates, condition, h)

    generator = -mean(d_fake)
    critic_loss = mean(d_fake) - mean(d_real) + lam * penalty
    wasserstein = float(np.mean(d_real.data) - np.mean(d_fake.data))
    return GanLosses(
        generator=generator,
        critic=critic_loss,
        penalty=penalty,
        wasserstein=wasserstein,
    )


# --- two-moons demo --------------------------------------------------------


@dataclass
class GanDemoConfig:
    seed: int = 0
    batch_size: int = 64
    critic_steps: int = 300
    lr: float = 1e-3
    critic_hidden: int = 32
    critic_features: int = 8
    constant_init: bool = True
    lam: float = 10.0
    fd_step: float = 1e-4
    shift_x: float = 1.5
    shift_y: float = 0.0
    moon_noise: float = 0.1
    generator_every: int = 0
    beta: float = 0.2
    log_every: int = 1

    def validate(self) -> None:
        errors = []
        for name in ("batch_size", "critic_steps", "critic_hidden", "critic_features"):
            if getattr(self, name) < 1:
                errors.append(f"{name} must be at least 1, got {getattr(self, name)}")
        for name in ("lr", "fd_step"):
            if getattr(self, name) <= 0:
                errors.append(f"{name} must be positive, got {getattr(self, name)}")
        if self.lam < 0 or self.moon_noise < 0 or self.generator_every < 0:
            errors.append("lam, moon_noise and generator_every must be non-negative")
        if not 0.0 <= self.beta <= 1.0:
            errors.append(f"beta must lie in [0, 1], got {self.beta}")
        if self.log_every < 1:
            errors.append(f"log_every must be at least 1, got {self.log_every}")
        if errors:
            raise CriticError("; ".join(errors))


def two_moons(
    n: int, rng: np.random.Generator, noise: float = 0.1
) -> tuple[np.ndarray, np.ndarray]:
    """Interleaved half circles; returns (points n x 2, moon label n)."""
    labels = rng.integers(0, 2, size=n)
    t = rng.uniform(0.0, np.pi, size=n)
    upper = np.stack([np.cos(t), np.sin(t)], axis=1)
    lower = np.stack([1.0 - np.cos(t), 0.5 - np.sin(t)], axis=1)
    points = np.where(labels[:, None] == 0, upper, lower)
    return points + rng.normal(0.0, noise, size=points.shape), labels


def run_gan_demo(config: GanDemoConfig) -> pd.DataFrame:
    """Train a conditional critic to separate real moons from shifted ones.

    With ``generator_every`` > 0 a learnable offset on the fake samples is
    updated every that many critic steps using the joint generator loss.

    Returns:
        One row per logged step: wasserstein, penalty, critic and generator losses
    """
    config.validate()
    rng = np.random.default_rng(config.seed)
    critic = MeanFeatureCritic(
        2, 1, rng, config.critic_hidden, config.critic_features, config.constant_init
    )
    critic_opt = Adam(critic.parameters(), lr=config.lr)
    offset = Tensor(np.zeros((1, 2)), requires_grad=True)
    generator_opt = Adam([offset], lr=config.lr)
    shift = np.array([[config.shift_x, config.shift_y]])
    rows = []

    for step in range(config.critic_steps):
        real, labels = two_moons(config.batch_size, rng, config.moon_noise)
        paired, _ = two_moons(config.batch_size, rng, config.moon_noise)
        condition = labels[:, None].astype(np.float64)
        base = paired + shift
        fake = base + offset.data

        critic.zero_grad()
        losses = wgan_gp_losses(
            critic, condition, fake, real, rng, config.lam, config.fd_step
        )
        losses.penalty.check_finite("gradient penalty")
        losses.critic.backward()
        critic_opt.step()

        generator_loss = losses.generator.item()
        if config.generator_every and (step + 1) % config.generator_every == 0:
            moved = Tensor(base) + expand(offset, base.shape)
            gap = sub(moved, Tensor(paired))
            reconstruction = mean(mul(gap, gap))
            adversarial = -mean(critic_values(critic, moved, condition))
            total = joint_gen_loss(reconstruction, adversarial, config.beta)
            offset.grad = None
            critic.zero_grad()
            total.backward()
            generator_opt.step()
            generator_loss = total.item()

        if step % config.log_every == 0 or step == config.critic_steps - 1:
            rows.append(
                {
                    "step": step,
                    "wasserstein": losses.wasserstein,
                    "penalty": losses.penalty.item(),
                    "critic_loss": losses.critic.item(),
                    "generator_loss": generator_loss,
                }
            )
            logger.debug(
                f"step {step}: W {losses.wasserstein:.4f}, "
                f"GP {losses.penalty.item():.4f}"
            )

    logger.info(
        f"GAN demo finished: W {rows[-1]['wasserstein']:.4f}, "
        f"GP {rows[-1]['penalty']:.4f}"
    )
    return pd.DataFrame(rows)
