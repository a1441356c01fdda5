"""Adam optimizer over tensor parameters."""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from src.tensor.core import ShapeError, Tensor

logger = logging.getLogger(__name__)


@dataclass
class AdamState:
    """Per-parameter moment estimates plus the shared step counter."""

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    first_moments: list[np.ndarray] = field(default_factory=list)
    second_moments: list[np.ndarray] = field(default_factory=list)


def adam_step(
    params: Sequence[Tensor], grads: Sequence[np.ndarray | None], state: AdamState
) -> Sequence[Tensor]:
    """Apply one bias-corrected Adam update.

    Parameters receive freshly allocated arrays, so arrays captured by an
    earlier forward pass are left untouched. A missing gradient is treated
    as zero.

    Args:
        params: Parameters to update, in a fixed order across calls
        grads: Gradients aligned with ``params``
        state: Moment buffers, created on the first call

    Returns:
        The updated parameters

    Raises:
        ShapeError: If a gradient's shape differs from its parameter's
    """
    if len(params) != len(grads):
        raise ShapeError(f"{len(params)} parameters but {len(grads)} gradients")
    if not state.first_moments:
        state.first_moments = [np.zeros_like(p.data) for p in params]
        state.second_moments = [np.zeros_like(p.data) for p in params]
    elif len(state.first_moments) != len(params):
        raise ShapeError("Adam state was created for a different parameter list")

    state.step += 1
    correction1 = 1.0 - state.beta1**state.step
    correction2 = 1.0 - state.beta2**state.step

    for i, (param, grad) in enumerate(zip(params, grads)):
        g = np.zeros_like(param.data) if grad is None else np.asarray(grad)
        if g.shape != param.shape:
            raise ShapeError(
                f"gradient shape {g.shape} does not match parameter {param.shape}"
            )
        m = state.beta1 * state.first_moments[i] + (1.0 - state.beta1) * g
        v = state.beta2 * state.second_moments[i] + (1.0 - state.beta2) * g * g
        state.first_moments[i] = m
        state.second_moments[i] = v
        update = state.lr * (m / correction1) / (np.sqrt(v / correction2) + state.eps)
        param.data = param.data - update

    return params


class Adam:
    """Stateful wrapper that reads gradients from the parameters themselves.

    Parameters outside ``params`` are frozen: they are never updated.
    """

    def __init__(
        self,
        params: Sequence[Tensor],
        lr: float = 1e-3,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ):
        self.params = list(params)
        self.state = AdamState(lr=lr, beta1=beta1, beta2=beta2, eps=eps)

    def zero_grad(self) -> None:
        for param in self.params:
            param.grad = None

    def step(self) -> None:
        adam_step(self.params, [p.grad for p in self.params], self.state)
