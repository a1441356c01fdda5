"""Minimal layer toolkit on top of the tensor core.

Modules discover their parameters by walking instance attributes, the same
way records enumerate their columns: public attributes holding trainable
tensors, nested modules, or lists of modules.
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Any

import numpy as np

from src.tensor.core import Tensor, TensorError, expand, leaky_relu, sigmoid

logger = logging.getLogger(__name__)


class Module:
    """Base class for anything that owns trainable tensors."""

    def forward(self, *args: Any, **kwargs: Any) -> Any:
        raise NotImplementedError

    def __call__(self, *args: Any, **kwargs: Any) -> Any:
        return self.forward(*args, **kwargs)

    def named_parameters(self, prefix: str = "") -> dict[str, Tensor]:
        """Collect trainable tensors keyed by dotted attribute path."""
        params: dict[str, Tensor] = {}
        for key, value in self.__dict__.items():
            if key.startswith("_"):
                continue
            if isinstance(value, Tensor) and value.requires_grad:
                params[f"{prefix}{key}"] = value
            elif isinstance(value, Module):
                params.update(value.named_parameters(f"{prefix}{key}."))
            elif isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    if isinstance(item, Module):
                        params.update(item.named_parameters(f"{prefix}{key}.{i}."))
        return params

    def parameters(self) -> list[Tensor]:
        return list(self.named_parameters().values())

    def zero_grad(self) -> None:
        for param in self.parameters():
            param.grad = None

    def state_dict(self) -> dict[str, np.ndarray]:
        return {key: p.data.copy() for key, p in self.named_parameters().items()}

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        """Copy arrays into matching parameters.

        Raises:
            TensorError: If keys or shapes do not line up
        """
        params = self.named_parameters()
        missing = sorted(set(params) - set(state))
        unexpected = sorted(set(state) - set(params))
        if missing or unexpected:
            raise TensorError(
                f"state mismatch: missing {missing}, unexpected {unexpected}"
            )
        for key, param in params.items():
            array = np.asarray(state[key], dtype=np.float64)
            if array.shape != param.shape:
                raise TensorError(
                    f"{key}: stored shape {array.shape} != parameter {param.shape}"
                )
            param.data = array.copy()

    def save(self, directory: Path) -> None:
        """Write one .npy file per parameter (byte-stable across runs)."""
        directory.mkdir(parents=True, exist_ok=True)
        for key, array in self.state_dict().items():
            np.save(directory / f"{key}.npy", array, allow_pickle=False)

    def load(self, directory: Path) -> None:
        state = {
            key: np.load(directory / f"{key}.npy", allow_pickle=False)
            for key in self.named_parameters()
            if (directory / f"{key}.npy").exists()
        }
        self.load_state_dict(state)


class Linear(Module):
    """Affine map ``x @ weight + bias`` on row-major N x in matrices."""

    def __init__(
        self,
        in_features: int,
        out_features: int,
        rng: np.random.Generator,
        bias: bool = True,
    ):
        bound = float(np.sqrt(1.0 / in_features))
        self.weight = Tensor(
            rng.uniform(-bound, bound, size=(in_features, out_features)),
            requires_grad=True,
        )
        self.bias = None
        if bias:
            values = rng.uniform(-bound, bound, size=(1, out_features))
            self.bias = Tensor(values, requires_grad=True)

    def forward(self, x: Tensor) -> Tensor:
        out = x @ self.weight
        if self.bias is not None:
            out = out + expand(self.bias, out.shape)
        return out


_ACTIVATIONS = {
    None: lambda t: t,
    "leaky_relu": leaky_relu,
    "sigmoid": sigmoid,
}


class MLP(Module):
    """Stack of Linear layers applied row-wise.

    Hidden layers use leaky ReLU; ``final_activation`` picks the output
    nonlinearity (None keeps it affine).
    """

    def __init__(
        self,
        sizes: list[int],
        rng: np.random.Generator,
        final_activation: str | None = None,
    ):
        if len(sizes) < 2:
            raise TensorError(f"MLP needs at least input and output sizes, got {sizes}")
        if final_activation not in _ACTIVATIONS:
            raise TensorError(f"Unknown activation: {final_activation}")
        self.layers = [Linear(a, b, rng) for a, b in zip(sizes[:-1], sizes[1:])]
        self._final = final_activation

    def forward(self, x: Tensor) -> Tensor:
        for layer in self.layers[:-1]:
            x = leaky_relu(layer(x))
        return _ACTIVATIONS[self._final](self.layers[-1](x))
