"""Central finite-difference verification of tape gradients."""

from __future__ import annotations

import logging
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from src.tensor.core import Tensor, TensorError, _record

logger = logging.getLogger(__name__)


class NonDeterministicError(TensorError):
    """Raised when two identical forward passes disagree."""

    pass


@dataclass
class GradCheckReport:
    """Per-parameter maximum relative errors for one checked function."""

    name: str
    tolerance: float
    max_errors: dict[str, float] = field(default_factory=dict)
    entries_checked: int = 0

    @property
    def max_error(self) -> float:
        return max(self.max_errors.values(), default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_error <= self.tolerance

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "max_error": self.max_error,
            "tolerance": self.tolerance,
            "entries_checked": self.entries_checked,
            "passed": self.passed,
        }


def sign_flipped(loss: Tensor) -> Tensor:
    """Identity in the forward pass, negated gradient in the backward pass.

    Used as a negative control: any check run through it must fail.
    """
    return _record(loss.data.copy(), (loss,), lambda g: (-g,), "sign_flip")


def relative_error(analytic: float, numeric: float, floor: float) -> float:
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), floor)


def grad_check(
    f: Callable[[], Tensor],
    params: Mapping[str, Tensor] | Sequence[Tensor],
    h: float = 1e-5,
    tolerance: float = 1e-4,
    floor: float = 1e-5,
    max_entries: int | None = None,
    seed: int = 0,
    name: str = "check",
) -> GradCheckReport:
    """Compare backward gradients of ``f`` with central differences.

    Args:
        f: Closure recomputing the scalar loss from the current parameters
        params: Parameters to perturb, by name or position
        h: Perturbation size
        tolerance: Largest acceptable relative error
        floor: Lower bound on the relative error denominator
        max_entries: Perturb at most this many entries per parameter
        seed: Seed for choosing perturbed entries when sampling
        name: Label carried into the report

    Returns:
        GradCheckReport with the worst relative error per parameter

    Raises:
        NonDeterministicError: If two forward passes differ bit for bit
    """
    named = dict(params) if isinstance(params, Mapping) else {
        f"param{i}": p for i, p in enumerate(params)
    }

    first, second = f(), f()
    if not np.array_equal(first.data, second.data):
        raise NonDeterministicError(
            f"{name}: forward values {first.item()!r} and {second.item()!r} differ"
        )

    for param in named.values():
        param.grad = None
    f().backward()
    analytic = {
        key: (np.zeros_like(p.data) if p.grad is None else p.grad.copy())
        for key, p in named.items()
    }

    rng = np.random.default_rng(seed)
    report = GradCheckReport(name=name, tolerance=tolerance)
    for key, param in named.items():
        flat = param.data.reshape(-1)
        indices = np.arange(flat.size)
        if max_entries is not None and flat.size > max_entries:
            indices = np.sort(rng.choice(flat.size, size=max_entries, replace=False))
        worst = 0.0
        for index in indices:
            original = param.data.copy()
            bumped = original.reshape(-1).copy()
            bumped[index] += h
            param.data = bumped.reshape(original.shape)
            upper = f().item()
            bumped[index] -= 2.0 * h
            param.data = bumped.reshape(original.shape)
            lower = f().item()
            param.data = original
            numeric = (upper - lower) / (2.0 * h)
            error = relative_error(
                float(analytic[key].reshape(-1)[index]), numeric, floor
            )
            worst = max(worst, error)
        report.max_errors[key] = worst
        report.entries_checked += int(indices.size)

    for param in named.values():
        param.grad = None
    status = "passed" if report.passed else "FAILED"
    logger.debug(f"grad_check {name}: max error {report.max_error:.3e} ({status})")
    return report
