"""Tensor core: values, tape, optimizer and gradient checking."""

from src.tensor.core import (
    BackwardError,
    DomainError,
    NonFiniteError,
    ShapeError,
    Tape,
    Tensor,
    TensorError,
    as_tensor,
    backward,
    broadcast_rows,
    clamp,
    concat,
    detach,
    exp,
    expand,
    leaky_relu,
    log,
    matmul,
    max_axis,
    mean,
    min_axis,
    power,
    reshape,
    sigmoid,
    softmax,
    softmax_over_set,
    sqrt,
    sum_axis,
    take,
    transpose,
    zero_grad,
)
from src.tensor.gradcheck import (
    GradCheckReport,
    NonDeterministicError,
    grad_check,
    sign_flipped,
)
from src.tensor.optim import Adam, AdamState, adam_step

__all__ = [
    "Adam",
    "AdamState",
    "BackwardError",
    "DomainError",
    "GradCheckReport",
    "NonDeterministicError",
    "NonFiniteError",
    "ShapeError",
    "Tape",
    "Tensor",
    "TensorError",
    "adam_step",
    "as_tensor",
    "backward",
    "broadcast_rows",
    "clamp",
    "concat",
    "detach",
    "exp",
    "expand",
    "grad_check",
    "leaky_relu",
    "log",
    "matmul",
    "max_axis",
    "mean",
    "min_axis",
    "power",
    "reshape",
    "sigmoid",
    "sign_flipped",
    "softmax",
    "softmax_over_set",
    "sqrt",
    "sum_axis",
    "take",
    "transpose",
    "zero_grad",
]
