"""Dense float64 tensors with define-by-run reverse-mode differentiation.

Every differentiable op records a node when at least one of its inputs
requires grad. Calling ``backward`` on a scalar collects the recorded nodes
into a :class:`Tape` and replays it in reverse execution order.

Broadcasting is deliberately narrow: elementwise ops accept identical shapes
or a scalar against a tensor. Anything else goes through :func:`expand`.
"""

from __future__ import annotations

import itertools
import logging
from collections.abc import Callable, Iterable, Sequence
from typing import Any, Union

import numpy as np
from scipy.special import expit

logger = logging.getLogger(__name__)

_SEQUENCE = itertools.count()

BackwardFn = Callable[[np.ndarray], Sequence[Union[np.ndarray, None]]]


class TensorError(Exception):
    """Base exception for tensor errors."""

    pass


class ShapeError(TensorError):
    """Raised when operand shapes are incompatible."""

    pass


class DomainError(TensorError):
    """Raised when an op is applied outside its mathematical domain."""

    pass


class BackwardError(TensorError):
    """Raised when backward is requested on an unsuitable tensor."""

    pass


class NonFiniteError(TensorError):
    """Raised when a validity check finds NaN or Inf values."""

    pass


class Tensor:
    """Dense n-dimensional float64 value that may participate in the tape.

    Attributes:
        data: Row-major float64 array
        requires_grad: Whether gradients flow to this tensor
        grad: Gradient buffer of the same shape (set by backward)
    """

    def __init__(self, data: Any, requires_grad: bool = False, *, copy: bool = True):
        array = np.array(data, dtype=np.float64) if copy else np.asarray(
            data, dtype=np.float64
        )
        if any(extent <= 0 for extent in array.shape):
            raise ShapeError(f"Tensor extents must be positive, got {array.shape}")
        self.data = array
        self.requires_grad = bool(requires_grad)
        self.grad: np.ndarray | None = None
        self._parents: tuple[Tensor, ...] = ()
        self._backward: BackwardFn | None = None
        self._op = "leaf"
        self._seq = next(_SEQUENCE)

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}, op={self._op}{flag})"

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return int(self.data.size)

    @property
    def is_leaf(self) -> bool:
        return self._backward is None

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError(f"item() needs a single value, got shape {self.shape}")
        return float(self.data.reshape(()))

    def numpy(self) -> np.ndarray:
        return self.data.copy()

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.data)))

    def check_finite(self, name: str = "tensor") -> Tensor:
        """Raise NonFiniteError if any entry is NaN or Inf."""
        if not self.is_finite():
            bad = int(np.count_nonzero(~np.isfinite(self.data)))
            raise NonFiniteError(f"{name} has {bad} non-finite entries")
        return self

    def zero_grad(self) -> None:
        self.grad = None

    def backward(self) -> None:
        backward(self)

    def __add__(self, other: Any) -> Tensor:
        return add(self, other)

    def __radd__(self, other: Any) -> Tensor:
        return add(other, self)

    def __sub__(self, other: Any) -> Tensor:
        return sub(self, other)

    def __rsub__(self, other: Any) -> Tensor:
        return sub(other, self)

    def __mul__(self, other: Any) -> Tensor:
        return mul(self, other)

    def __rmul__(self, other: Any) -> Tensor:
        return mul(other, self)

    def __truediv__(self, other: Any) -> Tensor:
        return div(self, other)

    def __rtruediv__(self, other: Any) -> Tensor:
        return div(other, self)

    def __neg__(self) -> Tensor:
        return neg(self)

    def __matmul__(self, other: Tensor) -> Tensor:
        return matmul(self, other)

    def __getitem__(self, index: Any) -> Tensor:
        return take(self, index)


def as_tensor(value: Any) -> Tensor:
    """Wrap arrays and Python numbers as constant tensors."""
    if isinstance(value, Tensor):
        return value
    return Tensor(value, requires_grad=False)


def _record(
    data: np.ndarray, parents: Sequence[Tensor], backward_fn: BackwardFn, op: str
) -> Tensor:
    out = Tensor(data, copy=False)
    if any(parent.requires_grad for parent in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward = backward_fn
        out._op = op
    return out


def _pair(a: Any, b: Any, op: str) -> tuple[Tensor, Tensor]:
    a, b = as_tensor(a), as_tensor(b)
    if a.shape != b.shape and a.ndim != 0 and b.ndim != 0:
        raise ShapeError(f"{op}: shapes {a.shape} and {b.shape} do not match")
    return a, b


def _reduce_to(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    if grad.shape == shape:
        return grad
    # only the scalar-vs-tensor case reaches here
    return np.asarray(grad.sum()).reshape(shape)


# --- elementwise binary ---------------------------------------------------


def add(a: Any, b: Any) -> Tensor:
    a, b = _pair(a, b, "add")

    def _backward(g: np.ndarray):
        return _reduce_to(g, a.shape), _reduce_to(g, b.shape)

    return _record(a.data + b.data, (a, b), _backward, "add")


def sub(a: Any, b: Any) -> Tensor:
    a, b = _pair(a, b, "sub")

    def _backward(g: np.ndarray):
        return _reduce_to(g, a.shape), _reduce_to(-g, b.shape)

    return _record(a.data - b.data, (a, b), _backward, "sub")


def mul(a: Any, b: Any) -> Tensor:
    a, b = _pair(a, b, "mul")

    def _backward(g: np.ndarray):
        return _reduce_to(g * b.data, a.shape), _reduce_to(g * a.data, b.shape)

    return _record(a.data * b.data, (a, b), _backward, "mul")


def div(a: Any, b: Any) -> Tensor:
    a, b = _pair(a, b, "div")
    if np.any(b.data == 0.0):
        raise DomainError("div: denominator contains zeros")
    out = a.data / b.data

    def _backward(g: np.ndarray):
        return (
            _reduce_to(g / b.data, a.shape),
            _reduce_to(-g * out / b.data, b.shape),
        )

    return _record(out, (a, b), _backward, "div")


def neg(a: Any) -> Tensor:
    a = as_tensor(a)
    return _record(-a.data, (a,), lambda g: (-g,), "neg")


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product of two 2-D tensors."""
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: cannot multiply {a.shape} by {b.shape}")

    def _backward(g: np.ndarray):
        return g @ b.data.T, a.data.T @ g

    return _record(a.data @ b.data, (a, b), _backward, "matmul")


# --- elementwise unary ----------------------------------------------------


def exp(a: Any) -> Tensor:
    a = as_tensor(a)
    out = np.exp(a.data)
    return _record(out, (a,), lambda g: (g * out,), "exp")


def log(a: Any) -> Tensor:
    a = as_tensor(a)
    if np.any(a.data <= 0.0):
        raise DomainError(
            f"log: {int(np.count_nonzero(a.data <= 0.0))} non-positive entries"
        )
    return _record(np.log(a.data), (a,), lambda g: (g / a.data,), "log")


def sigmoid(a: Any) -> Tensor:
    a = as_tensor(a)
    out = expit(a.data)
    return _record(out, (a,), lambda g: (g * out * (1.0 - out),), "sigmoid")


def leaky_relu(a: Any, slope: float = 0.2) -> Tensor:
    a = as_tensor(a)
    positive = a.data > 0.0
    out = np.where(positive, a.data, slope * a.data)
    return _record(
        out, (a,), lambda g: (np.where(positive, g, slope * g),), "leaky_relu"
    )


def clamp(a: Any, lo: float, hi: float) -> Tensor:
    """Saturate values into [lo, hi]; gradient passes inside the closed range."""
    if lo > hi:
        raise DomainError(f"clamp: lo={lo} exceeds hi={hi}")
    a = as_tensor(a)
    inside = (a.data >= lo) & (a.data <= hi)
    out = np.clip(a.data, lo, hi)
    return _record(out, (a,), lambda g: (np.where(inside, g, 0.0),), "clamp")


def sqrt(a: Any) -> Tensor:
    """Square root; the derivative at exactly zero is taken as zero."""
    a = as_tensor(a)
    if np.any(a.data < 0.0):
        raise DomainError("sqrt: negative entries")
    out = np.sqrt(a.data)

    def _backward(g: np.ndarray):
        safe = np.where(out > 0.0, out, 1.0)
        return (np.where(out > 0.0, g / (2.0 * safe), 0.0),)

    return _record(out, (a,), _backward, "sqrt")


def power(a: Any, exponent: float) -> Tensor:
    """Raise to a constant real exponent."""
    a = as_tensor(a)
    if not float(exponent).is_integer() and np.any(a.data < 0.0):
        raise DomainError(f"power: negative base with exponent {exponent}")
    out = np.power(a.data, exponent)

    def _backward(g: np.ndarray):
        if exponent == 0.0:
            return (np.zeros_like(g),)
        return (g * exponent * np.power(a.data, exponent - 1.0),)

    return _record(out, (a,), _backward, "power")


def detach(a: Any) -> Tensor:
    """Constant copy that does not participate in the tape."""
    return Tensor(as_tensor(a).data, requires_grad=False)


# --- reductions -----------------------------------------------------------


def _restore_axis(g: np.ndarray, axis: int | None, keepdims: bool) -> np.ndarray:
    if axis is None or keepdims:
        return g
    return np.expand_dims(g, axis)


def sum_axis(a: Any, axis: int | None = None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    out = np.sum(a.data, axis=axis, keepdims=keepdims)

    def _backward(g: np.ndarray):
        return (np.broadcast_to(_restore_axis(g, axis, keepdims), a.shape).copy(),)

    return _record(out, (a,), _backward, "sum")


def mean(a: Any, axis: int | None = None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    count = a.size if axis is None else a.shape[axis]
    return mul(sum_axis(a, axis=axis, keepdims=keepdims), 1.0 / count)


def _extremum(a: Tensor, axis: int, keepdims: bool, pick: Callable, op: str) -> Tensor:
    witness = np.expand_dims(pick(a.data, axis=axis), axis)
    out = np.take_along_axis(a.data, witness, axis=axis)
    if not keepdims:
        out = np.squeeze(out, axis=axis)

    def _backward(g: np.ndarray):
        grad = np.zeros_like(a.data)
        np.put_along_axis(grad, witness, _restore_axis(g, axis, keepdims), axis=axis)
        return (grad,)

    return _record(out, (a,), _backward, op)


def min_axis(a: Any, axis: int, keepdims: bool = False) -> Tensor:
    """Minimum along an axis; the first minimal index receives the gradient."""
    return _extremum(as_tensor(a), axis, keepdims, np.argmin, "min")


def max_axis(a: Any, axis: int, keepdims: bool = False) -> Tensor:
    """Maximum along an axis; the first maximal index receives the gradient."""
    return _extremum(as_tensor(a), axis, keepdims, np.argmax, "max")


def softmax(a: Any, axis: int) -> Tensor:
    """Numerically stable softmax along ``axis``."""
    a = as_tensor(a)
    shifted = a.data - np.max(a.data, axis=axis, keepdims=True)
    weights = np.exp(shifted)
    out = weights / np.sum(weights, axis=axis, keepdims=True)

    def _backward(g: np.ndarray):
        return (out * (g - np.sum(g * out, axis=axis, keepdims=True)),)

    return _record(out, (a,), _backward, "softmax")


def softmax_over_set(c: Any) -> Tensor:
    """Normalize an N x D activation matrix across its N set elements.

    Each column sums to one over the rows.
    """
    c = as_tensor(c)
    if c.ndim != 2:
        raise ShapeError(f"softmax_over_set expects N x D, got {c.shape}")
    c.check_finite("softmax_over_set input")
    return softmax(c, axis=0)


# --- structure ------------------------------------------------------------


def reshape(a: Any, shape: Sequence[int]) -> Tensor:
    a = as_tensor(a)
    original = a.shape
    try:
        out = a.data.reshape(tuple(shape))
    except ValueError as e:
        raise ShapeError(f"reshape: cannot view {original} as {tuple(shape)}") from e
    return _record(out, (a,), lambda g: (g.reshape(original),), "reshape")


def transpose(a: Any) -> Tensor:
    a = as_tensor(a)
    if a.ndim != 2:
        raise ShapeError(f"transpose expects a matrix, got {a.shape}")
    return _record(a.data.T.copy(), (a,), lambda g: (g.T,), "transpose")


def expand(a: Any, shape: Sequence[int]) -> Tensor:
    """Broadcast explicitly to ``shape`` (numpy rules); gradients are summed back."""
    a = as_tensor(a)
    target = tuple(shape)
    try:
        out = np.broadcast_to(a.data, target).copy()
    except ValueError as e:
        raise ShapeError(f"expand: cannot broadcast {a.shape} to {target}") from e
    lead = len(target) - a.ndim

    def _backward(g: np.ndarray):
        grad = g.sum(axis=tuple(range(lead))) if lead else g
        axes = tuple(i for i, extent in enumerate(a.shape) if extent == 1)
        if axes:
            grad = grad.sum(axis=axes, keepdims=True)
        return (grad.reshape(a.shape),)

    return _record(out, (a,), _backward, "expand")


def broadcast_rows(a: Any, n: int) -> Tensor:
    """Repeat a 1 x D row tensor into an n x D matrix."""
    a = as_tensor(a)
    if a.ndim != 2 or a.shape[0] != 1:
        raise ShapeError(f"broadcast_rows expects 1 x D, got {a.shape}")
    return expand(a, (n, a.shape[1]))


def concat(tensors: Iterable[Any], axis: int = 0) -> Tensor:
    parts = [as_tensor(t) for t in tensors]
    if not parts:
        raise ShapeError("concat needs at least one tensor")
    try:
        out = np.concatenate([p.data for p in parts], axis=axis)
    except ValueError as e:
        shapes = [p.shape for p in parts]
        raise ShapeError(f"concat along axis {axis}: incompatible {shapes}") from e
    bounds = np.cumsum([p.shape[axis] for p in parts])[:-1]

    def _backward(g: np.ndarray):
        return tuple(np.split(g, bounds, axis=axis))

    return _record(out, parts, _backward, "concat")


def take(a: Any, index: Any) -> Tensor:
    """Basic or advanced indexing; repeated indices accumulate gradient."""
    a = as_tensor(a)
    out = np.array(a.data[index], dtype=np.float64)
    if out.ndim and any(extent == 0 for extent in out.shape):
        raise ShapeError(f"take: index selects an empty slice of {a.shape}")

    def _backward(g: np.ndarray):
        grad = np.zeros_like(a.data)
        np.add.at(grad, index, g)
        return (grad,)

    return _record(out, (a,), _backward, "take")


# --- tape -----------------------------------------------------------------


class Tape:
    """Ordered record of the differentiable ops that produced a tensor.

    Nodes are kept in execution order; replay visits each exactly once in
    reverse.
    """

    def __init__(self, nodes: list[Tensor]):
        self.nodes = nodes

    def __len__(self) -> int:
        return len(self.nodes)

    @classmethod
    def record(cls, root: Tensor) -> Tape:
        seen: set[int] = set()
        nodes: list[Tensor] = []
        stack = [root]
        while stack:
            node = stack.pop()
            if id(node) in seen or node._backward is None:
                continue
            seen.add(id(node))
            nodes.append(node)
            stack.extend(node._parents)
        nodes.sort(key=lambda node: node._seq)
        return cls(nodes)

    def replay(self, root: Tensor, seed: np.ndarray) -> None:
        pending: dict[int, np.ndarray] = {id(root): seed}
        for node in reversed(self.nodes):
            grad = pending.pop(id(node), None)
            if grad is None:
                continue
            node.grad = grad
            parent_grads = node._backward(grad)
            for parent, parent_grad in zip(node._parents, parent_grads):
                if parent_grad is None or not parent.requires_grad:
                    continue
                if parent.is_leaf:
                    _accumulate(parent, parent_grad)
                elif id(parent) in pending:
                    pending[id(parent)] = pending[id(parent)] + parent_grad
                else:
                    pending[id(parent)] = parent_grad


def _accumulate(leaf: Tensor, grad: np.ndarray) -> None:
    grad = np.asarray(grad, dtype=np.float64).reshape(leaf.shape)
    leaf.grad = grad.copy() if leaf.grad is None else leaf.grad + grad


def backward(loss: Tensor) -> Tape:
    """Populate ``grad`` of every requires_grad tensor reachable from ``loss``.

    Gradients on leaf tensors accumulate across calls.

    Raises:
        BackwardError: If loss is not a single value or is not on the tape
    """
    if loss.size != 1:
        raise BackwardError(f"backward needs a scalar loss, got shape {loss.shape}")
    if not loss.requires_grad:
        raise BackwardError("loss does not depend on any tensor requiring grad")
    seed = np.ones_like(loss.data)
    if loss.is_leaf:
        _accumulate(loss, seed)
        return Tape([])
    tape = Tape.record(loss)
    logger.debug(f"Replaying tape with {len(tape)} nodes")
    tape.replay(loss, seed)
    return tape


def zero_grad(params: Iterable[Tensor]) -> None:
    for param in params:
        param.grad = None
