"""
Dense tensors with reverse-mode gradients.

A Tensor wraps a numpy array (float32 by default, float64 in grad-check shadow
mode) and, when produced by a differentiable Function, a reference to that
function so `backward()` can walk the graph. Values are checked on creation:
NaN or +/-Inf anywhere raises NumericError, except that ops which mask
entries (top-k) may emit -inf.
"""

from __future__ import annotations

import contextlib
import contextvars
from collections.abc import Iterator, Sequence
from typing import Any

import numpy as np

from shapemoe.core.errors import DimensionError, NumericError

FLOAT_DTYPES = (np.dtype(np.float32), np.dtype(np.float64))

_GRAD_ENABLED: contextvars.ContextVar[bool] = contextvars.ContextVar(
    "shapemoe_grad_enabled", default=True
)
_BRANCH_LOG: contextvars.ContextVar[list[np.ndarray] | None] = contextvars.ContextVar(
    "shapemoe_branch_log", default=None
)


@contextlib.contextmanager
def no_grad() -> Iterator[None]:
    """Disable graph construction inside the block."""
    token = _GRAD_ENABLED.set(False)
    try:
        yield
    finally:
        _GRAD_ENABLED.reset(token)


def is_grad_enabled() -> bool:
    return _GRAD_ENABLED.get()


@contextlib.contextmanager
def record_branches() -> Iterator[list[np.ndarray]]:
    """
    Collect the branch pattern of every non-smooth op evaluated in the block.

    ReLU records its sign pattern and top-k masking records its selection, so
    two evaluations with equal logs lie on the same smooth piece of the function.
    """
    log: list[np.ndarray] = []
    token = _BRANCH_LOG.set(log)
    try:
        yield log
    finally:
        _BRANCH_LOG.reset(token)


def note_branch(pattern: np.ndarray) -> None:
    log = _BRANCH_LOG.get()
    if log is not None:
        log.append(np.array(pattern, copy=True))


def _as_float_array(data: Any, dtype: Any | None) -> np.ndarray:
    if isinstance(data, Tensor):
        data = data.data
    if dtype is not None:
        return np.asarray(data, dtype=dtype)
    if isinstance(data, np.ndarray | np.generic) and np.dtype(data.dtype) in FLOAT_DTYPES:
        return np.asarray(data)
    return np.asarray(data, dtype=np.float32)


def _check_values(arr: np.ndarray, allow_neg_inf: bool, name: str | None) -> None:
    if np.isfinite(arr).all():
        return
    if allow_neg_inf and not (np.isnan(arr) | (arr == np.inf)).any():
        return
    label = name or "tensor"
    raise NumericError(f"non-finite values in {label} of shape {arr.shape}")


class Tensor:
    """
    A dense float array that optionally participates in gradient computation.

    Leaf tensors created with `requires_grad=True` accumulate gradients into
    `.grad` when `backward()` runs on a scalar computed from them.
    """

    __slots__ = ("data", "grad", "requires_grad", "name", "_ctx")

    def __init__(
        self,
        data: Any,
        requires_grad: bool = False,
        name: str | None = None,
        dtype: Any | None = None,
        allow_neg_inf: bool = False,
        _ctx: Any | None = None,
    ):
        arr = _as_float_array(data, dtype)
        _check_values(arr, allow_neg_inf, name)
        self.data: np.ndarray = arr
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self.name = name
        self._ctx = _ctx

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(self.data.shape)

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return int(self.data.size)

    @property
    def dtype(self) -> np.dtype:
        return self.data.dtype

    @property
    def is_leaf(self) -> bool:
        return self._ctx is None

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        if self.size != 1:
            raise DimensionError(f"item() needs a single element, got shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def detach(self) -> Tensor:
        return Tensor(self.data, name=self.name, allow_neg_inf=True)

    def zero_grad(self) -> None:
        self.grad = None

    def backward(self, grad: np.ndarray | None = None) -> None:
        """Accumulate d(self)/d(leaf) into every reachable leaf's `.grad`."""
        if not self.requires_grad:
            raise NumericError("backward() called on a tensor that does not require grad")
        if grad is None:
            if self.size != 1:
                raise DimensionError(
                    f"backward() without an explicit gradient needs a scalar, got {self.shape}"
                )
            grad = np.ones_like(self.data)

        pending: dict[int, np.ndarray] = {id(self): np.asarray(grad, dtype=self.dtype)}
        for node in reversed(_topological_order(self)):
            node_grad = pending.pop(id(node), None)
            if node_grad is None:
                continue
            if node._ctx is None:
                node.grad = node_grad.copy() if node.grad is None else node.grad + node_grad
                continue
            parent_grads = node._ctx.backward(node_grad)
            for parent, parent_grad in zip(node._ctx.inputs, parent_grads, strict=True):
                if parent_grad is None or not parent.requires_grad:
                    continue
                key = id(parent)
                pending[key] = parent_grad if key not in pending else pending[key] + parent_grad

    def __repr__(self) -> str:
        grad_note = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype}{grad_note})"

    # Operator sugar; the op implementations live in shapemoe.numerics.ops.

    def __add__(self, other: Any) -> Tensor:
        from shapemoe.numerics import ops

        return ops.add(self, other)

    def __radd__(self, other: Any) -> Tensor:
        from shapemoe.numerics import ops

        return ops.add(other, self)

    def __sub__(self, other: Any) -> Tensor:
        from shapemoe.numerics import ops

        return ops.sub(self, other)

    def __rsub__(self, other: Any) -> Tensor:
        from shapemoe.numerics import ops

        return ops.sub(other, self)

    def __mul__(self, other: Any) -> Tensor:
        from shapemoe.numerics import ops

        return ops.mul(self, other)

    def __rmul__(self, other: Any) -> Tensor:
        from shapemoe.numerics import ops

        return ops.mul(other, self)

    def __truediv__(self, other: Any) -> Tensor:
        from shapemoe.numerics import ops

        return ops.div(self, other)

    def __neg__(self) -> Tensor:
        from shapemoe.numerics import ops

        return ops.neg(self)

    def __matmul__(self, other: Tensor) -> Tensor:
        from shapemoe.numerics import ops

        return ops.matmul(self, other)

    def __getitem__(self, index: Any) -> Tensor:
        from shapemoe.numerics import ops

        return ops.getitem(self, index)


class Function:
    """
    One differentiable operation.

    Subclasses implement `forward` on raw arrays and `backward`, which maps the
    output gradient to one gradient (or None) per input tensor.
    """

    allow_neg_inf_output = False

    def __init__(self, *inputs: Tensor):
        self.inputs: Sequence[Tensor] = inputs

    @classmethod
    def apply(cls, *inputs: Tensor, **kwargs: Any) -> Tensor:
        ctx = cls(*inputs)
        out = ctx.forward(*(t.data for t in inputs), **kwargs)
        track = is_grad_enabled() and any(t.requires_grad for t in inputs)
        return Tensor(
            out,
            requires_grad=track,
            name=cls.__name__,
            allow_neg_inf=cls.allow_neg_inf_output,
            _ctx=ctx if track else None,
        )

    def forward(self, *arrays: np.ndarray, **kwargs: Any) -> np.ndarray:
        raise NotImplementedError

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        raise NotImplementedError


def _topological_order(root: Tensor) -> list[Tensor]:
    """Inputs before consumers, iteratively so deep graphs do not hit recursion limits."""
    order: list[Tensor] = []
    visited: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        if node._ctx is not None:
            for parent in reversed(node._ctx.inputs):
                if parent.requires_grad and id(parent) not in visited:
                    stack.append((parent, False))
    return order
