"""
Differentiable operations over Tensor.

The set is deliberately closed: exactly the operations the ShapeMoE model
needs (linear algebra, convolution, pooling, upsampling, activations, masked
softmax and the stable logit-space BCE). Each op is a Function subclass with
a thin functional wrapper.
"""

from __future__ import annotations

from typing import Any

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from shapemoe.core.errors import ConfigError, DegenerateDistributionError, DimensionError
from shapemoe.numerics.tensor import Function, Tensor, note_branch


def as_tensor(value: Any, like: Tensor | None = None) -> Tensor:
    """Wrap a constant, matching the dtype of `like` when given."""
    if isinstance(value, Tensor):
        return value
    dtype = like.dtype if like is not None else np.float32
    return Tensor(np.asarray(value, dtype=dtype))


def _pair(a: Any, b: Any) -> tuple[Tensor, Tensor]:
    if isinstance(a, Tensor):
        return a, as_tensor(b, like=a)
    b = as_tensor(b)
    return as_tensor(a, like=b), b


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


# ---------------------------------------------------------------------------
# Arithmetic
# ---------------------------------------------------------------------------


class Add(Function):
    def forward(self, a, b):
        self.shapes = (a.shape, b.shape)
        return a + b

    def backward(self, grad):
        return _unbroadcast(grad, self.shapes[0]), _unbroadcast(grad, self.shapes[1])


class Sub(Function):
    def forward(self, a, b):
        self.shapes = (a.shape, b.shape)
        return a - b

    def backward(self, grad):
        return _unbroadcast(grad, self.shapes[0]), _unbroadcast(-grad, self.shapes[1])


class Mul(Function):
    def forward(self, a, b):
        self.a, self.b = a, b
        return a * b

    def backward(self, grad):
        return (
            _unbroadcast(grad * self.b, self.a.shape),
            _unbroadcast(grad * self.a, self.b.shape),
        )


class Div(Function):
    def forward(self, a, b):
        self.a, self.b = a, b
        return a / b

    def backward(self, grad):
        return (
            _unbroadcast(grad / self.b, self.a.shape),
            _unbroadcast(-grad * self.a / (self.b * self.b), self.b.shape),
        )


class Neg(Function):
    def forward(self, a):
        return -a

    def backward(self, grad):
        return (-grad,)


class MatMul(Function):
    def forward(self, a, b):
        if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
            raise DimensionError(f"matmul shape mismatch: {a.shape} x {b.shape}")
        self.a, self.b = a, b
        return a @ b

    def backward(self, grad):
        return grad @ self.b.T, self.a.T @ grad


class Transpose(Function):
    def forward(self, a):
        if a.ndim != 2:
            raise DimensionError(f"transpose expects a matrix, got shape {a.shape}")
        return np.ascontiguousarray(a.T)

    def backward(self, grad):
        return (np.ascontiguousarray(grad.T),)


# ---------------------------------------------------------------------------
# Reductions and shape manipulation
# ---------------------------------------------------------------------------


class Sum(Function):
    def forward(self, a, axis=None, keepdims=False):
        self.shape, self.axis, self.keepdims = a.shape, axis, keepdims
        return np.sum(a, axis=axis, keepdims=keepdims)

    def backward(self, grad):
        if self.axis is not None and not self.keepdims:
            grad = np.expand_dims(grad, self.axis)
        return (np.broadcast_to(grad, self.shape).copy(),)


class Mean(Function):
    def forward(self, a, axis=None, keepdims=False):
        self.shape, self.axis, self.keepdims = a.shape, axis, keepdims
        out = np.mean(a, axis=axis, keepdims=keepdims)
        self.count = a.size // max(np.size(out), 1)
        return out

    def backward(self, grad):
        if self.axis is not None and not self.keepdims:
            grad = np.expand_dims(grad, self.axis)
        return (np.broadcast_to(grad / self.count, self.shape).copy(),)


class Reshape(Function):
    def forward(self, a, shape=()):
        self.shape = a.shape
        try:
            return a.reshape(shape)
        except ValueError as e:
            raise DimensionError(f"cannot reshape {a.shape} into {shape}") from e

    def backward(self, grad):
        return (grad.reshape(self.shape),)


class GetItem(Function):
    def forward(self, a, index=None):
        self.shape, self.dtype, self.index = a.shape, a.dtype, index
        return np.array(a[index], copy=True)

    def backward(self, grad):
        out = np.zeros(self.shape, dtype=self.dtype)
        np.add.at(out, self.index, grad)
        return (out,)


class Concat(Function):
    def forward(self, *arrays, axis=0):
        self.axis = axis
        self.splits = np.cumsum([a.shape[axis] for a in arrays])[:-1]
        try:
            return np.concatenate(arrays, axis=axis)
        except ValueError as e:
            raise DimensionError(f"cannot concatenate shapes {[a.shape for a in arrays]}") from e

    def backward(self, grad):
        return tuple(np.split(grad, self.splits, axis=self.axis))


class ScatterRows(Function):
    """Place the rows of `a` at `rows` of an otherwise-zero array with `n` rows."""

    def forward(self, a, rows=None, n=0):
        self.rows = rows
        out = np.zeros((n,) + a.shape[1:], dtype=a.dtype)
        out[rows] = a
        return out

    def backward(self, grad):
        return (grad[self.rows],)


# ---------------------------------------------------------------------------
# Activations
# ---------------------------------------------------------------------------


class ReLU(Function):
    def forward(self, a):
        self.mask = a > 0
        note_branch(self.mask)
        return a * self.mask

    def backward(self, grad):
        return (grad * self.mask,)


def _stable_sigmoid(a: np.ndarray) -> np.ndarray:
    e = np.exp(-np.abs(a))
    return np.where(a >= 0, 1.0 / (1.0 + e), e / (1.0 + e)).astype(a.dtype, copy=False)


class Sigmoid(Function):
    def forward(self, a):
        self.out = _stable_sigmoid(a)
        return self.out

    def backward(self, grad):
        return (grad * self.out * (1.0 - self.out),)


class Softplus(Function):
    def forward(self, a):
        self.a = a
        out = np.maximum(a, 0) + np.log1p(np.exp(-np.abs(a)))
        # exp(-|a|) underflows to 0 for very negative inputs; keep the output strictly positive.
        return np.maximum(out, np.finfo(a.dtype).smallest_subnormal)

    def backward(self, grad):
        return (grad * _stable_sigmoid(self.a),)


class Softmax(Function):
    def forward(self, a, axis=-1):
        self.axis = axis
        peak = np.max(a, axis=axis, keepdims=True)
        if np.any(peak == -np.inf):
            raise DegenerateDistributionError("softmax over a row whose entries are all -inf")
        e = np.exp(a - peak)
        # Sorted summation keeps the normalizer independent of entry order.
        self.out = e / np.sum(np.sort(e, axis=axis), axis=axis, keepdims=True)
        return self.out

    def backward(self, grad):
        y = self.out
        return (y * (grad - np.sum(grad * y, axis=self.axis, keepdims=True)),)


class TopKMask(Function):
    """Keep the k largest entries along the last axis, set the rest to -inf.

    Ties go to the lower index.
    """

    allow_neg_inf_output = True

    def forward(self, a, k=1):
        order = np.argsort(-a, axis=-1, kind="stable")
        self.keep = np.zeros(a.shape, dtype=bool)
        np.put_along_axis(self.keep, order[..., :k], True, axis=-1)
        note_branch(self.keep)
        return np.where(self.keep, a, -np.inf).astype(a.dtype, copy=False)

    def backward(self, grad):
        return (grad * self.keep,)


# ---------------------------------------------------------------------------
# Spatial ops
# ---------------------------------------------------------------------------


class Conv2d(Function):
    """3x3 cross-correlation with zero padding 1 over (N, C, H, W) input."""

    def forward(self, x, w, b, stride=1):
        if x.ndim != 4 or w.ndim != 4 or b.ndim != 1:
            raise DimensionError(
                f"conv2d expects (N,C,H,W), (O,C,3,3), (O,); got {x.shape}, {w.shape}, {b.shape}"
            )
        if w.shape[2:] != (3, 3) or w.shape[1] != x.shape[1] or b.shape[0] != w.shape[0]:
            raise DimensionError(
                f"conv2d shape mismatch: input {x.shape}, kernels {w.shape}, bias {b.shape}"
            )
        self.padded_shape = (x.shape[0], x.shape[1], x.shape[2] + 2, x.shape[3] + 2)
        padded = np.pad(x, ((0, 0), (0, 0), (1, 1), (1, 1)))
        self.windows = sliding_window_view(padded, (3, 3), axis=(2, 3))[:, :, ::stride, ::stride]
        self.w, self.stride = w, stride
        out = np.tensordot(self.windows, w, axes=([1, 4, 5], [1, 2, 3]))
        return np.ascontiguousarray(out.transpose(0, 3, 1, 2)) + b[None, :, None, None]

    def backward(self, grad):
        s = self.stride
        out_h, out_w = grad.shape[2], grad.shape[3]
        grad_b = grad.sum(axis=(0, 2, 3))
        grad_w = np.tensordot(grad, self.windows, axes=([0, 2, 3], [0, 2, 3]))
        cols = np.tensordot(grad, self.w, axes=([1], [0]))  # N, Ho, Wo, C, 3, 3
        grad_padded = np.zeros(self.padded_shape, dtype=grad.dtype)
        for i in range(3):
            for j in range(3):
                grad_padded[:, :, i : i + s * out_h : s, j : j + s * out_w : s] += cols[
                    ..., i, j
                ].transpose(0, 3, 1, 2)
        return grad_padded[:, :, 1:-1, 1:-1], grad_w, grad_b


class MeanPoolSpatial(Function):
    def forward(self, a):
        if a.ndim < 2:
            raise DimensionError(f"mean_pool_spatial needs at least 2 dims, got {a.shape}")
        self.shape = a.shape
        return a.mean(axis=(-2, -1))

    def backward(self, grad):
        h, w = self.shape[-2:]
        return (np.broadcast_to(grad[..., None, None] / (h * w), self.shape).copy(),)


def _interpolation_matrix(size: int, factor: int, dtype: np.dtype) -> np.ndarray:
    """Rows map output samples to input samples, half-pixel centers, edge-clamped."""
    out = np.zeros((size * factor, size), dtype=np.float64)
    for i in range(size * factor):
        src = min(max((i + 0.5) / factor - 0.5, 0.0), size - 1.0)
        lo = int(np.floor(src))
        hi = min(lo + 1, size - 1)
        t = src - lo
        out[i, lo] += 1.0 - t
        out[i, hi] += t
    return out.astype(dtype)


class BilinearUpsample(Function):
    def forward(self, a, factor=2):
        if a.ndim < 2:
            raise DimensionError(f"bilinear_upsample needs at least 2 dims, got {a.shape}")
        self.rows = _interpolation_matrix(a.shape[-2], factor, a.dtype)
        self.cols = _interpolation_matrix(a.shape[-1], factor, a.dtype)
        return np.matmul(np.matmul(self.rows, a), self.cols.T)

    def backward(self, grad):
        return (np.matmul(np.matmul(self.rows.T, grad), self.cols),)


class BCEWithLogits(Function):
    """Mean binary cross-entropy of sigmoid(logits) against a fixed 0/1 target."""

    def forward(self, logits, target=None):
        if target is None or target.shape != logits.shape:
            shape = None if target is None else target.shape
            raise DimensionError(f"bce target shape {shape} does not match logits {logits.shape}")
        self.logits = logits
        self.target = target.astype(logits.dtype, copy=False)
        losses = (
            np.maximum(logits, 0) - logits * self.target + np.log1p(np.exp(-np.abs(logits)))
        )
        return np.mean(losses)

    def backward(self, grad):
        scale = grad / self.logits.size
        return ((_stable_sigmoid(self.logits) - self.target) * scale,)


# ---------------------------------------------------------------------------
# Functional API
# ---------------------------------------------------------------------------


def add(a: Any, b: Any) -> Tensor:
    return Add.apply(*_pair(a, b))


def sub(a: Any, b: Any) -> Tensor:
    return Sub.apply(*_pair(a, b))


def mul(a: Any, b: Any) -> Tensor:
    return Mul.apply(*_pair(a, b))


def div(a: Any, b: Any) -> Tensor:
    return Div.apply(*_pair(a, b))


def neg(a: Tensor) -> Tensor:
    return Neg.apply(a)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product of an (m, n) and an (n, p) tensor."""
    return MatMul.apply(a, b)


def transpose(a: Tensor) -> Tensor:
    return Transpose.apply(a)


def sum(a: Tensor, axis: int | tuple[int, ...] | None = None, keepdims: bool = False) -> Tensor:
    return Sum.apply(a, axis=axis, keepdims=keepdims)


def mean(a: Tensor, axis: int | tuple[int, ...] | None = None, keepdims: bool = False) -> Tensor:
    return Mean.apply(a, axis=axis, keepdims=keepdims)


def reshape(a: Tensor, shape: tuple[int, ...]) -> Tensor:
    return Reshape.apply(a, shape=tuple(shape))


def getitem(a: Tensor, index: Any) -> Tensor:
    return GetItem.apply(a, index=index)


def concat(tensors: list[Tensor], axis: int = 0) -> Tensor:
    return Concat.apply(*tensors, axis=axis)


def scatter_rows(a: Tensor, rows: np.ndarray, n: int) -> Tensor:
    return ScatterRows.apply(a, rows=np.asarray(rows, dtype=np.intp), n=n)


def relu(a: Tensor) -> Tensor:
    return ReLU.apply(a)


def sigmoid(a: Tensor) -> Tensor:
    return Sigmoid.apply(a)


def softplus(a: Tensor) -> Tensor:
    """Elementwise ln(1 + e^x), overflow-safe and strictly positive."""
    return Softplus.apply(a)


def softmax(a: Tensor, axis: int = -1) -> Tensor:
    """Softmax along `axis`; -inf entries map to exactly 0."""
    return Softmax.apply(a, axis=axis)


def softmax_1d(a: Tensor) -> Tensor:
    if a.ndim != 1:
        raise DimensionError(f"softmax_1d expects a vector, got shape {a.shape}")
    return Softmax.apply(a, axis=-1)


def topk_mask(a: Tensor, k: int) -> Tensor:
    if not 1 <= k <= a.shape[-1]:
        raise ConfigError(f"k={k} out of range for {a.shape[-1]} entries")
    return TopKMask.apply(a, k=k)


def conv2d(x: Tensor, kernels: Tensor, bias: Tensor, stride: int = 1) -> Tensor:
    """
    3x3 cross-correlation, zero padding 1, output size ceil(H/stride) x ceil(W/stride).

    Accepts a single (C, H, W) input or a batch (N, C, H, W).
    """
    if stride not in (1, 2):
        raise ConfigError(f"conv2d stride must be 1 or 2, got {stride}")
    if x.ndim == 3:
        out = Conv2d.apply(reshape(x, (1,) + x.shape), kernels, bias, stride=stride)
        return reshape(out, out.shape[1:])
    return Conv2d.apply(x, kernels, bias, stride=stride)


def mean_pool_spatial(a: Tensor) -> Tensor:
    """Average over the last two (spatial) axes."""
    return MeanPoolSpatial.apply(a)


def bilinear_upsample(a: Tensor, factor: int) -> Tensor:
    """Bilinear upsampling of the last two axes by an integer factor."""
    if factor < 1:
        raise ConfigError(f"upsample factor must be >= 1, got {factor}")
    return BilinearUpsample.apply(a, factor=factor)


def linear(x: Tensor, weight: Tensor, bias: Tensor) -> Tensor:
    """x @ weight + bias with weight stored as (in, out)."""
    return add(matmul(x, weight), bias)


def bce_with_logits(logits: Tensor, target: np.ndarray) -> Tensor:
    """Mean per-pixel BCE computed as max(x,0) - x*t + ln(1 + e^-|x|)."""
    return BCEWithLogits.apply(logits, target=np.asarray(target))
