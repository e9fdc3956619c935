"""
Differentiable operations beyond plain arithmetic.

Each function takes tensors, computes the forward value with ``numpy``
and records a backward closure on the tape.

.. code:: python

  >>> import math
  >>> from scanb.numeric.ops import softmax_rows
  >>> from scanb.numeric.tensor import tensor

  >>> probs = softmax_rows(tensor([[0.0, math.log(3.0)]]))
  >>> assert abs(probs.data[0, 0] - 0.25) < 1e-12
  >>> assert abs(probs.data[0, 1] - 0.75) < 1e-12

"""

from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from typing_extensions import Final

from scanb.exceptions import DimensionError
from scanb.numeric.tensor import Operand, Tensor, as_tensor, record

Axis = Optional[Union[int, Tuple[int, ...]]]

_CONCAT_SHAPE_MSG: Final = 'Can not concatenate shapes {0} along axis {1}'
_RESHAPE_MSG: Final = 'Can not reshape {0} into {1}'
_UNFOLD_SHAPE_MSG: Final = 'unfold2d expects (N, H, W, C), got {0}'


def exp(operand: Operand) -> Tensor:
    """Elementwise natural exponent."""
    a = as_tensor(operand)
    out = np.exp(a.data)
    return record(out, (a,), lambda grad: [grad * out], 'exp')


def log(operand: Operand) -> Tensor:
    """Elementwise natural logarithm, non-positive input is an error."""
    a = as_tensor(operand)
    with np.errstate(divide='ignore', invalid='ignore'):
        out = np.log(a.data)
    return record(out, (a,), lambda grad: [grad / a.data], 'log')


def tanh(operand: Operand) -> Tensor:
    """Elementwise hyperbolic tangent."""
    a = as_tensor(operand)
    out = np.tanh(a.data)
    return record(out, (a,), lambda grad: [grad * (1.0 - out ** 2)], 'tanh')


def sigmoid(operand: Operand) -> Tensor:
    """Elementwise logistic function, computed through ``tanh``."""
    a = as_tensor(operand)
    out = 0.5 * (1.0 + np.tanh(0.5 * a.data))
    return record(
        out, (a,), lambda grad: [grad * out * (1.0 - out)], 'sigmoid',
    )


def silu(operand: Operand) -> Tensor:
    """Elementwise ``x * sigmoid(x)``, smooth everywhere."""
    a = as_tensor(operand)
    gate = 0.5 * (1.0 + np.tanh(0.5 * a.data))

    def backward_fn(grad: np.ndarray) -> List[np.ndarray]:
        return [grad * (gate + a.data * gate * (1.0 - gate))]
    return record(a.data * gate, (a,), backward_fn, 'silu')


def square(operand: Operand) -> Tensor:
    """Elementwise square."""
    a = as_tensor(operand)
    return record(
        a.data ** 2, (a,), lambda grad: [2.0 * grad * a.data], 'square',
    )


def clip(operand: Operand, low: float, high: float) -> Tensor:
    """Clamps values, gradient is zero where clamping happened."""
    a = as_tensor(operand)
    inside = (a.data >= low) & (a.data <= high)
    return record(
        np.clip(a.data, low, high),
        (a,),
        lambda grad: [grad * inside],
        'clip',
    )


def sum_axis(operand: Operand, axis: Axis = None, keepdims: bool = False) -> Tensor:  # noqa: E501
    """Sum over ``axis`` (all axes by default)."""
    a = as_tensor(operand)

    def backward_fn(grad: np.ndarray) -> List[np.ndarray]:
        return [np.broadcast_to(
            _restore_axes(grad, a.ndim, axis, keepdims), a.shape,
        ).copy()]
    return record(
        np.asarray(a.data.sum(axis=axis, keepdims=keepdims)),
        (a,),
        backward_fn,
        'sum',
    )


def mean(operand: Operand, axis: Axis = None, keepdims: bool = False) -> Tensor:  # noqa: E501
    """Arithmetic mean over ``axis`` (all axes by default)."""
    a = as_tensor(operand)
    count = a.size / max(np.asarray(a.data.sum(axis=axis)).size, 1)
    return sum_axis(a, axis=axis, keepdims=keepdims) / count


def reshape(operand: Operand, shape: Sequence[int]) -> Tensor:
    """Same values, new extents."""
    a = as_tensor(operand)
    try:
        out = a.data.reshape(tuple(shape))
    except ValueError:
        raise DimensionError(_RESHAPE_MSG.format(a.shape, tuple(shape)))
    return record(
        out, (a,), lambda grad: [grad.reshape(a.shape)], 'reshape',
    )


def transpose(operand: Operand, axes: Sequence[int]) -> Tensor:
    """Permutes axes."""
    a = as_tensor(operand)
    inverse = tuple(np.argsort(axes))
    return record(
        np.transpose(a.data, tuple(axes)),
        (a,),
        lambda grad: [np.transpose(grad, inverse)],
        'transpose',
    )


def swap_last(operand: Operand) -> Tensor:
    """Swaps the two last axes, the batched matrix transpose."""
    a = as_tensor(operand)
    axes = list(range(a.ndim))
    axes[-1], axes[-2] = axes[-2], axes[-1]
    return transpose(a, axes)


def concat(operands: Sequence[Operand], axis: int = 0) -> Tensor:
    """Joins tensors along an existing axis."""
    parts = tuple(as_tensor(operand) for operand in operands)
    try:
        out = np.concatenate([part.data for part in parts], axis=axis)
    except ValueError:
        raise DimensionError(_CONCAT_SHAPE_MSG.format(
            [part.shape for part in parts], axis,
        ))
    bounds = np.cumsum([part.shape[axis] for part in parts])[:-1]

    def backward_fn(grad: np.ndarray) -> List[np.ndarray]:
        return np.split(grad, bounds, axis=axis)
    return record(out, parts, backward_fn, 'concat')


def stack(operands: Sequence[Operand], axis: int = 0) -> Tensor:
    """Joins equally shaped tensors along a new axis."""
    parts = tuple(as_tensor(operand) for operand in operands)
    try:
        out = np.stack([part.data for part in parts], axis=axis)
    except ValueError:
        raise DimensionError(_CONCAT_SHAPE_MSG.format(
            [part.shape for part in parts], axis,
        ))

    def backward_fn(grad: np.ndarray) -> List[np.ndarray]:
        return [
            np.take(grad, position, axis=axis)
            for position in range(len(parts))
        ]
    return record(out, parts, backward_fn, 'stack')


def softmax(operand: Operand, axis: int = -1) -> Tensor:
    """Softmax along ``axis``, shifted by the maximum for stability."""
    a = as_tensor(operand)
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    weights = np.exp(shifted)
    out = weights / weights.sum(axis=axis, keepdims=True)

    def backward_fn(grad: np.ndarray) -> List[np.ndarray]:
        inner = (grad * out).sum(axis=axis, keepdims=True)
        return [out * (grad - inner)]
    return record(out, (a,), backward_fn, 'softmax')


def softmax_rows(operand: Operand) -> Tensor:
    """Softmax over the last axis: every row sums to one."""
    return softmax(operand, axis=-1)


def unfold2d(
    operand: Tensor,
    kernel: int,
    stride: int = 1,
    padding: int = 0,
) -> Tensor:
    """
    Extracts convolution patches from a ``(N, H, W, C)`` feature map.

    Returns ``(N, H_out, W_out, kernel * kernel * C)``,
    patch values are ordered as ``(row, column, channel)``.
    A convolution is this followed by a matrix product.
    """
    a = as_tensor(operand)
    if a.ndim != 4:
        raise DimensionError(_UNFOLD_SHAPE_MSG.format(a.shape))
    batch, height, width, channels = a.shape
    padded = np.pad(
        a.data, ((0, 0), (padding, padding), (padding, padding), (0, 0)),
    )
    windows = sliding_window_view(padded, (kernel, kernel), axis=(1, 2))
    windows = windows[:, ::stride, ::stride]
    out_h, out_w = windows.shape[1], windows.shape[2]
    cols = windows.transpose(0, 1, 2, 4, 5, 3).reshape(
        batch, out_h, out_w, kernel * kernel * channels,
    )

    def backward_fn(grad: np.ndarray) -> List[np.ndarray]:
        patches = grad.reshape(batch, out_h, out_w, kernel, kernel, channels)
        full = np.zeros_like(padded)
        for row in range(kernel):
            for col in range(kernel):
                full[
                    :,
                    row:row + stride * (out_h - 1) + 1:stride,
                    col:col + stride * (out_w - 1) + 1:stride,
                    :,
                ] += patches[:, :, :, row, col, :]
        return [full[
            :, padding:padding + height, padding:padding + width, :,
        ]]
    return record(np.ascontiguousarray(cols), (a,), backward_fn, 'unfold2d')


def _restore_axes(
    grad: np.ndarray,
    ndim: int,
    axis: Axis,
    keepdims: bool,
) -> np.ndarray:
    if keepdims or axis is None:
        return grad
    axes = (axis,) if isinstance(axis, int) else axis
    for position in sorted(ax % ndim for ax in axes):
        grad = np.expand_dims(grad, position)
    return grad
