"""
Dense 64-bit tensors with a reverse-mode gradient tape.

Every operation that touches a tensor requiring gradients records a node:
the parents it was computed from and a closure mapping the output gradient
to the parents' gradients. :func:`backward` walks these nodes in reverse
topological order.

.. code:: python

  >>> from scanb.numeric.tensor import Parameter, backward, tensor

  >>> weight = Parameter([[1.0, 2.0]], name='weight')
  >>> loss = (weight @ tensor([[3.0], [4.0]])).sum()
  >>> grads = backward(loss)
  >>> assert grads[weight].tolist() == [[3.0, 4.0]]

Data arrays are read-only: a tensor is a value.
Parameters change only through :meth:`Parameter.assign`.
"""

import itertools
import threading
from contextlib import contextmanager
from typing import (
    Callable,
    Dict,
    Iterator,
    List,
    Optional,
    Sequence,
    Tuple,
    Union,
)

import numpy as np
from typing_extensions import Final, final

from scanb.exceptions import ContractError, DimensionError, NonFiniteError

DTYPE: Final = np.float64

_NON_FINITE_MSG: Final = 'Operation "{0}" produced a non-finite value'
_MATMUL_SHAPE_MSG: Final = 'Can not multiply shapes {0} and {1}'
_NOT_SCALAR_MSG: Final = 'Loss must be a scalar, got shape {0}'
_NOT_ON_TAPE_MSG: Final = 'Loss is not connected to any trainable tensor'
_ASSIGN_SHAPE_MSG: Final = 'Parameter "{0}" has shape {1}, got {2}'

_node_ids = itertools.count(1)


class _TapeState(threading.local):
    recording = True


_tape_state = _TapeState()

BackwardFn = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]
Operand = Union['Tensor', float, int, np.ndarray]


class Tensor(object):
    """
    Immutable dense array plus an optional link into the gradient tape.

    ``node_id`` is ``None`` for constants and leaves,
    and a unique increasing integer for recorded operation results.
    """

    __slots__ = (
        'data',
        'grad',
        'requires_grad',
        'node_id',
        '_parents',
        '_backward',
    )

    def __init__(
        self,
        data: Union[np.ndarray, Sequence, float],
        requires_grad: bool = False,
    ) -> None:
        """Copies ``data`` into a read-only float64 array."""
        array = np.array(data, dtype=DTYPE)
        _ensure_finite(array, 'tensor')
        array.flags.writeable = False
        self.data: np.ndarray = array
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad
        self.node_id: Optional[int] = None
        self._parents: Tuple['Tensor', ...] = ()
        self._backward: Optional[BackwardFn] = None

    @property
    def shape(self) -> Tuple[int, ...]:
        """Extents of every axis."""
        return tuple(self.data.shape)

    @property
    def ndim(self) -> int:
        """Number of axes."""
        return self.data.ndim

    @property
    def size(self) -> int:
        """Number of stored values."""
        return int(self.data.size)

    def item(self) -> float:
        """Returns the only value of a one-element tensor."""
        return float(self.data.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        """Returns the (read-only) underlying array."""
        return self.data

    def detach(self) -> 'Tensor':
        """Returns a constant with the same values."""
        return constant(self.data)

    def sum(self) -> 'Tensor':  # noqa: A003
        """Sum of all values, a scalar."""
        return total(self)

    def __repr__(self) -> str:
        """Shape and tape status, values are omitted."""
        return '<Tensor shape={0} requires_grad={1}>'.format(
            self.shape,
            self.requires_grad,
        )

    def __add__(self, other: Operand) -> 'Tensor':
        return add(self, other)

    def __radd__(self, other: Operand) -> 'Tensor':
        return add(other, self)

    def __sub__(self, other: Operand) -> 'Tensor':
        return sub(self, other)

    def __rsub__(self, other: Operand) -> 'Tensor':
        return sub(other, self)

    def __mul__(self, other: Operand) -> 'Tensor':
        return mul(self, other)

    def __rmul__(self, other: Operand) -> 'Tensor':
        return mul(other, self)

    def __truediv__(self, other: Operand) -> 'Tensor':
        return div(self, other)

    def __rtruediv__(self, other: Operand) -> 'Tensor':
        return div(other, self)

    def __neg__(self) -> 'Tensor':
        return neg(self)

    def __matmul__(self, other: 'Tensor') -> 'Tensor':
        return matmul(self, other)

    def __getitem__(self, index) -> 'Tensor':
        return index_select(self, index)


@final
class Parameter(Tensor):
    """
    Named trainable leaf tensor.

    Gradients accumulate additively across :func:`backward` calls
    until :meth:`zero_grad` is called.
    """

    __slots__ = ('name', 'trainable')

    def __init__(
        self,
        data: Union[np.ndarray, Sequence, float],
        name: str,
        trainable: bool = True,
    ) -> None:
        """Creates a leaf that records gradients when trainable."""
        super().__init__(data, requires_grad=trainable)
        self.name = name
        self.trainable = trainable

    def zero_grad(self) -> None:
        """Forgets the accumulated gradient."""
        self.grad = None

    def assign(self, values: np.ndarray) -> None:
        """Replaces the values, keeping the shape."""
        array = np.array(values, dtype=DTYPE)
        if array.shape != self.data.shape:
            raise DimensionError(_ASSIGN_SHAPE_MSG.format(
                self.name, self.data.shape, array.shape,
            ))
        _ensure_finite(array, 'assign')
        array.flags.writeable = False
        self.data = array

    def __repr__(self) -> str:
        """Name and shape."""
        return '<Parameter "{0}" shape={1}>'.format(self.name, self.shape)


@final
class GradientSet(object):
    """
    Gradients produced by :func:`backward`, keyed by tensor identity.

    Tensors the loss does not reach read as exact zeros.
    """

    __slots__ = ('_grads',)

    def __init__(self, grads: Dict[int, Tuple[Tensor, np.ndarray]]) -> None:
        """Use :func:`backward` to build it."""
        self._grads = grads

    def __getitem__(self, leaf: Tensor) -> np.ndarray:
        """Gradient of ``leaf`` or zeros of its shape."""
        found = self._grads.get(id(leaf))
        if found is None:
            return np.zeros_like(leaf.data)
        return found[1]

    def __contains__(self, leaf: object) -> bool:
        return id(leaf) in self._grads

    def __len__(self) -> int:
        return len(self._grads)

    def __iter__(self) -> Iterator[Tensor]:
        return (leaf for leaf, _ in self._grads.values())


def tensor(
    data: Union[np.ndarray, Sequence, float],
    requires_grad: bool = False,
) -> Tensor:
    """Creates a new tensor from array-like data."""
    return Tensor(data, requires_grad=requires_grad)


def constant(data: Union[np.ndarray, Sequence, float]) -> Tensor:
    """Creates a tensor that never records gradients."""
    return Tensor(data, requires_grad=False)


def as_tensor(operand: Operand) -> Tensor:
    """Wraps numbers and arrays, passes tensors through."""
    if isinstance(operand, Tensor):
        return operand
    return constant(operand)


def record(
    data: np.ndarray,
    parents: Tuple[Tensor, ...],
    backward_fn: BackwardFn,
    op_name: str,
) -> Tensor:
    """
    Wraps an operation result and links it into the tape.

    The node is recorded only when some parent requires gradients.
    """
    _ensure_finite(data, op_name)
    out = Tensor.__new__(Tensor)
    array = np.asarray(data, dtype=DTYPE)
    array.flags.writeable = False
    out.data = array
    out.grad = None
    out.requires_grad = _tape_state.recording and any(
        parent.requires_grad for parent in parents
    )
    out.node_id = None
    out._parents = ()  # noqa: WPS437
    out._backward = None  # noqa: WPS437
    if out.requires_grad:
        out.node_id = next(_node_ids)
        out._parents = parents  # noqa: WPS437
        out._backward = backward_fn  # noqa: WPS437
    return out


def unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Sums ``grad`` over the axes that were broadcast to reach it."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def backward(loss: Tensor) -> GradientSet:
    """
    Propagates ``d loss / d leaf`` into every trainable leaf on the tape.

    Gradients are added to ``leaf.grad``, so several losses
    can be accumulated before an optimizer step. The returned set holds
    the gradients of this ``loss`` alone, whatever ``leaf.grad`` held.
    """
    if loss.size != 1:
        raise ContractError(_NOT_SCALAR_MSG.format(loss.shape))
    if not loss.requires_grad:
        raise ContractError(_NOT_ON_TAPE_MSG)

    pending: Dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    reached: Dict[int, Tuple[Tensor, np.ndarray]] = {}
    for node in reversed(_topological_order(loss)):
        grad = pending.pop(id(node), None)
        if grad is None:
            continue
        if node._backward is None:  # noqa: WPS437
            node.grad = grad if node.grad is None else node.grad + grad
            reached[id(node)] = (node, grad)
            continue
        parent_grads = node._backward(grad)  # noqa: WPS437
        for parent, parent_grad in zip(node._parents, parent_grads):  # noqa: WPS437, E501
            if parent_grad is None or not parent.requires_grad:
                continue
            key = id(parent)
            if key in pending:
                pending[key] = pending[key] + parent_grad
            else:
                pending[key] = parent_grad
    return GradientSet(reached)


def add(left: Operand, right: Operand) -> Tensor:
    """Elementwise sum with broadcasting."""
    a, b = as_tensor(left), as_tensor(right)

    def backward_fn(grad: np.ndarray) -> List[np.ndarray]:
        return [unbroadcast(grad, a.shape), unbroadcast(grad, b.shape)]
    return record(a.data + b.data, (a, b), backward_fn, 'add')


def sub(left: Operand, right: Operand) -> Tensor:
    """Elementwise difference with broadcasting."""
    a, b = as_tensor(left), as_tensor(right)

    def backward_fn(grad: np.ndarray) -> List[np.ndarray]:
        return [unbroadcast(grad, a.shape), unbroadcast(-grad, b.shape)]
    return record(a.data - b.data, (a, b), backward_fn, 'sub')


def mul(left: Operand, right: Operand) -> Tensor:
    """Elementwise product with broadcasting."""
    a, b = as_tensor(left), as_tensor(right)

    def backward_fn(grad: np.ndarray) -> List[np.ndarray]:
        return [
            unbroadcast(grad * b.data, a.shape),
            unbroadcast(grad * a.data, b.shape),
        ]
    return record(a.data * b.data, (a, b), backward_fn, 'mul')


def div(left: Operand, right: Operand) -> Tensor:
    """Elementwise quotient with broadcasting."""
    a, b = as_tensor(left), as_tensor(right)
    with np.errstate(divide='ignore', invalid='ignore'):
        quotient = a.data / b.data

    def backward_fn(grad: np.ndarray) -> List[np.ndarray]:
        return [
            unbroadcast(grad / b.data, a.shape),
            unbroadcast(-grad * a.data / (b.data ** 2), b.shape),
        ]
    return record(quotient, (a, b), backward_fn, 'div')


def neg(operand: Operand) -> Tensor:
    """Elementwise negation."""
    a = as_tensor(operand)
    return record(-a.data, (a,), lambda grad: [-grad], 'neg')


def matmul(left: Tensor, right: Tensor) -> Tensor:
    """
    Matrix product over the last two axes, leading axes are batch axes.

    .. code:: python

      >>> from scanb.numeric.tensor import matmul, tensor

      >>> product = matmul(tensor([[1, 2], [3, 4]]), tensor([[0], [1]]))
      >>> assert product.data.tolist() == [[2.0], [4.0]]

    """
    a, b = as_tensor(left), as_tensor(right)
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise DimensionError(_MATMUL_SHAPE_MSG.format(a.shape, b.shape))

    def backward_fn(grad: np.ndarray) -> List[np.ndarray]:
        return [
            unbroadcast(grad @ np.swapaxes(b.data, -1, -2), a.shape),
            unbroadcast(np.swapaxes(a.data, -1, -2) @ grad, b.shape),
        ]
    return record(a.data @ b.data, (a, b), backward_fn, 'matmul')


def index_select(operand: Tensor, index) -> Tensor:
    """Basic or advanced numpy indexing, gradients scatter back."""
    a = as_tensor(operand)

    def backward_fn(grad: np.ndarray) -> List[np.ndarray]:
        full = np.zeros_like(a.data)
        if _is_basic_index(index):
            full[index] += grad
        else:
            np.add.at(full, index, grad)
        return [full]
    return record(np.array(a.data[index]), (a,), backward_fn, 'index')


def total(operand: Tensor) -> Tensor:
    """Sum of every value."""
    a = as_tensor(operand)

    def backward_fn(grad: np.ndarray) -> List[np.ndarray]:
        return [np.broadcast_to(grad, a.shape).copy()]
    return record(np.array(a.data.sum()), (a,), backward_fn, 'sum')


def _ensure_finite(array: np.ndarray, op_name: str) -> None:
    if not np.isfinite(array).all():
        raise NonFiniteError(_NON_FINITE_MSG.format(op_name))


def _is_basic_index(index) -> bool:
    parts = index if isinstance(index, tuple) else (index,)
    return all(
        part is None or part is Ellipsis or isinstance(part, (int, slice))
        for part in parts
    )


def _topological_order(root: Tensor) -> List[Tensor]:
    order: List[Tensor] = []
    visited = set()
    stack: List[Tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for parent in node._parents:  # noqa: WPS437
            if parent.requires_grad and id(parent) not in visited:
                stack.append((parent, False))
    return order


@contextmanager
def no_grad() -> Iterator[None]:
    """
    Disables recording inside the block, for the current thread only.

    Results computed inside are constants, even from parameters.
    """
    previous = _tape_state.recording
    _tape_state.recording = False
    try:
        yield
    finally:
        _tape_state.recording = previous
