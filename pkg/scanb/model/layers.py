"""
Parameter owners and the dense layer.

Every model part exposes ``parameters()``, returning its
:class:`~scanb.numeric.tensor.Parameter` leaves with dotted names.
"""

from typing import List, Sequence

import numpy as np
from typing_extensions import Protocol, final

from scanb.numeric.ops import concat, silu
from scanb.numeric.tensor import Operand, Parameter, Tensor, as_tensor


class HasParameters(Protocol):
    """Anything that owns trainable parameters."""

    def parameters(self) -> List[Parameter]:
        """Owned parameters, in a stable order."""


def scaled_normal(
    rng: np.random.Generator,
    shape: Sequence[int],
    fan_in: int,
) -> np.ndarray:
    """Normal draws with variance ``1 / fan_in``."""
    return rng.normal(0.0, 1.0 / np.sqrt(fan_in), size=tuple(shape))


@final
class Dense(object):
    """Affine map over the last axis."""

    __slots__ = ('weight', 'bias')

    def __init__(
        self,
        rng: np.random.Generator,
        fan_in: int,
        fan_out: int,
        name: str,
    ) -> None:
        """Scaled normal weights, zero bias."""
        self.weight = Parameter(
            scaled_normal(rng, (fan_in, fan_out), fan_in),
            name='{0}.weight'.format(name),
        )
        self.bias = Parameter(
            np.zeros(fan_out), name='{0}.bias'.format(name),
        )

    def __call__(self, inputs: Operand) -> Tensor:
        """``inputs @ weight + bias``."""
        return as_tensor(inputs) @ self.weight + self.bias

    def parameters(self) -> List[Parameter]:
        """Weight, then bias."""
        return [self.weight, self.bias]


@final
class MultiLayer(object):
    """Dense layers with smooth activations between them."""

    __slots__ = ('layers',)

    def __init__(
        self,
        rng: np.random.Generator,
        widths: Sequence[int],
        name: str,
    ) -> None:
        """``widths`` lists the input width and every layer output width."""
        self.layers = [
            Dense(rng, fan_in, fan_out, '{0}.dense{1}'.format(name, index))
            for index, (fan_in, fan_out) in enumerate(zip(widths, widths[1:]))
        ]

    def __call__(self, inputs: Operand) -> Tensor:
        """No activation after the last layer."""
        hidden = as_tensor(inputs)
        for layer in self.layers[:-1]:
            hidden = silu(layer(hidden))
        return self.layers[-1](hidden)

    def parameters(self) -> List[Parameter]:
        """Parameters of every layer, in order."""
        return [param for layer in self.layers for param in layer.parameters()]


def gather_parameters(*owners: HasParameters) -> List[Parameter]:
    """Concatenates parameters of several owners."""
    return [param for owner in owners for param in owner.parameters()]


def join_features(parts: Sequence[Operand]) -> Tensor:
    """Concatenates along the feature axis."""
    return concat(parts, axis=-1)
