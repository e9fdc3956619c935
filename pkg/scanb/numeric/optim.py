"""Adaptive-moment optimizer."""

import logging
from typing import Dict, List, Sequence, Set

import numpy as np
from typing_extensions import Final, final

from scanb.exceptions import ConfigurationError, ContractError
from scanb.numeric.tensor import Parameter

logger = logging.getLogger(__name__)

_MISSING_GRAD_MSG: Final = 'step={0} parameter={1} has no gradient, skipped'
_BAD_HYPER_MSG: Final = 'Invalid optimizer setting {0}={1}'
_DUPLICATE_MSG: Final = 'Parameter name {0!r} is used more than once'


@final
class OptimizerState(object):
    """
    Moments, step counter and hyper-parameters of Adam.

    Moment arrays are created lazily with the shape of their parameter.
    """

    __slots__ = (
        'learning_rate',
        'beta1',
        'beta2',
        'epsilon',
        'step',
        'first_moments',
        'second_moments',
        'warnings',
    )

    def __init__(
        self,
        learning_rate: float = 1e-3,
        beta1: float = 0.9,
        beta2: float = 0.999,
        epsilon: float = 1e-8,
    ) -> None:
        """Validates hyper-parameters and starts at step zero."""
        checks = (
            ('learning_rate', learning_rate, learning_rate > 0),
            ('beta1', beta1, 0 <= beta1 < 1),
            ('beta2', beta2, 0 <= beta2 < 1),
            ('epsilon', epsilon, epsilon > 0),
        )
        for name, setting, valid in checks:
            if not valid:
                raise ConfigurationError(_BAD_HYPER_MSG.format(name, setting))
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.step = 0
        self.first_moments: Dict[str, np.ndarray] = {}
        self.second_moments: Dict[str, np.ndarray] = {}
        self.warnings: List[str] = []


def adam_step(state: OptimizerState, parameters: Sequence[Parameter]) -> None:
    """
    Applies one bias-corrected Adam update to every trainable parameter.

    Parameters without a gradient are skipped, and a warning is recorded.
    The step counter advances once per call. Moments are kept per name,
    so names must be unique.
    """
    _check_unique_names(parameters)
    state.step += 1
    first_fix = 1.0 - state.beta1 ** state.step
    second_fix = 1.0 - state.beta2 ** state.step
    for parameter in parameters:
        if not parameter.trainable:
            continue
        grad = parameter.grad
        if grad is None:
            message = _MISSING_GRAD_MSG.format(state.step, parameter.name)
            state.warnings.append(message)
            logger.warning(message)
            continue
        first = state.first_moments.get(parameter.name)
        second = state.second_moments.get(parameter.name)
        if first is None or second is None:
            first = np.zeros_like(parameter.data)
            second = np.zeros_like(parameter.data)
        first = state.beta1 * first + (1.0 - state.beta1) * grad
        second = state.beta2 * second + (1.0 - state.beta2) * grad ** 2
        state.first_moments[parameter.name] = first
        state.second_moments[parameter.name] = second
        update = (first / first_fix) / (
            np.sqrt(second / second_fix) + state.epsilon
        )
        parameter.assign(parameter.data - state.learning_rate * update)


def _check_unique_names(parameters: Sequence[Parameter]) -> None:
    seen: Set[str] = set()
    for parameter in parameters:
        if parameter.name in seen:
            raise ContractError(_DUPLICATE_MSG.format(parameter.name))
        seen.add(parameter.name)


def zero_grad(parameters: Sequence[Parameter]) -> None:
    """Clears accumulated gradients before the next tape."""
    for parameter in parameters:
        parameter.zero_grad()
