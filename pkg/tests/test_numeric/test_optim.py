import numpy as np
import pytest

from scanb.exceptions import ConfigurationError, ContractError
from scanb.numeric.optim import OptimizerState, adam_step, zero_grad
from scanb.numeric.tensor import Parameter, backward


def test_first_step_moves_by_learning_rate() -> None:
    """Ensures that the bias-corrected first step has size ``lr``."""
    weight = Parameter([1.0, -1.0], name='weight')
    state = OptimizerState(learning_rate=0.1)
    backward((weight * np.array([3.0, -0.5])).sum())
    adam_step(state, [weight])

    assert np.allclose(weight.data, [0.9, -0.9], atol=1e-6)
    assert state.step == 1


def test_minimizes_quadratic() -> None:
    """Ensures that repeated steps approach the minimum."""
    weight = Parameter([4.0, -3.0], name='weight')
    state = OptimizerState(learning_rate=0.1)
    for _ in range(500):
        zero_grad([weight])
        backward(((weight - 1.0) * (weight - 1.0)).sum())
        adam_step(state, [weight])

    assert np.abs(weight.data - 1.0).max() < 5e-2


def test_missing_gradient_is_skipped() -> None:
    """Ensures that parameters without gradient stay put with a warning."""
    idle = Parameter([2.0], name='idle')
    state = OptimizerState()
    adam_step(state, [idle])

    assert idle.data.tolist() == [2.0]
    assert state.warnings == ['step=1 parameter=idle has no gradient, skipped']


def test_frozen_parameter_untouched() -> None:
    """Ensures that frozen parameters never move."""
    frozen = Parameter([2.0], name='frozen', trainable=False)
    state = OptimizerState()
    adam_step(state, [frozen])

    assert frozen.data.tolist() == [2.0]
    assert not state.warnings


@pytest.mark.parametrize(('setting', 'value'), [
    ('learning_rate', 0.0),
    ('beta1', 1.0),
    ('beta2', -0.1),
    ('epsilon', 0.0),
])
def test_invalid_settings(setting: str, value: float) -> None:
    """Ensures that nonsense hyper-parameters are configuration errors."""
    with pytest.raises(ConfigurationError, match=setting):
        OptimizerState(**{setting: value})


def test_duplicate_names_are_rejected() -> None:
    """Ensures that two parameters never share one set of moments."""
    first = Parameter([1.0], name='weight')
    second = Parameter([2.0], name='weight')
    backward((first * second).sum())
    state = OptimizerState()
    with pytest.raises(ContractError, match="'weight'"):
        adam_step(state, [first, second])

    assert state.step == 0
    assert first.data.tolist() == [1.0]
