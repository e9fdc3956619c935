import itertools

import pytest

from scanb.exceptions import ContractError, OracleError
from scanb.numeric.gradcheck import finite_diff_check
from scanb.numeric.tensor import Parameter, Tensor, record


def test_correct_gradient_passes() -> None:
    """Ensures that a right gradient yields a tiny error."""
    weights = Parameter([0.3, -0.7, 1.1], name='weights')

    assert finite_diff_check(
        lambda: (weights * weights * weights).sum(), [weights],
    ) < 1e-6


def test_wrong_gradient_is_caught() -> None:
    """Ensures that a deliberately wrong backward is detected."""
    weights = Parameter([0.3, -0.7, 1.1], name='weights')

    def doubled_square(operand: Tensor) -> Tensor:
        return record(
            operand.data ** 2,
            (operand,),
            lambda grad: [4.0 * grad * operand.data],
            'bad-square',
        )

    assert finite_diff_check(
        lambda: doubled_square(weights).sum(), [weights],
    ) > 0.4


def test_needs_scalar_loss() -> None:
    """Ensures that vector losses are rejected."""
    weights = Parameter([1.0, 2.0], name='weights')
    with pytest.raises(ContractError):
        finite_diff_check(lambda: weights * 2.0, [weights])


def test_needs_deterministic_loss() -> None:
    """Ensures that a loss that changes between calls is an oracle error."""
    weights = Parameter([1.0], name='weights')
    counter = itertools.count()

    with pytest.raises(OracleError):
        finite_diff_check(
            lambda: (weights * float(next(counter))).sum(), [weights],
        )


def test_parameters_are_restored() -> None:
    """Ensures that probing leaves parameter values unchanged."""
    weights = Parameter([0.25, 0.5], name='weights')
    finite_diff_check(lambda: (weights * weights).sum(), [weights])

    assert weights.data.tolist() == [0.25, 0.5]
