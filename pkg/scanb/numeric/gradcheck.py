"""
Central-difference gradient oracle.

.. code:: python

  >>> from scanb.numeric.gradcheck import finite_diff_check
  >>> from scanb.numeric.tensor import Parameter

  >>> weights = Parameter([0.5, -1.5, 2.0], name='weights')
  >>> error = finite_diff_check(
  ...     lambda: 0.5 * (weights * weights).sum(), [weights],
  ... )
  >>> assert error < 1e-8

"""

from typing import Callable, Sequence

import numpy as np
from typing_extensions import Final

from scanb.exceptions import ContractError, OracleError
from scanb.numeric.rng import seeded_rng
from scanb.numeric.tensor import Parameter, Tensor, backward

_NON_DETERMINISTIC_MSG: Final = (
    'Loss function returned {0!r} and then {1!r} for the same parameters'
)
_NOT_SCALAR_MSG: Final = 'Loss function must return a scalar, got {0}'

#: Denominator floor of the relative error.
RELATIVE_FLOOR: Final = 1e-8


def finite_diff_check(  # noqa: WPS210
    loss_fn: Callable[[], Tensor],
    parameters: Sequence[Parameter],
    step: float = 1e-5,
    samples: int = 3,
    seed: int = 0,
    min_magnitude: float = 1e-5,
) -> float:
    """
    Compares analytic and central-difference gradients.

    Returns the maximum over sampled coordinates of
    ``|analytic - numeric| / (|analytic| + 1e-8)``.

    Coordinates are sampled among those whose analytic gradient
    is at least ``min_magnitude``: below it the numeric estimate
    is dominated by rounding of the loss value.
    When a parameter has no such coordinate,
    random coordinates are still probed and count as errors
    only if the numeric gradient is above ``min_magnitude``.
    """
    for parameter in parameters:
        parameter.zero_grad()
    loss = loss_fn()
    if loss.size != 1:
        raise ContractError(_NOT_SCALAR_MSG.format(loss.shape))
    repeated = loss_fn().item()
    if repeated != loss.item():
        raise OracleError(_NON_DETERMINISTIC_MSG.format(
            loss.item(), repeated,
        ))
    grads = backward(loss)

    rng = seeded_rng(seed, 'gradcheck')
    worst = 0.0
    for parameter in parameters:
        analytic = grads[parameter].reshape(-1)
        eligible = np.flatnonzero(np.abs(analytic) >= min_magnitude)
        strict = eligible.size > 0
        pool = eligible if strict else np.arange(analytic.size)
        chosen = rng.choice(pool, size=min(samples, pool.size), replace=False)
        for flat_index in chosen:
            numeric = _central_difference(
                loss_fn, parameter, int(flat_index), step,
            )
            if not strict and abs(numeric) < min_magnitude:
                continue
            expected = analytic[flat_index]
            error = abs(expected - numeric) / (abs(expected) + RELATIVE_FLOOR)
            worst = max(worst, float(error))
    return worst


def _central_difference(
    loss_fn: Callable[[], Tensor],
    parameter: Parameter,
    flat_index: int,
    step: float,
) -> float:
    original = parameter.data.copy()
    try:
        values = original.reshape(-1).copy()
        values[flat_index] += step
        parameter.assign(values.reshape(original.shape))
        upper = loss_fn().item()
        values[flat_index] -= 2 * step
        parameter.assign(values.reshape(original.shape))
        lower = loss_fn().item()
    finally:
        parameter.assign(original)
    return (upper - lower) / (2 * step)
