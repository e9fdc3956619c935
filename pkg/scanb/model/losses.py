"""
Training losses of the action and inverse dynamics heads.

.. code:: python

  >>> import numpy as np
  >>> from scanb.model.actor import ActorOutput
  >>> from scanb.model.losses import loss_pos
  >>> from scanb.numeric.tensor import constant

  >>> out = ActorOutput(
  ...     mean=constant(np.zeros((1, 3))),
  ...     gripper=constant([0.5]),
  ...     log_sigma=constant(np.zeros(3)),
  ... )
  >>> nll = loss_pos(out, np.zeros((1, 4))).item()
  >>> assert abs(nll - 2.75682) < 1e-5

"""

import math
from dataclasses import dataclass
from typing import Dict

import numpy as np
from typing_extensions import Final, final

from scanb.exceptions import ConfigurationError, ContractError
from scanb.model.actor import POSITION_WIDTH, ActorOutput
from scanb.numeric.ops import clip, exp, log, mean, square, sum_axis
from scanb.numeric.tensor import Tensor, constant

#: Probabilities are clipped into ``[EPSILON, 1 - EPSILON]``.
EPSILON: Final = 1e-7
HALF_LOG_TWO_PI: Final = 0.5 * math.log(2.0 * math.pi)

_LENGTH_MSG: Final = 'Output has {0} rows but {1} labels'
_BINARY_MSG: Final = 'Gripper labels must be 0 or 1, got {0}'
_WEIGHT_MSG: Final = 'Loss weight {0} must be non-negative, got {1}'


@final
@dataclass(frozen=True, eq=False)
class LossBundle(object):
    """Every loss component, the weights and their weighted total."""

    act_pos: Tensor
    inv_pos: Tensor
    act_gripper: Tensor
    inv_gripper: Tensor
    lambda_pos: float
    lambda_gripper: float
    total: Tensor

    def as_row(self) -> Dict[str, float]:
        """Plain floats for logs."""
        return {
            'loss_total': self.total.item(),
            'loss_act_pos': self.act_pos.item(),
            'loss_inv_pos': self.inv_pos.item(),
            'loss_act_gripper': self.act_gripper.item(),
            'loss_inv_gripper': self.inv_gripper.item(),
        }


def loss_pos(out: ActorOutput, labels: np.ndarray) -> Tensor:
    """
    Gaussian negative log-likelihood of the label positions.

    Summed over the three axes and averaged over timesteps.
    """
    targets = _check_labels(out, labels)[:, :POSITION_WIDTH]
    residual = constant(targets) - out.mean
    inverse_variance = exp(-2.0 * out.log_sigma)
    per_axis = 0.5 * square(residual) * inverse_variance + out.log_sigma
    return mean(sum_axis(per_axis, axis=-1)) + POSITION_WIDTH * HALF_LOG_TWO_PI


def loss_gripper(out: ActorOutput, labels: np.ndarray) -> Tensor:
    """Binary cross-entropy of the open probability, averaged over time."""
    opens = _check_labels(out, labels)[:, POSITION_WIDTH]
    if not np.isin(opens, (0.0, 1.0)).all():
        raise ContractError(_BINARY_MSG.format(np.unique(opens).tolist()))
    prob = clip(out.gripper, EPSILON, 1.0 - EPSILON)
    likelihood = constant(opens) * log(prob) + constant(1.0 - opens) * log(
        1.0 - prob,
    )
    return -mean(likelihood)


def total_loss(
    act_pos: Tensor,
    inv_pos: Tensor,
    act_gripper: Tensor,
    inv_gripper: Tensor,
    lambda_pos: float,
    lambda_gripper: float,
) -> LossBundle:
    """``lambda_pos * (positions) + lambda_gripper * (gripper)``."""
    weights = (('lambda_pos', lambda_pos), ('lambda_gripper', lambda_gripper))
    for name, weight in weights:
        if weight < 0:
            raise ConfigurationError(_WEIGHT_MSG.format(name, weight))
    total = (
        lambda_pos * (act_pos + inv_pos) +
        lambda_gripper * (act_gripper + inv_gripper)
    )
    return LossBundle(
        act_pos=act_pos,
        inv_pos=inv_pos,
        act_gripper=act_gripper,
        inv_gripper=inv_gripper,
        lambda_pos=lambda_pos,
        lambda_gripper=lambda_gripper,
        total=total,
    )


def zero_loss() -> Tensor:
    """Scalar zero, used when a head has nothing to predict."""
    return constant(0.0)


def _check_labels(out: ActorOutput, labels: np.ndarray) -> np.ndarray:
    array = np.asarray(labels, dtype=np.float64)
    if array.shape[0] != len(out):
        raise ContractError(_LENGTH_MSG.format(len(out), array.shape[0]))
    return array
