"""
Action and inverse dynamics heads.

Both heads are the same per-timestep network with independent weights:
three dense layers produce a position mean and an open logit per row,
plus one shared learnable log standard deviation per position axis.
"""

from dataclasses import dataclass
from typing import List

import numpy as np
from typing_extensions import Final, final

from scanb.exceptions import ContractError
from scanb.model.layers import MultiLayer, join_features
from scanb.model.visual import FEATURE_WIDTH
from scanb.numeric.ops import exp, sigmoid
from scanb.numeric.tensor import Operand, Parameter, Tensor, as_tensor, constant

#: Hidden width of both heads.
HEAD_WIDTH: Final = 256
#: Effector state: position and gripper opening.
EFFECTOR_WIDTH: Final = 4
#: Position axes of an action.
POSITION_WIDTH: Final = 3

_PE_WIDTH_MSG: Final = 'Positional encoding width must be even, got {0}'
_PAIRS_MSG: Final = 'Inverse dynamics needs at least two frames, got {0}'


@final
@dataclass(frozen=True, eq=False)
class ActorOutput(object):
    """
    Per-timestep predictions.

    ``mean`` is ``(T, 3)``, ``gripper`` is the ``(T,)`` open probability
    and ``log_sigma`` the shared ``(3,)`` log standard deviation.
    """

    mean: Tensor
    gripper: Tensor
    log_sigma: Tensor

    @property
    def sigma(self) -> np.ndarray:
        """Standard deviation, always positive."""
        return np.exp(self.log_sigma.data)

    def __len__(self) -> int:
        """Number of timesteps."""
        return self.mean.shape[0]


@final
class ActionHead(object):
    """Dense stack to ``(mean, open logit)`` and a log standard deviation."""

    __slots__ = ('network', 'log_sigma')

    def __init__(
        self,
        rng: np.random.Generator,
        fan_in: int,
        name: str,
    ) -> None:
        """``fan_in -> 256 -> 256 -> 4``, standard deviation starts at one."""
        self.network = MultiLayer(
            rng,
            (fan_in, HEAD_WIDTH, HEAD_WIDTH, POSITION_WIDTH + 1),
            '{0}.network'.format(name),
        )
        self.log_sigma = Parameter(
            np.zeros(POSITION_WIDTH), name='{0}.log_sigma'.format(name),
        )

    def __call__(self, inputs: Operand) -> ActorOutput:
        """Same as :func:`action_head`."""
        return action_head(inputs, self)

    def parameters(self) -> List[Parameter]:
        """Network, then the log standard deviation."""
        return [*self.network.parameters(), self.log_sigma]


def positional_encoding(positions: np.ndarray, width: int) -> np.ndarray:
    """
    Sinusoidal encoding of absolute timesteps.

    Even columns hold ``sin(pos / 10000 ** (2i / width))``,
    odd columns the matching cosine.

    .. code:: python

      >>> import numpy as np
      >>> pe = positional_encoding(np.arange(2), 4)
      >>> assert pe[0].tolist() == [0.0, 1.0, 0.0, 1.0]

    """
    if width % 2:
        raise ContractError(_PE_WIDTH_MSG.format(width))
    pos = np.asarray(positions, dtype=np.float64)[:, None]
    rates = np.power(10000.0, -np.arange(0, width, 2) / width)
    encoding = np.zeros((pos.shape[0], width))
    encoding[:, 0::2] = np.sin(pos * rates)
    encoding[:, 1::2] = np.cos(pos * rates)
    return encoding


def actor_input(
    emb_p: Operand,
    emb_crp: Operand,
    effectors: np.ndarray,
    task: Operand,
    positions: np.ndarray,
) -> Tensor:
    """Joined playout, crop, effector and task rows plus positions."""
    joined = join_features([
        emb_p, emb_crp, constant(np.asarray(effectors, dtype=np.float64)), task,
    ])
    return joined + constant(positional_encoding(positions, joined.shape[-1]))


def actor_width(embedding_width: int) -> int:
    """Width of :func:`actor_input` rows."""
    return 2 * FEATURE_WIDTH + EFFECTOR_WIDTH + embedding_width


def action_head(inputs: Operand, head: ActionHead) -> ActorOutput:
    """Applies ``head`` to every row independently."""
    raw = head.network(as_tensor(inputs))
    return ActorOutput(
        mean=raw[:, :POSITION_WIDTH],
        gripper=sigmoid(raw[:, POSITION_WIDTH]),
        log_sigma=head.log_sigma,
    )


def inverse_pairs(emb_p: Operand, emb_crp: Operand) -> Tensor:
    """``[p_t, crop_t, p_t+1, crop_t+1]`` for every adjacent pair."""
    playout = as_tensor(emb_p)
    crops = as_tensor(emb_crp)
    length = playout.shape[0]
    if length < 2:
        raise ContractError(_PAIRS_MSG.format(length))
    return join_features([
        playout[:-1], crops[:-1], playout[1:], crops[1:],
    ])


def inverse_dynamics(
    emb_p: Operand,
    emb_crp: Operand,
    head: ActionHead,
) -> ActorOutput:
    """Predicts the action between every pair of adjacent frames."""
    return action_head(inverse_pairs(emb_p, emb_crp), head)


def sigma_of(output: ActorOutput) -> Tensor:
    """Differentiable standard deviation."""
    return exp(output.log_sigma)
