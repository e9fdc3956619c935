"""
Bidirectional recurrent encoder of demonstration features.

Sequences are right-padded and masked. A masked step keeps the previous
hidden and cell state unchanged, so the backward direction starts exactly
at the last valid row and padding never changes valid outputs.
"""

from dataclasses import dataclass
from typing import List, Tuple

import numpy as np
from typing_extensions import Final, final

from scanb.exceptions import ContractError
from scanb.model.layers import Dense, scaled_normal
from scanb.model.visual import FEATURE_WIDTH, FeatureSequence
from scanb.numeric.ops import concat, sigmoid, tanh
from scanb.numeric.tensor import Parameter, Tensor, constant

#: Width of the encoder output.
ENCODING_WIDTH: Final = 64
#: Hidden width of each direction.
HIDDEN_WIDTH: Final = 32

_EMPTY_MSG: Final = 'Sequence {0} has no valid rows'


@final
@dataclass(frozen=True, eq=False)
class TemporalEncoding(object):
    """
    Encoded sequences ``(B, L, 64)`` and their ``(B, L)`` mask.

    Every row depends on the whole valid sequence; padded rows are zero.
    """

    encodings: Tensor
    mask: np.ndarray

    def single(self, index: int) -> 'TemporalEncoding':
        """The ``index``-th sequence, kept with a batch axis of one."""
        return TemporalEncoding(
            encodings=self.encodings[index:index + 1],
            mask=self.mask[index:index + 1],
        )


@final
class LstmCell(object):
    """One direction: input, recurrent and bias weights of four gates."""

    __slots__ = ('hidden', 'input_weight', 'recurrent_weight', 'bias')

    def __init__(
        self,
        rng: np.random.Generator,
        fan_in: int,
        hidden: int,
        name: str,
    ) -> None:
        """Gate order along the last axis is input, forget, cell, output."""
        self.hidden = hidden
        self.input_weight = Parameter(
            scaled_normal(rng, (fan_in, 4 * hidden), fan_in),
            name='{0}.input'.format(name),
        )
        self.recurrent_weight = Parameter(
            scaled_normal(rng, (hidden, 4 * hidden), hidden),
            name='{0}.recurrent'.format(name),
        )
        self.bias = Parameter(
            np.zeros(4 * hidden), name='{0}.bias'.format(name),
        )

    def step(
        self,
        projected: Tensor,
        state: Tuple[Tensor, Tensor],
        valid: np.ndarray,
    ) -> Tuple[Tensor, Tensor]:
        """
        Advances ``(h, c)`` of shape ``(B, 1, H)`` by one input.

        ``projected`` is the input already multiplied by the input weights.
        """
        hidden, cell = state
        gates = projected + hidden @ self.recurrent_weight + self.bias
        width = self.hidden
        input_gate = sigmoid(gates[:, :, :width])
        forget_gate = sigmoid(gates[:, :, width:2 * width])
        candidate = tanh(gates[:, :, 2 * width:3 * width])
        output_gate = sigmoid(gates[:, :, 3 * width:])
        new_cell = forget_gate * cell + input_gate * candidate
        new_hidden = output_gate * tanh(new_cell)
        keep = constant(valid)
        drop = constant(1.0 - valid)
        return (
            keep * new_hidden + drop * hidden,
            keep * new_cell + drop * cell,
        )

    def parameters(self) -> List[Parameter]:
        """Input, recurrent, bias."""
        return [self.input_weight, self.recurrent_weight, self.bias]


@final
class BiLstmEncoder(object):
    """Forward and backward cells, then a projection to 64 features."""

    __slots__ = ('forward', 'backward', 'projection')

    def __init__(
        self,
        rng: np.random.Generator,
        name: str,
        fan_in: int = FEATURE_WIDTH,
        hidden: int = HIDDEN_WIDTH,
    ) -> None:
        """One layer per direction."""
        self.forward = LstmCell(
            rng, fan_in, hidden, '{0}.forward'.format(name),
        )
        self.backward = LstmCell(
            rng, fan_in, hidden, '{0}.backward'.format(name),
        )
        self.projection = Dense(
            rng, 2 * hidden, ENCODING_WIDTH, '{0}.projection'.format(name),
        )

    def __call__(self, emb: FeatureSequence) -> TemporalEncoding:
        """Same as :func:`bilstm_encode`."""
        return bilstm_encode(emb, self)

    def parameters(self) -> List[Parameter]:
        """Forward cell, backward cell, projection."""
        return [
            *self.forward.parameters(),
            *self.backward.parameters(),
            *self.projection.parameters(),
        ]


def bilstm_encode(
    emb: FeatureSequence,
    encoder: BiLstmEncoder,
) -> TemporalEncoding:
    """
    Runs both directions over the valid rows of every sequence.

    Accepts ``(L, D)`` or batched ``(B, L, D)`` features.
    Sequences are encoded independently of their position in the batch.
    """
    features = emb.features
    mask = np.asarray(emb.mask, dtype=np.float64)
    if features.ndim == 2:
        features = features[None]
        mask = mask[None]
    for index, row in enumerate(mask):
        if row.sum() < 1:
            raise ContractError(_EMPTY_MSG.format(index))
    length = features.shape[1]

    forward_inputs = features @ encoder.forward.input_weight
    backward_inputs = features @ encoder.backward.input_weight
    forward_states = _run(encoder.forward, forward_inputs, mask, range(length))
    backward_states = _run(
        encoder.backward, backward_inputs, mask, range(length - 1, -1, -1),
    )
    backward_states.reverse()

    hidden = concat([
        concat(forward_states, axis=1),
        concat(backward_states, axis=1),
    ], axis=-1)
    encodings = encoder.projection(hidden) * constant(mask[:, :, None])
    return TemporalEncoding(encodings=encodings, mask=mask)


def _run(
    cell: LstmCell,
    inputs: Tensor,
    mask: np.ndarray,
    order: range,
) -> List[Tensor]:
    batch = inputs.shape[0]
    zeros = constant(np.zeros((batch, 1, cell.hidden)))
    state = (zeros, zeros)
    outputs = []
    for position in order:
        valid = mask[:, position, None, None]
        state = cell.step(inputs[:, position:position + 1, :], state, valid)
        outputs.append(state[0])
    return outputs


def stack_encodings(encodings: List[TemporalEncoding]) -> TemporalEncoding:
    """Joins single-sequence encodings of equal length along the batch."""
    return TemporalEncoding(
        encodings=concat([enc.encodings for enc in encodings], axis=0),
        mask=np.concatenate([enc.mask for enc in encodings], axis=0),
    )


__all__ = [  # noqa: WPS410
    'ENCODING_WIDTH',
    'BiLstmEncoder',
    'LstmCell',
    'TemporalEncoding',
    'bilstm_encode',
    'stack_encodings',
]
