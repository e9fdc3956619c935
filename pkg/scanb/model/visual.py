"""
Visual heads.

A head encodes every frame on its own: RGB and depth go through two
residual convolution stacks with independent weights, the pooled features
are concatenated and projected to :data:`FEATURE_WIDTH`.
Feature maps are kept as ``(N, H, W, C)``.
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence, Union

import numpy as np
from typing_extensions import Final, final

from scanb.exceptions import DimensionError
from scanb.model.layers import Dense, scaled_normal
from scanb.numeric.ops import (
    concat,
    mean,
    reshape,
    silu,
    softmax,
    stack,
    swap_last,
    transpose,
    unfold2d,
)
from scanb.numeric.tensor import Operand, Parameter, Tensor, as_tensor, constant

#: Width of every per-frame feature vector.
FEATURE_WIDTH: Final = 128
#: Channel widths of the three residual blocks.
STACK_WIDTHS: Final = (8, 16, 32)
#: Raster channels: RGB then depth.
FRAME_CHANNELS: Final = 4

SOURCE_PLAYOUT: Final = 'playout'
SOURCE_DEMO: Final = 'demo'
SOURCE_CROP: Final = 'crop'

_CHANNELS_MSG: Final = 'Frames must have {0} channels, got shape {1}'
_MAP_MSG: Final = 'Self-attention expects (N, H, W, C), got {0}'


@final
@dataclass(frozen=True, eq=False)
class FeatureSequence(object):
    """
    Per-frame features and their validity mask.

    ``features`` is ``(L, 128)`` or batched ``(B, L, 128)``;
    ``mask`` has the leading shape and holds ones and zeros.
    Masked rows are exactly zero.
    """

    features: Tensor
    mask: np.ndarray
    source: str = SOURCE_PLAYOUT

    @property
    def length(self) -> int:
        """Number of valid rows, of the first sequence when batched."""
        return int(self.mask.reshape(-1, self.mask.shape[-1])[0].sum())


@final
class Conv(object):
    """Square-kernel convolution as patch extraction plus a product."""

    __slots__ = ('kernel', 'stride', 'weight', 'bias')

    def __init__(  # noqa: WPS211
        self,
        rng: np.random.Generator,
        in_channels: int,
        out_channels: int,
        kernel: int,
        stride: int,
        name: str,
    ) -> None:
        """Weights are laid out as ``(kernel * kernel * in, out)``."""
        fan_in = kernel * kernel * in_channels
        self.kernel = kernel
        self.stride = stride
        self.weight = Parameter(
            scaled_normal(rng, (fan_in, out_channels), fan_in),
            name='{0}.weight'.format(name),
        )
        self.bias = Parameter(
            np.zeros(out_channels), name='{0}.bias'.format(name),
        )

    def __call__(self, feature_map: Tensor) -> Tensor:
        """Same padding, so only the stride shrinks the map."""
        if self.kernel == 1:
            patches = feature_map[:, ::self.stride, ::self.stride, :]
        else:
            patches = unfold2d(
                feature_map,
                self.kernel,
                stride=self.stride,
                padding=self.kernel // 2,
            )
        return patches @ self.weight + self.bias

    def parameters(self) -> List[Parameter]:
        """Weight, then bias."""
        return [self.weight, self.bias]


@final
class ResidualBlock(object):
    """Two 3x3 convolutions and a strided 1x1 projection shortcut."""

    __slots__ = ('first', 'second', 'shortcut')

    def __init__(
        self,
        rng: np.random.Generator,
        in_channels: int,
        out_channels: int,
        name: str,
    ) -> None:
        """Halves height and width."""
        self.first = Conv(
            rng, in_channels, out_channels, 3, 2, '{0}.conv0'.format(name),
        )
        self.second = Conv(
            rng, out_channels, out_channels, 3, 1, '{0}.conv1'.format(name),
        )
        self.shortcut = Conv(
            rng, in_channels, out_channels, 1, 2, '{0}.skip'.format(name),
        )

    def __call__(self, feature_map: Tensor) -> Tensor:
        """``silu(conv(silu(conv(x))) + skip(x))``."""
        hidden = self.second(silu(self.first(feature_map)))
        return silu(hidden + self.shortcut(feature_map))

    def parameters(self) -> List[Parameter]:
        """Both convolutions, then the shortcut."""
        return [
            *self.first.parameters(),
            *self.second.parameters(),
            *self.shortcut.parameters(),
        ]


@final
class SelfAttentionBlock(object):
    """
    Spatial self-attention that keeps the channel count.

    Query and key projections are ``C x C`` and pass through a softmax
    over channels before the product. The block output is
    ``x + gamma * attention(x)`` with ``gamma`` starting at zero.
    """

    __slots__ = ('query', 'key', 'value', 'gamma')

    def __init__(
        self,
        rng: np.random.Generator,
        channels: int,
        name: str,
    ) -> None:
        """Projections without bias, scalar gate at zero."""
        self.query = _square(rng, channels, '{0}.query'.format(name))
        self.key = _square(rng, channels, '{0}.key'.format(name))
        self.value = _square(rng, channels, '{0}.value'.format(name))
        self.gamma = Parameter(np.zeros(1), name='{0}.gamma'.format(name))

    def __call__(self, feature_map: Tensor) -> Tensor:
        """Same shape in, same shape out."""
        return self_attention_block(feature_map, self)

    def parameters(self) -> List[Parameter]:
        """Query, key, value, gate."""
        return [self.query, self.key, self.value, self.gamma]


def self_attention_block(
    feature_map: Operand,
    block: SelfAttentionBlock,
) -> Tensor:
    """
    Applies ``block`` to a ``(N, H, W, C)`` map.

    With ``q`` and ``k`` softmaxed over channels the attention
    ``q (k^T v) / (H * W)`` is computed right to left, so no
    ``HW x HW`` matrix is formed.
    """
    inputs = as_tensor(feature_map)
    if inputs.ndim != 4:
        raise DimensionError(_MAP_MSG.format(inputs.shape))
    batch, height, width, channels = inputs.shape
    flat = reshape(inputs, (batch, height * width, channels))
    query = softmax(flat @ block.query, axis=-1)
    key = softmax(flat @ block.key, axis=-1)
    value = flat @ block.value
    attended = query @ (swap_last(key) @ value) / (height * width)
    out = reshape(attended, (batch, height, width, channels))
    return inputs + block.gamma * out


@final
class ConvStack(object):
    """Three residual blocks with attention after the first and last."""

    __slots__ = ('blocks', 'head_attention', 'tail_attention')

    def __init__(
        self,
        rng: np.random.Generator,
        in_channels: int,
        name: str,
    ) -> None:
        """Widths follow :data:`STACK_WIDTHS`."""
        widths = (in_channels, *STACK_WIDTHS)
        self.blocks = [
            ResidualBlock(
                rng, fan_in, fan_out, '{0}.block{1}'.format(name, index),
            )
            for index, (fan_in, fan_out) in enumerate(zip(widths, widths[1:]))
        ]
        self.head_attention = SelfAttentionBlock(
            rng, STACK_WIDTHS[0], '{0}.attention0'.format(name),
        )
        self.tail_attention = SelfAttentionBlock(
            rng, STACK_WIDTHS[-1], '{0}.attention1'.format(name),
        )

    def __call__(self, feature_map: Tensor) -> Tensor:
        """``(N, H, W, C)`` to pooled ``(N, 32)``."""
        hidden = self.head_attention(self.blocks[0](feature_map))
        for block in self.blocks[1:]:
            hidden = block(hidden)
        hidden = self.tail_attention(hidden)
        return mean(hidden, axis=(1, 2))

    def parameters(self) -> List[Parameter]:
        """Blocks, then the two attention blocks."""
        found = [param for block in self.blocks for param in block.parameters()]
        return [
            *found,
            *self.head_attention.parameters(),
            *self.tail_attention.parameters(),
        ]


@final
class VisualHead(object):
    """RGB stack, depth stack and a projection to 128 features."""

    __slots__ = ('rgb', 'depth', 'projection')

    def __init__(self, rng: np.random.Generator, name: str) -> None:
        """Independent weights for the two modalities."""
        self.rgb = ConvStack(rng, 3, '{0}.rgb'.format(name))
        self.depth = ConvStack(rng, 1, '{0}.depth'.format(name))
        self.projection = Dense(
            rng, 2 * STACK_WIDTHS[-1], FEATURE_WIDTH,
            '{0}.projection'.format(name),
        )

    def __call__(self, frames: Union[Tensor, np.ndarray]) -> Tensor:
        """``(L, 4, H, W)`` frames to ``(L, 128)`` features."""
        return _encode_frames(self, frames)

    def parameters(self) -> List[Parameter]:
        """RGB stack, depth stack, projection."""
        return [
            *self.rgb.parameters(),
            *self.depth.parameters(),
            *self.projection.parameters(),
        ]


def visual_encode(
    frames: Union[Tensor, np.ndarray],
    head: VisualHead,
    mask: Optional[np.ndarray] = None,
    source: str = SOURCE_PLAYOUT,
) -> FeatureSequence:
    """
    Encodes ``(L, 4, H, W)`` frames with ``head``, one row per frame.

    Rows where ``mask`` is zero are zeroed, so padded frames
    receive no gradient.
    """
    features = head(frames)
    length = features.shape[0]
    if mask is None:
        valid = np.ones(length)
    else:
        valid = np.asarray(mask, dtype=np.float64)
    return FeatureSequence(
        features=features * constant(valid[:, None]),
        mask=valid,
        source=source,
    )


def pad_sequences(sequences: Sequence[FeatureSequence]) -> FeatureSequence:
    """Right-pads sequences with zero rows into one ``(B, L, D)`` batch."""
    longest = max(seq.features.shape[0] for seq in sequences)
    rows = []
    masks = []
    for seq in sequences:
        missing = longest - seq.features.shape[0]
        padded = seq.features
        if missing:
            padded = concat([
                padded, constant(np.zeros((missing, seq.features.shape[1]))),
            ], axis=0)
        rows.append(padded)
        masks.append(np.concatenate([seq.mask, np.zeros(missing)]))
    return FeatureSequence(
        features=stack(rows, axis=0),
        mask=np.stack(masks),
        source=sequences[0].source,
    )


def _encode_frames(
    head: VisualHead,
    frames: Union[Tensor, np.ndarray],
) -> Tensor:
    raster = as_tensor(frames)
    if raster.ndim != 4 or raster.shape[1] != FRAME_CHANNELS:
        raise DimensionError(_CHANNELS_MSG.format(FRAME_CHANNELS, raster.shape))
    channels_last = transpose(raster, (0, 2, 3, 1))
    rgb = head.rgb(channels_last[:, :, :, :3])
    depth = head.depth(channels_last[:, :, :, 3:])
    return head.projection(concat([rgb, depth], axis=-1))


def _square(rng: np.random.Generator, channels: int, name: str) -> Parameter:
    return Parameter(
        scaled_normal(rng, (channels, channels), channels), name=name,
    )
