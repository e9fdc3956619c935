import numpy as np
import pytest

from scanb.exceptions import DimensionError
from scanb.model.visual import (
    FEATURE_WIDTH,
    SelfAttentionBlock,
    VisualHead,
    pad_sequences,
    self_attention_block,
    visual_encode,
)
from scanb.numeric.tensor import constant


@pytest.fixture(scope='module')
def head() -> VisualHead:
    """One seeded visual head."""
    return VisualHead(np.random.default_rng(0), 'head')


def _frames(count: int, size: int = 8) -> np.ndarray:
    return np.random.default_rng(count).uniform(size=(count, 4, size, size))


def test_feature_shape(head) -> None:
    """Ensures that every frame becomes one feature row."""
    features = visual_encode(_frames(3), head)

    assert features.features.shape == (3, FEATURE_WIDTH)
    assert features.length == 3


def test_frames_are_independent(head) -> None:
    """Ensures that a frame is encoded the same alone or in a batch."""
    frames = _frames(3)
    batch = visual_encode(frames, head).features.data
    alone = visual_encode(frames[1:2], head).features.data

    assert np.allclose(batch[1], alone[0], atol=1e-12)


def test_masked_rows_are_zero(head) -> None:
    """Ensures that padded frames produce zero features."""
    features = visual_encode(_frames(3), head, mask=np.array([1.0, 1.0, 0.0]))

    assert not features.features.data[2].any()
    assert features.features.data[0].any()


def test_wrong_channels(head) -> None:
    """Ensures that frames without depth are refused."""
    with pytest.raises(DimensionError):
        visual_encode(np.zeros((2, 3, 8, 8)), head)


def test_attention_starts_as_identity() -> None:
    """Ensures that the zero gate returns the input map."""
    block = SelfAttentionBlock(np.random.default_rng(0), 5, 'attn')
    feature_map = np.random.default_rng(1).normal(size=(2, 3, 3, 5))

    out = self_attention_block(constant(feature_map), block)

    assert np.array_equal(out.data, feature_map)


def test_attention_mixes_positions() -> None:
    """Ensures that an open gate lets positions see each other."""
    block = SelfAttentionBlock(np.random.default_rng(0), 5, 'attn')
    block.gamma.assign(np.ones(1))
    feature_map = np.random.default_rng(1).normal(size=(1, 3, 3, 5))

    out = self_attention_block(constant(feature_map), block)

    assert out.shape == feature_map.shape
    assert not np.allclose(out.data, feature_map)


def test_attention_needs_maps() -> None:
    """Ensures that flat input is refused."""
    block = SelfAttentionBlock(np.random.default_rng(0), 5, 'attn')

    with pytest.raises(DimensionError):
        self_attention_block(constant(np.zeros((3, 5))), block)


def test_pad_sequences(head) -> None:
    """Ensures that shorter sequences are right-padded and masked."""
    batch = pad_sequences([
        visual_encode(_frames(2), head), visual_encode(_frames(4), head),
    ])

    assert batch.features.shape == (2, 4, FEATURE_WIDTH)
    assert batch.mask.tolist() == [[1, 1, 0, 0], [1, 1, 1, 1]]
    assert not batch.features.data[0, 2:].any()
