import numpy as np
import pytest

from scanb.exceptions import CheckpointError
from scanb.numeric.checkpoint import (
    CHECKPOINT_VERSION,
    Checkpoint,
    load_checkpoint,
    save_checkpoint,
)
from scanb.numeric.tensor import Parameter


@pytest.fixture()
def parameters():
    """Two small named parameters."""
    return [
        Parameter(np.arange(6.0).reshape(2, 3) / 7.0, name='dense.weight'),
        Parameter([0.1, -0.2], name='dense.bias'),
    ]


def test_bitwise_reload(parameters, tmp_path) -> None:
    """Ensures that saved values come back bit for bit."""
    original = Checkpoint.capture(parameters, {'step': 3, 'strategy': 'scan'})
    reloaded = load_checkpoint(save_checkpoint(original, tmp_path / 'a.ckpt'))

    assert reloaded.equals(original)
    assert reloaded.metadata == {'step': 3, 'strategy': 'scan'}
    assert list(reloaded.arrays) == ['dense.weight', 'dense.bias']


def test_apply_restores(parameters) -> None:
    """Ensures that applying a snapshot undoes later changes."""
    snapshot = Checkpoint.capture(parameters, {})
    parameters[1].assign(np.zeros(2))
    snapshot.apply(parameters)

    assert parameters[1].data.tolist() == [0.1, -0.2]


def test_apply_name_mismatch(parameters) -> None:
    """Ensures that missing parameters are reported."""
    snapshot = Checkpoint.capture(parameters[:1], {})
    with pytest.raises(CheckpointError, match='dense.bias'):
        snapshot.apply(parameters)


def test_apply_shape_mismatch(parameters) -> None:
    """Ensures that shape changes are reported."""
    snapshot = Checkpoint({
        'dense.weight': np.zeros((3, 2)),
        'dense.bias': np.zeros(2),
    }, {})
    with pytest.raises(CheckpointError, match='shape'):
        snapshot.apply(parameters)


def test_wrong_version(tmp_path) -> None:
    """Ensures that foreign files are rejected by their tag."""
    path = tmp_path / 'foreign.ckpt'
    path.write_bytes(b'other-format\n')
    with pytest.raises(CheckpointError, match=CHECKPOINT_VERSION):
        load_checkpoint(path)


def test_truncated(parameters, tmp_path) -> None:
    """Ensures that a cut file is reported as truncated."""
    path = save_checkpoint(
        Checkpoint.capture(parameters, {}), tmp_path / 'cut.ckpt',
    )
    path.write_bytes(path.read_bytes()[:-8])
    with pytest.raises(CheckpointError, match='truncated'):
        load_checkpoint(path)
