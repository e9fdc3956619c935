"""
Checkpoint files.

Layout: the ASCII tag line ``scanb-ckpt-1``, an unsigned little-endian
64-bit header length, a JSON header (parameter names and shapes in order,
plus free-form metadata) and finally the raw little-endian float64 values
of every parameter in header order.
"""

import json
import struct
from pathlib import Path
from typing import Any, Dict, List, Mapping, Sequence, Tuple, Union

import numpy as np
from typing_extensions import Final, final

from scanb.exceptions import CheckpointError
from scanb.numeric.tensor import Parameter

CHECKPOINT_VERSION: Final = 'scanb-ckpt-1'

_LENGTH = struct.Struct('<Q')
_VERSION_MSG: Final = 'Checkpoint version is {0!r}, expected {1!r}'
_TRUNCATED_MSG: Final = 'Checkpoint {0} is truncated'
_MISMATCH_MSG: Final = 'Checkpoint parameter {0!r} has shape {1}, model has {2}'
_MISSING_MSG: Final = 'Checkpoint and model parameters differ: {0}'

PathLike = Union[str, Path]


@final
class Checkpoint(object):
    """Named parameter arrays plus metadata, as stored on disk."""

    __slots__ = ('arrays', 'metadata')

    def __init__(
        self,
        arrays: Mapping[str, np.ndarray],
        metadata: Mapping[str, Any],
    ) -> None:
        """Keeps insertion order of ``arrays``."""
        self.arrays: Dict[str, np.ndarray] = dict(arrays)
        self.metadata: Dict[str, Any] = dict(metadata)

    @classmethod
    def capture(
        cls,
        parameters: Sequence[Parameter],
        metadata: Mapping[str, Any],
    ) -> 'Checkpoint':
        """Snapshots current parameter values."""
        return cls(
            {param.name: param.data.copy() for param in parameters},
            metadata,
        )

    def apply(self, parameters: Sequence[Parameter]) -> None:
        """Loads values into parameters, names and shapes must agree."""
        names = [param.name for param in parameters]
        if sorted(names) != sorted(self.arrays):
            difference = sorted(set(names) ^ set(self.arrays))
            raise CheckpointError(_MISSING_MSG.format(difference))
        for param in parameters:
            stored = self.arrays[param.name]
            if stored.shape != param.data.shape:
                raise CheckpointError(_MISMATCH_MSG.format(
                    param.name, stored.shape, param.data.shape,
                ))
            param.assign(stored)

    def equals(self, other: 'Checkpoint') -> bool:
        """Bitwise comparison of every array."""
        if list(self.arrays) != list(other.arrays):
            return False
        return all(
            np.array_equal(self.arrays[name], other.arrays[name])
            for name in self.arrays
        )


def save_checkpoint(checkpoint: Checkpoint, path: PathLike) -> Path:
    """Writes ``checkpoint`` to ``path`` and returns the path."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    header = json.dumps({
        'version': CHECKPOINT_VERSION,
        'parameters': [
            {'name': name, 'shape': list(array.shape)}
            for name, array in checkpoint.arrays.items()
        ],
        'metadata': checkpoint.metadata,
    }, sort_keys=True).encode('utf-8')
    with target.open('wb') as stream:
        stream.write(CHECKPOINT_VERSION.encode('ascii') + b'\n')
        stream.write(_LENGTH.pack(len(header)))
        stream.write(header)
        for array in checkpoint.arrays.values():
            stream.write(np.ascontiguousarray(array, dtype='<f8').tobytes())
    return target


def load_checkpoint(path: PathLike) -> Checkpoint:
    """Reads a checkpoint, validating the version tag and the sizes."""
    source = Path(path)
    payload = source.read_bytes()
    tag, _, rest = payload.partition(b'\n')
    version = tag.decode('ascii', errors='replace')
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(_VERSION_MSG.format(version, CHECKPOINT_VERSION))
    header, offset = _read_header(rest, source)
    arrays: Dict[str, np.ndarray] = {}
    for entry in header['parameters']:
        shape: Tuple[int, ...] = tuple(entry['shape'])
        count = int(np.prod(shape, dtype=np.int64))
        end = offset + count * 8
        if end > len(rest):
            raise CheckpointError(_TRUNCATED_MSG.format(source))
        arrays[entry['name']] = np.frombuffer(
            rest[offset:end], dtype='<f8',
        ).astype(np.float64).reshape(shape)
        offset = end
    return Checkpoint(arrays, header.get('metadata', {}))


def _read_header(rest: bytes, source: Path) -> Tuple[Dict[str, List], int]:
    if len(rest) < _LENGTH.size:
        raise CheckpointError(_TRUNCATED_MSG.format(source))
    (length,) = _LENGTH.unpack(rest[:_LENGTH.size])
    end = _LENGTH.size + length
    if end > len(rest):
        raise CheckpointError(_TRUNCATED_MSG.format(source))
    try:
        header = json.loads(rest[_LENGTH.size:end].decode('utf-8'))
    except ValueError:
        raise CheckpointError(_TRUNCATED_MSG.format(source))
    return header, end
