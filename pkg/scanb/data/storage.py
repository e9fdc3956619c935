"""
Dataset directories.

A dataset is a ``manifest.json`` plus one binary record file per
environment. A record file starts with the format tag line, then an
unsigned little-endian 64-bit header length, a JSON header describing
every episode and tensor, and finally the raw little-endian tensor bytes.
"""

import hashlib
import json
import logging
import struct
from dataclasses import replace
from pathlib import Path
from typing import Any, Dict, List, Mapping, Sequence, Tuple, Union

import numpy as np
from typing_extensions import Final

from scanb.data.records import (
    DATASET_FORMAT,
    SIMULATOR_VERSION,
    DatasetManifest,
    Demonstration,
    EpisodeRecord,
)
from scanb.exceptions import DatasetFormatError
from scanb.serialize import write_json
from scanb.world.spec import spec_from_payload

logger = logging.getLogger(__name__)

MANIFEST_NAME: Final = 'manifest.json'
RECORDS_DIR: Final = 'records'

_LENGTH = struct.Struct('<Q')
_FLOAT: Final = '<f8'
_INT: Final = '<i8'
_TENSORS: Final = ('frames', 'crops', 'effectors', 'stage_labels', 'actions')

_VERSION_MSG: Final = '{0} has format {1!r}, expected {2!r}'
_SIMULATOR_MSG: Final = '{0} was made by simulator {1!r}, expected {2!r}'
_TRUNCATED_MSG: Final = 'Record file {0} is truncated'
_CHECKSUM_MSG: Final = 'Frames of {0!r} seed {1} fail their checksum'
_MALFORMED_MSG: Final = 'Malformed {0}: {1}'

PathLike = Union[str, Path]
Records = Mapping[str, Sequence[EpisodeRecord]]


def save_dataset(
    manifest: DatasetManifest,
    records: Records,
    path: PathLike,
) -> DatasetManifest:
    """
    Writes the manifest and one record file per environment.

    Returns the manifest with its record file references filled in.
    """
    root = Path(path)
    (root / RECORDS_DIR).mkdir(parents=True, exist_ok=True)
    files = []
    for env_id in sorted(records):
        relative = '{0}/{1}.bin'.format(RECORDS_DIR, env_id)
        _write_records(root / relative, env_id, records[env_id])
        files.append((env_id, relative))
    saved = replace(manifest, record_files=tuple(files))
    write_json(saved, root / MANIFEST_NAME)
    logger.info(
        'dataset saved path=%s envs=%d checksum=%s',
        root, len(files), dataset_checksum(root),
    )
    return saved


def load_dataset(
    path: PathLike,
) -> Tuple[DatasetManifest, Dict[str, Tuple[EpisodeRecord, ...]]]:
    """Reads a dataset directory written by :func:`save_dataset`."""
    manifest = load_manifest(path)
    root = Path(path)
    records = {
        env_id: _read_records(root / relative)
        for env_id, relative in manifest.record_files
    }
    return manifest, records


def load_manifest(path: PathLike) -> DatasetManifest:
    """Reads and validates only ``manifest.json``."""
    source = Path(path) / MANIFEST_NAME
    try:
        payload = json.loads(source.read_text(encoding='utf-8'))
    except ValueError as exc:
        raise DatasetFormatError(_MALFORMED_MSG.format(source, exc))
    found = payload.get('format')
    if found != DATASET_FORMAT:
        raise DatasetFormatError(
            _VERSION_MSG.format(source, found, DATASET_FORMAT),
        )
    simulator = payload.get('simulator_version')
    if simulator != SIMULATOR_VERSION:
        raise DatasetFormatError(
            _SIMULATOR_MSG.format(source, simulator, SIMULATOR_VERSION),
        )
    try:
        return DatasetManifest(
            task=str(payload['task']),
            seed=int(payload['seed']),
            base_env_ids=tuple(payload['base_env_ids']),
            novel_env_ids=tuple(payload['novel_env_ids']),
            specs=tuple(spec_from_payload(spec) for spec in payload['specs']),
            record_files=tuple(sorted(payload['record_files'].items())),
            simulator_version=simulator,
        )
    except (KeyError, TypeError, AttributeError) as exc:
        raise DatasetFormatError(_MALFORMED_MSG.format(source, exc))


def dataset_checksum(path: PathLike) -> str:
    """SHA-256 over the manifest and every record file, in name order."""
    root = Path(path)
    digest = hashlib.sha256()
    files = [root / MANIFEST_NAME, *sorted((root / RECORDS_DIR).glob('*.bin'))]
    for item in files:
        digest.update(item.relative_to(root).as_posix().encode('utf-8'))
        digest.update(item.read_bytes())
    return digest.hexdigest()


def _write_records(
    target: Path,
    env_id: str,
    episodes: Sequence[EpisodeRecord],
) -> None:
    blobs: List[bytes] = []
    offset = 0

    def describe(demo: Demonstration) -> Dict[str, Any]:
        nonlocal offset
        tensors = {}
        for name in _TENSORS:
            array = getattr(demo, name)
            if array is None:
                continue
            dtype = _INT if name == 'stage_labels' else _FLOAT
            blob = np.ascontiguousarray(array, dtype=dtype).tobytes()
            tensors[name] = {
                'dtype': dtype,
                'shape': list(array.shape),
                'offset': offset,
            }
            blobs.append(blob)
            offset += len(blob)
        return {
            'env_id': demo.env_id,
            'scene_seed': demo.scene_seed,
            'embodiment': demo.embodiment,
            'profile': demo.profile,
            'frame_checksum': demo.frame_checksum(),
            'tensors': tensors,
        }

    header = json.dumps({
        'format': DATASET_FORMAT,
        'env_id': env_id,
        'episodes': [
            {
                'support': [describe(demo) for demo in episode.support],
                'query': describe(episode.query),
            }
            for episode in episodes
        ],
    }, sort_keys=True).encode('utf-8')
    with target.open('wb') as stream:
        stream.write(DATASET_FORMAT.encode('ascii') + b'\n')
        stream.write(_LENGTH.pack(len(header)))
        stream.write(header)
        for blob in blobs:
            stream.write(blob)


def _read_records(source: Path) -> Tuple[EpisodeRecord, ...]:
    payload = source.read_bytes()
    tag, _, rest = payload.partition(b'\n')
    version = tag.decode('ascii', errors='replace')
    if version != DATASET_FORMAT:
        raise DatasetFormatError(
            _VERSION_MSG.format(source, version, DATASET_FORMAT),
        )
    if len(rest) < _LENGTH.size:
        raise DatasetFormatError(_TRUNCATED_MSG.format(source))
    (length,) = _LENGTH.unpack(rest[:_LENGTH.size])
    start = _LENGTH.size + length
    if start > len(rest):
        raise DatasetFormatError(_TRUNCATED_MSG.format(source))
    try:
        header = json.loads(rest[_LENGTH.size:start].decode('utf-8'))
    except ValueError as exc:
        raise DatasetFormatError(_MALFORMED_MSG.format(source, exc))
    body = rest[start:]
    try:
        return tuple(
            EpisodeRecord(
                env_id=header['env_id'],
                support=tuple(
                    _read_demo(meta, body, source)
                    for meta in episode['support']
                ),
                query=_read_demo(episode['query'], body, source),
            )
            for episode in header['episodes']
        )
    except (KeyError, TypeError) as exc:
        raise DatasetFormatError(_MALFORMED_MSG.format(source, exc))


def _read_demo(
    meta: Dict[str, Any],
    body: bytes,
    source: Path,
) -> Demonstration:
    arrays: Dict[str, np.ndarray] = {}
    for name, entry in meta['tensors'].items():
        shape = tuple(entry['shape'])
        count = int(np.prod(shape, dtype=np.int64))
        end = entry['offset'] + count * 8
        if end > len(body):
            raise DatasetFormatError(_TRUNCATED_MSG.format(source))
        native = np.int64 if entry['dtype'] == _INT else np.float64
        arrays[name] = np.frombuffer(
            body[entry['offset']:end], dtype=entry['dtype'],
        ).astype(native).reshape(shape)
    demo = Demonstration(
        env_id=meta['env_id'],
        scene_seed=int(meta['scene_seed']),
        embodiment=meta['embodiment'],
        profile=meta['profile'],
        frames=arrays['frames'],
        crops=arrays['crops'],
        effectors=arrays['effectors'],
        stage_labels=arrays['stage_labels'],
        actions=arrays.get('actions'),
    )
    if demo.frame_checksum() != meta['frame_checksum']:
        raise DatasetFormatError(
            _CHECKSUM_MSG.format(demo.env_id, demo.scene_seed),
        )
    return demo
