import json
import shutil
from pathlib import Path

import pytest

from scanb.data.storage import (
    MANIFEST_NAME,
    dataset_checksum,
    load_dataset,
    load_manifest,
    save_dataset,
)
from scanb.exceptions import DatasetFormatError


@pytest.fixture()
def dataset_copy(saved_dataset: Path, tmp_path: Path) -> Path:
    """Private copy of the tiny dataset that a test may damage."""
    target = tmp_path / 'copy'
    shutil.copytree(saved_dataset, target)
    return target


def _first_record(root: Path) -> Path:
    return sorted((root / 'records').glob('*.bin'))[0]


def test_round_trip(saved_dataset: Path, dataset) -> None:
    """Ensures that a saved dataset loads back equal."""
    manifest, records = dataset
    loaded_manifest, loaded_records = load_dataset(saved_dataset)

    assert loaded_manifest.base_env_ids == manifest.base_env_ids
    assert loaded_manifest.novel_env_ids == manifest.novel_env_ids
    assert loaded_manifest.specs == manifest.specs
    assert loaded_records == records


def test_checksum_is_deterministic(dataset, tmp_path: Path) -> None:
    """Ensures that saving one dataset twice gives one checksum."""
    manifest, records = dataset
    save_dataset(manifest, records, tmp_path / 'first')
    save_dataset(manifest, records, tmp_path / 'second')

    assert dataset_checksum(tmp_path / 'first') == dataset_checksum(
        tmp_path / 'second',
    )


def test_corrupt_frame_byte(dataset_copy: Path) -> None:
    """Ensures that a flipped frame byte fails the frame checksum."""
    record = _first_record(dataset_copy)
    payload = bytearray(record.read_bytes())
    tag_end = payload.index(b'\n') + 1
    header_length = int.from_bytes(payload[tag_end:tag_end + 8], 'little')
    body_start = tag_end + 8 + header_length
    payload[body_start + 3] ^= 0xFF
    record.write_bytes(bytes(payload))

    with pytest.raises(DatasetFormatError, match='checksum'):
        load_dataset(dataset_copy)


def test_truncated_record(dataset_copy: Path) -> None:
    """Ensures that a cut record file is reported as truncated."""
    record = _first_record(dataset_copy)
    record.write_bytes(record.read_bytes()[:-16])

    with pytest.raises(DatasetFormatError, match='truncated'):
        load_dataset(dataset_copy)


@pytest.mark.parametrize(('key', 'value'), [
    ('format', 'scanb-ds-0'),
    ('simulator_version', 'scanb-sim-0'),
])
def test_version_mismatch(dataset_copy: Path, key: str, value: str) -> None:
    """Ensures that data of another format or simulator is refused."""
    path = dataset_copy / MANIFEST_NAME
    payload = json.loads(path.read_text(encoding='utf-8'))
    payload[key] = value
    path.write_text(json.dumps(payload), encoding='utf-8')

    with pytest.raises(DatasetFormatError, match=value):
        load_manifest(dataset_copy)


def test_malformed_manifest(dataset_copy: Path) -> None:
    """Ensures that a manifest that is not JSON is a format error."""
    (dataset_copy / MANIFEST_NAME).write_text('{', encoding='utf-8')

    with pytest.raises(DatasetFormatError):
        load_manifest(dataset_copy)


def test_missing_dataset(tmp_path: Path) -> None:
    """Ensures that a missing directory is reported as missing."""
    with pytest.raises(FileNotFoundError):
        load_manifest(tmp_path / 'nothing')
