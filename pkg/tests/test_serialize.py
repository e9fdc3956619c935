import json

import numpy as np
import pytest

from scanb.serialize import dumps, to_payload, write_json


@pytest.mark.parametrize(('value', 'expected'), [
    (np.float64(0.5), 0.5),
    (np.int64(3), 3),
    (np.arange(3), [0, 1, 2]),
    ({1: (True, None)}, {'1': [True, None]}),
])
def test_plain_values(value, expected) -> None:
    """Ensures that numpy and builtin values become plain JSON data."""
    payload = to_payload(value)

    assert payload == expected
    assert json.loads(json.dumps(payload)) == expected


def test_unknown_type() -> None:
    """Ensures that values without an instance are refused."""
    with pytest.raises(NotImplementedError):
        to_payload(object())


def test_dumps_is_stable() -> None:
    """Ensures that keys are sorted and the text ends with a newline."""
    text = dumps({'b': 1, 'a': [1.5]})

    assert text.index('"a"') < text.index('"b"')
    assert text.endswith('}\n')


def test_write_json_creates_parents(tmp_path) -> None:
    """Ensures that missing directories are created."""
    path = write_json({'ok': True}, tmp_path / 'a' / 'b' / 'c.json')

    assert json.loads(path.read_text(encoding='utf-8')) == {'ok': True}
