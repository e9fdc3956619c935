"""
JSON payloads of domain values.

Every value that leaves the process as JSON has a ``to_payload`` instance,
registered next to its type:

.. code:: python

  >>> from scanb.serialize import to_payload

  >>> assert to_payload(3) == 3
  >>> assert to_payload((1.5, 'a')) == [1.5, 'a']

"""

import json
from pathlib import Path
from typing import Any, Dict, List, Tuple, Union

import numpy as np
from classes import AssociatedType, Supports, typeclass

Payload = Union[Dict[str, Any], List[Any], str, int, float, bool, None]


class JsonPayload(AssociatedType):
    """Values that can be written as JSON."""


@typeclass(JsonPayload)
def to_payload(instance) -> Payload:
    """Converts a value into plain JSON data."""


@to_payload.instance(int)
@to_payload.instance(float)
@to_payload.instance(str)
@to_payload.instance(bool)
@to_payload.instance(type(None))
def _to_payload_scalar(instance: Union[int, float, str, bool, None]) -> Payload:
    return instance


@to_payload.instance(list)
@to_payload.instance(tuple)
def _to_payload_sequence(instance: Union[List, Tuple]) -> Payload:
    return [to_payload(item) for item in instance]


@to_payload.instance(dict)
def _to_payload_mapping(instance: Dict[str, Any]) -> Payload:
    return {str(key): to_payload(item) for key, item in instance.items()}


@to_payload.instance(np.generic)
def _to_payload_numpy_scalar(instance: np.generic) -> Payload:
    return instance.item()


@to_payload.instance(np.ndarray)
def _to_payload_array(instance: np.ndarray) -> Payload:
    return instance.tolist()


def dumps(instance: Supports[JsonPayload]) -> str:
    """Stable JSON text: sorted keys, two-space indent, final newline."""
    return json.dumps(to_payload(instance), indent=2, sort_keys=True) + '\n'


def write_json(instance: Supports[JsonPayload], path: Union[str, Path]) -> Path:
    """Writes the payload of ``instance`` to ``path``."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(dumps(instance), encoding='utf-8')
    return target
