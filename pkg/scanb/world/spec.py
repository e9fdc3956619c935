"""
Environment specifications of the tabletop compound tasks.

A spec fixes the objects of one environment: their nominal table position,
size and color, which bowl is the target, and the split it belongs to.
Scene seeds jitter the nominal positions at :func:`init_environment` time.
"""

import colorsys
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Sequence, Tuple, Union

from typing_extensions import Final, final

from scanb.exceptions import ConfigurationError, DatasetFormatError
from scanb.serialize import Payload, to_payload

ENV_SCHEMA: Final = 'scanb-env-1'

TASK_PP: Final = 'PP'
TASK_PPP: Final = 'PPP'
TASKS: Final = (TASK_PP, TASK_PPP)

SPLIT_BASE: Final = 'base'
SPLIT_NOVEL: Final = 'novel'

#: Number of stages of each compound task.
STAGE_COUNT: Final = {TASK_PP: 2, TASK_PPP: 3}

KIND_CUBE: Final = 'cube'
KIND_BOWL: Final = 'bowl'
KIND_CUP: Final = 'cup'

#: Height of each kind of object, table units.
OBJECT_HEIGHT: Final = {KIND_CUBE: 0.06, KIND_BOWL: 0.04, KIND_CUP: 0.1}

Color = Tuple[float, float, float]
Point = Tuple[float, float]

_UNKNOWN_TASK_MSG: Final = 'Unknown task {0!r}, expected one of {1}'
_OBJECTS_MSG: Final = 'Task {0} needs objects {1}, got {2}'
_OUTSIDE_MSG: Final = 'Object {0!r} at {1} is outside the table {2}'
_TARGET_MSG: Final = 'Target bowl index must be 0 or 1, got {0}'
_COLOR_MSG: Final = 'Object {0!r} color {1} is outside [0, 1]'
_SPLIT_MSG: Final = 'Unknown split {0!r}'
_SCHEMA_MSG: Final = 'Environment schema is {0!r}, expected {1!r}'
_PALETTE_MSG: Final = (
    'Palette of {0} colors can not give {1} environments '
    '{2} distinct colors each'
)


@final
@dataclass(frozen=True)
class TableBounds(object):
    """Axis-aligned table rectangle."""

    low: Point = (0.0, 0.0)
    high: Point = (1.0, 1.0)

    def contains(self, x: float, y: float) -> bool:
        """Closed-rectangle membership."""
        return (
            self.low[0] <= x <= self.high[0] and
            self.low[1] <= y <= self.high[1]
        )


@final
@dataclass(frozen=True)
class ObjectSpec(object):
    """One object of an environment."""

    name: str
    kind: str
    position: Point
    radius: float
    color: Color

    @property
    def height(self) -> float:
        """Height of the object above its resting surface."""
        return OBJECT_HEIGHT[self.kind]


@final
@dataclass(frozen=True)
class EnvironmentSpec(object):
    """
    Objects, target and split of one environment.

    Object names are fixed: ``cube``, ``bowl0``, ``bowl1`` and,
    for the three-stage task, ``cup``.
    """

    env_id: str
    task: str
    objects: Tuple[ObjectSpec, ...]
    target_bowl: int
    split: str
    bounds: TableBounds = field(default_factory=TableBounds)
    jitter: float = 0.03

    def __post_init__(self) -> None:
        """Validates task, object set, bounds, colors and target."""
        if self.task not in TASKS:
            raise ConfigurationError(_UNKNOWN_TASK_MSG.format(self.task, TASKS))
        if self.split not in (SPLIT_BASE, SPLIT_NOVEL):
            raise ConfigurationError(_SPLIT_MSG.format(self.split))
        if self.target_bowl not in (0, 1):
            raise ConfigurationError(_TARGET_MSG.format(self.target_bowl))
        names = sorted(obj.name for obj in self.objects)
        expected = sorted(required_objects(self.task))
        if names != expected:
            raise ConfigurationError(
                _OBJECTS_MSG.format(self.task, expected, names),
            )
        for obj in self.objects:
            if not self.bounds.contains(*obj.position):
                raise ConfigurationError(
                    _OUTSIDE_MSG.format(obj.name, obj.position, self.bounds),
                )
            if not all(0 <= channel <= 1 for channel in obj.color):
                raise ConfigurationError(
                    _COLOR_MSG.format(obj.name, obj.color),
                )

    def object(self, name: str) -> ObjectSpec:  # noqa: A003
        """Finds an object by name."""
        for obj in self.objects:
            if obj.name == name:
                return obj
        raise KeyError(name)

    @property
    def target_name(self) -> str:
        """Name of the target bowl."""
        return 'bowl{0}'.format(self.target_bowl)

    @property
    def distractor_name(self) -> str:
        """Name of the other bowl."""
        return 'bowl{0}'.format(1 - self.target_bowl)

    @property
    def stage_count(self) -> int:
        """Number of stages of the task."""
        return STAGE_COUNT[self.task]


def required_objects(task: str) -> Tuple[str, ...]:
    """Object names every environment of ``task`` has."""
    if task == TASK_PPP:
        return ('cube', 'bowl0', 'bowl1', 'cup')
    return ('cube', 'bowl0', 'bowl1')


def split_palettes(size: int) -> Tuple[List[Color], List[Color]]:
    """
    Two disjoint color palettes, for the base and the novel split.

    Hues are spread around the color wheel and dealt alternately,
    so the palettes interleave but never share a color.

    .. code:: python

      >>> from scanb.world.spec import split_palettes

      >>> base, novel = split_palettes(6)
      >>> assert len(base) == len(novel) == 6
      >>> assert not set(base) & set(novel)

    """
    wheel = [
        tuple(
            round(channel, 6)
            for channel in colorsys.hsv_to_rgb(index / (2 * size), 0.85, 0.9)
        )
        for index in range(2 * size)
    ]
    return wheel[0::2], wheel[1::2]  # type: ignore


def check_palette(palette: Sequence[Color], envs: int, per_env: int) -> None:
    """Raises when ``envs`` distinct color assignments are impossible."""
    available = 1
    for offset in range(per_env):
        available *= max(len(palette) - offset, 0)
    if len(palette) < per_env or available < envs:
        raise ConfigurationError(
            _PALETTE_MSG.format(len(palette), envs, per_env),
        )


@to_payload.instance(EnvironmentSpec)
def _to_payload_env(instance: EnvironmentSpec) -> Payload:
    return {
        'schema': ENV_SCHEMA,
        'env_id': instance.env_id,
        'task': instance.task,
        'target_bowl': instance.target_bowl,
        'split': instance.split,
        'jitter': instance.jitter,
        'bounds': {
            'low': list(instance.bounds.low),
            'high': list(instance.bounds.high),
        },
        'objects': [
            {
                'name': obj.name,
                'kind': obj.kind,
                'position': list(obj.position),
                'radius': obj.radius,
                'color': list(obj.color),
            }
            for obj in instance.objects
        ],
    }


def spec_from_payload(payload: Dict) -> EnvironmentSpec:
    """Inverse of ``to_payload`` for environment specs."""
    schema = payload.get('schema')
    if schema != ENV_SCHEMA:
        raise DatasetFormatError(_SCHEMA_MSG.format(schema, ENV_SCHEMA))
    try:
        return EnvironmentSpec(
            env_id=str(payload['env_id']),
            task=str(payload['task']),
            target_bowl=int(payload['target_bowl']),
            split=str(payload['split']),
            jitter=float(payload['jitter']),
            bounds=TableBounds(
                low=_point(payload['bounds']['low']),
                high=_point(payload['bounds']['high']),
            ),
            objects=tuple(
                ObjectSpec(
                    name=str(obj['name']),
                    kind=str(obj['kind']),
                    position=_point(obj['position']),
                    radius=float(obj['radius']),
                    color=_color(obj['color']),
                )
                for obj in payload['objects']
            ),
        )
    except (KeyError, TypeError, IndexError) as exc:
        raise DatasetFormatError('Malformed environment spec: {0}'.format(exc))


def load_spec(path: Union[str, Path]) -> EnvironmentSpec:
    """Reads one ``scanb-env-1`` JSON file."""
    try:
        payload = json.loads(Path(path).read_text(encoding='utf-8'))
    except ValueError as exc:
        raise DatasetFormatError('Malformed environment spec: {0}'.format(exc))
    return spec_from_payload(payload)


def _point(raw: Sequence[float]) -> Point:
    return (float(raw[0]), float(raw[1]))


def _color(raw: Sequence[float]) -> Color:
    return (float(raw[0]), float(raw[1]), float(raw[2]))
