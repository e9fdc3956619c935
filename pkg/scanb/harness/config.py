"""
Run configuration documents.

A run is described by one TOML document. Parsing is strict: unknown
tables or keys, wrong value types and missing seeds are errors that
name the 1-based line of the offending entry.

.. code:: python

  >>> from scanb.harness.config import parse_config

  >>> config = parse_config('''
  ... [seeds]
  ... data = 1
  ... init = 2
  ... eval = 3
  ... ''')
  >>> assert config.run.strategy == 'scan'
  >>> assert config.seeds.eval == 3

"""

import re
from dataclasses import MISSING, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, Iterable, Mapping, Optional, Tuple, Type, Union

import tomlkit
from tomlkit.exceptions import ParseError
from typing_extensions import Final, final

from scanb.exceptions import ConfigurationError
from scanb.model.conditioning import STRATEGIES, STRATEGY_SCA
from scanb.serialize import Payload, to_payload
from scanb.world.expert import VARIANCE_HIGH, VARIANCES
from scanb.world.render import RenderConfig
from scanb.world.spec import TASKS
from scanb.world.state import EMBODIMENT_AGENT, EMBODIMENT_ALT

EXPERT_SAME: Final = 'same'
EXPERT_DIFFER: Final = 'differ'
#: Embodiment of the support demonstrations for each expert setting.
EXPERT_EMBODIMENT: Final = {
    EXPERT_SAME: EMBODIMENT_AGENT,
    EXPERT_DIFFER: EMBODIMENT_ALT,
}

_SYNTAX_MSG: Final = '{0}, line {1}: {2}'
_UNKNOWN_TABLE_MSG: Final = '{0}: unknown table [{1}]'
_UNKNOWN_KEY_MSG: Final = '{0}: unknown key {1!r} in [{2}]'
_TYPE_MSG: Final = '{0}: {1}.{2} must be {3}, got {4!r}'
_LOCATION_MSG: Final = '{0}, line {1}'
_MISSING_MSG: Final = '{0}: [{1}] {2} is required'
_CHOICE_MSG: Final = '{0}: {1}.{2} must be one of {3}, got {4!r}'
_RANGE_MSG: Final = '{0}: {1}.{2} must be {3}, got {4!r}'
_OVERRIDE_MSG: Final = 'Override {0!r} must look like section.key=value'
_FINETUNE_MSG: Final = (
    '{0}: fine-tuning needs expert actions, '
    'so data.expert must be {1!r} when finetune.enabled is true'
)
_SHOTS_MSG: Final = '{0}: {1}.shots={2} exceeds data.shots={3}'

PathLike = Union[str, Path]


@final
@dataclass(frozen=True)
class RunSettings(object):
    """What to run and where its files go."""

    task: str = 'PP'
    strategy: str = STRATEGY_SCA
    output: str = 'runs/default'
    dataset: str = 'data/default'


@final
@dataclass(frozen=True)
class SeedSettings(object):
    """Every source of randomness; all three are required."""

    data: int
    init: int
    eval: int  # noqa: A003


@final
@dataclass(frozen=True)
class DataSettings(object):
    """Dataset size and demonstration setting."""

    n_base: int = 20
    n_novel: int = 8
    episodes_per_env: int = 4
    shots: int = 5
    expert: str = EXPERT_SAME
    length_variance: str = VARIANCE_HIGH
    frame_size: int = 32
    crop_size: int = 16
    palette_size: int = 8


@final
@dataclass(frozen=True)
class ModelSettings(object):
    """Loss weights."""

    lambda_pos: float = 1.0
    lambda_gripper: float = 0.1


@final
@dataclass(frozen=True)
class TrainSettings(object):
    """Meta-training budget and cadence."""

    steps: int = 20000
    learning_rate: float = 1e-3
    checkpoint_every: int = 1000
    log_every: int = 50


@final
@dataclass(frozen=True)
class FinetuneSettings(object):
    """Test-time fine-tuning on the support demonstrations."""

    enabled: bool = False
    steps: int = 20
    learning_rate: float = 1e-4


@final
@dataclass(frozen=True)
class EvalSettings(object):
    """Closed-loop evaluation on novel environments."""

    shots: int = 5
    playouts: int = 20
    traces: bool = False


@final
@dataclass(frozen=True)
class SweepSettings(object):
    """Sub-optimal demonstration sweep."""

    env: str = ''
    shots: int = 5
    detour_budget: int = 3
    playouts: int = 20


@final
@dataclass(frozen=True)
class RunConfig(object):
    """A fully validated run description."""

    seeds: SeedSettings
    run: RunSettings = field(default_factory=RunSettings)
    data: DataSettings = field(default_factory=DataSettings)
    model: ModelSettings = field(default_factory=ModelSettings)
    train: TrainSettings = field(default_factory=TrainSettings)
    finetune: FinetuneSettings = field(default_factory=FinetuneSettings)
    eval: EvalSettings = field(default_factory=EvalSettings)  # noqa: A003
    sweep: SweepSettings = field(default_factory=SweepSettings)

    @property
    def support_embodiment(self) -> str:
        """Embodiment that records the support demonstrations."""
        return EXPERT_EMBODIMENT[self.data.expert]

    @property
    def output_dir(self) -> Path:
        """Root of every artifact of this run."""
        return Path(self.run.output)

    @property
    def render_config(self) -> RenderConfig:
        """Frame and crop sizes of the run."""
        return RenderConfig(
            frame_size=self.data.frame_size, crop_size=self.data.crop_size,
        )


_SECTIONS: Final = {
    'run': RunSettings,
    'seeds': SeedSettings,
    'data': DataSettings,
    'model': ModelSettings,
    'train': TrainSettings,
    'finetune': FinetuneSettings,
    'eval': EvalSettings,
    'sweep': SweepSettings,
}
_TYPES: Final = {
    int: 'an integer',
    float: 'a number',
    bool: 'true or false',
    str: 'a string',
}
_HEADER = re.compile(r'^\s*\[\s*([A-Za-z0-9_.-]+)\s*\]')
_KEY = re.compile(r'^\s*([A-Za-z0-9_-]+)\s*=')


def load_config(path: PathLike, overrides: Iterable[str] = ()) -> RunConfig:
    """Reads and validates a TOML file, then applies ``--set`` overrides."""
    source = Path(path)
    try:
        text = source.read_text(encoding='utf-8')
    except OSError as exc:
        raise ConfigurationError('{0}: {1}'.format(source, exc.strerror))
    return parse_config(text, str(source), overrides)


def parse_config(
    text: str,
    source: str = '<config>',
    overrides: Iterable[str] = (),
) -> RunConfig:
    """Validates a TOML document."""
    try:
        document = tomlkit.parse(text).unwrap()
    except ParseError as exc:
        raise ConfigurationError(_SYNTAX_MSG.format(source, exc.line, exc))
    lines = _key_lines(text, source)
    for override in overrides:
        section, key, value = parse_override(override)
        document.setdefault(section, {})[key] = value
        lines[(section, key)] = '--set {0}'.format(override)
        lines.setdefault((section, ''), lines[(section, key)])
    return build_config(document, source, lines)


def parse_override(override: str) -> Tuple[str, str, Any]:
    """Splits ``section.key=value`` and reads the value as TOML."""
    name, sep, raw = override.partition('=')
    section, dot, key = name.strip().partition('.')
    if not sep or not dot or not section or not key:
        raise ConfigurationError(_OVERRIDE_MSG.format(override))
    try:
        document = tomlkit.parse('value = {0}'.format(raw.strip()))
        value = document.unwrap()['value']
    except ParseError:
        value = raw.strip()
    return section, key.strip(), value


def build_config(
    document: Mapping[str, Any],
    source: str = '<config>',
    lines: Optional[Dict[Tuple[str, str], str]] = None,
) -> RunConfig:
    """Turns plain tables into a :class:`RunConfig`."""
    known_lines = lines or {}
    sections: Dict[str, Any] = {}
    for name, table in document.items():
        if name not in _SECTIONS or not isinstance(table, dict):
            raise ConfigurationError(_UNKNOWN_TABLE_MSG.format(
                known_lines.get((name, ''), source), name,
            ))
        sections[name] = _build_section(
            name, _SECTIONS[name], table, source, known_lines,
        )
    if 'seeds' not in sections:
        raise ConfigurationError(_MISSING_MSG.format(source, 'seeds', 'data'))
    config = RunConfig(**sections)
    _check_config(config, source)
    return config


def _build_section(
    name: str,
    kind: Type[Any],
    table: Mapping[str, Any],
    source: str,
    lines: Dict[Tuple[str, str], str],
) -> Any:
    declared = {item.name: item for item in fields(kind)}
    values: Dict[str, Any] = {}
    for key, value in table.items():
        where = lines.get((name, key), source)
        if key not in declared:
            raise ConfigurationError(
                _UNKNOWN_KEY_MSG.format(where, key, name),
            )
        expected = declared[key].type
        values[key] = _coerce(value, expected, where, name, key)
    for key, item in declared.items():
        if key not in values and _is_required(item):
            raise ConfigurationError(_MISSING_MSG.format(source, name, key))
    return kind(**values)


def _coerce(
    value: Any,
    expected: Any,
    where: str,
    section: str,
    key: str,
) -> Any:
    kind = _resolve(expected)
    valid = isinstance(value, kind) and not (
        kind is not bool and isinstance(value, bool)
    )
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    if not valid:
        raise ConfigurationError(_TYPE_MSG.format(
            where, section, key, _TYPES[kind], value,
        ))
    return value


def _resolve(expected: Any) -> type:
    if isinstance(expected, type):
        return expected
    return {'int': int, 'float': float, 'bool': bool, 'str': str}[expected]


def _is_required(item: Any) -> bool:
    return item.default is MISSING and item.default_factory is MISSING


def _check_config(config: RunConfig, source: str) -> None:
    choices = (
        ('run', 'task', config.run.task, TASKS),
        ('run', 'strategy', config.run.strategy, STRATEGIES),
        ('data', 'expert', config.data.expert, tuple(EXPERT_EMBODIMENT)),
        ('data', 'length_variance', config.data.length_variance, VARIANCES),
    )
    for section, key, value, allowed in choices:
        if value not in allowed:
            raise ConfigurationError(
                _CHOICE_MSG.format(source, section, key, allowed, value),
            )
    positive = (
        ('data', 'n_base', config.data.n_base),
        ('data', 'n_novel', config.data.n_novel),
        ('data', 'episodes_per_env', config.data.episodes_per_env),
        ('data', 'shots', config.data.shots),
        ('data', 'frame_size', config.data.frame_size),
        ('data', 'crop_size', config.data.crop_size),
        ('train', 'learning_rate', config.train.learning_rate),
        ('train', 'checkpoint_every', config.train.checkpoint_every),
        ('train', 'log_every', config.train.log_every),
        ('finetune', 'learning_rate', config.finetune.learning_rate),
        ('eval', 'shots', config.eval.shots),
        ('eval', 'playouts', config.eval.playouts),
        ('sweep', 'shots', config.sweep.shots),
        ('sweep', 'detour_budget', config.sweep.detour_budget),
        ('sweep', 'playouts', config.sweep.playouts),
    )
    for section, key, value in positive:
        if value <= 0:
            raise ConfigurationError(
                _RANGE_MSG.format(source, section, key, 'positive', value),
            )
    non_negative = (
        ('model', 'lambda_pos', config.model.lambda_pos),
        ('model', 'lambda_gripper', config.model.lambda_gripper),
        ('train', 'steps', config.train.steps),
        ('finetune', 'steps', config.finetune.steps),
    )
    for section, key, value in non_negative:
        if value < 0:
            raise ConfigurationError(
                _RANGE_MSG.format(source, section, key, 'non-negative', value),
            )
    shot_counts = (('eval', config.eval.shots), ('sweep', config.sweep.shots))
    for section, shots in shot_counts:
        if shots > config.data.shots:
            raise ConfigurationError(
                _SHOTS_MSG.format(source, section, shots, config.data.shots),
            )
    if config.finetune.enabled and config.data.expert != EXPERT_SAME:
        raise ConfigurationError(_FINETUNE_MSG.format(source, EXPERT_SAME))


def _key_lines(text: str, source: str) -> Dict[Tuple[str, str], str]:
    lines: Dict[Tuple[str, str], str] = {}
    section = ''
    for number, content in enumerate(text.splitlines(), start=1):
        header = _HEADER.match(content)
        if header:
            section = header.group(1)
            location = _LOCATION_MSG.format(source, number)
            lines.setdefault((section, ''), location)
            continue
        key = _KEY.match(content)
        if key:
            lines.setdefault(
                (section, key.group(1)), _LOCATION_MSG.format(source, number),
            )
    return lines


def with_overrides(config: RunConfig, **sections: Any) -> RunConfig:
    """Copy of ``config`` with whole sections replaced, validated again."""
    updated = replace(config, **sections)
    _check_config(updated, '<override>')
    return updated


@to_payload.instance(RunConfig)
def _to_payload_config(instance: RunConfig) -> Payload:
    return {
        section.name: {
            item.name: getattr(getattr(instance, section.name), item.name)
            for item in fields(getattr(instance, section.name))
        }
        for section in fields(instance)
    }
