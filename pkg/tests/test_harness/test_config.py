from dataclasses import replace
from pathlib import Path

import pytest

from scanb.exceptions import ConfigurationError
from scanb.harness.config import (
    build_config,
    load_config,
    parse_config,
    parse_override,
    with_overrides,
)
from scanb.serialize import to_payload

_SEEDS = '[seeds]\ndata = 1\ninit = 2\neval = 3\n'


def test_defaults() -> None:
    """Ensures that only the seeds are required."""
    config = parse_config(_SEEDS)

    assert config.run.task == 'PP'
    assert config.data.shots == 5
    assert config.support_embodiment == 'agent'
    assert config.render_config.frame_size == 32


@pytest.mark.parametrize(('text', 'message'), [
    (_SEEDS + '[extra]\nkey = 1\n', 'line 5: unknown table'),
    (
        _SEEDS + '[train]\nsteps = 1\nepochs = 3\n',
        "line 7: unknown key 'epochs'",
    ),
    (
        _SEEDS + '[data]\nshots = "five"\n',
        'line 6: data.shots must be an integer',
    ),
    (_SEEDS + '[data]\nshots = true\n', 'data.shots must be an integer'),
    (_SEEDS + '[eval]\ntraces = 1\n', 'eval.traces must be true or false'),
])
def test_strict_documents(text: str, message: str) -> None:
    """Ensures that unknown names and wrong types name their line."""
    with pytest.raises(ConfigurationError) as exc_info:
        parse_config(text, 'run.toml')

    assert 'run.toml' in str(exc_info.value)
    assert message in str(exc_info.value)


def test_syntax_error_has_line() -> None:
    """Ensures that broken TOML names its line."""
    with pytest.raises(ConfigurationError, match='line 2'):
        parse_config('[seeds]\ndata = = 1\n', 'run.toml')


@pytest.mark.parametrize('text', [
    '[run]\ntask = "PP"\n',
    '[seeds]\ndata = 1\ninit = 2\n',
])
def test_seeds_are_required(text: str) -> None:
    """Ensures that every seed must be given."""
    with pytest.raises(ConfigurationError, match='required'):
        parse_config(text)


def test_integers_widen_to_numbers() -> None:
    """Ensures that a whole number is accepted where a float is expected."""
    config = parse_config(_SEEDS + '[model]\nlambda_pos = 2\n')

    assert config.model.lambda_pos == 2.0
    assert isinstance(config.model.lambda_pos, float)


@pytest.mark.parametrize(('table', 'message'), [
    ('[run]\nstrategy = "attention"\n', 'run.strategy must be one of'),
    ('[run]\ntask = "PPPP"\n', 'run.task must be one of'),
    ('[eval]\nplayouts = 0\n', 'eval.playouts must be positive'),
    ('[train]\nsteps = -1\n', 'train.steps must be non-negative'),
    ('[eval]\nshots = 6\n', 'eval.shots=6 exceeds data.shots=5'),
    ('[sweep]\nshots = 9\n', 'sweep.shots=9 exceeds data.shots=5'),
])
def test_value_checks(table: str, message: str) -> None:
    """Ensures that values outside their range are refused."""
    with pytest.raises(ConfigurationError, match=message):
        parse_config(_SEEDS + table)


def test_finetune_needs_same_expert() -> None:
    """Ensures that fine-tuning without expert actions is refused."""
    text = _SEEDS + '[data]\nexpert = "differ"\n[finetune]\nenabled = true\n'

    with pytest.raises(ConfigurationError, match='fine-tuning'):
        parse_config(text)


@pytest.mark.parametrize(('override', 'expected'), [
    ('train.steps=5', ('train', 'steps', 5)),
    ('model.lambda_pos = 0.5', ('model', 'lambda_pos', 0.5)),
    ('run.task=PPP', ('run', 'task', 'PPP')),
    ('run.strategy="bc"', ('run', 'strategy', 'bc')),
    ('finetune.enabled=true', ('finetune', 'enabled', True)),
])
def test_parse_override(override: str, expected) -> None:
    """Ensures that overrides are read as TOML values, else as text."""
    assert parse_override(override) == expected


@pytest.mark.parametrize('override', ['steps=5', 'train.steps', '.steps=1'])
def test_malformed_override(override: str) -> None:
    """Ensures that an override must name a section and a key."""
    with pytest.raises(ConfigurationError, match='section.key=value'):
        parse_override(override)


def test_overrides_win(write_config) -> None:
    """Ensures that overrides replace file values and are checked."""
    path = write_config()
    config = load_config(path, ['train.steps=7', 'run.strategy=bc'])

    assert config.train.steps == 7
    assert config.run.strategy == 'bc'
    with pytest.raises(ConfigurationError, match='--set train.epochs=1'):
        load_config(path, ['train.epochs=1'])


def test_missing_file(tmp_path: Path) -> None:
    """Ensures that a missing document is a configuration error."""
    with pytest.raises(ConfigurationError):
        load_config(tmp_path / 'absent.toml')


def test_with_overrides_is_checked(tiny_config) -> None:
    """Ensures that replaced sections are validated again."""
    wider = replace(tiny_config.eval, shots=tiny_config.data.shots + 1)

    with pytest.raises(ConfigurationError):
        with_overrides(tiny_config, eval=wider)


def test_payload_rebuilds_config(tiny_config) -> None:
    """Ensures that the recorded configuration describes the same run."""
    assert build_config(to_payload(tiny_config)) == tiny_config
