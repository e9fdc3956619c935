from dataclasses import replace

import pytest

from scanb.exceptions import ConfigurationError, DatasetFormatError
from scanb.serialize import to_payload, write_json
from scanb.world.spec import (
    ObjectSpec,
    check_palette,
    load_spec,
    spec_from_payload,
    split_palettes,
)


def test_payload_is_lossless(pp_specs, tmp_path) -> None:
    """Ensures that specs survive their JSON form unchanged."""
    spec = pp_specs[0]
    assert spec_from_payload(to_payload(spec)) == spec
    assert load_spec(write_json(spec, tmp_path / 'env.json')) == spec


def test_unknown_schema(pp_specs) -> None:
    """Ensures that a foreign schema tag is a format error."""
    payload = to_payload(pp_specs[0])
    payload['schema'] = 'other-1'
    with pytest.raises(DatasetFormatError):
        spec_from_payload(payload)


@pytest.mark.parametrize('changes', [
    {'task': 'PPPP'},
    {'split': 'holdout'},
    {'target_bowl': 2},
])
def test_invalid_fields(pp_specs, changes) -> None:
    """Ensures that bad task, split or target are configuration errors."""
    with pytest.raises(ConfigurationError):
        replace(pp_specs[0], **changes)


def test_wrong_object_set(pp_specs) -> None:
    """Ensures that the two-stage task can not carry a cup."""
    cup = ObjectSpec('cup', 'cup', (0.5, 0.5), 0.045, (0.1, 0.2, 0.3))
    with pytest.raises(ConfigurationError, match='needs objects'):
        replace(pp_specs[0], objects=(*pp_specs[0].objects, cup))


def test_object_outside_table(pp_specs) -> None:
    """Ensures that objects must start on the table."""
    moved = tuple(
        replace(obj, position=(1.5, 0.5)) if obj.name == 'cube' else obj
        for obj in pp_specs[0].objects
    )
    with pytest.raises(ConfigurationError, match='outside the table'):
        replace(pp_specs[0], objects=moved)


def test_color_range(pp_specs) -> None:
    """Ensures that color channels stay within the unit range."""
    recolored = tuple(
        replace(obj, color=(1.2, 0.0, 0.0)) if obj.name == 'cube' else obj
        for obj in pp_specs[0].objects
    )
    with pytest.raises(ConfigurationError, match='color'):
        replace(pp_specs[0], objects=recolored)


@pytest.mark.parametrize('size', [3, 8, 11])
def test_palettes_are_disjoint(size: int) -> None:
    """Ensures that base and novel palettes never share a color."""
    base, novel = split_palettes(size)

    assert len(base) == len(novel) == size
    assert not set(base) & set(novel)


def test_palette_too_small() -> None:
    """Ensures that impossible color assignments are rejected."""
    base, _ = split_palettes(2)
    with pytest.raises(ConfigurationError):
        check_palette(base, envs=1, per_env=3)


def test_target_names(pp_specs) -> None:
    """Ensures that target and distractor are the two bowls."""
    spec = pp_specs[0]

    assert {spec.target_name, spec.distractor_name} == {'bowl0', 'bowl1'}
    assert spec.stage_count == 2
