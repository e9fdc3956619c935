"""Base and novel environment splits."""

import logging
from typing import List, Sequence, Tuple

import numpy as np
from typing_extensions import Final

from scanb.data.records import DatasetManifest
from scanb.exceptions import ConfigurationError
from scanb.numeric.rng import seeded_rng
from scanb.world.spec import (
    KIND_BOWL,
    KIND_CUBE,
    KIND_CUP,
    SPLIT_BASE,
    SPLIT_NOVEL,
    TASKS,
    Color,
    EnvironmentSpec,
    ObjectSpec,
    check_palette,
    required_objects,
    split_palettes,
)

logger = logging.getLogger(__name__)

#: Colors in each split palette.
DEFAULT_PALETTE_SIZE: Final = 8

#: Object radii, table units.
RADIUS: Final = {KIND_CUBE: 0.04, KIND_BOWL: 0.09, KIND_CUP: 0.045}

#: Nominal spawn regions ``((x_low, x_high), (y_low, y_high))``.
#: ``bowl0`` is the front bowl, ``bowl1`` the rear one.
SPAWN_REGIONS: Final = {
    'cube': ((0.2, 0.45), (0.15, 0.28)),
    'bowl0': ((0.15, 0.35), (0.5, 0.6)),
    'bowl1': ((0.6, 0.8), (0.75, 0.85)),
    'cup': ((0.75, 0.85), (0.3, 0.5)),
}

_KINDS: Final = {
    'cube': KIND_CUBE,
    'bowl0': KIND_BOWL,
    'bowl1': KIND_BOWL,
    'cup': KIND_CUP,
}
_COUNT_MSG: Final = 'Need at least one {0} environment, got {1}'
_TASK_MSG: Final = 'Unknown task {0!r}, expected one of {1}'


def build_splits(
    n_base: int,
    n_novel: int,
    task: str,
    seed: int,
    palette_size: int = DEFAULT_PALETTE_SIZE,
) -> DatasetManifest:
    """
    Creates ``n_base + n_novel`` environment specs with disjoint ids.

    Base environments draw colors from one palette and novel environments
    from the other, so no novel color was ever seen in training.
    Within a split, every environment gets its own color assignment.
    """
    if task not in TASKS:
        raise ConfigurationError(_TASK_MSG.format(task, TASKS))
    if n_base < 1:
        raise ConfigurationError(_COUNT_MSG.format(SPLIT_BASE, n_base))
    if n_novel < 1:
        raise ConfigurationError(_COUNT_MSG.format(SPLIT_NOVEL, n_novel))
    names = required_objects(task)
    base_palette, novel_palette = split_palettes(palette_size)
    check_palette(base_palette, n_base, len(names))
    check_palette(novel_palette, n_novel, len(names))

    specs = [
        *_split_specs(SPLIT_BASE, n_base, task, seed, base_palette),
        *_split_specs(SPLIT_NOVEL, n_novel, task, seed, novel_palette),
    ]
    manifest = DatasetManifest(
        task=task,
        seed=seed,
        base_env_ids=tuple(spec.env_id for spec in specs[:n_base]),
        novel_env_ids=tuple(spec.env_id for spec in specs[n_base:]),
        specs=tuple(specs),
    )
    logger.info(
        'splits task=%s base=%d novel=%d seed=%d',
        task, n_base, n_novel, seed,
    )
    return manifest


def _split_specs(
    split: str,
    count: int,
    task: str,
    seed: int,
    palette: Sequence[Color],
) -> List[EnvironmentSpec]:
    rng = seeded_rng(seed, 'splits', split)
    names = required_objects(task)
    used: List[Tuple[int, ...]] = []
    specs = []
    for index in range(count):
        assignment = _fresh_assignment(rng, len(palette), len(names), used)
        used.append(assignment)
        objects = tuple(
            ObjectSpec(
                name=name,
                kind=_KINDS[name],
                position=_nominal_position(rng, name),
                radius=RADIUS[_KINDS[name]],
                color=palette[color_index],
            )
            for name, color_index in zip(names, assignment)
        )
        specs.append(EnvironmentSpec(
            env_id='{0}-{1}-{2:03d}'.format(task.lower(), split, index),
            task=task,
            objects=objects,
            target_bowl=int(rng.integers(0, 2)),
            split=split,
        ))
    return specs


def _fresh_assignment(
    rng: np.random.Generator,
    palette_size: int,
    per_env: int,
    used: Sequence[Tuple[int, ...]],
) -> Tuple[int, ...]:
    while True:
        assignment = tuple(
            int(index)
            for index in rng.permutation(palette_size)[:per_env]
        )
        if assignment not in used:
            return assignment


def _nominal_position(
    rng: np.random.Generator,
    name: str,
) -> Tuple[float, float]:
    (x_low, x_high), (y_low, y_high) = SPAWN_REGIONS[name]
    return (
        float(rng.uniform(x_low, x_high)),
        float(rng.uniform(y_low, y_high)),
    )
