import numpy as np
import pytest

from scanb.data.generate import (
    SUBOPTIMAL_RATIO,
    demonstrate,
    generate_episode,
    is_misaligned,
    make_suboptimal,
)
from scanb.exceptions import ContractError
from scanb.world.expert import minimal_profile
from scanb.world.render import RenderConfig
from scanb.world.state import EMBODIMENT_AGENT, EMBODIMENT_ALT

_SMALL = RenderConfig(frame_size=16, crop_size=8)


def _episode(spec, shots, expert=EMBODIMENT_AGENT, variance='low', seed=5):
    return generate_episode(spec, shots, expert, variance, seed, _SMALL)


def test_episode_layout(pp_specs) -> None:
    """Ensures that an episode holds K labeled demos and a query."""
    episode = _episode(pp_specs[0], 3)

    assert episode.shots == 3
    assert all(demo.has_actions for demo in episode.support)
    assert episode.query.has_actions
    assert episode.query.frames.shape[1:] == (4, 16, 16)
    assert episode.query.crops.shape[1:] == (4, 8, 8)
    assert len(episode.query.actions) == len(episode.query) - 1


def test_episode_is_seeded(pp_specs) -> None:
    """Ensures that one seed gives bit-identical episodes."""
    first = _episode(pp_specs[0], 2)
    second = _episode(pp_specs[0], 2)

    assert first == second


def test_alt_support_has_no_actions(pp_specs) -> None:
    """Ensures that the other embodiment only provides observations."""
    episode = _episode(pp_specs[1], 2, EMBODIMENT_ALT, seed=1)

    assert not any(demo.has_actions for demo in episode.support)
    assert {demo.embodiment for demo in episode.support} == {EMBODIMENT_ALT}
    assert episode.query.embodiment == EMBODIMENT_AGENT


def test_high_variance_is_misaligned(pp_specs) -> None:
    """Ensures that high variance spreads the first stage onsets."""
    episode = _episode(pp_specs[0], 3, variance='high', seed=2)

    assert is_misaligned(episode.support)


def test_suboptimal_is_long(pp_specs) -> None:
    """Ensures that a sub-optimal demo is at least twice the minimal one."""
    spec = pp_specs[2]
    demo = make_suboptimal(spec, EMBODIMENT_AGENT, 2, seed=3, config=_SMALL)
    shortest = demonstrate(
        spec, demo.scene_seed, EMBODIMENT_AGENT, minimal_profile(spec.task),
        keep_actions=False, config=_SMALL,
    )

    assert len(demo) >= SUBOPTIMAL_RATIO * len(shortest)
    assert demo.has_actions


def test_stage_labels_match_frames(ppp_specs) -> None:
    """Ensures that every frame has a stage label within the task."""
    episode = _episode(ppp_specs[0], 1, seed=0)
    labels = episode.query.stage_labels

    assert labels.shape == (len(episode.query),)
    assert set(np.unique(labels)) == {0, 1, 2}


@pytest.mark.parametrize(('shots', 'expert', 'variance'), [
    (0, EMBODIMENT_AGENT, 'low'),
    (1, 'robot', 'low'),
    (1, EMBODIMENT_AGENT, 'extreme'),
])
def test_invalid_requests(pp_specs, shots, expert, variance) -> None:
    """Ensures that impossible episode requests are contract errors."""
    with pytest.raises(ContractError):
        generate_episode(pp_specs[0], shots, expert, variance, 0, _SMALL)


def test_detour_budget_must_be_positive(pp_specs) -> None:
    """Ensures that a sub-optimal demo needs at least one detour."""
    with pytest.raises(ContractError):
        make_suboptimal(pp_specs[0], EMBODIMENT_AGENT, 0, seed=0)
