from dataclasses import replace

import numpy as np
import pytest

from scanb.exceptions import ContractError
from scanb.world.expert import ScriptedExpert, minimal_profile
from scanb.world.judge import (
    Trajectory,
    check_success,
    rollout,
    stage_labels,
    stage_onsets,
)
from scanb.world.state import EMBODIMENT_AGENT, init_environment


class _Idle(object):
    def act(self, state, observation=None):
        """Ends the episode immediately."""


def _expert_run(spec, scene: int = 0) -> Trajectory:
    return rollout(
        spec,
        scene,
        ScriptedExpert(EMBODIMENT_AGENT, minimal_profile(spec.task)),
        max_steps=200,
    )


def test_rollout_is_deterministic(ppp_specs) -> None:
    """Ensures that two rollouts of one scene match frame for frame."""
    first, second = _expert_run(ppp_specs[0]), _expert_run(ppp_specs[0])

    assert first.states == second.states
    assert all(
        np.array_equal(left.frame, right.frame)
        for left, right in zip(first.observations, second.observations)
    )


@pytest.mark.parametrize(('task_specs', 'stages'), [
    ('pp_specs', (0, 1)),
    ('ppp_specs', (0, 1, 2)),
])
def test_stage_labels_cover_stages(request, task_specs, stages) -> None:
    """Ensures that expert runs pass through every stage in order."""
    spec = request.getfixturevalue(task_specs)[0]
    labels = stage_labels(_expert_run(spec), spec)

    assert tuple(sorted(set(labels))) == stages
    assert list(labels) == sorted(labels)
    assert len(stage_onsets(labels)) == len(stages)


def test_idle_controller_fails(pp_specs) -> None:
    """Ensures that doing nothing is never a success."""
    trajectory = rollout(pp_specs[0], 0, _Idle(), max_steps=50)
    success, labels = check_success(trajectory, pp_specs[0])

    assert len(trajectory) == 1
    assert not success
    assert labels == (0,)


def test_wrong_bowl_fails(pp_specs) -> None:
    """Ensures that placing into the other bowl is a failure."""
    spec = pp_specs[0]
    swapped = replace(spec, target_bowl=1 - spec.target_bowl)
    trajectory = _expert_run(swapped)

    assert check_success(trajectory, swapped)[0]
    assert not check_success(trajectory, spec)[0]


def test_stop_when_solved(pp_specs) -> None:
    """Ensures that a solved state ends the rollout early."""
    spec = pp_specs[0]
    full = _expert_run(spec)
    early = rollout(
        spec,
        0,
        ScriptedExpert(EMBODIMENT_AGENT, minimal_profile(spec.task)),
        max_steps=200,
        stop_when_solved=True,
    )

    assert len(early) <= len(full)
    assert check_success(early, spec)[0]


def test_counts_must_agree(pp_specs) -> None:
    """Ensures that a trajectory has one fewer action than states."""
    state = init_environment(pp_specs[0], 0)
    with pytest.raises(ContractError):
        Trajectory(states=(state,), actions=(object(),))  # type: ignore


def test_onsets() -> None:
    """Ensures that onsets mark the first frame of every stage."""
    assert stage_onsets((0, 0, 1, 1, 1, 2)) == (0, 2, 5)
