"""Rollouts, success judging and ground-truth stage labels."""

from dataclasses import dataclass
from typing import Optional, Tuple

from typing_extensions import Final, Protocol, final

from scanb.exceptions import ContractError
from scanb.world.render import ObservationState, RenderConfig, render
from scanb.world.spec import TASK_PPP, EnvironmentSpec
from scanb.world.state import (
    EMBODIMENT_AGENT,
    Action,
    WorldState,
    init_environment,
    is_solved,
    rests_in,
    step,
)

_STAGE_GRASPED: Final = 1
_STAGE_PUSH: Final = 2

_LENGTH_MSG: Final = 'Trajectory has {0} states and {1} actions'


class Controller(Protocol):
    """Anything that picks actions in a closed loop."""

    def act(
        self,
        state: WorldState,
        observation: Optional[ObservationState] = None,
    ) -> Optional[Action]:
        """Returns the next action, or ``None`` to end the episode."""


@final
@dataclass(frozen=True)
class Trajectory(object):
    """
    States visited and actions taken, one fewer action than states.

    ``observations`` holds the rendering of every state.
    """

    states: Tuple[WorldState, ...]
    actions: Tuple[Action, ...]
    observations: Tuple[ObservationState, ...] = ()

    def __post_init__(self) -> None:
        """Checks the state and action counts."""
        if len(self.actions) != len(self.states) - 1:
            raise ContractError(
                _LENGTH_MSG.format(len(self.states), len(self.actions)),
            )

    def __len__(self) -> int:
        """Number of states."""
        return len(self.states)


def rollout(  # noqa: WPS211
    spec: EnvironmentSpec,
    scene_seed: int,
    controller: Controller,
    max_steps: int,
    embodiment: str = EMBODIMENT_AGENT,
    stop_when_solved: bool = False,
    config: RenderConfig = RenderConfig(),  # noqa: B008
) -> Trajectory:
    """
    Runs ``controller`` from the initial state of ``(spec, scene_seed)``.

    Stops after ``max_steps`` steps, when the controller returns ``None``
    or, with ``stop_when_solved``, as soon as the goal holds.
    """
    state = init_environment(spec, scene_seed, embodiment)
    states = [state]
    observations = [render(state, config)]
    actions = []
    for _ in range(max_steps):
        if stop_when_solved and is_solved(state):
            break
        action = controller.act(state, observations[-1])
        if action is None:
            break
        state = step(state, action)
        actions.append(action)
        states.append(state)
        observations.append(render(state, config))
    return Trajectory(tuple(states), tuple(actions), tuple(observations))


def stage_labels(
    trajectory: Trajectory,
    spec: EnvironmentSpec,
) -> Tuple[int, ...]:
    """
    Stage of every state, derived from grasp and release events.

    The reach stage lasts until the cube is first grasped.
    For the three-stage task the push stage starts once the cube
    has been released inside the target bowl.
    """
    labels = []
    stage = 0
    previous: Optional[WorldState] = None
    for state in trajectory.states:
        if state.grasped == 'cube':
            stage = max(stage, _STAGE_GRASPED)
        released = (
            previous is not None and
            previous.grasped == 'cube' and
            state.grasped is None
        )
        if spec.task == TASK_PPP and released and _in_target(state, spec):
            stage = _STAGE_PUSH
        labels.append(stage)
        previous = state
    return tuple(labels)


def check_success(
    trajectory: Trajectory,
    spec: EnvironmentSpec,
) -> Tuple[bool, Tuple[int, ...]]:
    """
    Judges a complete trajectory and labels its stages.

    The cube must end released within the target bowl radius,
    boundary included, and must never have rested in the other bowl.
    The three-stage task also needs the cup center off the table.
    """
    distractor = spec.distractor_name
    settled_wrong = any(
        state.grasped is None and
        rests_in(state.body('cube'), state.body(distractor))
        for state in trajectory.states
    )
    last = trajectory.states[-1]
    success = (
        not settled_wrong and
        last.grasped is None and
        _in_target(last, spec)
    )
    if spec.task == TASK_PPP:
        cup = last.body('cup')
        success = success and not last.bounds.contains(cup.x, cup.y)
    return success, stage_labels(trajectory, spec)


def stage_onsets(labels: Tuple[int, ...]) -> Tuple[int, ...]:
    """Index of the first state of every stage that occurs."""
    onsets = []
    for index, label in enumerate(labels):
        if index == 0 or label != labels[index - 1]:
            onsets.append(index)
    return tuple(onsets)


def _in_target(state: WorldState, spec: EnvironmentSpec) -> bool:
    return rests_in(state.body('cube'), state.body(spec.target_name))
