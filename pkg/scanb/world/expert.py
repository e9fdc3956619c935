"""
Scripted experts.

An expert follows a plan of waypoints: reach and grasp the cube,
carry and place it, and for the three-stage task push the cup off the
table. A :class:`LengthProfile` decides how fast each stage is executed,
how often the expert pauses and which detours it takes, so demonstrations
of one scene may differ a lot in length and in stage timing.
"""

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from typing_extensions import Final, final

from scanb.exceptions import ContractError, ExpertError
from scanb.serialize import Payload, to_payload
from scanb.world.render import ObservationState
from scanb.world.spec import STAGE_COUNT, TASK_PPP, Point
from scanb.world.state import (
    CARRY_HEIGHT,
    EFFECTOR_RADIUS,
    EMBODIMENT_AGENT,
    EMBODIMENT_ALT,
    EMBODIMENTS,
    MAX_DISPLACEMENT,
    PUSH_HEIGHT,
    Z_RANGE,
    Action,
    Vector3,
    WorldState,
    pick_height,
    place_height,
)

#: Named amounts of demonstration length variance.
VARIANCE_NONE: Final = 'none'
VARIANCE_LOW: Final = 'low'
VARIANCE_HIGH: Final = 'high'
VARIANCES: Final = (VARIANCE_NONE, VARIANCE_LOW, VARIANCE_HIGH)

_OPEN: Final = 1.0
_CLOSED: Final = 0.0
_ARRIVAL: Final = 1e-9
_PUSH_CLEARANCE: Final = 0.03
_PUSH_END: Final = 1.0

_STALLED_MSG: Final = 'Expert is stuck at {0} on the way to {1}'
_OUTSIDE_MSG: Final = 'Waypoint {0} is outside the reachable workspace'
_SPEED_MSG: Final = 'Stage speeds must be in (0, {0}], got {1}'
_STAGES_MSG: Final = 'Profile has {0} stages, task {1} needs {2}'


@final
@dataclass(frozen=True)
class Embodiment(object):
    """How one kind of expert moves."""

    speed_band: Tuple[float, float]
    approach_offset: Point
    approach_height: float


#: Motion character of each embodiment.
EMBODIMENT_MOTION: Final = {
    EMBODIMENT_AGENT: Embodiment(
        speed_band=(0.04, MAX_DISPLACEMENT),
        approach_offset=(0.0, 0.0),
        approach_height=CARRY_HEIGHT,
    ),
    EMBODIMENT_ALT: Embodiment(
        speed_band=(0.025, 0.05),
        approach_offset=(-0.08, 0.08),
        approach_height=0.2,
    ),
}


@final
@dataclass(frozen=True)
class LengthProfile(object):
    """
    Per-stage speeds, pauses and detours of one demonstration.

    Each pause holds the expert still for ``pause_length`` steps.
    ``extra_hold`` is added once, on the first waypoint.
    """

    speeds: Tuple[float, ...]
    pauses: Tuple[int, ...] = ()
    pause_length: int = 0
    detours: Tuple[Tuple[Point, ...], ...] = ()
    extra_hold: int = 0

    def __post_init__(self) -> None:
        """Speeds must be positive and reachable in one step."""
        for speed in self.speeds:
            if not 0 < speed <= MAX_DISPLACEMENT:
                raise ContractError(_SPEED_MSG.format(MAX_DISPLACEMENT, speed))

    def pauses_of(self, stage: int) -> int:
        """Pause count of ``stage``, zero when not given."""
        return self.pauses[stage] if stage < len(self.pauses) else 0

    def detours_of(self, stage: int) -> Tuple[Point, ...]:
        """Detour points of ``stage``, none when not given."""
        return self.detours[stage] if stage < len(self.detours) else ()


@final
@dataclass(frozen=True)
class Waypoint(object):
    """Target pose, gripper command and hold time of one plan step."""

    target: Vector3
    gripper: float
    speed: float
    stage: int
    hold: int = 0


def minimal_profile(task: str) -> LengthProfile:
    """Fastest profile: no pauses, no detours, top speed everywhere."""
    return LengthProfile(speeds=(MAX_DISPLACEMENT,) * STAGE_COUNT[task])


def sample_profile(
    rng: np.random.Generator,
    task: str,
    embodiment: str,
    variance: str = VARIANCE_LOW,
) -> LengthProfile:
    """
    Draws a profile for ``embodiment``.

    Speeds come from the embodiment speed band; the variance level
    decides how many pauses and detours are added per stage.
    """
    low, high = EMBODIMENT_MOTION[embodiment].speed_band
    stages = STAGE_COUNT[task]
    if variance == VARIANCE_NONE:
        return LengthProfile(speeds=(high,) * stages)
    most = 1 if variance == VARIANCE_LOW else 3
    speeds = tuple(float(rng.uniform(low, high)) for _ in range(stages))
    pauses = tuple(int(rng.integers(0, most + 1)) for _ in range(stages))
    detours = tuple(
        tuple(
            (float(rng.uniform(0.1, 0.9)), float(rng.uniform(0.1, 0.9)))
            for _ in range(int(rng.integers(0, max(most - 1, 1) + 1)))
        )
        for _ in range(stages)
    )
    return LengthProfile(
        speeds=speeds,
        pauses=pauses,
        pause_length=int(rng.integers(2, 2 + 2 * most)),
        detours=detours,
    )


def detour_profile(
    rng: np.random.Generator,
    task: str,
    embodiment: str,
    detour_budget: int,
) -> LengthProfile:
    """Top-speed profile with ``detour_budget`` detours spread over stages."""
    high = EMBODIMENT_MOTION[embodiment].speed_band[1]
    stages = STAGE_COUNT[task]
    owners = rng.integers(0, stages, size=detour_budget)
    detours = tuple(
        tuple(
            (float(rng.uniform(0.1, 0.9)), float(rng.uniform(0.1, 0.9)))
            for owner in owners
            if owner == stage
        )
        for stage in range(stages)
    )
    return LengthProfile(speeds=(high,) * stages, detours=detours)


@final
class ScriptedExpert(object):
    """
    Waypoint controller for one episode.

    The plan is built from the first state it sees, so create
    a new expert for every rollout. :meth:`act` returns ``None``
    once the plan is complete.
    """

    __slots__ = (
        'embodiment',
        'profile',
        '_plan',
        '_index',
        '_held',
        '_last_seen',
    )

    def __init__(self, embodiment: str, profile: LengthProfile) -> None:
        """Checks the embodiment, the plan is built lazily."""
        if embodiment not in EMBODIMENTS:
            raise ContractError('Unknown embodiment {0!r}'.format(embodiment))
        self.embodiment = embodiment
        self.profile = profile
        self._plan: Optional[List[Waypoint]] = None
        self._index = 0
        self._held = 0
        self._last_seen: Optional[Tuple[Vector3, float, int]] = None

    @property
    def plan(self) -> List[Waypoint]:
        """Waypoints, empty until the first call to :meth:`act`."""
        return list(self._plan or [])

    def act(
        self,
        state: WorldState,
        observation: Optional[ObservationState] = None,
    ) -> Optional[Action]:
        """Next action toward the current waypoint, ``None`` when done."""
        if self._plan is None:
            self._plan = plan_waypoints(state, self.embodiment, self.profile)
        while self._index < len(self._plan):
            waypoint = self._plan[self._index]
            if not _reached(state, waypoint):
                self._check_progress(state)
                target = _toward(state.effector, waypoint)
                return Action(target, waypoint.gripper)
            if self._held < waypoint.hold:
                self._held += 1
                return Action(waypoint.target, waypoint.gripper)
            self._index += 1
            self._held = 0
        return None

    def _check_progress(self, state: WorldState) -> None:
        seen = (state.effector, state.gripper, self._index)
        if seen == self._last_seen:
            target = self.plan[self._index].target
            raise ExpertError(_STALLED_MSG.format(state.effector, target))
        self._last_seen = seen


def scripted_expert(
    state: WorldState,
    embodiment: str,
    profile: LengthProfile,
) -> Action:
    """
    First action of a fresh expert in ``state``.

    Stateless entry point, the :class:`ScriptedExpert` carries the
    plan between steps.
    """
    action = ScriptedExpert(embodiment, profile).act(state)
    if action is None:
        return Action(state.effector, state.gripper)
    return action


def plan_waypoints(  # noqa: WPS210
    state: WorldState,
    embodiment: str,
    profile: LengthProfile,
) -> List[Waypoint]:
    """Builds the full plan for the task of ``state``."""
    stages = STAGE_COUNT[state.task]
    if len(profile.speeds) != stages:
        raise ContractError(
            _STAGES_MSG.format(len(profile.speeds), state.task, stages),
        )
    motion = EMBODIMENT_MOTION[embodiment]
    cube = state.body('cube')
    bowl = state.body('bowl{0}'.format(state.target_bowl))
    pick_z = pick_height(cube)
    place_z = place_height(bowl, cube)

    legs: List[List[Tuple[Vector3, float]]] = [
        _travel(
            state, motion, profile.detours_of(0), (cube.x, cube.y), _OPEN,
        ) + [
            ((cube.x, cube.y, pick_z), _OPEN),
            ((cube.x, cube.y, pick_z), _CLOSED),
        ],
        [((cube.x, cube.y, CARRY_HEIGHT), _CLOSED)] + _travel(
            state, motion, profile.detours_of(1), (bowl.x, bowl.y), _CLOSED,
        ) + [
            ((bowl.x, bowl.y, place_z), _CLOSED),
            ((bowl.x, bowl.y, place_z), _OPEN),
            ((bowl.x, bowl.y, CARRY_HEIGHT), _OPEN),
        ],
    ]
    if state.task == TASK_PPP:
        cup = state.body('cup')
        start_x = cup.x - cup.radius - EFFECTOR_RADIUS - _PUSH_CLEARANCE
        legs.append(_travel(
            state, motion, profile.detours_of(2), (start_x, cup.y), _OPEN,
        ) + [
            ((start_x, cup.y, PUSH_HEIGHT), _OPEN),
            ((_PUSH_END, cup.y, PUSH_HEIGHT), _OPEN),
            ((_PUSH_END, cup.y, CARRY_HEIGHT), _OPEN),
        ])

    plan: List[Waypoint] = []
    for stage, leg in enumerate(legs):
        holds = _spread_pauses(
            len(leg), profile.pauses_of(stage), profile.pause_length,
        )
        plan.extend(
            Waypoint(
                target=target,
                gripper=gripper,
                speed=profile.speeds[stage],
                stage=stage,
                hold=hold,
            )
            for (target, gripper), hold in zip(leg, holds)
        )
    plan[0] = _with_hold(plan[0], profile.extra_hold)
    for waypoint in plan:
        _check_reachable(state, waypoint.target)
    return plan


def _travel(
    state: WorldState,
    motion: Embodiment,
    detours: Sequence[Point],
    goal: Point,
    gripper: float,
) -> List[Tuple[Vector3, float]]:
    path = [((x, y, CARRY_HEIGHT), gripper) for x, y in detours]
    approach = (
        _clamp(goal[0] + motion.approach_offset[0], state, 0),
        _clamp(goal[1] + motion.approach_offset[1], state, 1),
    )
    if approach != goal:
        path.append(((*approach, motion.approach_height), gripper))
    path.append(((goal[0], goal[1], CARRY_HEIGHT), gripper))
    return path


def _spread_pauses(legs: int, pauses: int, length: int) -> List[int]:
    holds = [0] * legs
    for pause in range(pauses):
        holds[pause % legs] += length
    return holds


def _with_hold(waypoint: Waypoint, extra: int) -> Waypoint:
    if not extra:
        return waypoint
    return Waypoint(
        target=waypoint.target,
        gripper=waypoint.gripper,
        speed=waypoint.speed,
        stage=waypoint.stage,
        hold=waypoint.hold + extra,
    )


def _clamp(coordinate: float, state: WorldState, axis: int) -> float:
    return min(max(coordinate, state.bounds.low[axis]), state.bounds.high[axis])


def _check_reachable(state: WorldState, target: Vector3) -> None:
    inside = state.bounds.contains(target[0], target[1])
    if not inside or not Z_RANGE[0] <= target[2] <= Z_RANGE[1]:
        raise ExpertError(_OUTSIDE_MSG.format(target))


def _reached(state: WorldState, waypoint: Waypoint) -> bool:
    distance = math.dist(state.effector, waypoint.target)
    opened = state.gripper >= 0.5
    return distance <= _ARRIVAL and opened == (waypoint.gripper >= 0.5)


def _toward(effector: Vector3, waypoint: Waypoint) -> Vector3:
    delta = np.subtract(waypoint.target, effector)
    distance = float(np.linalg.norm(delta))
    if distance <= waypoint.speed:
        return waypoint.target
    moved = np.add(effector, delta * (waypoint.speed / distance))
    return (float(moved[0]), float(moved[1]), float(moved[2]))


@to_payload.instance(LengthProfile)
def _to_payload_profile(instance: LengthProfile) -> Payload:
    return {
        'speeds': list(instance.speeds),
        'pauses': list(instance.pauses),
        'pause_length': instance.pause_length,
        'detours': [
            [list(point) for point in stage] for stage in instance.detours
        ],
        'extra_hold': instance.extra_hold,
    }
