"""
Kinematic tabletop world.

The world is 2.5-D: bodies live on the table plane, ``z`` only matters
for picking, placing and pushing. States are immutable values and
:func:`step` is a pure function of a state and an action.
"""

import math
import threading
from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np
from typing_extensions import Final, final

from scanb.exceptions import ContractError, SpawnError
from scanb.numeric.rng import seeded_rng
from scanb.world.spec import (
    KIND_BOWL,
    KIND_CUP,
    Color,
    EnvironmentSpec,
    TableBounds,
)

#: Largest effector displacement per step.
MAX_DISPLACEMENT: Final = 0.08
#: Effector height range.
Z_RANGE: Final = (0.0, 0.5)
#: Height the effector travels at.
CARRY_HEIGHT: Final = 0.3
#: Height of the effector when pushing.
PUSH_HEIGHT: Final = 0.04
#: Effector radius used for lateral contact.
EFFECTOR_RADIUS: Final = 0.03
#: Tolerance around the pick height within which a grasp closes.
GRASP_TOLERANCE: Final = 0.02
#: Height of a bowl's floor.
BOWL_FLOOR: Final = 0.01
#: Gripper commands at or above it open the gripper.
GRIPPER_THRESHOLD: Final = 0.5

EMBODIMENT_AGENT: Final = 'agent'
EMBODIMENT_ALT: Final = 'alt'
EMBODIMENTS: Final = (EMBODIMENT_AGENT, EMBODIMENT_ALT)

_SPAWN_ATTEMPTS: Final = 100
_SPAWN_MARGIN: Final = 0.01
_ARRIVAL: Final = 1e-9

_step_lock = threading.Lock()
_step_counter = {'steps': 0}
_thread_steps = threading.local()

_SPAWN_MSG: Final = (
    'Can not place objects of {0} without overlap after {1} attempts'
)
_EMBODIMENT_MSG: Final = 'Unknown embodiment {0!r}, expected one of {1}'
_ACTION_MSG: Final = 'Action components must be finite, got {0}'

Vector3 = Tuple[float, float, float]


@final
@dataclass(frozen=True)
class Body(object):
    """Pose and appearance of one object in the world."""

    name: str
    kind: str
    x: float
    y: float
    z: float
    radius: float
    height: float
    color: Color

    def distance_xy(self, x: float, y: float) -> float:
        """Planar distance from the body center."""
        return math.hypot(self.x - x, self.y - y)


@final
@dataclass(frozen=True)
class WorldState(object):
    """
    Everything the simulator knows at one step.

    ``gripper`` is the open amount, ``1.0`` open and ``0.0`` closed.
    """

    task: str
    embodiment: str
    effector: Vector3
    gripper: float
    grasped: Optional[str]
    bodies: Tuple[Body, ...]
    step: int
    cup_on_table: bool
    target_bowl: int
    bounds: TableBounds

    def body(self, name: str) -> Body:
        """Finds a body by name."""
        for candidate in self.bodies:
            if candidate.name == name:
                return candidate
        raise KeyError(name)

    @property
    def effector_vector(self) -> Tuple[float, float, float, float]:
        """Effector position and open amount."""
        return (*self.effector, self.gripper)


@final
@dataclass(frozen=True)
class Action(object):
    """Absolute effector target and gripper open command."""

    target: Vector3
    gripper: float

    def __post_init__(self) -> None:
        """Rejects non-finite components."""
        if not all(math.isfinite(value) for value in (*self.target, self.gripper)):  # noqa: E501
            raise ContractError(_ACTION_MSG.format(self))

    @property
    def opens(self) -> bool:
        """Whether the command opens the gripper."""
        return self.gripper >= GRIPPER_THRESHOLD


def init_environment(
    spec: EnvironmentSpec,
    scene_seed: int,
    embodiment: str = EMBODIMENT_AGENT,
) -> WorldState:
    """
    Deterministic initial state of ``spec`` for ``scene_seed``.

    Object positions are jittered uniformly within ``spec.jitter``
    and rejection-sampled until every object is on the table
    and no two objects overlap.
    """
    if embodiment not in EMBODIMENTS:
        raise ContractError(_EMBODIMENT_MSG.format(embodiment, EMBODIMENTS))
    rng = seeded_rng(scene_seed, 'scene', spec.env_id)
    for _ in range(_SPAWN_ATTEMPTS):
        bodies = tuple(
            Body(
                name=obj.name,
                kind=obj.kind,
                x=obj.position[0] + rng.uniform(-spec.jitter, spec.jitter),
                y=obj.position[1] + rng.uniform(-spec.jitter, spec.jitter),
                z=0.0,
                radius=obj.radius,
                height=obj.height,
                color=obj.color,
            )
            for obj in spec.objects
        )
        if _spawn_is_valid(bodies, spec.bounds):
            break
    else:
        raise SpawnError(_SPAWN_MSG.format(spec.env_id, _SPAWN_ATTEMPTS))
    effector = (
        0.5 + rng.uniform(-0.05, 0.05),
        0.08 + rng.uniform(-0.03, 0.03),
        CARRY_HEIGHT,
    )
    return WorldState(
        task=spec.task,
        embodiment=embodiment,
        effector=effector,
        gripper=1.0,
        grasped=None,
        bodies=bodies,
        step=0,
        cup_on_table=True,
        target_bowl=spec.target_bowl,
        bounds=spec.bounds,
    )


def step(state: WorldState, action: Action) -> WorldState:
    """
    Advances the world by one step.

    The effector moves toward ``action.target`` by at most
    :data:`MAX_DISPLACEMENT`, clipped to the table and height range.
    A carried body follows the effector, a low moving effector pushes
    the cup, and gripper transitions grasp or release the cube.
    Every call is counted by :func:`steps_taken` and
    :func:`thread_steps_taken`.
    """
    with _step_lock:
        _step_counter['steps'] += 1
    _thread_steps.count = thread_steps_taken() + 1
    start = np.array(state.effector)
    target = np.array(action.target)
    delta = target - start
    distance = float(np.linalg.norm(delta))
    if distance > MAX_DISPLACEMENT:
        delta = delta * (MAX_DISPLACEMENT / distance)
    moved = start + delta
    moved[0] = min(max(moved[0], state.bounds.low[0]), state.bounds.high[0])
    moved[1] = min(max(moved[1], state.bounds.low[1]), state.bounds.high[1])
    moved[2] = min(max(moved[2], Z_RANGE[0]), Z_RANGE[1])
    effector: Vector3 = (float(moved[0]), float(moved[1]), float(moved[2]))
    has_moved = effector != state.effector

    bodies = state.bodies
    if state.grasped is not None:
        bodies = _carry(bodies, state.grasped, effector)
    cup_on_table = state.cup_on_table
    if has_moved and state.task == 'PPP' and cup_on_table:
        bodies, cup_on_table = _push(bodies, effector, state.bounds)

    gripper = 1.0 if action.opens else 0.0
    grasped = state.grasped
    if state.gripper >= GRIPPER_THRESHOLD and gripper < GRIPPER_THRESHOLD:
        grasped = _try_grasp(bodies, effector)
    elif state.gripper < GRIPPER_THRESHOLD <= gripper and grasped is not None:
        bodies = _release(bodies, grasped)
        grasped = None

    return replace(
        state,
        effector=effector,
        gripper=gripper,
        grasped=grasped,
        bodies=bodies,
        step=state.step + 1,
        cup_on_table=cup_on_table,
    )


def steps_taken() -> int:
    """Number of simulator steps taken so far by this process."""
    with _step_lock:
        return _step_counter['steps']


def thread_steps_taken() -> int:
    """Number of simulator steps taken so far by the calling thread."""
    return getattr(_thread_steps, 'count', 0)


def pick_height(body: Body) -> float:
    """Effector height at which ``body`` can be grasped."""
    return body.z + body.height / 2


def place_height(bowl: Body, carried: Body) -> float:
    """Effector height that rests ``carried`` just above ``bowl``."""
    return BOWL_FLOOR + carried.height / 2 + 0.02


def rests_in(body: Body, container: Body) -> bool:
    """Whether ``body`` center lies within the container (closed disc)."""
    return container.distance_xy(body.x, body.y) <= container.radius


def is_solved(state: WorldState) -> bool:
    """Goal test of the current state alone, without the history."""
    cube = state.body('cube')
    target = state.body('bowl{0}'.format(state.target_bowl))
    placed = state.grasped is None and rests_in(cube, target)
    if state.task == 'PPP':
        return placed and not state.cup_on_table
    return placed


def _spawn_is_valid(bodies: Tuple[Body, ...], bounds: TableBounds) -> bool:
    for index, body in enumerate(bodies):
        inside = (
            bounds.low[0] + body.radius <= body.x <= bounds.high[0] - body.radius and  # noqa: E501
            bounds.low[1] + body.radius <= body.y <= bounds.high[1] - body.radius  # noqa: E501
        )
        if not inside:
            return False
        for other in bodies[index + 1:]:
            gap = body.radius + other.radius + _SPAWN_MARGIN
            if body.distance_xy(other.x, other.y) < gap:
                return False
    return True


def _replace_body(bodies: Tuple[Body, ...], updated: Body) -> Tuple[Body, ...]:
    return tuple(
        updated if body.name == updated.name else body
        for body in bodies
    )


def _carry(
    bodies: Tuple[Body, ...],
    name: str,
    effector: Vector3,
) -> Tuple[Body, ...]:
    carried = next(body for body in bodies if body.name == name)
    return _replace_body(bodies, replace(
        carried,
        x=effector[0],
        y=effector[1],
        z=max(effector[2] - carried.height / 2, 0.0),
    ))


def _push(
    bodies: Tuple[Body, ...],
    effector: Vector3,
    bounds: TableBounds,
) -> Tuple[Tuple[Body, ...], bool]:
    cup = next(body for body in bodies if body.kind == KIND_CUP)
    if effector[2] > cup.height:
        return bodies, True
    contact = cup.radius + EFFECTOR_RADIUS
    distance = cup.distance_xy(effector[0], effector[1])
    if distance >= contact:
        return bodies, True
    if distance < _ARRIVAL:
        direction = (1.0, 0.0)
    else:
        direction = (
            (cup.x - effector[0]) / distance,
            (cup.y - effector[1]) / distance,
        )
    pushed = replace(
        cup,
        x=effector[0] + direction[0] * contact,
        y=effector[1] + direction[1] * contact,
    )
    on_table = bounds.contains(pushed.x, pushed.y)
    return _replace_body(bodies, pushed), on_table


def _try_grasp(bodies: Tuple[Body, ...], effector: Vector3) -> Optional[str]:
    cube = next(body for body in bodies if body.name == 'cube')
    near = cube.distance_xy(effector[0], effector[1]) <= cube.radius
    level = abs(effector[2] - pick_height(cube)) <= GRASP_TOLERANCE
    if near and level:
        return cube.name
    return None


def _release(bodies: Tuple[Body, ...], name: str) -> Tuple[Body, ...]:
    carried = next(body for body in bodies if body.name == name)
    floor = 0.0
    for body in bodies:
        if body.kind == KIND_BOWL and rests_in(carried, body):
            floor = BOWL_FLOOR
    return _replace_body(bodies, replace(carried, z=floor))
