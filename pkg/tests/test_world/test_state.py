import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace

import pytest

from scanb.exceptions import ContractError
from scanb.world.state import (
    BOWL_FLOOR,
    EMBODIMENT_ALT,
    MAX_DISPLACEMENT,
    Action,
    init_environment,
    is_solved,
    pick_height,
    step,
    steps_taken,
    thread_steps_taken,
)


def test_initial_state_is_seeded(pp_specs) -> None:
    """Ensures that one scene seed always gives one initial state."""
    first = init_environment(pp_specs[0], 5)

    assert first == init_environment(pp_specs[0], 5)
    assert first != init_environment(pp_specs[0], 6)
    assert first.gripper == 1.0
    assert first.grasped is None


def test_unknown_embodiment(pp_specs) -> None:
    """Ensures that only known embodiments can be spawned."""
    with pytest.raises(ContractError):
        init_environment(pp_specs[0], 0, embodiment='robot')


def test_non_finite_action() -> None:
    """Ensures that actions must be finite."""
    with pytest.raises(ContractError):
        Action((0.5, math.nan, 0.2), 1.0)


def test_displacement_is_bounded(pp_specs) -> None:
    """Ensures that one step moves the effector by at most the limit."""
    state = init_environment(pp_specs[0], 1)
    moved = step(state, Action((0.9, 0.9, 0.3), 1.0))

    assert math.dist(state.effector, moved.effector) <= MAX_DISPLACEMENT + 1e-12
    assert moved.step == state.step + 1


def test_effector_stays_on_table(pp_specs) -> None:
    """Ensures that targets beyond the table are clipped to its edge."""
    state = replace(init_environment(pp_specs[0], 1), effector=(0.98, 0.5, 0.3))
    moved = step(state, Action((2.0, 0.5, 0.3), 1.0))

    assert moved.effector[0] == 1.0


def test_grasp_and_release(pp_specs) -> None:
    """Ensures that closing over the cube grasps it and opening drops it."""
    spec = pp_specs[0]
    state = init_environment(spec, 2)
    cube = state.body('cube')
    hover = (cube.x, cube.y, pick_height(cube))
    state = step(replace(state, effector=hover), Action(hover, 0.0))

    assert state.grasped == 'cube'

    bowl = state.body(spec.target_name)
    above = (bowl.x, bowl.y, 0.2)
    state = step(replace(state, effector=above), Action(above, 0.0))
    assert state.body('cube').x == bowl.x

    state = step(state, Action(above, 1.0))
    assert state.grasped is None
    assert state.body('cube').z == BOWL_FLOOR
    assert is_solved(state)


def test_closing_far_from_cube(pp_specs) -> None:
    """Ensures that closing the gripper in the air grasps nothing."""
    state = init_environment(pp_specs[0], 2)
    closed = step(state, Action(state.effector, 0.0))

    assert closed.gripper == 0.0
    assert closed.grasped is None


def test_push_moves_cup_off_table(ppp_specs) -> None:
    """Ensures that a low effector pushing past the edge drops the cup."""
    state = init_environment(ppp_specs[0], 3)
    cup = state.body('cup')
    state = replace(state, effector=(cup.x - 0.08, cup.y, 0.04))
    for _ in range(40):
        target = (state.effector[0] + 0.02, cup.y, 0.04)
        state = step(state, Action(target, 0.0))

    assert not state.cup_on_table


def test_steps_are_counted(pp_specs) -> None:
    """Ensures that every simulator step is counted."""
    state = init_environment(pp_specs[0], 4, embodiment=EMBODIMENT_ALT)
    before = steps_taken()
    step(step(state, Action(state.effector, 1.0)), Action(state.effector, 1.0))

    assert steps_taken() == before + 2


def test_threaded_steps_are_all_counted(pp_specs) -> None:
    """Ensures that concurrent steps are never lost by the counter."""
    state = init_environment(pp_specs[0], 4)
    action = Action(state.effector, 1.0)

    def play(_: int) -> int:
        for _step in range(500):
            step(state, action)
        return thread_steps_taken()

    before = steps_taken()
    with ThreadPoolExecutor(max_workers=4) as pool:
        per_thread = list(pool.map(play, range(4)))

    assert steps_taken() == before + 2000
    assert sum(per_thread) >= 2000


def test_thread_counter_ignores_other_threads(pp_specs) -> None:
    """Ensures that steps of worker threads leave the caller's count."""
    state = init_environment(pp_specs[0], 4)
    before = thread_steps_taken()
    with ThreadPoolExecutor(max_workers=2) as pool:
        list(pool.map(
            lambda _: step(state, Action(state.effector, 1.0)), range(6),
        ))

    assert thread_steps_taken() == before
