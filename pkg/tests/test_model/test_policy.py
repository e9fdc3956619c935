import numpy as np
import pytest

from scanb.exceptions import ContractError
from scanb.harness.selfcheck import check_gradients
from scanb.model.conditioning import STRATEGIES
from scanb.model.policy import ScanModel
from scanb.world.render import RenderConfig, render
from scanb.world.state import EMBODIMENT_AGENT, init_environment

_SMALL = RenderConfig(frame_size=16, crop_size=8)


@pytest.fixture(scope='module')
def scan_model() -> ScanModel:
    """Seeded stage-conscious model."""
    return ScanModel('scan', seed=0)


@pytest.fixture()
def observations(pp_specs):
    """First frames of one agent playout."""
    state = init_environment(pp_specs[0], 0, EMBODIMENT_AGENT)
    return [render(state, _SMALL)]


def test_seeded_weights() -> None:
    """Ensures that weights depend on the seed only."""
    first = ScanModel('tanet', seed=3).parameters()
    second = ScanModel('tanet', seed=3).parameters()
    other = ScanModel('tanet', seed=4).parameters()

    assert all(
        np.array_equal(left.data, right.data)
        for left, right in zip(first, second)
    )
    assert not all(
        np.array_equal(left.data, right.data)
        for left, right in zip(first, other)
    )


@pytest.mark.parametrize('strategy', STRATEGIES)
def test_parameter_names_are_unique(strategy: str) -> None:
    """Ensures that checkpoints can address every parameter by name."""
    names = [param.name for param in ScanModel(strategy).parameters()]

    assert len(names) == len(set(names))


@pytest.mark.parametrize('strategy', STRATEGIES)
def test_query_loss_is_finite(probe, strategy: str) -> None:
    """Ensures that every strategy produces a finite loss."""
    support, query = probe
    bundle = ScanModel(strategy).query_loss(support, query, 1.0, 0.1)

    assert all(np.isfinite(value) for value in bundle.as_row().values())


def test_last_frame_window(probe, scan_model) -> None:
    """Ensures that a one-frame window only has zero inverse losses."""
    support, query = probe
    bundle = scan_model.query_loss(support, query, 1.0, 0.1, start=3)

    assert bundle.inv_pos.item() == 0
    assert bundle.act_pos.item() == 0


@pytest.mark.parametrize('start', [-1, 4])
def test_window_outside_playout(probe, scan_model, start: int) -> None:
    """Ensures that a window must start inside the query."""
    support, query = probe

    with pytest.raises(ContractError):
        scan_model.query_loss(support, query, 1.0, 0.1, start=start)


def test_empty_support(probe, scan_model) -> None:
    """Ensures that conditioning without demonstrations is refused."""
    _, query = probe

    with pytest.raises(ContractError):
        scan_model.query_loss([], query, 1.0, 0.1)


def test_attention_per_demo(probe, scan_model) -> None:
    """Ensures that the task embedding exposes one map per demo."""
    support, query = probe
    task = scan_model.embed_task(support, query.frames)

    assert len(task.attention) == len(support)
    assert task.attention[0].shape == (len(query), len(support[0]))


@pytest.mark.parametrize('strategy', STRATEGIES)
def test_gradients(strategy: str) -> None:
    """Ensures that analytic gradients match central differences."""
    result = check_gradients(strategy)

    assert result.passed, result


def test_session_steps(probe, scan_model, observations) -> None:
    """Ensures that a session acts and records every step."""
    support, _ = probe
    session = scan_model.session(support)
    action = session.act(None, observations[0])
    second = session.act(None, observations[0])

    assert action.gripper in {0.0, 1.0}
    assert [step.t for step in session.trace] == [0, 1]
    assert len(session.trace[0].sigma) == 3
    assert second.target == tuple(session.trace[1].action[:3])


def test_session_matches_stateless(probe, scan_model, observations) -> None:
    """Ensures that replaying a history gives the session's action."""
    support, _ = probe
    history = observations * 3
    session = scan_model.session(support)
    actions = [session.act(None, obs) for obs in history]

    replayed = scan_model.act(history, support)

    assert np.allclose(replayed.target, actions[-1].target)
    assert replayed.gripper == actions[-1].gripper


def test_session_needs_observation(probe, scan_model) -> None:
    """Ensures that acting blind is refused."""
    session = scan_model.session(probe[0])

    with pytest.raises(ContractError):
        session.act(None, None)
    with pytest.raises(ContractError):
        scan_model.act([], probe[0])
