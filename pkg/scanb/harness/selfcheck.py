"""
Oracle, gradient and simulator checks that run without any dataset.

Every check returns a :class:`CheckResult`; nothing here raises on a
failed comparison, so one run reports every problem at once.
"""

import logging
from dataclasses import dataclass
from typing import Callable, List, Sequence, Tuple

import numpy as np
from typing_extensions import Final, final

from scanb.data.generate import demonstrate
from scanb.data.records import DemoFrames, Demonstration
from scanb.data.splits import build_splits
from scanb.exceptions import ScanbError
from scanb.model.actor import ActorOutput
from scanb.model.conditioning import AttentionParams, sca_attend
from scanb.model.losses import loss_gripper, loss_pos
from scanb.model.policy import ScanModel
from scanb.model.recurrent import LstmCell, TemporalEncoding
from scanb.model.visual import FeatureSequence
from scanb.numeric.gradcheck import finite_diff_check
from scanb.numeric.ops import softmax_rows
from scanb.numeric.rng import derive_seed, seeded_rng
from scanb.numeric.tensor import constant
from scanb.world.expert import ScriptedExpert, minimal_profile
from scanb.world.judge import rollout
from scanb.world.spec import TASKS
from scanb.world.state import EMBODIMENT_AGENT, EMBODIMENT_ALT

logger = logging.getLogger(__name__)

#: Closed-form Gaussian NLL at zero residual, unit scale, three axes.
NLL_AT_MEAN: Final = 2.75682
#: Binary cross-entropy at probability one half.
BCE_AT_HALF: Final = 0.69315
CLOSED_FORM_TOLERANCE: Final = 1e-5
ORACLE_TOLERANCE: Final = 1e-10
GRADIENT_TOLERANCE: Final = 1e-4
PROBE_FRAME: Final = 8


@final
@dataclass(frozen=True)
class CheckResult(object):
    """Outcome of one check: the measured error and the bound it had."""

    name: str
    value: float
    bound: float
    detail: str = ''

    @property
    def passed(self) -> bool:
        """Whether the measured value is within the bound."""
        return self.value <= self.bound


def check_softmax(seed: int = 0) -> CheckResult:
    """Row softmax against ``exp(x - max) / sum``."""
    scores = seeded_rng(seed, 'selfcheck', 'softmax').normal(size=(5, 7))
    shifted = np.exp(scores - scores.max(axis=1, keepdims=True))
    expected = shifted / shifted.sum(axis=1, keepdims=True)
    actual = softmax_rows(constant(scores)).data
    return CheckResult(
        'softmax', float(np.abs(actual - expected).max()), ORACLE_TOLERANCE,
    )


def check_matmul(seed: int = 0) -> CheckResult:
    """Tensor product against numpy."""
    rng = seeded_rng(seed, 'selfcheck', 'matmul')
    left, right = rng.normal(size=(4, 6)), rng.normal(size=(6, 3))
    actual = (constant(left) @ constant(right)).data
    return CheckResult(
        'matmul', float(np.abs(actual - left @ right).max()), ORACLE_TOLERANCE,
    )


def check_lstm_cell(seed: int = 0) -> CheckResult:
    """One recurrent step against the textbook gate equations."""
    rng = seeded_rng(seed, 'selfcheck', 'lstm')
    cell = LstmCell(rng, 3, 2, 'probe')
    inputs = rng.normal(size=(1, 1, 3))
    hidden, state = rng.normal(size=(1, 1, 2)), rng.normal(size=(1, 1, 2))
    new_hidden, new_state = cell.step(
        constant(inputs) @ cell.input_weight,
        (constant(hidden), constant(state)),
        np.ones((1, 1, 1)),
    )
    gates = (
        inputs @ cell.input_weight.data +
        hidden @ cell.recurrent_weight.data +
        cell.bias.data
    )
    sig = _sigmoid(gates)
    expected_state = sig[..., 2:4] * state + sig[..., 0:2] * np.tanh(
        gates[..., 4:6],
    )
    expected_hidden = sig[..., 6:8] * np.tanh(expected_state)
    error = max(
        np.abs(new_hidden.data - expected_hidden).max(),
        np.abs(new_state.data - expected_state).max(),
    )
    return CheckResult('lstm-cell', float(error), ORACLE_TOLERANCE)


def check_closed_forms() -> List[CheckResult]:
    """Both losses at points with a known value."""
    out = ActorOutput(
        mean=constant(np.zeros((1, 3))),
        gripper=constant([0.5]),
        log_sigma=constant(np.zeros(3)),
    )
    labels = np.zeros((1, 4))
    return [
        CheckResult(
            'nll-closed-form',
            abs(loss_pos(out, labels).item() - NLL_AT_MEAN),
            CLOSED_FORM_TOLERANCE,
        ),
        CheckResult(
            'bce-closed-form',
            abs(loss_gripper(out, labels).item() - BCE_AT_HALF),
            CLOSED_FORM_TOLERANCE,
        ),
    ]


def check_stage_attention(seed: int = 0) -> CheckResult:
    """Stage-conscious attention against ``softmax(e W h^T)``."""
    rng = seeded_rng(seed, 'selfcheck', 'attention')
    params = AttentionParams(rng, 'probe')
    playout = rng.normal(size=(5, 128))
    demo = rng.normal(size=(7, 64))
    actual = sca_attend(
        FeatureSequence(constant(playout), np.ones(5)),
        TemporalEncoding(constant(demo[None]), np.ones((1, 7))),
        params,
    ).data
    scores = playout @ params.weight.data @ demo.T
    shifted = np.exp(scores - scores.max(axis=1, keepdims=True))
    expected = shifted / shifted.sum(axis=1, keepdims=True)
    return CheckResult(
        'stage-attention',
        float(np.abs(actual - expected).max()),
        ORACLE_TOLERANCE,
    )


def probe_episode(
    seed: int = 0,
    shots: int = 2,
    length: int = 4,
) -> Tuple[Tuple[DemoFrames, ...], Demonstration]:
    """Tiny random support and query on ``8 x 8`` frames."""
    rng = seeded_rng(seed, 'selfcheck', 'probe')

    def frames() -> np.ndarray:
        return rng.uniform(size=(length, 4, PROBE_FRAME, PROBE_FRAME))

    support = tuple(
        DemoFrames(frames(), frames(), rng.uniform(size=(length, 4)))
        for _ in range(shots)
    )
    actions = np.concatenate([
        rng.uniform(-0.5, 0.5, size=(length - 1, 3)),
        rng.integers(0, 2, size=(length - 1, 1)).astype(np.float64),
    ], axis=1)
    query = Demonstration(
        env_id='probe',
        scene_seed=0,
        embodiment=EMBODIMENT_AGENT,
        frames=frames(),
        crops=frames(),
        effectors=rng.uniform(size=(length, 4)),
        stage_labels=np.zeros(length, dtype=np.int64),
        actions=actions,
    )
    return support, query


def check_gradients(strategy: str, seed: int = 0) -> CheckResult:
    """Analytic against central-difference gradients of a whole model."""
    model = ScanModel(strategy, seed=seed)
    for parameter in model.parameters():
        if parameter.name.endswith('.gamma'):
            parameter.assign(np.full(parameter.shape, 0.5))
    support, query = probe_episode(seed)
    error = finite_diff_check(
        lambda: model.query_loss(support, query, 1.0, 0.1).total,
        model.parameters(),
        samples=1,
        seed=seed,
        min_magnitude=1e-4,
    )
    return CheckResult(
        'gradients-{0}'.format(strategy), error, GRADIENT_TOLERANCE,
    )


def check_experts(scenes: int = 10, seed: int = 0) -> List[CheckResult]:
    """Fastest experts of both embodiments solve every scene of both tasks."""
    results = []
    for task in TASKS:
        spec = build_splits(1, 1, task, seed).base_specs[0]
        for embodiment in (EMBODIMENT_AGENT, EMBODIMENT_ALT):
            failures = 0
            for scene in range(scenes):
                try:
                    demonstrate(
                        spec,
                        derive_seed(seed, 'selfcheck', task, scene),
                        embodiment,
                        minimal_profile(task),
                        keep_actions=False,
                    )
                except ScanbError:
                    failures += 1
            results.append(CheckResult(
                'expert-{0}-{1}'.format(task, embodiment),
                float(failures),
                0,
                '{0} scenes'.format(scenes),
            ))
    return results


def check_determinism(seed: int = 0) -> CheckResult:
    """Two rollouts of the same scene visit identical states."""
    task = TASKS[0]
    spec = build_splits(1, 1, task, seed).base_specs[0]

    def play() -> np.ndarray:
        trajectory = rollout(
            spec,
            seed,
            ScriptedExpert(EMBODIMENT_AGENT, minimal_profile(task)),
            max_steps=60,
        )
        return np.stack([obs.frame for obs in trajectory.observations])

    first, second = play(), play()
    same = first.shape == second.shape and np.array_equal(first, second)
    return CheckResult('determinism', 0.0 if same else 1.0, 0)


def run_selfcheck(
    strategies: Sequence[str],
    scenes: int = 10,
    seed: int = 0,
) -> List[CheckResult]:
    """Every check, in a fixed order."""
    checks: List[Callable[[], object]] = [
        lambda: check_softmax(seed),
        lambda: check_matmul(seed),
        lambda: check_lstm_cell(seed),
        check_closed_forms,
        lambda: check_stage_attention(seed),
        *[_bind_gradients(strategy, seed) for strategy in strategies],
        lambda: check_experts(scenes, seed),
        lambda: check_determinism(seed),
    ]
    results: List[CheckResult] = []
    for check in checks:
        outcome = check()
        batch = outcome if isinstance(outcome, list) else [outcome]
        for result in batch:
            level = logging.INFO if result.passed else logging.ERROR
            logger.log(
                level, 'selfcheck name=%s value=%.3g bound=%.3g passed=%s',
                result.name, result.value, result.bound, result.passed,
            )
        results.extend(batch)
    return results


def _bind_gradients(strategy: str, seed: int) -> Callable[[], CheckResult]:
    return lambda: check_gradients(strategy, seed)


def _sigmoid(values: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-values))
