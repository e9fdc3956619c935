"""
Closed-loop evaluation on novel environments.

Support demonstrations come from the dataset, so between loading a
checkpoint and the first rollout the simulator is never stepped.
Scene seeds depend only on the eval seed, the environment and the
playout index: every strategy plays the same scenes.
"""

import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from typing_extensions import Final, final

from scanb.data.generate import LENGTH_CAP
from scanb.data.records import (
    DatasetManifest,
    DemoFrames,
    Demonstration,
    EpisodeRecord,
)
from scanb.exceptions import ContractError
from scanb.harness.config import RunConfig
from scanb.harness.training import fine_tune
from scanb.model.policy import ScanModel
from scanb.numeric.checkpoint import Checkpoint
from scanb.numeric.rng import derive_seed
from scanb.serialize import Payload, to_payload
from scanb.world.expert import ScriptedExpert, minimal_profile
from scanb.world.judge import Controller, check_success, rollout
from scanb.world.render import RenderConfig
from scanb.world.spec import EnvironmentSpec
from scanb.world.state import EMBODIMENT_AGENT, thread_steps_taken

logger = logging.getLogger(__name__)

#: Environment variable capping rollout worker threads.
THREADS_VARIABLE: Final = 'SCANB_THREADS'
#: Rollout budget relative to the expert length cap.
BUDGET_FACTOR: Final = 2

_INTERACTION_MSG: Final = (
    'Simulator was stepped {0} times before the rollouts of {1!r}'
)
_NO_RECORDS_MSG: Final = (
    'Dataset has no episode for novel environment {0!r}'
)
_SHOTS_MSG: Final = (
    'Environment {0!r} has {1} support demonstrations, need {2}'
)

ControllerFactory = Callable[[Sequence[DemoFrames]], Controller]


@final
@dataclass(frozen=True)
class SuccessReport(object):
    """
    Success rates of one policy on the novel environments.

    ``mean`` and ``std`` are taken across environments.
    """

    task: str
    strategy: str
    shots: int
    expert: str
    finetuned: bool
    playouts: int
    rates: Tuple[Tuple[str, float], ...]
    mean: float
    std: float
    steps_before_rollouts: int = 0

    @property
    def envs(self) -> int:
        """Number of evaluated environments."""
        return len(self.rates)


@to_payload.instance(SuccessReport)
def _to_payload_report(instance: SuccessReport) -> Payload:
    return {
        'task': instance.task,
        'strategy': instance.strategy,
        'shots': instance.shots,
        'expert': instance.expert,
        'finetuned': instance.finetuned,
        'playouts': instance.playouts,
        'rates': {env_id: rate for env_id, rate in instance.rates},
        'mean': instance.mean,
        'std': instance.std,
        'steps_before_rollouts': instance.steps_before_rollouts,
    }


def report_from_payload(payload: Mapping) -> SuccessReport:
    """Reads a report written with :func:`~scanb.serialize.write_json`."""
    return SuccessReport(
        task=str(payload['task']),
        strategy=str(payload['strategy']),
        shots=int(payload['shots']),
        expert=str(payload['expert']),
        finetuned=bool(payload['finetuned']),
        playouts=int(payload['playouts']),
        rates=tuple(sorted(
            (str(env_id), float(rate))
            for env_id, rate in payload['rates'].items()
        )),
        mean=float(payload['mean']),
        std=float(payload['std']),
        steps_before_rollouts=int(payload.get('steps_before_rollouts', 0)),
    )


@final
class ExpertController(object):
    """Scripted agent expert behind the policy interface."""

    __slots__ = ('_expert',)

    def __init__(self, task: str) -> None:
        """Fastest profile of the agent embodiment."""
        self._expert = ScriptedExpert(EMBODIMENT_AGENT, minimal_profile(task))

    def act(self, state, observation=None):
        """Delegates to the scripted expert."""
        return self._expert.act(state, observation)


def expert_factory(task: str) -> ControllerFactory:
    """Controllers that ignore the support and solve the task."""
    return lambda support: ExpertController(task)


def model_factory(model: ScanModel) -> ControllerFactory:
    """Fresh :class:`PolicySession` per playout."""
    return model.session


def worker_count() -> int:
    """Rollout threads, from ``SCANB_THREADS``, at least one."""
    raw = os.environ.get(THREADS_VARIABLE, '1')
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def support_of(
    records: Mapping[str, Sequence[EpisodeRecord]],
    env_id: str,
    shots: int,
) -> Tuple[Demonstration, ...]:
    """First ``shots`` support demonstrations recorded for ``env_id``."""
    episodes = records.get(env_id, ())
    if not episodes:
        raise ContractError(_NO_RECORDS_MSG.format(env_id))
    support = episodes[0].support
    if len(support) < shots:
        raise ContractError(_SHOTS_MSG.format(env_id, len(support), shots))
    return tuple(support[:shots])


def scene_seed(eval_seed: int, env_id: str, playout: int) -> int:
    """Scene of one evaluation playout."""
    return derive_seed(eval_seed, 'playout', env_id, playout)


def play_env(  # noqa: WPS211
    spec: EnvironmentSpec,
    support: Sequence[Demonstration],
    make_controller: ControllerFactory,
    playouts: int,
    eval_seed: int,
    render_config: RenderConfig,
    trace_path: Optional[Path] = None,
) -> float:
    """Success rate of ``playouts`` closed-loop rollouts in one environment."""
    frames = [demo.frames_only() for demo in support]
    budget = BUDGET_FACTOR * LENGTH_CAP[spec.task]

    def play(playout: int) -> Tuple[bool, List[dict]]:
        controller = make_controller(frames)
        trajectory = rollout(
            spec,
            scene_seed(eval_seed, spec.env_id, playout),
            controller,
            max_steps=budget,
            embodiment=EMBODIMENT_AGENT,
            config=render_config,
        )
        success, _ = check_success(trajectory, spec)
        trace = getattr(controller, 'trace', [])
        return success, [
            {'env': spec.env_id, 'playout': playout, **step.as_row()}
            for step in trace
        ]

    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        outcomes = list(pool.map(play, range(playouts)))
    if trace_path is not None:
        trace_path.parent.mkdir(parents=True, exist_ok=True)
        with trace_path.open('w', encoding='utf-8') as stream:
            for _, rows in outcomes:
                for row in rows:
                    stream.write(json.dumps(row, sort_keys=True) + '\n')
    rate = sum(success for success, _ in outcomes) / playouts
    logger.info(
        'eval env=%s playouts=%d rate=%.3f', spec.env_id, playouts, rate,
    )
    return rate


def evaluate(  # noqa: WPS210, WPS211
    config: RunConfig,
    manifest: DatasetManifest,
    records: Mapping[str, Sequence[EpisodeRecord]],
    model: Optional[ScanModel] = None,
    make_controller: Optional[ControllerFactory] = None,
    shots: Optional[int] = None,
    trace_dir: Optional[Path] = None,
) -> SuccessReport:
    """
    Plays every novel environment and aggregates across environments.

    With ``finetune.enabled`` the model is fine-tuned on each
    environment's support first, and restored afterwards.
    """
    k = config.eval.shots if shots is None else shots
    finetuned = config.finetune.enabled and model is not None
    if make_controller is None:
        if model is None:
            raise ContractError('Either a model or a controller is required')
        make_controller = model_factory(model)
    render_config = config.render_config
    initial = Checkpoint.capture(model.parameters(), {}) if finetuned else None
    rates = []
    for spec in manifest.novel_specs:
        support = support_of(records, spec.env_id, k)
        steps_at_start = thread_steps_taken()
        if finetuned:
            fine_tune(
                model,
                support,
                config.finetune.steps,
                config.finetune.learning_rate,
                config.model.lambda_pos,
                config.model.lambda_gripper,
                seed=config.seeds.eval,
            )
        interactions = thread_steps_taken() - steps_at_start
        if interactions:
            raise ContractError(
                _INTERACTION_MSG.format(interactions, spec.env_id),
            )
        trace_path = None
        if trace_dir is not None:
            trace_path = trace_dir / '{0}.jsonl'.format(spec.env_id)
        rates.append((spec.env_id, play_env(
            spec, support, make_controller, config.eval.playouts,
            config.seeds.eval, render_config, trace_path,
        )))
        if initial is not None:
            initial.apply(model.parameters())
    values = np.array([rate for _, rate in rates])
    report = SuccessReport(
        task=manifest.task,
        strategy=config.run.strategy if model is not None else 'expert',
        shots=k,
        expert=config.data.expert,
        finetuned=finetuned,
        playouts=config.eval.playouts,
        rates=tuple(rates),
        mean=float(values.mean()),
        std=float(values.std()),
    )
    logger.info(
        'eval done strategy=%s shots=%d mean=%.4f std=%.4f',
        report.strategy, k, report.mean, report.std,
    )
    return report


def with_shots(report: SuccessReport, shots: int) -> SuccessReport:
    """Same report relabeled with another shot count."""
    return replace(report, shots=shots)
