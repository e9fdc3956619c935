"""
Episode and demonstration generation.

Every rollout here is a scripted expert run on a seeded scene.
Failures are retried on the next sub-seed a bounded number of times.
"""

import logging
from typing import List, Optional, Tuple

import numpy as np
from typing_extensions import Final

from scanb.data.records import (
    Demonstration,
    EpisodeRecord,
    demonstration_from_trajectory,
)
from scanb.exceptions import ContractError, ExpertError
from scanb.numeric.rng import derive_seed, seeded_rng
from scanb.serialize import to_payload
from scanb.world.expert import (
    VARIANCE_HIGH,
    VARIANCE_LOW,
    VARIANCES,
    LengthProfile,
    ScriptedExpert,
    detour_profile,
    minimal_profile,
    sample_profile,
)
from scanb.world.judge import check_success, rollout, stage_onsets
from scanb.world.render import RenderConfig
from scanb.world.spec import TASK_PPP, EnvironmentSpec
from scanb.world.state import EMBODIMENT_AGENT, EMBODIMENTS

logger = logging.getLogger(__name__)

#: Longest demonstration, in steps, of each task.
LENGTH_CAP: Final = {'PP': 120, TASK_PPP: 180}
#: Required spread of stage-one onsets, relative to the mean length.
MISALIGNMENT: Final = 0.2
#: Suboptimal demonstrations are at least this many times longer.
SUBOPTIMAL_RATIO: Final = 2

RETRIES: Final = 8
SUPPORT_RETRIES: Final = 25

_SHOTS_MSG: Final = 'Need at least one shot, got {0}'
_BUDGET_MSG: Final = 'Detour budget must be at least 1, got {0}'
_VARIANCE_MSG: Final = 'Unknown length variance {0!r}, expected one of {1}'
_EMBODIMENT_MSG: Final = 'Unknown expert {0!r}, expected one of {1}'
_FAILED_MSG: Final = 'Expert failed on {0!r} after {1} attempts'
_MISALIGNED_MSG: Final = (
    'Could not misalign {0} demonstrations of {1!r} after {2} attempts'
)
_UNSOLVED_MSG: Final = (
    'Expert rollout on {0!r} seed {1} did not succeed within {2} steps'
)


def demonstrate(  # noqa: WPS211
    spec: EnvironmentSpec,
    scene_seed: int,
    embodiment: str,
    profile: LengthProfile,
    keep_actions: bool,
    config: RenderConfig = RenderConfig(),  # noqa: B008
) -> Demonstration:
    """
    Records one successful expert rollout.

    Raises :class:`ExpertError` if the rollout does not succeed
    within the length cap of the task.
    """
    cap = LENGTH_CAP[spec.task]
    trajectory = rollout(
        spec,
        scene_seed,
        ScriptedExpert(embodiment, profile),
        max_steps=cap,
        embodiment=embodiment,
        config=config,
    )
    success, labels = check_success(trajectory, spec)
    if not success:
        raise ExpertError(
            _UNSOLVED_MSG.format(spec.env_id, scene_seed, cap),
        )
    return demonstration_from_trajectory(
        trajectory,
        spec,
        scene_seed,
        labels,
        keep_actions=keep_actions,
        profile=to_payload(profile),  # type: ignore
    )


def generate_episode(  # noqa: WPS211
    spec: EnvironmentSpec,
    shots: int,
    expert: str,
    length_variance: str,
    seed: int,
    config: RenderConfig = RenderConfig(),  # noqa: B008
) -> EpisodeRecord:
    """
    Builds ``shots`` support demonstrations and one query playout.

    Support demonstrations come from ``expert`` and keep actions only
    for the agent embodiment. The query is always an agent rollout
    with actions. With high variance and several shots the support
    is regenerated until stage-one onsets are spread apart.
    """
    if shots < 1:
        raise ContractError(_SHOTS_MSG.format(shots))
    if length_variance not in VARIANCES:
        raise ContractError(_VARIANCE_MSG.format(length_variance, VARIANCES))
    if expert not in EMBODIMENTS:
        raise ContractError(_EMBODIMENT_MSG.format(expert, EMBODIMENTS))
    must_spread = length_variance == VARIANCE_HIGH and shots > 1
    attempts = SUPPORT_RETRIES if must_spread else 1
    support: Tuple[Demonstration, ...] = ()
    for attempt in range(attempts):
        support = tuple(
            _retrying(
                spec, seed, ('support', attempt, index), expert,
                length_variance, config,
            )
            for index in range(shots)
        )
        if not must_spread or is_misaligned(support):
            break
    else:
        raise ExpertError(
            _MISALIGNED_MSG.format(shots, spec.env_id, SUPPORT_RETRIES),
        )
    query = _retrying(
        spec, seed, ('query',), EMBODIMENT_AGENT, VARIANCE_LOW, config,
    )
    logger.debug(
        'episode env=%s shots=%d expert=%s lengths=%s query=%d',
        spec.env_id, shots, expert, [len(demo) for demo in support], len(query),
    )
    return EpisodeRecord(env_id=spec.env_id, support=support, query=query)


def make_suboptimal(
    spec: EnvironmentSpec,
    expert: str,
    detour_budget: int,
    seed: int,
    config: RenderConfig = RenderConfig(),  # noqa: B008
) -> Demonstration:
    """
    A successful demonstration at least twice as long as the minimal one.

    The expert takes ``detour_budget`` detours; if that is not enough
    it also holds still at the start until the length ratio is reached.
    """
    if detour_budget < 1:
        raise ContractError(_BUDGET_MSG.format(detour_budget))
    keep_actions = expert == EMBODIMENT_AGENT
    for attempt in range(RETRIES):
        scene_seed = derive_seed(seed, 'suboptimal', attempt)
        rng = seeded_rng(seed, 'suboptimal-profile', attempt)
        try:
            shortest = demonstrate(
                spec, scene_seed, expert, minimal_profile(spec.task),
                keep_actions=False, config=config,
            )
            profile = detour_profile(rng, spec.task, expert, detour_budget)
            demo = demonstrate(
                spec, scene_seed, expert, profile, keep_actions, config,
            )
            missing = SUBOPTIMAL_RATIO * len(shortest) - len(demo)
            if missing > 0:
                profile = LengthProfile(
                    speeds=profile.speeds,
                    detours=profile.detours,
                    extra_hold=missing,
                )
                demo = demonstrate(
                    spec, scene_seed, expert, profile, keep_actions, config,
                )
        except ExpertError as exc:
            logger.warning(
                'suboptimal env=%s attempt=%d error=%s',
                spec.env_id, attempt, exc,
            )
            continue
        return demo
    raise ExpertError(_FAILED_MSG.format(spec.env_id, RETRIES))


def is_misaligned(support: Tuple[Demonstration, ...]) -> bool:
    """Whether stage-one onsets spread over a fifth of the mean length."""
    onsets: List[int] = []
    for demo in support:
        starts = stage_onsets(tuple(int(label) for label in demo.stage_labels))
        onsets.append(starts[1] if len(starts) > 1 else len(demo))
    mean_length = float(np.mean([len(demo) for demo in support]))
    return max(onsets) - min(onsets) >= MISALIGNMENT * mean_length


def _retrying(  # noqa: WPS211
    spec: EnvironmentSpec,
    seed: int,
    stream: Tuple,
    embodiment: str,
    variance: str,
    config: RenderConfig,
) -> Demonstration:
    error: Optional[ExpertError] = None
    for attempt in range(RETRIES):
        scene_seed = derive_seed(seed, *stream, attempt)
        rng = seeded_rng(seed, 'profile', *stream, attempt)
        profile = sample_profile(rng, spec.task, embodiment, variance)
        try:
            return demonstrate(
                spec,
                scene_seed,
                embodiment,
                profile,
                keep_actions=embodiment == EMBODIMENT_AGENT,
                config=config,
            )
        except ExpertError as exc:
            error = exc
            logger.debug(
                'retry env=%s attempt=%d error=%s', spec.env_id, attempt, exc,
            )
    raise ExpertError(_FAILED_MSG.format(spec.env_id, RETRIES)) from error
