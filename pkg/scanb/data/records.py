"""
Demonstrations, episodes and dataset manifests.

A :class:`Demonstration` keeps everything that was recorded: observations,
actions when the expert shares the agent embodiment, and stage labels.
Models only ever receive the :meth:`Demonstration.frames_only` view,
which has no actions and no labels.
"""

import hashlib
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

import numpy as np
from typing_extensions import Final, final

from scanb.exceptions import ContractError
from scanb.serialize import Payload, to_payload
from scanb.world.judge import Trajectory
from scanb.world.spec import EnvironmentSpec

#: Version of the simulator whose output a dataset holds.
SIMULATOR_VERSION: Final = 'scanb-sim-1'
#: Dataset format tag.
DATASET_FORMAT: Final = 'scanb-ds-1'

#: Columns of an action row.
ACTION_WIDTH: Final = 4

_ACTIONS_MSG: Final = (
    'Demonstration of {0} frames must have {1} actions, got {2}'
)
_ARRAYS_MSG: Final = 'Demonstration arrays disagree in length: {0}'
_EPISODE_ENV_MSG: Final = 'Episode of {0!r} holds a demonstration of {1!r}'
_EPISODE_SEED_MSG: Final = 'Episode of {0!r} reuses scene seed {1}'
_QUERY_MSG: Final = 'Query playout of {0!r} has no actions'
_OVERLAP_MSG: Final = 'Environments {0} are both base and novel'


@final
@dataclass(frozen=True, eq=False)
class DemoFrames(object):
    """
    What a policy may see of a demonstration.

    ``frames`` and ``crops`` are ``(T, 4, H, W)`` and ``(T, 4, h, w)``,
    ``effectors`` is ``(T, 4)``.
    """

    frames: np.ndarray
    crops: np.ndarray
    effectors: np.ndarray

    def __len__(self) -> int:
        """Number of frames."""
        return int(self.frames.shape[0])


@final
@dataclass(frozen=True, eq=False)
class Demonstration(object):
    """One recorded expert trajectory."""

    env_id: str
    scene_seed: int
    embodiment: str
    frames: np.ndarray
    crops: np.ndarray
    effectors: np.ndarray
    stage_labels: np.ndarray
    actions: Optional[np.ndarray] = None
    profile: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        """Checks lengths and freezes the arrays."""
        length = self.frames.shape[0]
        lengths = {
            'frames': length,
            'crops': self.crops.shape[0],
            'effectors': self.effectors.shape[0],
            'stage_labels': self.stage_labels.shape[0],
        }
        if len(set(lengths.values())) != 1:
            raise ContractError(_ARRAYS_MSG.format(lengths))
        if self.actions is not None and self.actions.shape[0] != length - 1:
            raise ContractError(
                _ACTIONS_MSG.format(length, length - 1, self.actions.shape[0]),
            )
        for array in self._arrays():
            array.flags.writeable = False

    def __len__(self) -> int:
        """Number of frames."""
        return int(self.frames.shape[0])

    def __eq__(self, other: object) -> bool:
        """Metadata and every array must be equal."""
        if not isinstance(other, Demonstration):
            return NotImplemented
        same_meta = (
            self.env_id == other.env_id and
            self.scene_seed == other.scene_seed and
            self.embodiment == other.embodiment and
            self.profile == other.profile
        )
        if not same_meta or (self.actions is None) != (other.actions is None):
            return False
        return all(
            np.array_equal(mine, theirs)
            for mine, theirs in zip(self._arrays(), other._arrays())  # noqa: WPS437, E501
        )

    @property
    def has_actions(self) -> bool:
        """Whether action labels were kept."""
        return self.actions is not None

    def frames_only(self) -> DemoFrames:
        """Observation view without actions and stage labels."""
        return DemoFrames(
            frames=self.frames,
            crops=self.crops,
            effectors=self.effectors,
        )

    def frame_checksum(self) -> str:
        """SHA-256 of the frame bytes, little-endian float64."""
        digest = hashlib.sha256()
        digest.update(np.ascontiguousarray(self.frames, dtype='<f8').tobytes())
        return digest.hexdigest()

    def _arrays(self) -> Tuple[np.ndarray, ...]:
        arrays = (self.frames, self.crops, self.effectors, self.stage_labels)
        if self.actions is None:
            return arrays
        return (*arrays, self.actions)


@final
@dataclass(frozen=True)
class EpisodeRecord(object):
    """K support demonstrations and one query playout of one environment."""

    env_id: str
    support: Tuple[Demonstration, ...]
    query: Demonstration

    def __post_init__(self) -> None:
        """Same environment everywhere, distinct scenes, labeled query."""
        seeds = set()
        for demo in (*self.support, self.query):
            if demo.env_id != self.env_id:
                raise ContractError(
                    _EPISODE_ENV_MSG.format(self.env_id, demo.env_id),
                )
            if demo.scene_seed in seeds:
                raise ContractError(
                    _EPISODE_SEED_MSG.format(self.env_id, demo.scene_seed),
                )
            seeds.add(demo.scene_seed)
        if not self.query.has_actions:
            raise ContractError(_QUERY_MSG.format(self.env_id))

    @property
    def shots(self) -> int:
        """Number of support demonstrations."""
        return len(self.support)

    def support_frames(self) -> Tuple[DemoFrames, ...]:
        """Frames-only views of the support set."""
        return tuple(demo.frames_only() for demo in self.support)


@final
@dataclass(frozen=True)
class DatasetManifest(object):
    """Environments of both splits and where their records live."""

    task: str
    seed: int
    base_env_ids: Tuple[str, ...]
    novel_env_ids: Tuple[str, ...]
    specs: Tuple[EnvironmentSpec, ...]
    record_files: Tuple[Tuple[str, str], ...] = ()
    simulator_version: str = SIMULATOR_VERSION

    def __post_init__(self) -> None:
        """Base and novel ids never overlap."""
        overlap = set(self.base_env_ids) & set(self.novel_env_ids)
        if overlap:
            raise ContractError(_OVERLAP_MSG.format(sorted(overlap)))

    def spec(self, env_id: str) -> EnvironmentSpec:
        """Finds the spec of ``env_id``."""
        for candidate in self.specs:
            if candidate.env_id == env_id:
                return candidate
        raise KeyError(env_id)

    @property
    def base_specs(self) -> Tuple[EnvironmentSpec, ...]:
        """Specs of the base split, in id order."""
        return tuple(self.spec(env_id) for env_id in self.base_env_ids)

    @property
    def novel_specs(self) -> Tuple[EnvironmentSpec, ...]:
        """Specs of the novel split, in id order."""
        return tuple(self.spec(env_id) for env_id in self.novel_env_ids)


@to_payload.instance(DatasetManifest)
def _to_payload_manifest(instance: DatasetManifest) -> Payload:
    return {
        'format': DATASET_FORMAT,
        'simulator_version': instance.simulator_version,
        'task': instance.task,
        'seed': instance.seed,
        'base_env_ids': list(instance.base_env_ids),
        'novel_env_ids': list(instance.novel_env_ids),
        'record_files': dict(instance.record_files),
        'specs': [to_payload(spec) for spec in instance.specs],
    }


def demonstration_from_trajectory(  # noqa: WPS211
    trajectory: Trajectory,
    spec: EnvironmentSpec,
    scene_seed: int,
    labels: Tuple[int, ...],
    keep_actions: bool,
    profile: Optional[Dict[str, Any]] = None,
) -> Demonstration:
    """Stacks observations, actions and labels of a rollout."""
    observations = trajectory.observations
    actions = None
    if keep_actions:
        actions = np.array(
            [(*action.target, action.gripper) for action in trajectory.actions],
            dtype=np.float64,
        ).reshape(-1, ACTION_WIDTH)
    return Demonstration(
        env_id=spec.env_id,
        scene_seed=scene_seed,
        embodiment=trajectory.states[0].embodiment,
        frames=np.stack([obs.frame for obs in observations]),
        crops=np.stack([obs.crop for obs in observations]),
        effectors=np.stack([obs.effector for obs in observations]),
        stage_labels=np.array(labels, dtype=np.int64),
        actions=actions,
        profile=dict(profile or {}),
    )
