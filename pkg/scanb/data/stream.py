"""Training episode stream restricted to base environments."""

from typing import Dict, Iterator, List, Sequence, Set, Tuple

from typing_extensions import Final, final

from scanb.data.records import DatasetManifest, EpisodeRecord
from scanb.exceptions import ContractError
from scanb.numeric.rng import seeded_rng

_LEAK_MSG: Final = 'Training stream reached non-base environment {0!r}'
_EMPTY_MSG: Final = 'Dataset has no episodes for base environments'


@final
class TrainingStream(object):
    """
    Seeded endless stream of base-environment episodes.

    Every yielded environment id is audited against the manifest
    and remembered in :attr:`seen_ids`.
    """

    __slots__ = ('manifest', 'seen_ids', '_pool', '_seed')

    def __init__(
        self,
        manifest: DatasetManifest,
        records: Dict[str, Sequence[EpisodeRecord]],
        seed: int,
    ) -> None:
        """Keeps only records of base environments."""
        self.manifest = manifest
        self.seen_ids: Set[str] = set()
        self._seed = seed
        self._pool: List[Tuple[str, EpisodeRecord]] = [
            (env_id, episode)
            for env_id in manifest.base_env_ids
            for episode in records.get(env_id, ())
        ]
        if not self._pool:
            raise ContractError(_EMPTY_MSG)

    def __len__(self) -> int:
        """Number of distinct episodes."""
        return len(self._pool)

    def __iter__(self) -> Iterator[EpisodeRecord]:
        """Reshuffles the pool once per pass."""
        rng = seeded_rng(self._seed, 'training-stream')
        while True:
            for index in rng.permutation(len(self._pool)):
                env_id, episode = self._pool[int(index)]
                self._audit(env_id, episode)
                yield episode

    def _audit(self, env_id: str, episode: EpisodeRecord) -> None:
        base = set(self.manifest.base_env_ids)
        if env_id not in base or episode.env_id not in base:
            raise ContractError(_LEAK_MSG.format(episode.env_id))
        if episode.env_id in self.manifest.novel_env_ids:
            raise ContractError(_LEAK_MSG.format(episode.env_id))
        self.seen_ids.add(episode.env_id)


def iter_training_episodes(
    manifest: DatasetManifest,
    records: Dict[str, Sequence[EpisodeRecord]],
    seed: int,
) -> TrainingStream:
    """Stream over base-environment episodes only."""
    return TrainingStream(manifest, records, seed)
