"""Dataset generation driven by a run configuration."""

import logging
from typing import Dict, Tuple

from typing_extensions import Final

from scanb.data.generate import generate_episode
from scanb.data.records import DatasetManifest, EpisodeRecord
from scanb.data.splits import build_splits
from scanb.harness.config import RunConfig
from scanb.numeric.rng import derive_seed

logger = logging.getLogger(__name__)

#: Episodes recorded for every novel environment.
NOVEL_EPISODES: Final = 1

Records = Dict[str, Tuple[EpisodeRecord, ...]]


def build_dataset(config: RunConfig) -> Tuple[DatasetManifest, Records]:
    """
    Splits environments and records every episode of the run.

    Base environments get ``data.episodes_per_env`` episodes, novel ones
    a single episode whose support is what evaluation conditions on.
    Everything depends on the data seed only.
    """
    data = config.data
    manifest = build_splits(
        data.n_base,
        data.n_novel,
        config.run.task,
        config.seeds.data,
        data.palette_size,
    )
    render_config = config.render_config
    counts = [
        *((spec, data.episodes_per_env) for spec in manifest.base_specs),
        *((spec, NOVEL_EPISODES) for spec in manifest.novel_specs),
    ]
    records: Records = {}
    for spec, count in counts:
        records[spec.env_id] = tuple(
            generate_episode(
                spec,
                data.shots,
                config.support_embodiment,
                data.length_variance,
                derive_seed(config.seeds.data, 'episode', spec.env_id, index),
                render_config,
            )
            for index in range(count)
        )
        logger.info('gen env=%s episodes=%d', spec.env_id, count)
    return manifest, records
