"""
Success rate against the number of sub-optimal support demonstrations.

The model is trained on optimal demonstrations only. For every count
``c`` the first ``c`` support slots of one novel environment are replaced
with demonstrations that take detours, and the policy plays the same
scenes as the standard evaluation.
"""

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Mapping, Optional, Sequence, Tuple

from typing_extensions import Final, final

from scanb.data.generate import make_suboptimal
from scanb.data.records import DatasetManifest, Demonstration, EpisodeRecord
from scanb.exceptions import ContractError
from scanb.harness.config import RunConfig
from scanb.harness.evaluation import (
    ControllerFactory,
    model_factory,
    play_env,
    support_of,
)
from scanb.model.policy import ScanModel
from scanb.numeric.rng import derive_seed
from scanb.serialize import Payload, to_payload

logger = logging.getLogger(__name__)

SWEEP_COLUMNS: Final = ('count', 'rate')

_ENV_MSG: Final = 'Sweep environment {0!r} is not a novel environment'
_COUNT_MSG: Final = 'Sub-optimal count {0} is outside 0..{1}'


@final
@dataclass(frozen=True)
class SweepReport(object):
    """Success rate for every number of sub-optimal demonstrations."""

    env_id: str
    strategy: str
    shots: int
    playouts: int
    rows: Tuple[Tuple[int, float], ...]

    def rate(self, count: int) -> float:
        """Success rate with ``count`` sub-optimal demonstrations."""
        return dict(self.rows)[count]

    def drop(self, count: int) -> float:
        """Success lost relative to an all-optimal support."""
        return self.rate(0) - self.rate(count)


@to_payload.instance(SweepReport)
def _to_payload_sweep(instance: SweepReport) -> Payload:
    return {
        'env': instance.env_id,
        'strategy': instance.strategy,
        'shots': instance.shots,
        'playouts': instance.playouts,
        'rows': [
            {'count': count, 'rate': rate} for count, rate in instance.rows
        ],
    }


def suboptimal_support(
    config: RunConfig,
    manifest: DatasetManifest,
    env_id: str,
    shots: int,
) -> Tuple[Demonstration, ...]:
    """``shots`` detour-taking demonstrations of ``env_id``."""
    spec = manifest.spec(env_id)
    return tuple(
        make_suboptimal(
            spec,
            config.support_embodiment,
            config.sweep.detour_budget,
            derive_seed(config.seeds.data, 'sweep', env_id, slot),
            config.render_config,
        )
        for slot in range(shots)
    )


def mixed_support(
    optimal: Sequence[Demonstration],
    suboptimal: Sequence[Demonstration],
    count: int,
) -> Tuple[Demonstration, ...]:
    """The first ``count`` optimal slots swapped for sub-optimal ones."""
    if not 0 <= count <= len(optimal):
        raise ContractError(_COUNT_MSG.format(count, len(optimal)))
    return (*suboptimal[:count], *optimal[count:])


def robustness_sweep(  # noqa: WPS211
    config: RunConfig,
    manifest: DatasetManifest,
    records: Mapping[str, Sequence[EpisodeRecord]],
    model: Optional[ScanModel] = None,
    make_controller: Optional[ControllerFactory] = None,
    env_id: Optional[str] = None,
    counts: Optional[Sequence[int]] = None,
) -> SweepReport:
    """
    Plays ``sweep.playouts`` scenes for every sub-optimal count.

    Uses ``sweep.env`` (the first novel environment when empty) and
    counts ``0..sweep.shots`` unless given.
    """
    if make_controller is None:
        if model is None:
            raise ContractError('Either a model or a controller is required')
        make_controller = model_factory(model)
    target = env_id or config.sweep.env or manifest.novel_env_ids[0]
    if target not in manifest.novel_env_ids:
        raise ContractError(_ENV_MSG.format(target))
    shots = config.sweep.shots
    optimal = support_of(records, target, shots)
    suboptimal = suboptimal_support(config, manifest, target, shots)
    render_config = config.render_config
    rows: List[Tuple[int, float]] = []
    for count in (range(shots + 1) if counts is None else counts):
        rate = play_env(
            manifest.spec(target),
            mixed_support(optimal, suboptimal, count),
            make_controller,
            config.sweep.playouts,
            config.seeds.eval,
            render_config,
        )
        logger.info('sweep env=%s count=%d rate=%.3f', target, count, rate)
        rows.append((count, rate))
    return SweepReport(
        env_id=target,
        strategy=config.run.strategy if model is not None else 'expert',
        shots=shots,
        playouts=config.sweep.playouts,
        rows=tuple(rows),
    )


def write_sweep(report: SweepReport, path: Path) -> Path:
    """Rate-versus-count table, one row per count."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open('w', newline='') as stream:
        writer = csv.writer(stream)
        writer.writerow(SWEEP_COLUMNS)
        for count, rate in report.rows:
            writer.writerow((count, '{0:.6f}'.format(rate)))
    return path
