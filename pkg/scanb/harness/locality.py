"""
How much attention lands on demonstration frames of the same stage.

For every playout frame in stage ``s`` we sum the attention mass on
demonstration frames labeled ``s`` and average per stage. A map that
ignores the stages scores the fraction of demonstration frames in ``s``,
which is the reported baseline.

.. code:: python

  >>> import numpy as np
  >>> from scanb.harness.locality import locality_of_map

  >>> ideal = np.array([[1.0, 0.0], [0.0, 1.0]])
  >>> stages = locality_of_map(ideal, [0, 1], [0, 1])
  >>> assert [stage.locality for stage in stages] == [1.0, 1.0]

"""

import logging
from dataclasses import dataclass, replace
from typing import Dict, List, Sequence, Tuple

import numpy as np
from typing_extensions import Final, final

from scanb.data.records import EpisodeRecord
from scanb.exceptions import DimensionError, UnsupportedMetricError
from scanb.model.conditioning import STRATEGY_SCA, TaskEmbedding
from scanb.model.policy import ScanModel
from scanb.numeric.tensor import no_grad
from scanb.serialize import Payload, to_payload

logger = logging.getLogger(__name__)

_STRATEGY_MSG: Final = (
    'Attention locality needs per-demonstration maps, '
    'strategy {0!r} has none'
)
_SHAPE_MSG: Final = (
    'Attention map {0} does not match {1} playout and {2} demo labels'
)
_COUNT_MSG: Final = '{0} attention maps for {1} demonstrations'


@final
@dataclass(frozen=True)
class StageLocality(object):
    """Attention mass on same-stage frames for one stage."""

    stage: int
    locality: float
    baseline: float
    frames: int

    @property
    def margin(self) -> float:
        """How far the locality is above the baseline."""
        return self.locality - self.baseline


@final
@dataclass(frozen=True)
class LocalityReport(object):
    """Per-stage locality, averaged over demonstrations, and the breakdown."""

    stages: Tuple[StageLocality, ...]
    per_demo: Tuple[Tuple[StageLocality, ...], ...]

    @property
    def mean_locality(self) -> float:
        """Locality averaged over stages."""
        return float(np.mean([stage.locality for stage in self.stages]))

    @property
    def mean_baseline(self) -> float:
        """Baseline averaged over stages."""
        return float(np.mean([stage.baseline for stage in self.stages]))

    @property
    def margin(self) -> float:
        """Mean locality above the mean baseline."""
        return self.mean_locality - self.mean_baseline


@to_payload.instance(StageLocality)
def _to_payload_stage(instance: StageLocality) -> Payload:
    return {
        'stage': instance.stage,
        'locality': instance.locality,
        'baseline': instance.baseline,
        'frames': instance.frames,
    }


@to_payload.instance(LocalityReport)
def _to_payload_locality(instance: LocalityReport) -> Payload:
    return {
        'stages': to_payload(list(instance.stages)),
        'per_demo': [to_payload(list(demo)) for demo in instance.per_demo],
        'mean_locality': instance.mean_locality,
        'mean_baseline': instance.mean_baseline,
        'margin': instance.margin,
    }


def locality_of_map(
    attention: np.ndarray,
    demo_labels: Sequence[int],
    playout_labels: Sequence[int],
) -> Tuple[StageLocality, ...]:
    """Per-stage locality of one ``(l_p, l_d)`` map, stages of the playout."""
    attn = np.asarray(attention, dtype=np.float64)
    demo = np.asarray(demo_labels)
    playout = np.asarray(playout_labels)
    if attn.shape != (playout.shape[0], demo.shape[0]):
        raise DimensionError(
            _SHAPE_MSG.format(attn.shape, playout.shape[0], demo.shape[0]),
        )
    stages = []
    for stage in np.unique(playout):
        rows = attn[playout == stage]
        same = demo == stage
        stages.append(StageLocality(
            stage=int(stage),
            locality=float(rows[:, same].sum(axis=1).mean()),
            baseline=float(same.sum() / demo.shape[0]),
            frames=int(rows.shape[0]),
        ))
    return tuple(stages)


def attention_locality(
    task: TaskEmbedding,
    demo_labels: Sequence[Sequence[int]],
    playout_labels: Sequence[int],
) -> LocalityReport:
    """
    Locality of every per-demonstration map of a stage-conscious embedding.

    Stages are averaged over demonstrations.
    """
    if task.strategy != STRATEGY_SCA or not task.attention:
        raise UnsupportedMetricError(_STRATEGY_MSG.format(task.strategy))
    if len(task.attention) != len(demo_labels):
        raise DimensionError(
            _COUNT_MSG.format(len(task.attention), len(demo_labels)),
        )
    per_demo = tuple(
        locality_of_map(attn, labels, playout_labels)
        for attn, labels in zip(task.attention, demo_labels)
    )
    stages = tuple(
        replace(stage, frames=first.frames)
        for stage, first in zip(_average(per_demo), per_demo[0])
    )
    return LocalityReport(stages=stages, per_demo=per_demo)


def measure_locality(
    model: ScanModel,
    episode: EpisodeRecord,
) -> LocalityReport:
    """Locality of the query of ``episode`` attending to its support."""
    with no_grad():
        task = model.embed_task(episode.support_frames(), episode.query.frames)
    report = attention_locality(
        task,
        [demo.stage_labels for demo in episode.support],
        episode.query.stage_labels,
    )
    logger.info(
        'locality env=%s locality=%.4f baseline=%.4f',
        episode.env_id, report.mean_locality, report.mean_baseline,
    )
    return report


def combine_localities(reports: Sequence[LocalityReport]) -> LocalityReport:
    """Stage-wise average of several reports, breakdowns concatenated."""
    per_demo = tuple(demo for report in reports for demo in report.per_demo)
    return LocalityReport(
        stages=_average([report.stages for report in reports]),
        per_demo=per_demo,
    )


def _average(
    groups: Sequence[Sequence[StageLocality]],
) -> Tuple[StageLocality, ...]:
    by_stage: Dict[int, List[StageLocality]] = {}
    for group in groups:
        for stage in group:
            by_stage.setdefault(stage.stage, []).append(stage)
    return tuple(
        StageLocality(
            stage=stage,
            locality=float(np.mean([item.locality for item in items])),
            baseline=float(np.mean([item.baseline for item in items])),
            frames=sum(item.frames for item in items),
        )
        for stage, items in sorted(by_stage.items())
    )
