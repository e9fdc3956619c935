"""
Attention maps and context projections as CSV files.

Attention files hold one row per playout timestep and one column per
demonstration frame; the header carries the stage label of every
demonstration frame. Context projections place every per-demonstration
context on the plane spanned by its two leading principal axes.

.. code:: python

  >>> import numpy as np
  >>> from scanb.harness.export import fit_projection

  >>> points = np.array([[0.0, 0.0, 1.0], [2.0, 0.0, 1.0], [0.0, 4.0, 1.0]])
  >>> projection = fit_projection(points)
  >>> assert projection.apply(points).shape == (3, 2)

"""

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Mapping, Optional, Sequence, Tuple

import numpy as np
from typing_extensions import Final, final

from scanb.data.generate import LENGTH_CAP
from scanb.data.records import DatasetManifest, DemoFrames, EpisodeRecord
from scanb.exceptions import ContractError, UnsupportedMetricError
from scanb.harness.config import RunConfig
from scanb.harness.evaluation import BUDGET_FACTOR, scene_seed, support_of
from scanb.model.conditioning import (
    STRATEGY_SCA,
    STRATEGY_TANET,
    sca_attend,
    sca_context,
)
from scanb.model.policy import ScanModel
from scanb.model.visual import visual_encode
from scanb.numeric.tensor import no_grad
from scanb.world.judge import rollout, stage_labels
from scanb.world.state import EMBODIMENT_AGENT

logger = logging.getLogger(__name__)

PROJECTION_COLUMNS: Final = ('t', 'demo', 'stage', 'x', 'y')
COMPONENTS: Final = 2

_ATTENTION_MSG: Final = 'Strategy {0!r} has no attention maps to export'
_CONTEXT_MSG: Final = 'Strategy {0!r} has no per-demonstration contexts'
_POINTS_MSG: Final = 'Projection needs a non-empty (N, D) array, got {0}'


@final
@dataclass(frozen=True, eq=False)
class ContextProjection(object):
    """Centering vector and the ``(D, 2)`` principal axes."""

    center: np.ndarray
    axes: np.ndarray

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Coordinates of ``points`` on the two axes."""
        return (np.asarray(points, dtype=np.float64) - self.center) @ self.axes


def fit_projection(points: np.ndarray) -> ContextProjection:
    """
    Two leading principal axes of ``points``.

    Each axis is signed so its largest component is positive.
    Missing axes of rank-deficient data are zero.
    """
    data = np.asarray(points, dtype=np.float64)
    if data.ndim != 2 or not data.shape[0]:
        raise ContractError(_POINTS_MSG.format(data.shape))
    center = data.mean(axis=0)
    _, _, rows = np.linalg.svd(data - center, full_matrices=False)
    axes = np.zeros((data.shape[1], COMPONENTS))
    kept = rows[:COMPONENTS].T
    leading = np.abs(kept).argmax(axis=0)
    signs = np.sign(kept[leading, np.arange(kept.shape[1])])
    axes[:, :kept.shape[1]] = kept * np.where(signs == 0, 1.0, signs)
    return ContextProjection(center=center, axes=axes)


def dispersion(points: np.ndarray) -> float:
    """Mean distance of ``points`` to their centroid."""
    data = np.asarray(points, dtype=np.float64)
    return float(np.linalg.norm(data - data.mean(axis=0), axis=1).mean())


def sca_contexts(
    model: ScanModel,
    support: Sequence[DemoFrames],
    frames: np.ndarray,
) -> List[np.ndarray]:
    """One ``(l_p, 64)`` context per support demonstration."""
    if model.strategy != STRATEGY_SCA:
        raise UnsupportedMetricError(_CONTEXT_MSG.format(model.strategy))
    with no_grad():
        playout = visual_encode(frames, model.visual)
        summary = model.encode_support(support)
        params = model.conditioner.attention
        return [
            sca_context(sca_attend(playout, h_d, params), h_d).data
            for h_d in summary.encodings
        ]


def export_context_projection(
    model: ScanModel,
    episode: EpisodeRecord,
    path: Path,
) -> Path:
    """
    Projected contexts of the query of ``episode`` against its support.

    One row per ``(t, demo)`` with the query stage label at ``t``.
    """
    contexts = sca_contexts(
        model, episode.support_frames(), episode.query.frames,
    )
    projection = fit_projection(np.concatenate(contexts, axis=0))
    labels = episode.query.stage_labels
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open('w', newline='') as stream:
        writer = csv.writer(stream)
        writer.writerow(PROJECTION_COLUMNS)
        for demo, context in enumerate(contexts):
            for t, (x, y) in enumerate(projection.apply(context)):
                writer.writerow((
                    t, demo, int(labels[t]),
                    '{0:.9g}'.format(x), '{0:.9g}'.format(y),
                ))
    logger.info(
        'export contexts env=%s demos=%d path=%s',
        episode.env_id, len(contexts), path,
    )
    return path


def write_attention(
    attention: np.ndarray,
    header: Sequence,
    playout_labels: Sequence[int],
    path: Path,
) -> Path:
    """One map: columns ``t`` and ``stage`` then one per demo frame."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open('w', newline='') as stream:
        writer = csv.writer(stream)
        writer.writerow(('t', 'stage', *header))
        for t, row in enumerate(np.asarray(attention)):
            writer.writerow((
                t,
                int(playout_labels[t]),
                *('{0:.9g}'.format(mass) for mass in row),
            ))
    return path


def export_attention(  # noqa: WPS210, WPS211
    config: RunConfig,
    manifest: DatasetManifest,
    records: Mapping[str, Sequence[EpisodeRecord]],
    model: ScanModel,
    directory: Path,
    playouts: int = 1,
    env_id: Optional[str] = None,
) -> Tuple[Path, ...]:
    """
    Rolls the policy out and writes the attention behind every playout.

    The stage-conscious strategy writes one file per
    ``(playout, demonstration)``; the timestep-averaging strategy writes
    one file per playout over the averaged demonstration, whose header
    holds timestep indices.
    """
    if model.strategy not in {STRATEGY_SCA, STRATEGY_TANET}:
        raise UnsupportedMetricError(_ATTENTION_MSG.format(model.strategy))
    target = env_id or manifest.novel_env_ids[0]
    spec = manifest.spec(target)
    support = support_of(records, target, config.eval.shots)
    frames_only = [demo.frames_only() for demo in support]
    render_config = config.render_config
    written: List[Path] = []
    for playout in range(playouts):
        trajectory = rollout(
            spec,
            scene_seed(config.seeds.eval, target, playout),
            model.session(frames_only),
            max_steps=BUDGET_FACTOR * LENGTH_CAP[spec.task],
            embodiment=EMBODIMENT_AGENT,
            config=render_config,
        )
        frames = np.stack([obs.frame for obs in trajectory.observations])
        labels = stage_labels(trajectory, spec)
        with no_grad():
            task = model.embed_task(frames_only, frames)
        if model.strategy == STRATEGY_SCA:
            for demo, attn in enumerate(task.attention):
                written.append(write_attention(
                    attn,
                    [int(label) for label in support[demo].stage_labels],
                    labels,
                    directory / 'attention-p{0:02d}-d{1}.csv'.format(
                        playout, demo,
                    ),
                ))
        else:
            attn = task.attention[0]
            written.append(write_attention(
                attn,
                list(range(attn.shape[1])),
                labels,
                directory / 'attention-p{0:02d}-mean.csv'.format(playout),
            ))
    logger.info(
        'export attention env=%s playouts=%d files=%d',
        target, playouts, len(written),
    )
    return tuple(written)
