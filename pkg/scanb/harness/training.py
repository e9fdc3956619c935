"""
Meta-training on base environments and test-time fine-tuning.

Training is serial, one episode per optimizer step. Every number
depends only on the data and init seeds of the run.
"""

import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterator, List, Mapping, Optional, Sequence

import numpy as np
from typing_extensions import Final, final

from scanb.data.records import DatasetManifest, Demonstration, EpisodeRecord
from scanb.data.stream import iter_training_episodes
from scanb.exceptions import (
    CheckpointError,
    ContractError,
    NonFiniteError,
    TrainingAborted,
)
from scanb.harness.config import RunConfig
from scanb.model.losses import LossBundle
from scanb.model.policy import WINDOW, ScanModel
from scanb.numeric.checkpoint import (
    Checkpoint,
    load_checkpoint,
    save_checkpoint,
)
from scanb.numeric.optim import OptimizerState, adam_step, zero_grad
from scanb.numeric.rng import seeded_rng
from scanb.numeric.tensor import backward, no_grad
from scanb.serialize import to_payload

logger = logging.getLogger(__name__)

LOG_NAME: Final = 'train_log.csv'
LOG_COLUMNS: Final = (
    'step',
    'loss_act_pos',
    'loss_inv_pos',
    'loss_act_gripper',
    'loss_inv_gripper',
    'loss_total',
)
FINAL_NAME: Final = 'final.ckpt'

_ABORT_MSG: Final = (
    'Loss became non-finite at step {0}; last good checkpoint {1}'
)
_NO_ACTIONS_MSG: Final = (
    'Fine-tuning needs expert actions, demonstration {0} of {1!r} has none: '
    'demonstrations from a different expert can not be used'
)
_NO_DEMOS_MSG: Final = 'Fine-tuning needs at least one demonstration'
_STRATEGY_MSG: Final = 'Checkpoint {0} holds strategy {1!r}, run uses {2!r}'


@final
@dataclass(frozen=True)
class TrainingResult(object):
    """Where training left its artifacts."""

    checkpoint: Path
    log: Path
    steps: int
    checkpoints: List[Path]


def checkpoint_name(step: int) -> str:
    """File name of the checkpoint written after ``step`` steps."""
    return 'checkpoint-{0:06d}.ckpt'.format(step)


def model_metadata(model: ScanModel, config: RunConfig, step: int) -> Dict:
    """What a checkpoint records besides the weights."""
    return {
        'strategy': model.strategy,
        'step': step,
        'config': to_payload(config),
    }


def meta_train(
    config: RunConfig,
    manifest: DatasetManifest,
    records: Mapping[str, Sequence[EpisodeRecord]],
    model: Optional[ScanModel] = None,
) -> TrainingResult:
    """
    Trains on episodes of base environments only.

    Writes the CSV loss log, a checkpoint every
    ``train.checkpoint_every`` steps and the final checkpoint.
    A non-finite loss raises :class:`TrainingAborted`
    that points at the last checkpoint written.
    """
    if model is None:
        model = ScanModel(config.run.strategy, seed=config.seeds.init)
    root = config.output_dir / 'train'
    root.mkdir(parents=True, exist_ok=True)
    parameters = model.parameters()
    optimizer = OptimizerState(learning_rate=config.train.learning_rate)
    stream = iter(iter_training_episodes(manifest, records, config.seeds.data))
    windows = seeded_rng(config.seeds.data, 'window')

    last = save_checkpoint(
        Checkpoint.capture(parameters, model_metadata(model, config, 0)),
        root / checkpoint_name(0),
    )
    written = [last]
    log_path = root / LOG_NAME
    with log_path.open('w', newline='') as stream_log:
        writer = csv.DictWriter(stream_log, fieldnames=LOG_COLUMNS)
        writer.writeheader()
        for step in range(1, config.train.steps + 1):
            episode = next(stream)
            bundle = _train_step(
                model, parameters, optimizer, config, episode,
                window_start(windows, len(episode.query)),
                step, last,
            )
            writer.writerow({'step': step, **bundle.as_row()})
            if step % config.train.log_every == 0:
                logger.info(
                    'train step=%d env=%s loss_total=%.6f',
                    step, episode.env_id, bundle.total.item(),
                )
            if step % config.train.checkpoint_every == 0:
                last = save_checkpoint(
                    Checkpoint.capture(
                        parameters, model_metadata(model, config, step),
                    ),
                    root / checkpoint_name(step),
                )
                written.append(last)
    final = save_checkpoint(
        Checkpoint.capture(
            parameters, model_metadata(model, config, config.train.steps),
        ),
        root / FINAL_NAME,
    )
    logger.info(
        'train done steps=%d checkpoint=%s warnings=%d',
        config.train.steps, final, len(optimizer.warnings),
    )
    return TrainingResult(
        checkpoint=final,
        log=log_path,
        steps=config.train.steps,
        checkpoints=written,
    )


def restore_model(path: Path, config: RunConfig) -> ScanModel:
    """
    Model of the run strategy holding the weights stored at ``path``.

    A checkpoint of another strategy is a :class:`CheckpointError`.
    """
    checkpoint = load_checkpoint(path)
    stored = checkpoint.metadata.get('strategy', config.run.strategy)
    if stored != config.run.strategy:
        raise CheckpointError(
            _STRATEGY_MSG.format(path, stored, config.run.strategy),
        )
    model = ScanModel(config.run.strategy, seed=config.seeds.init)
    checkpoint.apply(model.parameters())
    logger.info('restore checkpoint=%s strategy=%s', path, stored)
    return model


def window_start(rng: np.random.Generator, length: int) -> int:
    """Uniform start of a training window inside a playout."""
    return int(rng.integers(0, max(length - WINDOW, 0) + 1))


def fine_tune(  # noqa: WPS211
    model: ScanModel,
    demos: Sequence[Demonstration],
    steps: int,
    learning_rate: float,
    lambda_pos: float,
    lambda_gripper: float,
    seed: int = 0,
) -> List[float]:
    """
    Updates every parameter on the provided demonstrations only.

    Each demonstration serves in turn as the query, conditioned on the
    others (on itself when it is the only one). No environment is touched.
    Returns the mean loss over the demonstrations before every step
    and after the last one.
    """
    if not demos:
        raise ContractError(_NO_DEMOS_MSG)
    for index, demo in enumerate(demos):
        if not demo.has_actions:
            raise ContractError(_NO_ACTIONS_MSG.format(index, demo.env_id))
    parameters = model.parameters()
    optimizer = OptimizerState(learning_rate=learning_rate)
    rng = seeded_rng(seed, 'fine-tune')
    history = []
    for step in range(steps):
        history.append(demos_loss(model, demos, lambda_pos, lambda_gripper))
        index = step % len(demos)
        zero_grad(parameters)
        bundle = model.query_loss(
            _support_for(demos, index),
            demos[index],
            lambda_pos,
            lambda_gripper,
            window_start(rng, len(demos[index])),
        )
        backward(bundle.total)
        adam_step(optimizer, parameters)
    history.append(demos_loss(model, demos, lambda_pos, lambda_gripper))
    logger.info(
        'fine-tune steps=%d demos=%d loss_start=%.6f loss_end=%.6f',
        steps, len(demos), history[0], history[-1],
    )
    return history


def demos_loss(
    model: ScanModel,
    demos: Sequence[Demonstration],
    lambda_pos: float,
    lambda_gripper: float,
) -> float:
    """Mean fine-tuning loss over every demonstration, first window."""
    with no_grad():
        losses = [
            model.query_loss(
                _support_for(demos, index), demo, lambda_pos, lambda_gripper,
            ).total.item()
            for index, demo in enumerate(demos)
        ]
    return float(np.mean(losses))


def read_log(path: Path) -> Iterator[Dict[str, float]]:
    """Rows of a training log as floats."""
    with path.open(newline='') as stream:
        for row in csv.DictReader(stream):
            yield {key: float(value) for key, value in row.items()}


def _train_step(  # noqa: WPS211
    model: ScanModel,
    parameters: List,
    optimizer: OptimizerState,
    config: RunConfig,
    episode: EpisodeRecord,
    start: int,
    step: int,
    last: Path,
) -> LossBundle:
    zero_grad(parameters)
    try:
        bundle = model.episode_loss(
            episode,
            config.model.lambda_pos,
            config.model.lambda_gripper,
            start,
        )
        if not math.isfinite(bundle.total.item()):
            raise NonFiniteError('loss')
        backward(bundle.total)
        adam_step(optimizer, parameters)
    except NonFiniteError as exc:
        logger.error(
            'train abort step=%d error=%s checkpoint=%s', step, exc, last,
        )
        raise TrainingAborted(
            _ABORT_MSG.format(step, last), last_checkpoint=last,
        ) from exc
    return bundle


def _support_for(demos: Sequence[Demonstration], index: int):
    others = [demo for position, demo in enumerate(demos) if position != index]
    chosen = others or [demos[index]]
    return [demo.frames_only() for demo in chosen]
