import numpy as np
import pytest

from scanb.exceptions import DimensionError, UnsupportedMetricError
from scanb.harness.locality import (
    attention_locality,
    combine_localities,
    locality_of_map,
    measure_locality,
)
from scanb.model.conditioning import TaskEmbedding
from scanb.model.policy import ScanModel
from scanb.numeric.tensor import constant
from scanb.serialize import to_payload


def _task(strategy: str, maps) -> TaskEmbedding:
    return TaskEmbedding(
        embedding=constant(np.zeros((1, 1))),
        strategy=strategy,
        attention=tuple(np.asarray(attn) for attn in maps),
    )


def test_uniform_map_scores_baseline() -> None:
    """Ensures that stage-blind attention scores the stage fraction."""
    demo = [0, 0, 0, 1]
    playout = [0, 1, 1]
    stages = locality_of_map(np.full((3, 4), 0.25), demo, playout)

    assert [stage.locality for stage in stages] == [0.75, 0.25]
    assert [stage.baseline for stage in stages] == [0.75, 0.25]
    assert [stage.frames for stage in stages] == [1, 2]
    assert all(stage.margin == 0 for stage in stages)


def test_concentrated_map() -> None:
    """Ensures that same-stage attention beats the baseline."""
    attention = np.array([
        [0.5, 0.5, 0.0, 0.0],
        [0.0, 0.0, 0.5, 0.5],
    ])
    stages = locality_of_map(attention, [0, 0, 1, 1], [0, 1])

    assert [stage.locality for stage in stages] == [1.0, 1.0]
    assert [stage.margin for stage in stages] == [0.5, 0.5]


def test_map_shape_must_match() -> None:
    """Ensures that labels must cover both map axes."""
    with pytest.raises(DimensionError):
        locality_of_map(np.ones((2, 3)) / 3, [0, 1], [0, 1])


@pytest.mark.parametrize('strategy', ['tanet', 'taskemb', 'bc'])
def test_needs_per_demo_maps(strategy: str) -> None:
    """Ensures that strategies without per-demo maps have no locality."""
    with pytest.raises(UnsupportedMetricError):
        attention_locality(_task(strategy, [np.ones((1, 1))]), [[0]], [0])


def test_map_count_must_match() -> None:
    """Ensures that every map needs the labels of its demonstration."""
    with pytest.raises(DimensionError):
        attention_locality(_task('scan', [np.ones((1, 1))]), [[0], [0]], [0])


def test_average_over_demos() -> None:
    """Ensures that the report averages stages across demonstrations."""
    ideal = np.eye(2)
    flipped = ideal[::-1]
    report = attention_locality(
        _task('scan', [ideal, flipped]), [[0, 1], [0, 1]], [0, 1],
    )

    assert [stage.locality for stage in report.stages] == [0.5, 0.5]
    assert report.mean_baseline == 0.5
    assert report.margin == 0.0
    assert len(report.per_demo) == 2


def test_combine_reports() -> None:
    """Ensures that combined reports average per stage."""
    high = attention_locality(_task('scan', [np.eye(2)]), [[0, 1]], [0, 1])
    low = attention_locality(
        _task('scan', [np.eye(2)[::-1]]), [[0, 1]], [0, 1],
    )
    combined = combine_localities([high, low])

    assert combined.mean_locality == 0.5
    assert len(combined.per_demo) == 2
    assert set(to_payload(combined)) == {
        'stages', 'per_demo', 'mean_locality', 'mean_baseline', 'margin',
    }


def test_measure_on_episode(dataset) -> None:
    """Ensures that a model's locality covers every query stage."""
    manifest, records = dataset
    episode = records[manifest.novel_env_ids[0]][0]
    report = measure_locality(ScanModel('scan', seed=0), episode)

    assert [stage.stage for stage in report.stages] == [0, 1]
    assert all(0 <= stage.locality <= 1 for stage in report.stages)
    assert sum(stage.frames for stage in report.stages) == len(episode.query)
