import csv
from dataclasses import replace

import numpy as np
import pytest

from scanb.exceptions import ContractError, UnsupportedMetricError
from scanb.harness.config import with_overrides
from scanb.harness.export import (
    PROJECTION_COLUMNS,
    dispersion,
    export_attention,
    export_context_projection,
    fit_projection,
    sca_contexts,
    write_attention,
)
from scanb.model.policy import ScanModel


def _read(path):
    with path.open(newline='') as stream:
        return list(csv.reader(stream))


def test_projection_keeps_the_plane() -> None:
    """Ensures that planar points keep their pairwise distances."""
    rng = np.random.default_rng(0)
    plane = rng.normal(size=(10, 2))
    points = np.concatenate([plane, np.zeros((10, 3))], axis=1) + 4.0
    projected = fit_projection(points).apply(points)

    def distances(rows):
        return np.linalg.norm(rows[:, None] - rows[None], axis=-1)

    assert np.allclose(distances(projected), distances(plane))
    assert np.allclose(projected.mean(axis=0), 0.0)


def test_projection_of_a_line() -> None:
    """Ensures that rank-one data leaves the second axis at zero."""
    points = np.outer(np.arange(4.0), [1.0, 2.0, 2.0])
    projected = fit_projection(points).apply(points)

    assert np.allclose(projected[:, 1], 0.0)
    assert np.allclose(np.diff(projected[:, 0]), 3.0)


def test_identical_contexts_collapse() -> None:
    """Ensures that equal contexts land on one point."""
    points = np.tile(np.arange(5.0), (4, 1))
    projected = fit_projection(points).apply(points)

    assert np.allclose(projected, projected[0])
    assert dispersion(projected) == pytest.approx(0.0)


@pytest.mark.parametrize('points', [np.zeros((0, 3)), np.zeros(3)])
def test_projection_needs_points(points) -> None:
    """Ensures that empty or flat input is refused."""
    with pytest.raises(ContractError):
        fit_projection(points)


def test_dispersion() -> None:
    """Ensures that dispersion is the mean distance to the centroid."""
    assert dispersion(np.array([[0.0, 0.0], [2.0, 0.0]])) == 1.0


def test_write_attention(tmp_path) -> None:
    """Ensures that rows carry timestep and stage before the masses."""
    path = write_attention(
        np.array([[0.25, 0.75], [1.0, 0.0]]), [0, 1], [0, 1],
        tmp_path / 'map.csv',
    )
    rows = _read(path)

    assert rows[0] == ['t', 'stage', '0', '1']
    assert rows[1] == ['0', '0', '0.25', '0.75']
    assert rows[2] == ['1', '1', '1', '0']


def test_contexts_need_stage_conscious_model(probe) -> None:
    """Ensures that only per-demo attention has per-demo contexts."""
    support, query = probe

    with pytest.raises(UnsupportedMetricError):
        sca_contexts(ScanModel('tanet'), support, query.frames)
    contexts = sca_contexts(ScanModel('scan'), support, query.frames)
    assert [context.shape for context in contexts] == [(4, 64), (4, 64)]


def test_context_projection_file(dataset, tmp_path) -> None:
    """Ensures that every (t, demo) pair becomes one row."""
    manifest, records = dataset
    episode = records[manifest.novel_env_ids[0]][0]
    path = export_context_projection(
        ScanModel('scan'), episode, tmp_path / 'contexts.csv',
    )
    rows = _read(path)

    assert tuple(rows[0]) == PROJECTION_COLUMNS
    assert len(rows) - 1 == episode.shots * len(episode.query)
    assert {row[2] for row in rows[1:]} == {'0', '1'}


@pytest.mark.parametrize('strategy', ['taskemb', 'bc'])
def test_attention_export_needs_maps(
    tiny_config, dataset, tmp_path, strategy: str,
) -> None:
    """Ensures that strategies without attention can not be exported."""
    manifest, records = dataset

    with pytest.raises(UnsupportedMetricError):
        export_attention(
            tiny_config, manifest, records, ScanModel(strategy), tmp_path,
        )


@pytest.mark.slow()
@pytest.mark.parametrize(('strategy', 'files'), [
    ('scan', ['attention-p00-d0.csv', 'attention-p00-d1.csv']),
    ('tanet', ['attention-p00-mean.csv']),
])
def test_attention_export(
    tiny_config, dataset, tmp_path, strategy: str, files,
) -> None:
    """Ensures that a rollout writes one file per demo or one mean file."""
    manifest, records = dataset
    config = with_overrides(
        tiny_config, run=replace(tiny_config.run, strategy=strategy),
    )
    written = export_attention(
        config, manifest, records, ScanModel(strategy), tmp_path,
    )

    assert [path.name for path in written] == files
    rows = _read(written[0])
    masses = np.array([[float(cell) for cell in row[2:]] for row in rows[1:]])
    assert np.allclose(masses.sum(axis=1), 1.0, atol=1e-6)
