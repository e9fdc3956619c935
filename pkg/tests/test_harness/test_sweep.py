import csv

import pytest

from scanb.exceptions import ContractError
from scanb.harness.evaluation import expert_factory, support_of
from scanb.harness.sweep import (
    SWEEP_COLUMNS,
    SweepReport,
    mixed_support,
    robustness_sweep,
    suboptimal_support,
    write_sweep,
)


def test_mixed_support_order() -> None:
    """Ensures that the first slots are replaced, the rest kept."""
    optimal = ('o0', 'o1', 'o2')
    suboptimal = ('s0', 's1', 's2')

    assert mixed_support(optimal, suboptimal, 0) == optimal
    assert mixed_support(optimal, suboptimal, 2) == ('s0', 's1', 'o2')
    assert mixed_support(optimal, suboptimal, 3) == suboptimal


@pytest.mark.parametrize('count', [-1, 4])
def test_mixed_support_bounds(count: int) -> None:
    """Ensures that the count can not exceed the support."""
    with pytest.raises(ContractError):
        mixed_support(('o',) * 3, ('s',) * 3, count)


def test_suboptimal_support(tiny_config, dataset) -> None:
    """Ensures that detour demos are long and as many as the shots."""
    manifest, records = dataset
    env_id = manifest.novel_env_ids[0]
    shots = tiny_config.sweep.shots
    detours = suboptimal_support(tiny_config, manifest, env_id, shots)
    optimal = support_of(records, env_id, shots)

    assert len(detours) == shots
    assert min(len(demo) for demo in detours) > min(
        len(demo) for demo in optimal
    )


def test_expert_sweep(tiny_config, dataset, tmp_path) -> None:
    """Ensures that the sweep has one row per sub-optimal count."""
    manifest, records = dataset
    report = robustness_sweep(
        tiny_config, manifest, records,
        make_controller=expert_factory(manifest.task),
    )
    path = write_sweep(report, tmp_path / 'sweep.csv')

    assert [count for count, _ in report.rows] == [0, 1, 2]
    assert report.strategy == 'expert'
    assert report.drop(2) == 0.0
    with path.open(newline='') as stream:
        rows = list(csv.reader(stream))
    assert tuple(rows[0]) == SWEEP_COLUMNS
    assert len(rows) == tiny_config.sweep.shots + 2


def test_sweep_needs_novel_env(tiny_config, dataset) -> None:
    """Ensures that sweeping a training environment is refused."""
    manifest, records = dataset

    with pytest.raises(ContractError, match='not a novel'):
        robustness_sweep(
            tiny_config, manifest, records,
            make_controller=expert_factory(manifest.task),
            env_id=manifest.base_env_ids[0],
        )


def test_report_lookup() -> None:
    """Ensures that rates and drops are read by count."""
    report = SweepReport(
        env_id='pp-novel-000',
        strategy='scan',
        shots=2,
        playouts=4,
        rows=((0, 0.75), (1, 0.5), (2, 0.25)),
    )

    assert report.rate(1) == 0.5
    assert report.drop(2) == 0.5
