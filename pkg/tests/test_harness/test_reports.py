import csv

import pytest

from scanb.exceptions import DatasetFormatError
from scanb.harness.evaluation import SuccessReport
from scanb.harness.reports import (
    TABLE_COLUMNS,
    read_report,
    summarize_reports,
    table_rows,
)
from scanb.serialize import write_json


def _report(strategy: str, shots: int, mean: float) -> SuccessReport:
    return SuccessReport(
        task='PP',
        strategy=strategy,
        shots=shots,
        expert='same',
        finetuned=False,
        playouts=4,
        rates=(('pp-novel-000', mean),),
        mean=mean,
        std=0.0,
    )


def test_read_written_report(tmp_path) -> None:
    """Ensures that a report survives the JSON file."""
    report = _report('scan', 5, 0.75)

    assert read_report(write_json(report, tmp_path / 'r.json')) == report


@pytest.mark.parametrize('content', ['{', '{"task": "PP"}', '[]'])
def test_bad_report(tmp_path, content: str) -> None:
    """Ensures that other JSON is not mistaken for a report."""
    path = tmp_path / 'bad.json'
    path.write_text(content, encoding='utf-8')

    with pytest.raises(DatasetFormatError):
        read_report(path)


def test_rows_are_sorted() -> None:
    """Ensures that table rows group by strategy, then shots."""
    rows = table_rows([
        _report('tanet', 1, 0.1),
        _report('scan', 5, 0.9),
        _report('scan', 1, 0.5),
    ])

    assert [(row['strategy'], row['shots']) for row in rows] == [
        ('scan', 1), ('scan', 5), ('tanet', 1),
    ]
    assert rows[0]['mean'] == '0.5000'


def test_summary_file(tmp_path) -> None:
    """Ensures that the table has one line per report."""
    path = summarize_reports(
        [_report('scan', 5, 0.9), _report('bc', 5, 0.2)],
        tmp_path / 'table.csv',
    )
    with path.open(newline='') as stream:
        reader = csv.DictReader(stream)
        assert tuple(reader.fieldnames or ()) == TABLE_COLUMNS
        assert [row['strategy'] for row in reader] == ['bc', 'scan']
