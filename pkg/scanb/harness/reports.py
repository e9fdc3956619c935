"""Result tables assembled from success reports."""

import csv
import json
import logging
from pathlib import Path
from typing import Iterable, List, Sequence

from typing_extensions import Final

from scanb.exceptions import DatasetFormatError
from scanb.harness.evaluation import SuccessReport, report_from_payload

logger = logging.getLogger(__name__)

TABLE_COLUMNS: Final = (
    'task',
    'strategy',
    'expert',
    'finetuned',
    'shots',
    'envs',
    'playouts',
    'mean',
    'std',
)

_REPORT_MSG: Final = '{0} is not a success report: {1}'


def read_report(path: Path) -> SuccessReport:
    """Loads a report written by ``eval``."""
    try:
        return report_from_payload(json.loads(path.read_text('utf-8')))
    except (ValueError, KeyError, TypeError) as exc:
        raise DatasetFormatError(_REPORT_MSG.format(path, exc)) from exc


def table_rows(reports: Iterable[SuccessReport]) -> List[dict]:
    """One row per report, sorted by task, strategy, expert, tuning, shots."""
    rows = [
        {
            'task': report.task,
            'strategy': report.strategy,
            'expert': report.expert,
            'finetuned': int(report.finetuned),
            'shots': report.shots,
            'envs': report.envs,
            'playouts': report.playouts,
            'mean': '{0:.4f}'.format(report.mean),
            'std': '{0:.4f}'.format(report.std),
        }
        for report in reports
    ]
    return sorted(rows, key=lambda row: tuple(
        str(row[column]) for column in TABLE_COLUMNS[:5]
    ))


def summarize_reports(reports: Sequence[SuccessReport], path: Path) -> Path:
    """Writes the comparison table of ``reports`` as CSV."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open('w', newline='') as stream:
        writer = csv.DictWriter(stream, fieldnames=TABLE_COLUMNS)
        writer.writeheader()
        writer.writerows(table_rows(reports))
    logger.info('table reports=%d path=%s', len(reports), path)
    return path
