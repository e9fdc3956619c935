"""
Command line entry point.

Every command reads one TOML run configuration and writes its artifacts
under ``run.output``. Exit codes are stable: ``0`` success, ``1`` any other
failure, ``2`` configuration error, ``3`` numeric abort and ``4``
artifact mismatch.
"""

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

from typing_extensions import Final

from scanb.data.storage import dataset_checksum, load_dataset, save_dataset
from scanb.exceptions import (
    CheckpointError,
    ConfigurationError,
    DatasetFormatError,
    NonFiniteError,
    ScanbError,
    TrainingAborted,
)
from scanb.harness.config import RunConfig, load_config, with_overrides
from scanb.harness.dataset import build_dataset
from scanb.harness.evaluation import evaluate, expert_factory
from scanb.harness.export import export_attention, export_context_projection
from scanb.harness.locality import combine_localities, measure_locality
from scanb.harness.reports import read_report, summarize_reports
from scanb.harness.selfcheck import run_selfcheck
from scanb.harness.sweep import robustness_sweep, write_sweep
from scanb.harness.training import FINAL_NAME, meta_train, restore_model
from scanb.model.conditioning import STRATEGIES, STRATEGY_SCA
from scanb.serialize import write_json

logger = logging.getLogger('scanb')

EXIT_OK: Final = 0
EXIT_FAILURE: Final = 1
EXIT_CONFIG: Final = 2
EXIT_NUMERIC: Final = 3
EXIT_ARTIFACT: Final = 4

_EXIT_CODES: Final = (
    (ConfigurationError, EXIT_CONFIG),
    (TrainingAborted, EXIT_NUMERIC),
    (NonFiniteError, EXIT_NUMERIC),
    (CheckpointError, EXIT_ARTIFACT),
    (DatasetFormatError, EXIT_ARTIFACT),
)
_LOG_FORMAT: Final = '%(asctime)s %(levelname)s %(name)s %(message)s'

Command = Callable[[argparse.Namespace], int]


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Parses ``argv``, runs one command and returns its exit code."""
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=args.log_level, format=_LOG_FORMAT)
    try:
        return _COMMANDS[args.command](args)
    except ScanbError as exc:
        code = exit_code(exc)
        logger.error('command=%s exit=%d error=%s', args.command, code, exc)
        return code
    except FileNotFoundError as exc:
        logger.error('command=%s missing=%s', args.command, exc.filename)
        return EXIT_ARTIFACT


def exit_code(error: ScanbError) -> int:
    """Stable exit code of an error, ``1`` for anything unexpected."""
    for kind, code in _EXIT_CODES:
        if isinstance(error, kind):
            return code
    return EXIT_FAILURE


def build_parser() -> argparse.ArgumentParser:
    """All commands and their options."""
    parser = argparse.ArgumentParser(
        prog='scanb',
        description='Few-shot imitation with stage-conscious attention.',
    )
    parser.add_argument(
        '--log-level',
        default='INFO',
        choices=('DEBUG', 'INFO', 'WARNING', 'ERROR'),
    )
    commands = parser.add_subparsers(dest='command', required=True)

    for name, help_text in (
        ('gen', 'generate the dataset and print its checksum'),
        ('train', 'meta-train on base environments'),
        ('eval', 'evaluate on novel environments'),
        ('sweep', 'success rate against sub-optimal demonstrations'),
        ('export', 'attention maps, context projection and locality'),
    ):
        command = commands.add_parser(name, help=help_text)
        command.add_argument('config', type=Path)
        command.add_argument(
            '--set',
            dest='overrides',
            action='append',
            default=[],
            metavar='SECTION.KEY=VALUE',
        )
        if name in {'eval', 'sweep', 'export'}:
            command.add_argument('--checkpoint', type=Path, default=None)
    _eval_options(commands.choices['eval'])
    commands.choices['export'].add_argument('--playouts', type=int, default=1)

    selfcheck = commands.add_parser('selfcheck', help='oracle suite')
    selfcheck.add_argument('--scenes', type=int, default=10)
    selfcheck.add_argument('--seed', type=int, default=0)
    selfcheck.add_argument(
        '--strategy',
        dest='strategies',
        action='append',
        choices=STRATEGIES,
        default=None,
    )

    table = commands.add_parser('table', help='merge reports into a table')
    table.add_argument('reports', type=Path, nargs='+')
    table.add_argument('--output', type=Path, default=Path('table.csv'))
    return parser


def cmd_gen(args: argparse.Namespace) -> int:
    """Writes manifest and records, prints the dataset checksum."""
    config = _config(args)
    manifest, records = build_dataset(config)
    root = Path(config.run.dataset)
    save_dataset(manifest, records, root)
    _emit(root, dataset_checksum(root))
    return EXIT_OK


def cmd_train(args: argparse.Namespace) -> int:
    """Meta-trains and prints the final checkpoint and the loss log."""
    config = _config(args)
    manifest, records = load_dataset(config.run.dataset)
    result = meta_train(config, manifest, records)
    _emit(result.checkpoint, result.log)
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    """Writes a success report as JSON."""
    config = _config(args)
    if args.shots is not None:
        config = with_overrides(
            config, eval=replace(config.eval, shots=args.shots),
        )
    manifest, records = load_dataset(config.run.dataset)
    root = config.output_dir / 'eval'
    trace_dir = root / 'traces' if config.eval.traces else None
    if args.expert_policy:
        report = evaluate(
            config, manifest, records,
            make_controller=expert_factory(manifest.task),
            trace_dir=trace_dir,
        )
    else:
        model = restore_model(_checkpoint(args, config), config)
        report = evaluate(config, manifest, records, model, trace_dir=trace_dir)
    name = 'report-{0}-{1}shot{2}.json'.format(
        report.strategy, report.shots, '-ft' if report.finetuned else '',
    )
    _emit(write_json(report, root / name))
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    """Writes the rate-versus-count table and its JSON report."""
    config = _config(args)
    manifest, records = load_dataset(config.run.dataset)
    model = restore_model(_checkpoint(args, config), config)
    report = robustness_sweep(config, manifest, records, model)
    root = config.output_dir / 'sweep'
    _emit(
        write_sweep(report, root / 'sweep-{0}.csv'.format(report.env_id)),
        write_json(report, root / 'sweep-{0}.json'.format(report.env_id)),
    )
    return EXIT_OK


def cmd_export(args: argparse.Namespace) -> int:
    """Attention files; stage-conscious runs add contexts and locality."""
    config = _config(args)
    manifest, records = load_dataset(config.run.dataset)
    model = restore_model(_checkpoint(args, config), config)
    root = config.output_dir / 'export'
    written: List[Path] = list(export_attention(
        config, manifest, records, model, root / 'attention', args.playouts,
    ))
    if model.strategy == STRATEGY_SCA:
        episodes = [records[env_id][0] for env_id in manifest.novel_env_ids]
        written.append(export_context_projection(
            model, episodes[0], root / 'contexts.csv',
        ))
        locality = combine_localities([
            measure_locality(model, episode) for episode in episodes
        ])
        written.append(write_json(locality, root / 'locality.json'))
    _emit(*written)
    return EXIT_OK


def cmd_selfcheck(args: argparse.Namespace) -> int:
    """Prints one line per check, fails if any check fails."""
    results = run_selfcheck(
        args.strategies or STRATEGIES, scenes=args.scenes, seed=args.seed,
    )
    for result in results:
        sys.stdout.write('{0} {1} value={2:.3g} bound={3:.3g}\n'.format(
            'ok' if result.passed else 'FAIL',
            result.name,
            result.value,
            result.bound,
        ))
    if all(result.passed for result in results):
        return EXIT_OK
    return EXIT_FAILURE


def cmd_table(args: argparse.Namespace) -> int:
    """Merges report files into one CSV table."""
    reports = [read_report(path) for path in args.reports]
    _emit(summarize_reports(reports, args.output))
    return EXIT_OK


def _eval_options(command: argparse.ArgumentParser) -> None:
    command.add_argument('--shots', type=int, default=None)
    command.add_argument(
        '--expert-policy',
        action='store_true',
        help='evaluate the scripted expert instead of a checkpoint',
    )


def _config(args: argparse.Namespace) -> RunConfig:
    return load_config(args.config, args.overrides)


def _checkpoint(args: argparse.Namespace, config: RunConfig) -> Path:
    if args.checkpoint is not None:
        return args.checkpoint
    return config.output_dir / 'train' / FINAL_NAME


def _emit(*items: object) -> None:
    for item in items:
        sys.stdout.write('{0}\n'.format(item))


_COMMANDS: Final[Dict[str, Command]] = {
    'gen': cmd_gen,
    'train': cmd_train,
    'eval': cmd_eval,
    'sweep': cmd_sweep,
    'export': cmd_export,
    'selfcheck': cmd_selfcheck,
    'table': cmd_table,
}
