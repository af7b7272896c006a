#!/usr/bin/env python
# coding: utf-8

import argparse
import logging
import sys
from dataclasses import fields
from pathlib import Path

# Add the project directory to the path
# This ensures we can import from sibling modules
project_dir = Path(__file__).parent
sys.path.append(str(project_dir))

import config
from adapt import ModelKind
from datamodel import AdaptConfig
from errors import DataFormatError, DbMmdError, ParameterError
from experiment import load_experiment_spec, run_experiment
from report_generator import rerender
from sample_data import LAYOUTS, SHIFT_KINDS, SyntheticRecipe, write_synthetic

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED_CELLS = 1
EXIT_CONFIG_ERROR = 2


def setup_logging(level=config.LOG_LEVEL):
    """Console logging plus, when config.LOG_FILE is set, a log file."""
    handlers = [logging.StreamHandler()]
    if config.LOG_FILE:
        handlers.insert(0, logging.FileHandler(config.LOG_FILE))
    logging.basicConfig(
        level=level,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=handlers,
        force=True,
    )


def _parse_bool(text):
    value = str(text).strip().lower()
    if value in ('1', 'true', 'yes', 'on'):
        return True
    if value in ('0', 'false', 'no', 'off'):
        return False
    raise argparse.ArgumentTypeError(f"expected true or false, got '{text}'")


def _flag_type(f):
    if f.type is bool:
        return _parse_bool
    if f.type in (int, float, str):
        return f.type
    return float


def add_config_flags(parser):
    """One --flag per AdaptConfig key; unset flags leave the spec's value alone."""
    group = parser.add_argument_group('adaptation settings')
    for f in fields(AdaptConfig):
        group.add_argument(
            f"--{f.name.replace('_', '-')}",
            dest=f"cfg_{f.name}",
            type=_flag_type(f),
            default=None,
            help=f"override '{f.name}' (default {f.default})",
        )


def config_overrides(args):
    return {f.name: getattr(args, f"cfg_{f.name}") for f in fields(AdaptConfig)}


def parse_args(argv=None):
    """Parse command line arguments."""
    parser = argparse.ArgumentParser(description='DB-MMD domain adaptation benchmarks')
    parser.add_argument('--log-level', default=config.LOG_LEVEL,
                        help='Logging level (DEBUG, INFO, WARNING, ERROR)')
    parser.add_argument('--version', action='version', version=f"%(prog)s {config.VERSION}")
    subparsers = parser.add_subparsers(dest='command', required=True)

    synth = subparsers.add_parser('synth', help='Write a synthetic source/target pair to feature files')
    synth.add_argument('--out-dir', default='data/synthetic', help='Directory for source/target files')
    synth.add_argument('--format', choices=['csv', 'raw'], default='csv')
    synth.add_argument('--classes', type=int, default=config.SYNTH_CLASSES)
    synth.add_argument('--per-class', type=int, default=config.SYNTH_PER_CLASS)
    synth.add_argument('--feature-dim', type=int, default=config.SYNTH_FEATURE_DIM)
    synth.add_argument('--shift-kind', choices=SHIFT_KINDS, default=config.SYNTH_SHIFT_KIND)
    synth.add_argument('--shift-value', type=float, default=config.SYNTH_SHIFT_VALUE)
    synth.add_argument('--noise', type=float, default=config.SYNTH_NOISE)
    synth.add_argument('--center-spread', type=float, default=config.SYNTH_CENTER_SPREAD)
    synth.add_argument('--layout', choices=LAYOUTS, default=config.SYNTH_LAYOUT)
    synth.add_argument('--pivot', type=float, nargs=2, default=list(config.SYNTH_PIVOT), metavar=('X', 'Y'),
                       help='Point the rotation shift turns about')
    synth.add_argument('--seed', type=int, default=config.SEED)

    run = subparsers.add_parser('run', help='Run an experiment spec (JSON)')
    run.add_argument('spec', help='Path to the experiment spec')
    run.add_argument('--models', nargs='+', help='Override the model list, e.g. JDA JDA+CG')
    run.add_argument('--output-dir', help='Override the output directory')
    run.add_argument('--repeat', type=int, help='Override the repeat count')
    run.add_argument('--n-jobs', type=int, help='Parallel cells')
    run.add_argument('--dump-embeddings', action='store_true', help='Write Z for every cell')
    add_config_flags(run)

    report = subparsers.add_parser('report', help='Re-render summaries from stored reports')
    report.add_argument('output_dir', help='Directory of a finished run')

    return parser.parse_args(argv)


def command_synth(args):
    recipe = SyntheticRecipe(
        class_count=args.classes,
        per_class=args.per_class,
        feature_dim=args.feature_dim,
        shift_kind=args.shift_kind,
        shift_value=args.shift_value,
        noise=args.noise,
        center_spread=args.center_spread,
        layout=args.layout,
        pivot=tuple(args.pivot),
        seed=args.seed,
    )
    source_path, target_path = write_synthetic(recipe, args.out_dir, args.format)
    print(f"Source: {source_path}\nTarget: {target_path}")
    return EXIT_OK


def command_run(args):
    spec = load_experiment_spec(args.spec)
    spec.config = spec.config.updated(**config_overrides(args))
    if args.models:
        spec.models = [ModelKind.parse(m) for m in args.models]
    if args.output_dir:
        spec.output_dir = args.output_dir
    if args.repeat is not None:
        if args.repeat < 1:
            raise ParameterError(f"--repeat must be >= 1, got {args.repeat}")
        spec.repeat = args.repeat
    if args.n_jobs is not None:
        spec.n_jobs = args.n_jobs
    if args.dump_embeddings:
        spec.dump_embeddings = True

    result = run_experiment(spec)
    print((result.output_dir / 'summary.md').read_text(encoding='utf-8'))
    return EXIT_OK if result.ok else EXIT_FAILED_CELLS


def command_report(args):
    rerender(args.output_dir)
    print((Path(args.output_dir) / 'summary.md').read_text(encoding='utf-8'))
    return EXIT_OK


COMMANDS = {'synth': command_synth, 'run': command_run, 'report': command_report}


def main(argv=None):
    """Entry point; returns the process exit code."""
    args = parse_args(argv)
    setup_logging(args.log_level.upper())
    try:
        return COMMANDS[args.command](args)
    except (ParameterError, DataFormatError) as e:
        logger.error(f"Configuration or input error: {e}")
        return EXIT_CONFIG_ERROR
    except DbMmdError as e:
        logger.error(f"Run failed: {e}", exc_info=True)
        return EXIT_FAILED_CELLS
    except Exception as e:
        logger.error(f"Fatal error: {e}", exc_info=True)
        return EXIT_FAILED_CELLS


if __name__ == "__main__":
    sys.exit(main())
