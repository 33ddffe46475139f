"""Command-line entry point.

    netkernel run --config experiment.yaml [--out DIR] [--threads K] [--seed S]
    netkernel <experiment> [--config FILE] [--out DIR] [--threads K] [--seed S]

The JSON summary goes to stdout, logs and error records to stderr.
"""

import argparse
import json
import sys
from pathlib import Path
from typing import List, Optional

from netkernel import VERSION
from netkernel.core.config import ExperimentConfig, parse_experiment_config, read_config_mapping, settings
from netkernel.core.errors import ConfigError, NetkernelError
from netkernel.core.utils.logging import get_logger, set_level
from netkernel.core.utils.parallel import set_threads
from netkernel.core.utils.storage import to_json
from netkernel.experiments import experiment_defaults, get_available_experiments, get_experiment

logger = get_logger(__name__)


def _add_common_arguments(parser: argparse.ArgumentParser, config_required: bool) -> None:
    parser.add_argument("--config", required=config_required, help="Experiment configuration (JSON or YAML)")
    parser.add_argument("--out", help="Output directory (default: output.dir or the data output directory)")
    parser.add_argument("--threads", type=int, help="Worker threads (default: NETKERNEL_THREADS, then 1)")
    parser.add_argument("--seed", type=int, help="Override the configuration seed")
    parser.add_argument("--log-level", help="Logging level (default: NETKERNEL_LOG_LEVEL)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="netkernel", description="Simulate interacting-particle networks and estimate graph and kernel"
    )
    parser.add_argument("--version", action="version", version=f"netkernel {VERSION}")
    subparsers = parser.add_subparsers(dest="command", required=True)

    run = subparsers.add_parser("run", help="Run the experiment named in the configuration file")
    _add_common_arguments(run, config_required=True)

    subparsers.add_parser("list", help="List available experiments")

    for name, cls in get_available_experiments().items():
        sub = subparsers.add_parser(name, help=cls.help)
        _add_common_arguments(sub, config_required=False)
    return parser


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    """Configuration for the parsed command: file contents over the experiment's defaults, then --seed."""
    experiment = None if args.command == "run" else args.command
    if args.config:
        raw = read_config_mapping(args.config)
        if experiment is not None and isinstance(raw, dict):
            named = raw.setdefault("experiment", experiment)
            if named != experiment:
                raise ConfigError(
                    f"Configuration {args.config} is for '{named}', not '{experiment}'", source=args.config
                )
        name = raw.get("experiment") if isinstance(raw, dict) else None
        config = parse_experiment_config(raw, args.config, experiment_defaults(name))
    else:
        config = parse_experiment_config({"experiment": experiment}, experiment, experiment_defaults(experiment))
    if args.seed is not None:
        config = config.model_copy(update={"seed": args.seed})
    return config


def run_experiment(config: ExperimentConfig, out_dir: Optional[Path] = None):
    """Execute ``config`` and return its ExperimentResult."""
    experiment = get_experiment(config.experiment)(config, out_dir)
    return experiment.execute()


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.command == "list":
        for name, cls in get_available_experiments().items():
            print(f"{name:24s} {cls.help}")
        return 0

    try:
        set_level(args.log_level or settings.log_level)
        set_threads(args.threads if args.threads is not None else settings.threads)
        config = resolve_config(args)
        result = run_experiment(config, Path(args.out) if args.out else None)
    except NetkernelError as e:
        logger.error(f"{type(e).__name__}: {e.message}")
        print(json.dumps(e.to_record()), file=sys.stderr)
        return e.exit_code
    except Exception as e:
        logger.exception(f"Unexpected error: {e}")
        return 1

    print(to_json(result.summary))
    return 0


if __name__ == "__main__":
    sys.exit(main())
