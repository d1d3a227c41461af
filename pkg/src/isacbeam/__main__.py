"""Entry point for the isacbeam command line."""

import argparse
import logging
import sys

from isacbeam.cli_runner import run_experiment
from isacbeam.config import LOG_FORMAT, VERSION, Config
from isacbeam.errors import IsacBeamError
from isacbeam.experiment_config import PRESETS, load_config


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="isacbeam",
        description="isacbeam: secure ISAC beamforming under a PCRB sensing constraint",
    )
    parser.add_argument("--version", action="version", version=f"isacbeam {VERSION}")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Run the experiment described by a config file")
    run.add_argument("--config", required=True, help="Path to the JSON experiment config")
    run.add_argument("--preset", choices=sorted(PRESETS), help="Scenario preset override")
    run.add_argument("--out", help="Output directory (overrides output.directory)")
    run.add_argument("--threads", type=int, help="Worker threads for independent solves")
    run.add_argument("--seed", type=int, help="Seed override for randomized recipes")

    check = sub.add_parser("validate-config", help="Validate a config file and exit")
    check.add_argument("path", help="Path to the JSON experiment config")
    return parser


def main(argv: list[str] | None = None) -> int:
    """Parse arguments, run the requested command and exit with its status code."""
    args = _build_parser().parse_args(argv)

    if args.command == "run":
        config = Config.from_args(out=args.out, threads=args.threads, seed=args.seed)
    else:
        config = Config.from_env()

    logging.basicConfig(format=LOG_FORMAT, level=config.logging_level)
    logger = logging.getLogger(__name__)

    errors = config.validate()
    if errors:
        for err in errors:
            logger.error(err)
        sys.exit(2)

    try:
        if args.command == "validate-config":
            cfg = load_config(args.path)
            logger.info(
                "%s is valid: experiment %s, config %s",
                args.path,
                cfg.experiment.name,
                cfg.config_hash(),
            )
        else:
            cfg = load_config(
                args.config, preset=args.preset, seed=config.seed, out=config.out_dir
            )
            run_experiment(cfg, threads=config.threads)
    except IsacBeamError as exc:
        logger.error("%s: %s", type(exc).__name__, exc)
        sys.exit(exc.exit_code)

    sys.exit(0)


if __name__ == "__main__":
    main()
