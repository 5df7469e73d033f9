"""
Command-line interface for vacuumprobe.

Usage:
    vacuumprobe table1 --out results/table1
    vacuumprobe image --config image.toml --out results/image --threads auto
    vacuumprobe fit --config fit.toml --seed 7
    vacuumprobe sensitivity --out results/sensitivity
    vacuumprobe kinematics
"""
import sys
import logging
import argparse
from dataclasses import replace
from typing import List, Optional

from vacuumprobe import __version__
from vacuumprobe.config import SCENARIOS, load_config, parse_config, resolve_threads
from vacuumprobe.exceptions import ArtifactIOError, ConfigError, DomainError
from vacuumprobe.runner import ScenarioRunner

# Set up logging
logging.basicConfig(
    level=logging.INFO,
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    handlers=[logging.StreamHandler()]
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_DOMAIN = 3
EXIT_IO = 4
EXIT_INTERRUPTED = 130

SCENARIO_HELP = {
    'image': "Render the focal-plane image, line profiles and wire pattern",
    'fit': "Fit the phase-template scale κ on a synthetic measurement",
    'sensitivity': "Yield, required photons and mass reach of one-beam focusing",
    'kinematics': "Tabulate quasi-parallel collision kinematics",
    'table1': "Reproduce the reference imaging parameter table",
}


def setup_argument_parser() -> argparse.ArgumentParser:
    """
    Set up the argument parser.

    Returns:
        Configured argument parser
    """
    parser = argparse.ArgumentParser(prog="vacuumprobe",
                                     description="Laser probes of the quantum vacuum: imaging and resonance search")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="Scenario configuration file (TOML, or JSON with .json suffix)")
    common.add_argument("--out", help="Output directory (default: output.directory from the config, else ./output)")
    common.add_argument("--seed", type=int, help="Seed for synthetic perturbations (overrides the config)")
    common.add_argument("--threads", help="Worker threads, an integer or 'auto' (default: $VACUUMPROBE_THREADS or 1)")
    common.add_argument("--verbose", action="store_true", help="Enable verbose logging")

    subparsers = parser.add_subparsers(dest="scenario", required=True, metavar="scenario")
    for name in SCENARIOS:
        subparsers.add_parser(name, parents=[common], help=SCENARIO_HELP[name], description=SCENARIO_HELP[name])
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """
    Main entry point.

    Returns:
        Exit code: 0 success, 2 invalid configuration, 3 domain error,
        4 output error, 130 interrupted, 1 anything else
    """
    parser = setup_argument_parser()
    args = parser.parse_args(argv)

    # Set logging level
    if args.verbose:
        logging.getLogger().setLevel(logging.DEBUG)

    try:
        if args.config:
            config = load_config(args.config, args.scenario)
        else:
            logger.info("No configuration given; using the reference presets")
            config = parse_config({}, args.scenario)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError(f"must be non-negative, got {args.seed}", "seed")
            config = replace(config, seed=args.seed)
        threads = resolve_threads(args.threads)
        output_dir = args.out or config.output_dir or "output"

        runner = ScenarioRunner(config, output_dir, threads)
        manifest = runner.run()
        logger.info(f"Scenario '{config.scenario}' wrote {len(manifest['artifacts'])} artifacts to {output_dir}")
        return EXIT_OK

    except ConfigError as e:
        logger.error(f"Invalid configuration: {e}")
        return EXIT_CONFIG
    except DomainError as e:
        logger.error(f"Domain error in {e.operation}: {e}")
        return EXIT_DOMAIN
    except ArtifactIOError as e:
        logger.error(f"Could not write output {e.path}: {e}")
        return EXIT_IO
    except KeyboardInterrupt:
        logger.info("Operation cancelled by user")
        return EXIT_INTERRUPTED
    except Exception as e:
        logger.exception(f"An error occurred: {e}")
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
