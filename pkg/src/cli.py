import sys
import logging
import argparse
from pathlib import Path
from typing import List, Optional

from . import __version__
from .commands import (
    cmd_analyze,
    cmd_fit,
    cmd_noise_dump,
    cmd_phase_diagram,
    cmd_potential,
    cmd_simulate,
    cmd_sweep,
)
from .core.exceptions import ConfigError, NoJumpsDetectedError, RydbergJumpsError
from .core.settings import get_settings
from .persistence.config_parser import load_config_file
from .persistence.manifest import manifest_inputs

logger = logging.getLogger(__name__)

CONFIG_EXIT_CODE = 2
IO_EXIT_CODE = 6


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rydbergjumps",
        description="Simulate collective quantum jumps in mean-field Rydberg models and analyse their statistics.",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, required=True,
                        help="key = value run configuration, or a manifest.json to rerun")
    common.add_argument("--out", type=Path, default=Path("out"), help="Output directory")
    common.add_argument("--seed", type=int, default=None, help="Override base_seed")
    common.add_argument("--threads", type=int, default=None,
                        help="Worker threads (speed only, never changes results)")
    common.add_argument("--log-level", default=None, choices=["DEBUG", "INFO", "WARNING", "ERROR"],
                        help="Overrides RYDBERGJUMPS_LOG_LEVEL")

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="Integrate an ensemble of trajectories")
    analyze = sub.add_parser("analyze", parents=[common], help="Jump statistics of trajectory files")
    analyze.add_argument("inputs", nargs="*", type=Path,
                         help="Trajectory CSV files (t,value); defaults to the inputs of a --config manifest")
    sub.add_parser("sweep", parents=[common], help="Contrast or optimum-detuning sweep")
    sub.add_parser("phase-diagram", parents=[common], help="Stable-root counts over (Delta, Omega)")
    sub.add_parser("potential", parents=[common], help="Effective potential landscapes")
    fit = sub.add_parser("fit", parents=[common], help="Fit an interval distribution to a histogram")
    fit.add_argument("histogram", nargs="?", type=Path, default=None,
                     help="Histogram CSV (bin_left,bin_right,count); defaults to the input of a --config manifest")
    sub.add_parser("noise-dump", parents=[common], help="Write the noise realisations of an ensemble")
    return parser


def run(args: argparse.Namespace) -> List[Path]:
    config, _ = load_config_file(args.config)
    if args.seed is not None:
        config = config.model_copy(
            update={"ensemble": config.ensemble.model_copy(update={"base_seed": args.seed})}
        )

    out = args.out
    if args.command == "simulate":
        return cmd_simulate(config, out, threads=args.threads)
    if args.command == "analyze":
        return cmd_analyze(config, args.inputs or manifest_inputs(args.config), out)
    if args.command == "sweep":
        return cmd_sweep(config, out, threads=args.threads)
    if args.command == "phase-diagram":
        return cmd_phase_diagram(config, out)
    if args.command == "potential":
        return cmd_potential(config, out)
    if args.command == "fit":
        histogram = args.histogram or next(iter(manifest_inputs(args.config)), None)
        if histogram is None:
            raise ConfigError("fit needs a histogram file")
        return cmd_fit(config, histogram, out)
    return cmd_noise_dump(config, out)


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    settings = get_settings().override(threads=args.threads, log_level=args.log_level)

    logging.basicConfig(
        level=getattr(logging, settings.log_level, logging.INFO),
        format='%(asctime)s %(name)s %(levelname)s %(message)s'
    )
    logger.debug(f"Runtime settings: {settings.as_dict()}")

    try:
        outputs = run(args)
    except NoJumpsDetectedError as e:
        logger.error(f"{e} (summary written to {args.out})")
        return e.exit_code
    except RydbergJumpsError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return e.exit_code
    except OSError as e:
        logger.error(f"I/O error: {e}")
        return IO_EXIT_CODE
    except ValueError as e:
        logger.error(f"Invalid input: {e}")
        return CONFIG_EXIT_CODE
    except Exception as e:
        logger.exception(f"Unexpected failure: {e}")
        return 1

    logger.info(f"{args.command} finished: {len(outputs)} files in {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
