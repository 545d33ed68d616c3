#!/usr/bin/env python3
"""
Biharmonic Lab
Version: 1.0.0

Spectral simulation and verification toolkit for the integrable
fourth-order nonlinear Schrodinger equation: time integration, the
perturbation determinant, modulation-space norms and dispersive
estimate sweeps.
"""

import argparse
import logging
import os
import sys
from typing import List, Optional

# Import configuration first
from config import (
    DEFAULT_LOCALE, DEFAULT_OUTPUT_DIR, LAB_BUILD_DATE, LAB_NAME, LAB_VERSION, THREADS,
    setup_logging
)
from locales import _, set_locale

from handlers import RunContext, error_handler, register_all_handlers
from handlers.errors import EXIT_INVALID
from services.scheduler import scheduler_service
from services.spectral import set_fft_workers
from storage.data_manager import ArtifactManager, config_hash
from utils.validators import load_config

logger = logging.getLogger(__name__)


def _positive_int(value: str) -> int:
    try:
        number = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value!r}")
    if number < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value!r}")
    return number


def _seed(value: str) -> int:
    try:
        number = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an unsigned 64-bit integer, got {value!r}")
    if not 0 <= number < 2 ** 64:
        raise argparse.ArgumentTypeError(f"expected an unsigned 64-bit integer, got {value!r}")
    return number


class LabArgumentParser(argparse.ArgumentParser):
    """Usage errors exit with EXIT_INVALID; 2 is the blow-up code"""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _add_common(parser: argparse.ArgumentParser):
    parser.add_argument("--config", required=True, help="JSON experiment config")
    parser.add_argument("--out", default=None, help="Output directory")
    parser.add_argument("--seed", type=_seed, default=None, help="RNG seed (overrides the config)")
    parser.add_argument("--threads", type=_positive_int, default=None,
                        help="Worker threads (default: BIHARMONIC_LAB_THREADS)")
    parser.add_argument("--plot", action="store_true", help="Write SVG plots")


def build_parser() -> argparse.ArgumentParser:
    parser = LabArgumentParser(prog=LAB_NAME, description=__doc__.strip().splitlines()[0])
    parser.add_argument("--version", action="version", version=f"{LAB_NAME} {LAB_VERSION}")
    subparsers = parser.add_subparsers(dest="command", required=True)
    register_all_handlers(subparsers, _add_common)
    return parser


def run(argv: Optional[List[str]] = None, notify=print) -> int:
    """Parse arguments, run one subcommand and return its exit code"""
    args = build_parser().parse_args(argv)
    threads = args.threads or THREADS
    scheduler_service.configure(threads)
    set_fft_workers(threads)

    try:
        config = load_config(args.config, seed=args.seed)
        digest = config_hash(config.document)
        out_dir = args.out or os.path.join(DEFAULT_OUTPUT_DIR, f"{args.command}-{digest[:12]}")
        context = RunContext(
            command=args.command,
            config=config,
            artifacts=ArtifactManager(out_dir, digest, config.seed),
            plot=args.plot or config.flag("output", "plot", False),
            threads=threads,
            notify=notify,
        )
        notify(_("cli.run_start", command=args.command, config=args.config,
                 hash=digest[:12], seed=config.seed, threads=threads))
        code = args.handler(context)
        notify(_("cli.done", command=args.command, count=len(context.artifacts.written), out=out_dir))
        return code
    except Exception as e:
        return error_handler(e, notify)
    finally:
        scheduler_service.stop()


def main():
    """Main function to run the lab"""
    setup_logging()
    set_locale(DEFAULT_LOCALE)
    logger.info(f"Starting {LAB_NAME} v{LAB_VERSION} (build {LAB_BUILD_DATE})")
    try:
        code = run()
    except KeyboardInterrupt:
        logger.warning("Interrupted")
        code = EXIT_INVALID
    sys.exit(code)


if __name__ == "__main__":
    main()
