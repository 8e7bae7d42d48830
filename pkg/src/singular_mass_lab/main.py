#!/usr/bin/env python3
"""
Main entry point for the Singular Mass Lab command line.
"""

import logging
import sys
from typing import List, Optional

from singular_mass_lab.cli.config import parse_config
from singular_mass_lab.cli.parser import parse_cli_arguments
from singular_mass_lab.cli.progress import CLIProgressReporter
from singular_mass_lab.cli.runner import run
from singular_mass_lab.errors import ConfigError
from singular_mass_lab.logging_config import configure_logging

# Default logging configuration - will be reconfigured based on CLI args
logging.basicConfig(
    level=logging.INFO,
    format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
    datefmt="%Y-%m-%d %H:%M:%S",
)

logger = logging.getLogger(__name__)


def main(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, load the experiment document and run its campaigns."""
    args = parse_cli_arguments(argv)
    configure_logging(verbose=args.verbose, quiet=args.quiet, log_level=args.log_level)
    logger.debug("Application starting.")

    try:
        config = parse_config(args.config).with_overrides(
            campaign=args.campaign, output_dir=args.out, jobs=args.jobs
        )
    except ConfigError as e:
        print(f"Error: {args.config}: {e}", file=sys.stderr)
        return 2

    return run(config, CLIProgressReporter(quiet=args.quiet))


if __name__ == "__main__":
    sys.exit(main())
