"""Command-line argument parsing and validation."""

import argparse
import sys
from pathlib import Path
from typing import List, Optional

from ..config import CAMPAIGNS
from .config import ALL_CAMPAIGNS
from .info import show_campaigns, show_version_info


def show_helpful_error(
    parser: argparse.ArgumentParser, error_msg: str, suggestion: Optional[str] = None
):
    """Display helpful error messages with usage hints."""
    print(f"Error: {error_msg}", file=sys.stderr)
    if suggestion:
        print(f"Suggestion: {suggestion}", file=sys.stderr)
    print(file=sys.stderr)
    print("For help, use: singular-mass-lab --help", file=sys.stderr)
    print(
        "For campaigns and the config grammar, use: singular-mass-lab campaigns",
        file=sys.stderr,
    )
    sys.exit(2)


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # type: ignore[override]
        show_helpful_error(self, message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="singular-mass-lab",
        description="""
Singular Mass Lab - very weak solutions of Schrodinger equations with singular mass

Regularizes singular coefficients by mollification, evolves the regularized
problems with a norm-preserving Crank-Nicolson scheme and checks energy
conservation, moderateness, uniqueness and consistency along epsilon ladders.
        """.strip(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  %(prog)s run configs/delta_energy.toml                 # Campaign named in the file
  %(prog)s run configs/bump.toml --campaign consistency  # Override the campaign
  %(prog)s run configs/bump.toml --out results --jobs 4  # Output dir, 4 worker processes
  %(prog)s campaigns                                     # Campaigns and config grammar
  %(prog)s --version
        """,
    )
    parser.add_argument(
        "--version",
        action="store_true",
        help="Show version information and exit",
    )
    commands = parser.add_subparsers(dest="command", parser_class=_Parser)

    run = commands.add_parser("run", help="Run the campaigns of an experiment document")
    run.add_argument("config", type=Path, help="Experiment document (TOML)")
    run.add_argument(
        "--campaign",
        help=f"Campaign to run instead of the document's ({', '.join(CAMPAIGNS + (ALL_CAMPAIGNS,))})",
    )
    run.add_argument("--out", type=Path, help="Output directory (overrides [output] dir)")
    run.add_argument(
        "--jobs",
        type=int,
        help="Worker processes for ladder points (0 = one per CPU, 1 = in-process)",
    )
    run.add_argument("-v", "--verbose", action="store_true", help="Enable verbose output")
    run.add_argument("-q", "--quiet", action="store_true", help="Suppress all non-error output")
    run.add_argument(
        "--log-level",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        default="INFO",
        help="Set logging level (default: INFO)",
    )

    commands.add_parser("campaigns", help="List campaigns and the config grammar")
    return parser


def parse_cli_arguments(argv: Optional[List[str]] = None) -> argparse.Namespace:
    """
    Parse command-line arguments.

    Information commands print and exit 0; invalid usage exits 2.
    """
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.version:
        show_version_info()
        sys.exit(0)

    if args.command == "campaigns":
        show_campaigns()
        sys.exit(0)

    if args.command is None:
        show_helpful_error(parser, "no command given", "use: singular-mass-lab run <config.toml>")

    _validate_arguments(parser, args)
    return args


def _validate_arguments(parser: argparse.ArgumentParser, args: argparse.Namespace):
    """Validate parsed arguments and show helpful errors."""
    if args.verbose and args.quiet:
        show_helpful_error(
            parser,
            "--verbose and --quiet cannot be used together",
            "Choose either --verbose for detailed output, or --quiet to suppress non-error messages",
        )

    if not args.config.exists():
        show_helpful_error(parser, f"config file does not exist: {args.config}")
    if not args.config.is_file():
        show_helpful_error(parser, f"config path is not a file: {args.config}")

    known = CAMPAIGNS + (ALL_CAMPAIGNS,)
    if args.campaign is not None and args.campaign not in known:
        show_helpful_error(
            parser,
            f"unknown campaign: {args.campaign}",
            f"Known campaigns: {', '.join(known)}",
        )

    if args.jobs is not None and args.jobs < 0:
        show_helpful_error(parser, f"--jobs must be non-negative, got {args.jobs}")
