#!/usr/bin/env python3
"""Command-line entry point dispatching to the analysis stages"""

import argparse
import sys
from typing import Callable, Dict, List, Optional

import configargparse

from flicker import coarse_grain, netscale, phiid, walker
from flicker.logger import UltimateHelpFormatter, logger, set_verbosity
from flicker.utils.exceptions import FlickerError
from flicker.utils.pipeline import generic_parser, logo_str


def _analyze(args: argparse.Namespace) -> None:
    coarse_grain.main_analyze(
        tpm=args.tpm,
        partition=args.partition,
        boolean_spec=args.boolean_spec,
        prior=args.prior,
        weighting=args.weighting,
        tidy=args.tidy,
        out=args.out,
    )


def _phiid(args: argparse.Namespace) -> None:
    phiid.main(
        system=args.system,
        realization=args.realization,
        expected=args.expected,
        prior=args.prior,
        out=args.out,
    )


def _walk(args: argparse.Namespace) -> None:
    walker.main(
        tpm=args.tpm,
        steps=args.steps,
        seed=args.seed,
        start=args.start,
        partition=args.partition,
        system=args.system,
        prior=args.prior,
        weighting=args.weighting,
        fmt=args.fmt,
        out=args.out,
    )


def _network(args: argparse.Namespace) -> None:
    netscale.main(
        edges=args.edges,
        communities=args.communities,
        label_prop=args.label_prop,
        directed=args.directed,
        seed=args.seed,
        prior=args.prior,
        out=args.out,
    )


def _search(args: argparse.Namespace) -> None:
    coarse_grain.main_search(
        tpm=args.tpm,
        mode=args.mode,
        dask_config=args.dask_config,
        partition_out=args.partition_out,
        out=args.out,
    )


COMMANDS: Dict[str, Callable[[], argparse.ArgumentParser]] = {
    "analyze": coarse_grain.analyze_parser,
    "phiid": phiid.phiid_parser,
    "walk": walker.walk_parser,
    "network": netscale.network_parser,
    "search": coarse_grain.search_parser,
}

RUNNERS: Dict[str, Callable[[argparse.Namespace], None]] = {
    "analyze": _analyze,
    "phiid": _phiid,
    "walk": _walk,
    "network": _network,
    "search": _search,
}


def build_parser() -> configargparse.ArgParser:
    """Top-level parser with one subcommand per stage.

    Every subcommand takes the generic options and its own ``--config`` file.
    """
    parser = configargparse.ArgParser(
        description=logo_str,
        formatter_class=UltimateHelpFormatter,
    )
    subparsers = parser.add_subparsers(
        dest="command", required=True, parser_class=configargparse.ArgParser
    )
    for name, stage_parser in COMMANDS.items():
        stage = stage_parser(parent_parser=True)
        sub = subparsers.add_parser(
            name,
            description=stage.description,
            formatter_class=UltimateHelpFormatter,
            parents=[generic_parser(parent_parser=True), stage],
        )
        sub.add("--config", required=False, is_config_file=True, help="Config file path")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Run one subcommand.

    Returns:
        int: Process exit code (0 on success, 2 for unusable input, 3 for
        undefined quantities or a non-converging computation)
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    set_verbosity(args.verbose, args.debug)
    logger.info(logo_str)
    logger.debug(f"Arguments: {vars(args)}")

    try:
        RUNNERS[args.command](args)
    except FlickerError as e:
        logger.error(str(e))
        return e.exit_code
    return 0


def cli():
    """Command-line interface"""
    sys.exit(main())


if __name__ == "__main__":
    cli()
