#!/usr/bin/env python
"""Pipeline utility functions: shared argument parsers and dask settings"""

import argparse
from importlib import resources
from pathlib import Path
from typing import Any, Dict, Optional

import yaml

from flicker.logger import UltimateHelpFormatter, logger
from flicker.probability import PriorPolicy
from flicker.utils.typing import PathLike

# Help string to be shown using the -h option
logo_str = """
     _____ _     ___ ____ _  _______ ____
    |  ___| |   |_ _/ ___| |/ / ____|  _ \\
    | |_  | |    | | |   | ' /|  _| | |_) |
    |  _| | |___ | | |___| . \\| |___|  _ <
    |_|   |_____|___\\____|_|\\_\\_____|_| \\_\\

    local emergence in discrete Markov systems
"""

DASK_DEFAULTS: Dict[str, Any] = {
    "scheduler": "threads",
    "num_workers": None,
    "chunk_size": 2048,
}


def positive_int(value: str) -> int:
    """argparse type for strictly positive integers"""
    try:
        number = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{value!r} is not an integer") from None
    if number < 1:
        raise argparse.ArgumentTypeError(f"{value!r} must be at least 1")
    return number


def generic_parser(parent_parser: bool = False) -> argparse.ArgumentParser:
    descStr = f"""
    {logo_str}
    Generic options

    """

    gen_parser = argparse.ArgumentParser(
        add_help=not parent_parser,
        description=descStr,
        formatter_class=UltimateHelpFormatter,
    )
    parser = gen_parser.add_argument_group("generic arguments")

    parser.add_argument(
        "--prior",
        type=str,
        choices=[p.value for p in PriorPolicy],
        default=None,
        help="Distribution over the previous state (each subcommand has its own default).",
    )
    parser.add_argument(
        "--out",
        type=Path,
        default=None,
        help="Output path (stdout when omitted).",
    )
    parser.add_argument(
        "--seed",
        type=int,
        default=0,
        help="Seed for random walks and label propagation.",
    )
    parser.add_argument(
        "-v", dest="verbose", action="store_true", help="Verbose output."
    )
    parser.add_argument(
        "--debug", dest="debug", action="store_true", help="Debug output."
    )

    return gen_parser


def load_dask_config(dask_config: Optional[PathLike] = None) -> Dict[str, Any]:
    """Load the dask settings used by the parallel partition search

    Args:
        dask_config (PathLike, optional): YAML file. Defaults to the packaged ``default.yaml``.

    Returns:
        Dict[str, Any]: ``scheduler``, ``num_workers`` and ``chunk_size``
    """
    if dask_config is None:
        config_dir = resources.files("flicker.configs")
        dask_config = config_dir / "default.yaml"

    with open(dask_config) as f:
        logger.info(f"Loading {dask_config}")
        yaml_config: dict = yaml.safe_load(f) or {}

    config = dict(DASK_DEFAULTS)
    config.update({k: v for k, v in yaml_config.items() if k in DASK_DEFAULTS})
    unknown = sorted(set(yaml_config) - set(DASK_DEFAULTS))
    if unknown:
        logger.warning(f"Ignoring unknown dask settings {unknown}")
    return config
