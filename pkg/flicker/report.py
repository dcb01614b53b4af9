#!/usr/bin/env python3
"""Emergence reports written by every subcommand"""

import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

from flicker import __version__
from flicker.logger import logger
from flicker.utils.io import file_digest
from flicker.utils.json import dump_json
from flicker.utils.typing import PathLike


@dataclass
class EmergenceReport:
    """Serializable summary of one analysis.

    Reports carry no timestamp so that re-running an analysis on the same
    inputs reproduces the file byte for byte.
    """

    kind: str
    """Subcommand that produced the report"""
    inputs: Dict[str, str] = field(default_factory=dict)
    """Content digest of every input file, keyed by role"""
    parameters: Dict[str, Any] = field(default_factory=dict)
    """Options that shaped the analysis"""
    expected: Dict[str, Any] = field(default_factory=dict)
    """Expected (system-wide) measures"""
    local: Dict[str, Any] = field(default_factory=dict)
    """Per-transition, per-edge or per-realization tables"""
    statistics: Dict[str, Any] = field(default_factory=dict)
    """Fractions and counts derived from the local tables"""
    warnings: List[str] = field(default_factory=list)
    """Non-fatal problems met during the analysis"""
    tool: str = "flicker"
    version: str = __version__

    def add_input(self, role: str, path: Optional[PathLike]) -> None:
        if path is not None:
            self.inputs[role] = file_digest(path)

    def warn(self, message: str) -> None:
        logger.warning(message)
        if message not in self.warnings:
            self.warnings.append(message)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "tool": self.tool,
            "version": self.version,
            "kind": self.kind,
            "inputs": self.inputs,
            "parameters": self.parameters,
            "expected": self.expected,
            "local": self.local,
            "statistics": self.statistics,
            "warnings": self.warnings,
        }

    def write(self, out: Optional[PathLike] = None) -> str:
        """Write the report as JSON to ``out``, or to stdout when no path is given

        Returns:
            str: The JSON text
        """
        text = dump_json(self.to_dict(), out)
        if out is None:
            sys.stdout.write(text)
        else:
            logger.info(f"Wrote {self.kind} report to {Path(out)}")
        return text
