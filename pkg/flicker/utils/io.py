#!/usr/bin/env python
"""File codecs: matrices, distributions, partitions, graphs, systems and traces"""

import hashlib
import json
import re
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from flicker.logger import logger
from flicker.probability import RENORMALIZE_TOLERANCE, ProbVector, TransitionMatrix
from flicker.utils.exceptions import ParseError
from flicker.utils.typing import PathLike

FLOAT_FORMAT = "%.17g"
"""Enough significant digits for every double to round-trip"""

Record = Tuple[int, List[str]]

PARTITION_HEADER_KEYS = ("micro_label", "micro")
COMMUNITY_HEADER_KEYS = ("node",)


def file_digest(path: PathLike) -> str:
    """Content hash of an input file, as recorded in reports"""
    digest = hashlib.sha256(Path(path).read_bytes()).hexdigest()
    return f"sha256:{digest}"


def format_float(value: Optional[float]) -> str:
    """Format a number for CSV output (blank for a missing value)"""
    if value is None:
        return ""
    value = float(value)
    if np.isnan(value):
        return "nan"
    if np.isinf(value):
        return "inf" if value > 0 else "-inf"
    return FLOAT_FORMAT % value


def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def read_records(
    path: PathLike, min_cols: int = 1, max_cols: Optional[int] = None
) -> List[Record]:
    """Read a CSV file as (line number, cells) records, skipping blank lines.

    Args:
        path (PathLike): File to read
        min_cols (int, optional): Fewest cells a record may have. Defaults to 1.
        max_cols (int, optional): Most cells a record may have. Defaults to None.

    Raises:
        ParseError: Unreadable file, ragged rows, or too few/many cells

    Returns:
        List[Record]: Non-blank records with their 1-based line numbers
    """
    try:
        df = pd.read_csv(
            path,
            header=None,
            dtype=str,
            keep_default_na=False,
            skip_blank_lines=False,
            skipinitialspace=True,
        )
    except FileNotFoundError:
        raise ParseError("file not found", str(path)) from None
    except pd.errors.EmptyDataError:
        raise ParseError("file is empty", str(path)) from None
    except pd.errors.ParserError as e:
        match = re.search(r"line (\d+)", str(e))
        line = int(match.group(1)) if match else None
        raise ParseError(f"malformed CSV ({e})", str(path), line) from None

    records: List[Record] = []
    for idx, row in enumerate(df.itertuples(index=False, name=None)):
        cells = ["" if pd.isna(cell) else str(cell).strip() for cell in row]
        while cells and cells[-1] == "":
            cells.pop()
        if not cells:
            continue
        line = idx + 1
        if "" in cells:
            raise ParseError(f"missing value in column {cells.index('') + 1}", str(path), line)
        if len(cells) < min_cols:
            raise ParseError(
                f"expected at least {min_cols} values, found {len(cells)}", str(path), line
            )
        if max_cols is not None and len(cells) > max_cols:
            raise ParseError(
                f"expected at most {max_cols} values, found {len(cells)}", str(path), line
            )
        records.append((line, cells))
    if not records:
        raise ParseError("file has no records", str(path))
    return records


def _parse_numbers(record: Record, path: PathLike) -> np.ndarray:
    line, cells = record
    values = []
    for k, cell in enumerate(cells):
        try:
            values.append(float(cell))
        except ValueError:
            raise ParseError(
                f"non-numeric value {cell!r} in column {k + 1}", str(path), line
            ) from None
    return np.array(values)


def read_matrix(path: PathLike) -> Tuple[np.ndarray, Optional[List[str]], List[int]]:
    """Read a square matrix with an optional header row of state labels.

    The first row is a header when it holds a non-numeric cell, or when the
    file has one more row than it has columns.

    Returns:
        Tuple[np.ndarray, Optional[List[str]], List[int]]: values, labels and
        the line number of every data row
    """
    records = read_records(path)
    labels = None
    first_line, first = records[0]
    if not all(_is_number(cell) for cell in first) or len(records) == len(first) + 1:
        labels = first
        records = records[1:]
    if not records:
        raise ParseError("matrix has no data rows", str(path), first_line)
    width = len(records[0][1])
    for line, cells in records:
        if len(cells) != width:
            raise ParseError(f"expected {width} values, found {len(cells)}", str(path), line)
    if labels is not None and len(labels) != width:
        raise ParseError(
            f"header has {len(labels)} labels for {width} columns", str(path), first_line
        )
    values = np.vstack([_parse_numbers(record, path) for record in records])
    return values, labels, [line for line, _ in records]


def read_tpm_csv(path: PathLike) -> TransitionMatrix:
    """Read a transition matrix (one row per source state).

    Rows within 1e-6 of stochastic are renormalised; other rows are rejected
    with the line that holds them.

    Returns:
        TransitionMatrix: The dynamics
    """
    values, labels, lines = read_matrix(path)
    if values.shape[0] != values.shape[1]:
        raise ParseError(
            f"transition matrix must be square, got {values.shape[0]}x{values.shape[1]}",
            str(path),
        )
    names = labels or [str(i) for i in range(values.shape[0])]
    for i, (total, line) in enumerate(zip(values.sum(axis=1), lines)):
        if abs(total - 1) > RENORMALIZE_TOLERANCE:
            raise ParseError(f"row {names[i]!r} sums to {total:.12g}, not 1", str(path), line)
        if np.any(values[i] < 0):
            raise ParseError(f"row {names[i]!r} has a negative entry", str(path), line)
    logger.info(f"Read {values.shape[0]}-state transition matrix from {path}")
    return TransitionMatrix.from_rows(values, labels)


def write_matrix_csv(values: np.ndarray, labels: Sequence[str], path: PathLike) -> None:
    """Write a square matrix with a header row of labels"""
    df = pd.DataFrame(
        [[format_float(v) for v in row] for row in np.asarray(values)],
        columns=list(labels),
    )
    df.to_csv(path, index=False)


def read_prob_vector_csv(path: PathLike) -> ProbVector:
    """Read a distribution stored as a single CSV row (optional header row first)"""
    records = read_records(path)
    labels = None
    if len(records) == 2:
        labels = records[0][1]
        records = records[1:]
    if len(records) != 1:
        raise ParseError("a distribution is a single row of values", str(path), records[1][0])
    values = _parse_numbers(records[0], path)
    if labels is not None and len(labels) != values.size:
        raise ParseError("header and values differ in length", str(path), records[0][0])
    return ProbVector.from_values(values, labels)


def read_pairs(
    path: PathLike, known: Sequence[str], what: str, header_keys: Sequence[str] = ()
) -> List[Tuple[int, str, str]]:
    """Read ``key,value`` records whose keys must be among ``known``.

    The first record is a header only when its key is not a known label and
    matches one of ``header_keys`` (case-insensitive).

    Raises:
        ParseError: A record names an unknown key, or a key repeats

    Returns:
        List[Tuple[int, str, str]]: (line, key, value) records
    """
    known_set = set(known)
    records = read_records(path, min_cols=2, max_cols=2)
    first_key = records[0][1][0]
    if first_key not in known_set and first_key.lower() in {k.lower() for k in header_keys}:
        records = records[1:]
    pairs = []
    seen: Dict[str, int] = {}
    for line, (key, value) in records:
        if key not in known_set:
            raise ParseError(f"unknown {what} {key!r}", str(path), line)
        if key in seen:
            raise ParseError(
                f"{what} {key!r} assigned twice (first on line {seen[key]})", str(path), line
            )
        seen[key] = line
        pairs.append((line, key, value))
    return pairs


def read_partition_csv(path: PathLike, micro_labels: Sequence[str]):
    """Read a ``micro_label,macro_label`` partition file.

    Macro states are numbered in order of first appearance along the micro states.

    Returns:
        Partition: The coarse-graining
    """
    from flicker.coarse_grain import Partition

    pairs = read_pairs(path, micro_labels, "micro state", PARTITION_HEADER_KEYS)
    mapping = {key: value for _, key, value in pairs}
    return Partition.from_mapping(mapping, micro_labels, source=str(path))


def read_edge_list_csv(path: PathLike) -> List[Tuple[str, str, float]]:
    """Read a ``src,dst[,weight]`` edge list (weight defaults to 1)"""
    records = read_records(path, min_cols=2, max_cols=3)
    first = records[0][1]
    if [cell.lower() for cell in first[:2]] == ["src", "dst"] or (
        len(first) == 3 and not _is_number(first[2])
    ):
        records = records[1:]
    edges = []
    for line, cells in records:
        weight = 1.0
        if len(cells) == 3:
            try:
                weight = float(cells[2])
            except ValueError:
                raise ParseError(f"non-numeric weight {cells[2]!r}", str(path), line) from None
            if not np.isfinite(weight) or weight < 0:
                raise ParseError(f"invalid edge weight {cells[2]!r}", str(path), line)
        edges.append((cells[0], cells[1], weight))
    return edges


def read_communities_csv(path: PathLike, nodes: Sequence[str]) -> Dict[str, str]:
    """Read a ``node,community`` file; every node must appear exactly once"""
    pairs = read_pairs(path, nodes, "node", COMMUNITY_HEADER_KEYS)
    mapping = {key: value for _, key, value in pairs}
    missing = [node for node in nodes if node not in mapping]
    if missing:
        raise ParseError(f"no community for node {missing[0]!r}", str(path))
    return mapping


def read_json(path: PathLike) -> Any:
    try:
        with open(path) as f:
            return json.load(f)
    except FileNotFoundError:
        raise ParseError("file not found", str(path)) from None
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON ({e.msg})", str(path), e.lineno) from None


def write_partition_csv(partition, path: PathLike) -> None:
    """Write a partition as ``micro_label,macro_label`` records"""
    df = pd.DataFrame(
        {
            "micro_label": list(partition.micro_labels),
            "macro_label": [partition.macro_labels[a] for a in partition.assignment],
        }
    )
    df.to_csv(path, index=False)
