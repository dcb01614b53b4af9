#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""Seeded random walks annotated with local emergence measures.

Random numbers come from numpy's PCG64 bit generator seeded with the walk's
seed. Each step draws one double u in [0, 1) and moves to the first state
(in label order) whose cumulative row probability exceeds u times the row
total. Starting from the prior consumes one draw the same way.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import NamedTuple as Struct
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from dask import compute, delayed
from tqdm.auto import tqdm

from flicker.coarse_grain import (
    Partition,
    TransitionClass,
    Weighting,
    classify_transitions,
    macro_tpm,
)
from flicker.logger import TqdmToLogger, UltimateHelpFormatter, logger, progress_disabled
from flicker.phiid import (
    CAUSAL_DECOUPLING,
    FactorizedSystem,
    expected_table,
    local_tables,
    system_from_json,
)
from flicker.probability import (
    ZERO_TOLERANCE,
    PriorPolicy,
    ProbVector,
    TransitionMatrix,
    local_excess_entropy_table,
    resolve_prior,
)
from flicker.report import EmergenceReport
from flicker.utils.exceptions import ValidationError
from flicker.utils.io import format_float, read_json, read_partition_csv, read_tpm_csv
from flicker.utils.json import dump_json
from flicker.utils.pipeline import logo_str, positive_int
from flicker.utils.typing import State

TQDM_OUT = TqdmToLogger(logger, level=logging.INFO)

TRACE_COLUMNS = ("t", "state", "e_micro", "e_macro", "ratio", "decoupling", "flicker")


class WalkContext(Struct):
    """What to annotate a walk with"""

    partition: Optional[Partition] = None
    """Coarse-graining for macro values and incongruity flags"""
    factorized: Optional[FactorizedSystem] = None
    """Two-element view of the same dynamics for local causal decoupling"""
    prior: Union[PriorPolicy, str, ProbVector] = PriorPolicy.STATIONARY
    """Prior behind the micro and macro local values"""
    weighting: Union[Weighting, str] = Weighting.UNIFORM
    """Within-group weighting of the macro scale"""


class WalkTrace(Struct):
    """A walk with one annotation per transition"""

    seed: Optional[int]
    states: Tuple[int, ...]
    """x_0 .. x_T"""
    labels: Tuple[str, ...]
    """Label of each state index"""
    e_micro: np.ndarray
    """Local excess entropy of each transition"""
    e_macro: Optional[np.ndarray]
    """Local excess entropy of the macro image (with a partition)"""
    ratio: Optional[np.ndarray]
    """e_macro / e_micro, nan where |e_micro| < 1e-12"""
    decoupling: Optional[np.ndarray]
    """Local causal decoupling (with a factorized system)"""
    flicker: np.ndarray
    """Transition is incongruous, or has negative local decoupling against a positive expectation"""

    @property
    def steps(self) -> int:
        return len(self.states) - 1


class FlickerSummary(Struct):
    """Counts and dwell times of flagged transitions"""

    steps: int
    n_flagged: int
    fraction: float
    flagged_runs: Tuple[int, ...]
    """Lengths of consecutive flagged stretches, in order"""
    unflagged_runs: Tuple[int, ...]
    """Lengths of consecutive unflagged stretches, in order"""
    flagged_steps: Tuple[int, ...]
    """Transition indices t (1-based, x_{t-1} -> x_t) that were flagged"""


def _draw(cdf: np.ndarray, u: float) -> int:
    return min(int(np.searchsorted(cdf, u * cdf[-1], side="right")), cdf.size - 1)


def simulate(
    W: TransitionMatrix,
    steps: int,
    seed: int,
    start: Union[State, None] = None,
    prior: Union[PriorPolicy, str, ProbVector] = PriorPolicy.STATIONARY,
) -> np.ndarray:
    """Run a seeded random walk.

    Args:
        W (TransitionMatrix): Dynamics
        steps (int): Number of transitions (at least 1)
        seed (int): PCG64 seed
        start (State, optional): Fixed first state; drawn from ``prior`` when None.
        prior (optional): Distribution of the first state. Defaults to stationary.

    Raises:
        ValidationError: steps < 1 or an unknown start state

    Returns:
        np.ndarray: steps + 1 state indices
    """
    if steps < 1:
        raise ValidationError(f"A walk needs at least one step, got {steps}")
    rng = np.random.Generator(np.random.PCG64(seed))
    cdf = np.cumsum(W.rows, axis=1)
    states = np.empty(steps + 1, dtype=int)
    if start is None:
        states[0] = _draw(np.cumsum(resolve_prior(W, prior).probs), rng.random())
    else:
        states[0] = W.index(start)
    for t in tqdm(
        range(1, steps + 1), desc="Walking", file=TQDM_OUT, disable=progress_disabled()
    ):
        states[t] = _draw(cdf[states[t - 1]], rng.random())
    return states


def simulate_many(
    W: TransitionMatrix,
    steps: int,
    seeds: Sequence[int],
    start: Union[State, None] = None,
    prior: Union[PriorPolicy, str, ProbVector] = PriorPolicy.STATIONARY,
) -> List[np.ndarray]:
    """Independent walks, one per seed, run concurrently on dask's threads"""
    if start is None:
        prior = resolve_prior(W, prior)
    tasks = [delayed(simulate)(W, steps, seed, start, prior) for seed in seeds]
    return list(compute(*tasks, scheduler="threads"))


def transition_frequencies(states: Sequence[int], n: int) -> np.ndarray:
    """Empirical joint frequency of consecutive pairs (x_{t-1}, x_t)"""
    states = np.asarray(states)
    counts = np.zeros((n, n))
    np.add.at(counts, (states[:-1], states[1:]), 1)
    return counts / max(len(states) - 1, 1)


def annotate(
    W: TransitionMatrix,
    states: Sequence[int],
    context: Optional[WalkContext] = None,
    seed: Optional[int] = None,
) -> WalkTrace:
    """Attach local measures and flicker flags to every transition of a walk.

    Expected counterparts are computed once from the dynamics and prior
    before the walk is read.

    Args:
        W (TransitionMatrix): Dynamics the walk was drawn from
        states (Sequence[int]): Walk x_0 .. x_T
        context (WalkContext, optional): Partition and/or factorized system.
        seed (int, optional): Seed recorded in the trace.

    Raises:
        ValidationError: Context of the wrong size, or a step with W = 0

    Returns:
        WalkTrace: The annotated walk
    """
    context = context or WalkContext()
    states = np.asarray(states, dtype=int)
    src, dst = states[:-1], states[1:]
    if np.any(W.rows[src, dst] == 0):
        t = int(np.flatnonzero(W.rows[src, dst] == 0)[0]) + 1
        raise ValidationError(f"Step {t} of the walk has zero transition probability")

    p = resolve_prior(W, context.prior)
    e_micro = local_excess_entropy_table(W, p)[src, dst]
    flags = np.zeros(src.size, dtype=bool)

    e_macro = ratio = decoupling = None
    if context.partition is not None:
        if context.partition.n != W.n:
            raise ValidationError(
                f"Partition covers {context.partition.n} states, the walk has {W.n}"
            )
        macro = macro_tpm(W, context.partition, context.weighting)
        assignment = np.asarray(context.partition.assignment)
        p_macro = context.partition.project(p)
        e_macro = local_excess_entropy_table(macro.macro_tpm, p_macro)[
            assignment[src], assignment[dst]
        ]
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(np.abs(e_micro) < ZERO_TOLERANCE, np.nan, e_macro / e_micro)
        lookup = classify_transitions(W, macro, p).lookup()
        flags |= np.array(
            [lookup[(i, j)].kind is TransitionClass.INCONGRUOUS for i, j in zip(src, dst)],
            dtype=bool,
        )

    if context.factorized is not None:
        system = context.factorized
        if system.n != W.n or not np.allclose(system.tpm.rows, W.rows, atol=1e-9, rtol=0):
            raise ValidationError("Factorized system does not describe the walked dynamics")
        tables = local_tables(system)
        expected = expected_table(system, tables).values[CAUSAL_DECOUPLING]
        decoupling = np.array(
            [
                tables[(i, j)].values[CAUSAL_DECOUPLING] if (i, j) in tables else np.nan
                for i, j in zip(src, dst)
            ]
        )
        if expected > ZERO_TOLERANCE:
            flags |= decoupling < -ZERO_TOLERANCE

    return WalkTrace(
        seed=seed,
        states=tuple(int(s) for s in states),
        labels=W.labels,
        e_micro=e_micro,
        e_macro=e_macro,
        ratio=ratio,
        decoupling=decoupling,
        flicker=flags,
    )


def _runs(flags: np.ndarray) -> Tuple[Tuple[int, ...], Tuple[int, ...]]:
    if flags.size == 0:
        return (), ()
    edges = np.flatnonzero(np.diff(flags.astype(int))) + 1
    bounds = np.concatenate(([0], edges, [flags.size]))
    lengths = np.diff(bounds)
    values = flags[bounds[:-1]]
    flagged = tuple(int(n) for n, v in zip(lengths, values) if v)
    unflagged = tuple(int(n) for n, v in zip(lengths, values) if not v)
    return flagged, unflagged


def flicker_summary(trace: WalkTrace) -> FlickerSummary:
    """Count flagged transitions and measure how long flagged/unflagged stretches last"""
    flags = np.asarray(trace.flicker, dtype=bool)
    flagged, unflagged = _runs(flags)
    n_flagged = int(flags.sum())
    return FlickerSummary(
        steps=int(flags.size),
        n_flagged=n_flagged,
        fraction=n_flagged / flags.size if flags.size else 0.0,
        flagged_runs=flagged,
        unflagged_runs=unflagged,
        flagged_steps=tuple(int(t) + 1 for t in np.flatnonzero(flags)),
    )


def trace_frame(trace: WalkTrace) -> pd.DataFrame:
    """Trace as text cells: row 0 is x_0, row t the transition x_{t-1} -> x_t.

    Absent contexts leave blank cells; a ratio with a near-zero denominator
    reads ``undefined``.
    """
    rows = [[0, trace.labels[trace.states[0]], "", "", "", "", ""]]
    for t in range(1, len(trace.states)):
        k = t - 1
        ratio = ""
        if trace.ratio is not None:
            ratio = "undefined" if np.isnan(trace.ratio[k]) else format_float(trace.ratio[k])
        rows.append(
            [
                t,
                trace.labels[trace.states[t]],
                format_float(trace.e_micro[k]),
                "" if trace.e_macro is None else format_float(trace.e_macro[k]),
                ratio,
                "" if trace.decoupling is None else format_float(trace.decoupling[k]),
                "true" if trace.flicker[k] else "false",
            ]
        )
    return pd.DataFrame(rows, columns=list(TRACE_COLUMNS))


def trace_records(trace: WalkTrace) -> List[Dict]:
    """Trace rows as JSON-ready records with the CSV's fields (None for blanks)"""
    frame = trace_frame(trace)
    records = []
    for row in frame.itertuples(index=False):
        record = {}
        for column, cell in zip(TRACE_COLUMNS, row):
            if column == "t":
                record[column] = int(cell)
            elif column == "state" or cell == "undefined":
                record[column] = cell
            elif column == "flicker":
                record[column] = None if cell == "" else cell == "true"
            else:
                record[column] = None if cell == "" else float(cell)
        records.append(record)
    return records


def write_trace(trace: WalkTrace, path: Optional[Path] = None, fmt: str = "csv") -> str:
    """Write the trace as CSV or JSON (stdout when ``path`` is None)

    Returns:
        str: The written text
    """
    if fmt == "json":
        text = dump_json({"seed": trace.seed, "steps": trace_records(trace)})
    else:
        text = trace_frame(trace).to_csv(index=False, lineterminator="\n")
    if path is None:
        print(text, end="")
    else:
        Path(path).write_text(text)
        logger.info(f"Wrote {trace.steps}-step trace to {path}")
    return text


def main(
    tpm: Path,
    steps: int,
    seed: int = 0,
    start: Optional[str] = None,
    partition: Optional[Path] = None,
    system: Optional[Path] = None,
    prior: Optional[str] = None,
    weighting: str = "uniform",
    fmt: str = "csv",
    out: Optional[Path] = None,
) -> Tuple[WalkTrace, FlickerSummary]:
    """Simulate, annotate and export one walk with its flicker summary.

    The summary goes to ``<out stem>.summary.json`` next to the trace, or to
    stderr when the trace is written to stdout.
    """
    prior = prior or PriorPolicy.STATIONARY.value
    W = read_tpm_csv(tpm)
    context = WalkContext(
        partition=read_partition_csv(partition, W.labels) if partition else None,
        factorized=system_from_json(read_json(system)) if system else None,
        prior=prior,
        weighting=weighting,
    )
    states = simulate(W, steps, seed, start=start, prior=prior)
    trace = annotate(W, states, context, seed=seed)
    summary = flicker_summary(trace)
    write_trace(trace, out, fmt)

    report = EmergenceReport(kind="walk")
    report.add_input("tpm", tpm)
    report.add_input("partition", partition)
    report.add_input("system", system)
    report.parameters = {
        "steps": steps,
        "seed": seed,
        "start": start,
        "prior": prior,
        "weighting": Weighting.parse(weighting).value,
    }
    report.statistics = summary._asdict()
    if out is None:
        sys.stderr.write(dump_json(report.to_dict()))
    else:
        sidecar = Path(out).with_suffix(".summary.json")
        report.write(sidecar)
    return trace, summary


def walk_parser(parent_parser: bool = False) -> argparse.ArgumentParser:
    descStr = f"""
    {logo_str}
    Random walk:

    Seeded walk on a transition matrix, annotated per transition with local
    excess entropy, macro values and causal decoupling, with flickering
    emergence flagged.

    """

    walk_parser = argparse.ArgumentParser(
        add_help=not parent_parser,
        description=descStr,
        formatter_class=UltimateHelpFormatter,
    )
    parser = walk_parser.add_argument_group("walk arguments")
    parser.add_argument("tpm", type=Path, help="Transition matrix CSV.")
    parser.add_argument(
        "--steps", type=positive_int, required=True, help="Number of transitions."
    )
    parser.add_argument(
        "--start",
        type=str,
        default=None,
        help="Label of the first state (drawn from the prior when omitted).",
    )
    parser.add_argument(
        "--partition", type=Path, default=None, help="Partition CSV for macro annotation."
    )
    parser.add_argument(
        "--system",
        type=Path,
        default=None,
        help="Factorized system JSON of the same dynamics, for causal decoupling.",
    )
    parser.add_argument(
        "--weighting",
        type=str,
        choices=["uniform", "stationary"],
        default="uniform",
        help="Within-group weighting of the macro scale.",
    )
    parser.add_argument(
        "--format",
        dest="fmt",
        type=str,
        choices=["csv", "json"],
        default="csv",
        help="Trace file format.",
    )

    return walk_parser
