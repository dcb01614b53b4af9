#!/usr/bin/env python3
"""Random search for small systems whose coarse-graining has incongruous transitions"""
import argparse
import logging
from pathlib import Path
from typing import Optional, Tuple

import numpy as np
from tqdm.auto import tqdm

from flicker.coarse_grain import (
    Partition,
    classify_transitions,
    emergence_score,
    macro_tpm,
)
from flicker.logger import TqdmToLogger, logger
from flicker.probability import PriorPolicy, TransitionMatrix
from flicker.utils.exceptions import DomainError
from flicker.utils.io import write_matrix_csv

TQDM_OUT = TqdmToLogger(logger, level=logging.INFO)


def random_tpm(rng: np.random.Generator, n: int, sparsity: float) -> TransitionMatrix:
    """Dirichlet rows with a random share of entries zeroed (diagonal kept)"""
    rows = rng.dirichlet(np.ones(n), size=n)
    mask = rng.random((n, n)) < sparsity
    np.fill_diagonal(mask, False)
    rows[mask] = 0.0
    rows = np.round(rows / rows.sum(axis=1, keepdims=True), 1)
    rows[np.arange(n), rows.argmax(axis=1)] += 1.0 - rows.sum(axis=1)
    return TransitionMatrix.from_rows(np.clip(rows, 0.0, 1.0))


def main(
    n_states: int = 4,
    trials: int = 10000,
    seed: int = 0,
    sparsity: float = 0.3,
    min_score: float = 0.0,
    out: Optional[Path] = None,
) -> Optional[Tuple[TransitionMatrix, float, float]]:
    rng = np.random.Generator(np.random.PCG64(seed))
    half = n_states // 2
    partition = Partition.from_groups([tuple(range(half)), tuple(range(half, n_states))])
    for _ in tqdm(range(trials), file=TQDM_OUT, desc="Searching"):
        W = random_tpm(rng, n_states, sparsity)
        macro = macro_tpm(W, partition)
        try:
            score = emergence_score(W, macro)
        except DomainError:
            continue
        if not np.isfinite(score) or score <= min_score:
            continue
        classification = classify_transitions(W, macro, PriorPolicy.UNIFORM)
        if classification.fraction > 0:
            logger.info(
                f"Found system with emergence score {score:.4f} and "
                f"incongruous fraction {classification.fraction:.4f}\n{W.rows}"
            )
            if out is not None:
                write_matrix_csv(W.rows, W.labels, out)
            return W, score, classification.fraction

    logger.warning(f"No incongruous system found in {trials} trials")
    return None


def cli():
    descStr = """
    Draw random transition matrices until the half/half coarse-graining is both
    emergent and has at least one incongruous transition.
    """
    parser = argparse.ArgumentParser(
        description=descStr, formatter_class=argparse.ArgumentDefaultsHelpFormatter
    )
    parser.add_argument("--n_states", type=int, default=4, help="Number of micro states")
    parser.add_argument("--trials", type=int, default=10000, help="Matrices to try")
    parser.add_argument("--seed", type=int, default=0, help="PCG64 seed")
    parser.add_argument(
        "--sparsity", type=float, default=0.3, help="Chance of zeroing an off-diagonal entry"
    )
    parser.add_argument(
        "--min_score", type=float, default=0.0, help="Smallest emergence score accepted"
    )
    parser.add_argument("--out", type=Path, default=None, help="Write the system as CSV")
    args = parser.parse_args()
    logger.setLevel(logging.INFO)
    main(
        n_states=args.n_states,
        trials=args.trials,
        seed=args.seed,
        sparsity=args.sparsity,
        min_score=args.min_score,
        out=args.out,
    )


if __name__ == "__main__":
    cli()
