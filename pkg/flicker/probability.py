#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""Discrete probability: distributions, entropies, local and expected mutual information.

All quantities are in bits. A joint cell with zero probability but positive
marginals has local information ``-inf``; a query whose marginal is zero is
undefined and raises :class:`~flicker.utils.exceptions.UndefinedConditionalError`.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from scipy.stats import entropy as _scipy_entropy

from flicker.logger import logger
from flicker.utils.exceptions import (
    DivergenceError,
    UndefinedConditionalError,
    ValidationError,
)
from flicker.utils.typing import ArrayLike, State

TOLERANCE = 1e-9
"""Allowed deviation of a total probability from one"""
RENORMALIZE_TOLERANCE = 1e-6
"""Inputs this close to valid are renormalised (with a warning) instead of rejected"""
ZERO_TOLERANCE = 1e-12
"""Local values smaller than this in magnitude are treated as exactly zero"""
STATIONARY_MAX_ITER = 100_000
STATIONARY_STOP = 1e-13
STATIONARY_ACCEPT = 1e-8


class PriorPolicy(str, Enum):
    """Distribution assumed over the previous state"""

    UNIFORM = "uniform"
    STATIONARY = "stationary"


def _default_labels(n: int) -> Tuple[str, ...]:
    return tuple(str(i) for i in range(n))


def _frozen(values: ArrayLike, ndim: int, what: str) -> np.ndarray:
    try:
        arr = np.array(values, dtype=float)
    except (TypeError, ValueError) as e:
        raise ValidationError(f"{what} must be numeric: {e}") from e
    if arr.ndim != ndim:
        raise ValidationError(f"{what} must be {ndim}-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{what} contains non-finite entries")
    arr.setflags(write=False)
    return arr


def _check_labels(
    labels: Optional[Sequence[str]], n: int, what: str
) -> Tuple[str, ...]:
    if labels is None:
        return _default_labels(n)
    labels = tuple(str(label) for label in labels)
    if len(labels) != n:
        raise ValidationError(f"{what} has {n} states but {len(labels)} labels")
    if len(set(labels)) != n:
        raise ValidationError(f"{what} labels are not unique: {labels}")
    return labels


def _resolve(labels: Tuple[str, ...], state: State) -> int:
    if isinstance(state, (int, np.integer)) and not isinstance(state, bool):
        if not 0 <= state < len(labels):
            raise ValidationError(f"State index {state} out of range [0, {len(labels)})")
        return int(state)
    try:
        return labels.index(str(state))
    except ValueError:
        raise ValidationError(f"Unknown state {state!r}") from None


@dataclass(frozen=True, eq=False)
class ProbVector:
    """A probability distribution over a finite, labelled support"""

    probs: np.ndarray
    """Probability of each state"""
    labels: Optional[Tuple[str, ...]] = None
    """State names (defaults to the state indices)"""

    def __post_init__(self):
        probs = _frozen(self.probs, 1, "Probability vector")
        if probs.size < 1:
            raise ValidationError("Probability vector must have at least one entry")
        if np.any(probs < 0):
            raise ValidationError(
                f"Probability vector has negative entries: {probs[probs < 0]}"
            )
        total = probs.sum()
        if abs(total - 1) > TOLERANCE:
            raise ValidationError(
                f"Probability vector sums to {total:.12g} (expected 1 within {TOLERANCE})"
            )
        object.__setattr__(self, "probs", probs)
        object.__setattr__(
            self, "labels", _check_labels(self.labels, probs.size, "Probability vector")
        )

    @property
    def n(self) -> int:
        return self.probs.size

    def index(self, state: State) -> int:
        return _resolve(self.labels, state)

    @classmethod
    def uniform(cls, n: int, labels: Optional[Sequence[str]] = None) -> "ProbVector":
        if n < 1:
            raise ValidationError(f"Cannot build a uniform distribution over {n} states")
        return cls(np.full(n, 1 / n), labels)

    @classmethod
    def from_values(
        cls,
        values: ArrayLike,
        labels: Optional[Sequence[str]] = None,
        renormalize: bool = True,
    ) -> "ProbVector":
        """Build a distribution from raw values, renormalising near-valid input.

        Args:
            values (ArrayLike): Raw probabilities
            labels (Sequence[str], optional): State names. Defaults to None.
            renormalize (bool, optional): Rescale a total within 1e-6 of one. Defaults to True.

        Raises:
            ValidationError: Negative entries, or a total too far from one.

        Returns:
            ProbVector: The distribution
        """
        arr = np.array(_frozen(values, 1, "Probability vector"))
        total = arr.sum()
        if renormalize and abs(total - 1) <= RENORMALIZE_TOLERANCE and total > 0:
            if abs(total - 1) > 0:
                logger.debug(f"Renormalising distribution summing to {total:.12g}")
            arr = arr / total
        return cls(arr, labels)


@dataclass(frozen=True, eq=False)
class JointDist:
    """Joint distribution p(x, y) of two finite variables"""

    table: np.ndarray
    """Joint probability, rows index x and columns index y"""
    row_labels: Optional[Tuple[str, ...]] = None
    col_labels: Optional[Tuple[str, ...]] = None

    def __post_init__(self):
        table = _frozen(self.table, 2, "Joint distribution")
        if table.size < 1:
            raise ValidationError("Joint distribution must have at least one cell")
        if np.any(table < 0):
            raise ValidationError("Joint distribution has negative entries")
        total = table.sum()
        if abs(total - 1) > TOLERANCE:
            raise ValidationError(
                f"Joint distribution sums to {total:.12g} (expected 1 within {TOLERANCE})"
            )
        object.__setattr__(self, "table", table)
        object.__setattr__(
            self, "row_labels", _check_labels(self.row_labels, table.shape[0], "Joint rows")
        )
        object.__setattr__(
            self, "col_labels", _check_labels(self.col_labels, table.shape[1], "Joint columns")
        )

    @property
    def row_marginal(self) -> ProbVector:
        return ProbVector(self.table.sum(axis=1), self.row_labels)

    @property
    def col_marginal(self) -> ProbVector:
        return ProbVector(self.table.sum(axis=0), self.col_labels)

    @property
    def T(self) -> "JointDist":
        return JointDist(self.table.T, self.col_labels, self.row_labels)


@dataclass(frozen=True, eq=False)
class TransitionMatrix:
    """Row-stochastic matrix of P(x_t = j | x_{t-1} = i)"""

    rows: np.ndarray
    """N x N conditional probabilities"""
    labels: Optional[Tuple[str, ...]] = None
    """State names (defaults to the state indices)"""
    renormalized: Tuple[int, ...] = field(default=(), compare=False)
    """Rows that were rescaled when the matrix was loaded"""

    def __post_init__(self):
        rows = _frozen(self.rows, 2, "Transition matrix")
        if rows.shape[0] != rows.shape[1] or rows.shape[0] < 1:
            raise ValidationError(f"Transition matrix must be square, got shape {rows.shape}")
        labels = _check_labels(self.labels, rows.shape[0], "Transition matrix")
        neg = np.argwhere(rows < 0)
        if neg.size:
            i, j = neg[0]
            raise ValidationError(
                f"Transition matrix entry ({labels[i]!r}, {labels[j]!r}) is negative: {rows[i, j]}"
            )
        sums = rows.sum(axis=1)
        for i, total in enumerate(sums):
            if abs(total - 1) > TOLERANCE:
                raise ValidationError(
                    f"Row {labels[i]!r} sums to {total:.12g} (expected 1 within {TOLERANCE})"
                )
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "renormalized", tuple(self.renormalized))

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    def index(self, state: State) -> int:
        return _resolve(self.labels, state)

    @classmethod
    def from_rows(
        cls,
        rows: ArrayLike,
        labels: Optional[Sequence[str]] = None,
        renormalize: bool = True,
    ) -> "TransitionMatrix":
        """Build a transition matrix, rescaling rows that are within 1e-6 of stochastic.

        Rows further off are left alone so that validation rejects them by name.
        """
        arr = np.array(_frozen(rows, 2, "Transition matrix"))
        fixed = []
        if renormalize and arr.ndim == 2:
            sums = arr.sum(axis=1)
            for i, total in enumerate(sums):
                off = abs(total - 1)
                if TOLERANCE < off <= RENORMALIZE_TOLERANCE and total > 0:
                    arr[i] = arr[i] / total
                    fixed.append(i)
        if fixed:
            logger.warning(f"Renormalised transition matrix rows {fixed}")
        return cls(arr, labels, tuple(fixed))


def resolve_prior(
    W: TransitionMatrix, prior: Union[PriorPolicy, str, ProbVector, None]
) -> ProbVector:
    """Turn a prior policy (or an explicit distribution) into a distribution over W's states"""
    if isinstance(prior, ProbVector):
        if prior.n != W.n:
            raise ValidationError(
                f"Prior has {prior.n} states but the transition matrix has {W.n}"
            )
        return prior
    policy = PriorPolicy(prior or PriorPolicy.UNIFORM)
    if policy is PriorPolicy.STATIONARY:
        return stationary(W)
    return ProbVector.uniform(W.n, W.labels)


def entropy(p: ProbVector) -> float:
    """Shannon entropy in bits, with 0 log 0 = 0.

    Args:
        p (ProbVector): Distribution

    Returns:
        float: Entropy, within [0, log2 N]
    """
    return float(max(_scipy_entropy(p.probs, base=2), 0.0))


def kl_divergence(p: ProbVector, q: ProbVector) -> float:
    """Kullback-Leibler divergence D(p || q) in bits (``inf`` off q's support)"""
    if p.n != q.n:
        raise ValidationError(f"Cannot compare distributions over {p.n} and {q.n} states")
    return float(max(_scipy_entropy(p.probs, q.probs, base=2), 0.0))


def _log_ratio(joint: np.ndarray, px: np.ndarray, py: np.ndarray) -> np.ndarray:
    """Elementwise log2 p(x,y)/(p(x)p(y)); -inf on empty cells, nan where a marginal is zero"""
    outer = np.outer(px, py)
    with np.errstate(divide="ignore", invalid="ignore"):
        values = np.log2(joint) - np.log2(outer)
    values[outer == 0] = np.nan
    values[(joint == 0) & (outer > 0)] = -np.inf
    return values


def expected_mi(j: JointDist) -> float:
    """Mutual information of a joint distribution, in bits.

    Args:
        j (JointDist): Joint distribution

    Returns:
        float: Non-negative mutual information
    """
    px = j.table.sum(axis=1)
    py = j.table.sum(axis=0)
    positive = j.table > 0
    local = _log_ratio(j.table, px, py)
    value = float(np.sum(j.table[positive] * local[positive]))
    return max(value, 0.0)


def local_mi_table(j: JointDist) -> np.ndarray:
    """Local (pointwise) mutual information for every cell of ``j``"""
    return _log_ratio(j.table, j.table.sum(axis=1), j.table.sum(axis=0))


def local_mi(j: JointDist, x: State, y: State) -> float:
    """Local (pointwise) mutual information log2 p(x,y) / (p(x) p(y)).

    Args:
        j (JointDist): Joint distribution
        x (State): Row state (index or label)
        y (State): Column state (index or label)

    Raises:
        UndefinedConditionalError: p(x) or p(y) is zero

    Returns:
        float: Signed local information; ``-inf`` when p(x,y) = 0
    """
    i = _resolve(j.row_labels, x)
    k = _resolve(j.col_labels, y)
    px = j.table[i].sum()
    py = j.table[:, k].sum()
    if px == 0 or py == 0:
        raise UndefinedConditionalError(
            f"Local information of ({j.row_labels[i]!r}, {j.col_labels[k]!r}) "
            "conditions on a zero-probability marginal"
        )
    pxy = j.table[i, k]
    if pxy == 0:
        return -np.inf
    return float(np.log2(pxy) - np.log2(px * py))


def stationary(W: TransitionMatrix) -> ProbVector:
    """Stationary distribution reached from the uniform start.

    Iterates the averaged operator x <- (x + xW) / 2, which shares W's
    stationary distributions and converges on periodic chains. For reducible
    chains the result is the stationary distribution reachable from uniform.

    Args:
        W (TransitionMatrix): Dynamics

    Raises:
        DivergenceError: The L1 residual |xW - x| is still above 1e-8

    Returns:
        ProbVector: pi with pi W = pi
    """
    x = np.full(W.n, 1 / W.n)
    residual = np.inf
    for it in range(STATIONARY_MAX_ITER):
        x_next = 0.5 * (x + x @ W.rows)
        residual = np.abs(x_next - x).sum()
        x = x_next
        if residual < STATIONARY_STOP:
            logger.debug(f"Stationary iteration converged after {it + 1} steps")
            break
    x = x / x.sum()
    final = float(np.abs(x @ W.rows - x).sum())
    if final > STATIONARY_ACCEPT:
        raise DivergenceError(
            f"Stationary distribution did not converge in {STATIONARY_MAX_ITER} iterations",
            residual=final,
        )
    return ProbVector(x, W.labels)


def joint_from_tpm(W: TransitionMatrix, prior: ProbVector) -> JointDist:
    """Joint distribution of consecutive states, p(x_{t-1}=i, x_t=j) = prior_i W_ij"""
    if prior.n != W.n:
        raise ValidationError(
            f"Prior has {prior.n} states but the transition matrix has {W.n}"
        )
    return JointDist(prior.probs[:, None] * W.rows, W.labels, W.labels)


def excess_entropy(W: TransitionMatrix, prior: ProbVector) -> float:
    """Markov excess entropy I(X_{t-1}; X_t) under ``prior``, in bits"""
    return expected_mi(joint_from_tpm(W, prior))


def local_excess_entropy_table(W: TransitionMatrix, prior: ProbVector) -> np.ndarray:
    """Local excess entropy log2 W_ij / (prior W)_j for every pair of states.

    Rows are filled whatever the prior mass of the source state, since the
    value only depends on the conditional. Impossible transitions give
    ``-inf`` and unreachable targets give ``nan``.
    """
    if prior.n != W.n:
        raise ValidationError(
            f"Prior has {prior.n} states but the transition matrix has {W.n}"
        )
    q = prior.probs @ W.rows
    with np.errstate(divide="ignore", invalid="ignore"):
        values = np.log2(W.rows) - np.log2(q)[None, :]
    values[:, q == 0] = np.nan
    values[(W.rows == 0) & (q > 0)[None, :]] = -np.inf
    return values


def local_excess_entropy(
    W: TransitionMatrix, prior: ProbVector, i: State, j: State
) -> float:
    """Local excess entropy of the transition i -> j.

    Args:
        W (TransitionMatrix): Dynamics
        prior (ProbVector): Distribution of the previous state
        i (State): Previous state
        j (State): Next state

    Raises:
        UndefinedConditionalError: prior_i = 0 or the next-state probability of j is 0

    Returns:
        float: log2 W_ij / (prior W)_j, ``-inf`` when W_ij = 0
    """
    a = W.index(i)
    b = W.index(j)
    q = prior.probs @ W.rows[:, b]
    if prior.probs[a] == 0 or q == 0:
        raise UndefinedConditionalError(
            f"Transition {W.labels[a]!r} -> {W.labels[b]!r} conditions on a zero-probability state"
        )
    if W.rows[a, b] == 0:
        return -np.inf
    return float(np.log2(W.rows[a, b]) - np.log2(q))
