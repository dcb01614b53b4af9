#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""Coarse-graining emergence.

Partitions of micro states, the induced macro dynamics, effective information
and effectiveness, the emergence score, classification of every micro
transition against its macro image, and the search for the most effective
coarse-graining.
"""

import argparse
import dataclasses
import itertools
import logging
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import NamedTuple as Struct
from typing import Callable, Dict, Iterator, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from dask import compute, delayed
from tqdm.auto import tqdm

from flicker.logger import TqdmToLogger, UltimateHelpFormatter, logger, progress_disabled
from flicker.probability import (
    ZERO_TOLERANCE,
    PriorPolicy,
    ProbVector,
    TransitionMatrix,
    entropy,
    kl_divergence,
    excess_entropy,
    local_excess_entropy_table,
    resolve_prior,
    stationary,
)
from flicker.report import EmergenceReport
from flicker.utils.exceptions import DomainError, SearchRefusedError, ValidationError
from flicker.utils.io import read_json, read_partition_csv, read_tpm_csv, write_partition_csv
from flicker.utils.pipeline import load_dask_config, logo_str

TQDM_OUT = TqdmToLogger(logger, level=logging.INFO)

EXHAUSTIVE_MAX_STATES = 10
TIE_TOLERANCE = 1e-12
"""Partition scores closer than this are ties"""


class Weighting(str, Enum):
    """How micro states inside a macro state are weighted when lumping"""

    UNIFORM = "uniform-within-group"
    STATIONARY = "stationary-within-group"

    @classmethod
    def parse(cls, value: "str | Weighting") -> "Weighting":
        if isinstance(value, cls):
            return value
        aliases = {"uniform": cls.UNIFORM, "stationary": cls.STATIONARY}
        if value in aliases:
            return aliases[value]
        return cls(value)


class TransitionClass(str, Enum):
    """Sign pattern of a micro transition and its macro image"""

    CONGRUENT_INFORMATIVE = "congruent-informative"
    CONGRUENT_MISINFORMATIVE = "congruent-misinformative"
    INCONGRUOUS = "incongruous"
    ANTI_INCONGRUOUS = "anti-incongruous"
    ZERO = "zero"


@dataclass(frozen=True, eq=False)
class Partition:
    """Surjective map from micro states onto macro states"""

    assignment: Tuple[int, ...]
    """Macro index of each micro state"""
    micro_labels: Optional[Tuple[str, ...]] = None
    macro_labels: Optional[Tuple[str, ...]] = None

    def __post_init__(self):
        assignment = tuple(int(a) for a in self.assignment)
        if not assignment:
            raise ValidationError("A partition needs at least one micro state")
        if min(assignment) < 0:
            raise ValidationError("Macro indices must be non-negative")
        m = max(assignment) + 1
        empty = sorted(set(range(m)) - set(assignment))
        if empty:
            raise ValidationError(f"Macro states {empty} have no members")
        micro = self.micro_labels
        micro = tuple(str(i) for i in range(len(assignment))) if micro is None else tuple(map(str, micro))
        macro = self.macro_labels
        macro = tuple(str(a) for a in range(m)) if macro is None else tuple(map(str, macro))
        if len(micro) != len(assignment):
            raise ValidationError(
                f"Partition has {len(assignment)} micro states but {len(micro)} labels"
            )
        if len(macro) != m:
            raise ValidationError(f"Partition has {m} macro states but {len(macro)} labels")
        object.__setattr__(self, "assignment", assignment)
        object.__setattr__(self, "micro_labels", micro)
        object.__setattr__(self, "macro_labels", macro)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Partition):
            return NotImplemented
        return self.assignment == other.assignment

    def __hash__(self) -> int:
        return hash(self.assignment)

    @property
    def n(self) -> int:
        return len(self.assignment)

    @property
    def M(self) -> int:
        return len(self.macro_labels)

    @property
    def groups(self) -> Tuple[Tuple[int, ...], ...]:
        members: List[List[int]] = [[] for _ in range(self.M)]
        for i, a in enumerate(self.assignment):
            members[a].append(i)
        return tuple(tuple(g) for g in members)

    @property
    def membership(self) -> np.ndarray:
        """N x M indicator matrix"""
        return np.eye(self.M)[list(self.assignment)]

    @property
    def is_identity(self) -> bool:
        return self.M == self.n

    def canonical(self) -> Tuple[int, ...]:
        """Assignment relabelled by order of first appearance"""
        return canonical_assignment(self.assignment)

    def project(self, p: ProbVector) -> ProbVector:
        """Push a micro distribution forward onto the macro states"""
        if p.n != self.n:
            raise ValidationError(f"Distribution has {p.n} states, partition has {self.n}")
        return ProbVector(p.probs @ self.membership, self.macro_labels)

    def with_labels(self, micro_labels: Sequence[str]) -> "Partition":
        return dataclasses.replace(self, micro_labels=tuple(micro_labels))

    def describe(self) -> Dict[str, List[str]]:
        """Macro label -> member micro labels"""
        return {
            self.macro_labels[a]: [self.micro_labels[i] for i in members]
            for a, members in enumerate(self.groups)
        }

    @classmethod
    def identity(cls, n: int, labels: Optional[Sequence[str]] = None) -> "Partition":
        return cls(tuple(range(n)), labels, labels)

    @classmethod
    def single(cls, n: int, labels: Optional[Sequence[str]] = None) -> "Partition":
        return cls((0,) * n, labels, None)

    @classmethod
    def from_groups(
        cls, groups: Sequence[Sequence[int]], micro_labels: Optional[Sequence[str]] = None
    ) -> "Partition":
        """Build a partition from lists of member indices (group order gives macro order)"""
        n = sum(len(g) for g in groups)
        assignment = [-1] * n
        for a, group in enumerate(groups):
            for i in group:
                if not 0 <= i < n or assignment[i] != -1:
                    raise ValidationError(f"Micro state {i} is missing from or repeated in {groups}")
                assignment[i] = a
        return cls(tuple(assignment), micro_labels)

    @classmethod
    def from_mapping(
        cls, mapping: Mapping[str, str], micro_labels: Sequence[str], source: str = "partition"
    ) -> "Partition":
        """Build a partition from micro label -> macro label pairs.

        Macro states are numbered in order of first appearance along ``micro_labels``.
        """
        missing = [label for label in micro_labels if label not in mapping]
        if missing:
            raise ValidationError(f"{source}: micro state {missing[0]!r} is not assigned")
        unknown = [label for label in mapping if label not in set(micro_labels)]
        if unknown:
            raise ValidationError(f"{source}: unknown micro state {unknown[0]!r}")
        macro_labels: List[str] = []
        index: Dict[str, int] = {}
        assignment = []
        for label in micro_labels:
            macro = mapping[label]
            if macro not in index:
                index[macro] = len(macro_labels)
                macro_labels.append(macro)
            assignment.append(index[macro])
        return cls(tuple(assignment), tuple(micro_labels), tuple(macro_labels))


def canonical_assignment(assignment: Sequence[int]) -> Tuple[int, ...]:
    relabel: Dict[int, int] = {}
    return tuple(relabel.setdefault(a, len(relabel)) for a in assignment)


class MacroScale(Struct):
    """A coarse-grained system"""

    partition: Partition
    """Micro to macro map"""
    macro_tpm: TransitionMatrix
    """Induced M x M dynamics"""
    weighting: Weighting
    """Within-group weighting used when lumping"""
    fallback_groups: Tuple[int, ...] = ()
    """Groups with no stationary mass, lumped uniformly instead"""


class EIDecomposition(Struct):
    """Effective information split into determinism and degeneracy"""

    effective_information: float
    """EI in bits"""
    determinism: float
    """log2 N minus the mean row entropy, in bits"""
    degeneracy: float
    """log2 N minus the entropy of the mean row, in bits"""
    effectiveness: Optional[float]
    """EI / log2 N (None for a single state)"""


class TransitionRecord(Struct):
    """One classified micro transition"""

    src: int
    dst: int
    src_label: str
    dst_label: str
    macro_src: int
    macro_dst: int
    probability: float
    """Joint probability of the transition under the prior"""
    e_micro: float
    e_macro: float
    kind: TransitionClass


class TransitionClassification(Struct):
    """Local comparison of micro and macro excess entropy"""

    records: Tuple[TransitionRecord, ...]
    """Every micro transition with positive probability, row-major"""
    fraction: float
    """Incongruous share of informative micro transitions"""
    incongruous_mass: float
    """Joint probability of incongruous transitions under the prior"""
    counts: Dict[str, int]
    """Number of transitions in each class"""
    n_informative: int
    """Denominator of ``fraction``"""
    all_zero: bool
    """No informative micro transition exists, so ``fraction`` is reported as 0"""

    def lookup(self) -> Dict[Tuple[int, int], TransitionRecord]:
        return {(r.src, r.dst): r for r in self.records}


class SearchResult(Struct):
    """Outcome of a partition search"""

    partition: Partition
    """Most effective coarse-graining"""
    score: float
    """Its macro effectiveness (0 for a single group)"""


def macro_tpm(
    W: TransitionMatrix,
    partition: Partition,
    weighting: "Weighting | str" = Weighting.UNIFORM,
    stationary_prior: Optional[ProbVector] = None,
) -> MacroScale:
    """Lump a micro transition matrix onto a partition.

    W~_ab = sum_{i in a} w_i sum_{j in b} W_ij, where w is the within-group
    weighting restricted to group a and renormalised.

    Args:
        W (TransitionMatrix): Micro dynamics
        partition (Partition): Coarse-graining
        weighting (Weighting, optional): Within-group weighting. Defaults to uniform.
        stationary_prior (ProbVector, optional): Precomputed stationary distribution of W.

    Raises:
        ValidationError: The partition does not cover W's states

    Returns:
        MacroScale: The macro system
    """
    weighting = Weighting.parse(weighting)
    if partition.n != W.n:
        raise ValidationError(
            f"Partition covers {partition.n} states but the transition matrix has {W.n}"
        )
    if weighting is Weighting.STATIONARY:
        pi = stationary_prior if stationary_prior is not None else stationary(W)
        weights = pi.probs
    else:
        weights = np.ones(W.n)

    omega = np.zeros(W.n)
    fallback = []
    for a, members in enumerate(partition.groups):
        idx = list(members)
        w = weights[idx]
        total = w.sum()
        if total <= 0:
            logger.warning(
                f"Macro state {partition.macro_labels[a]!r} has no stationary mass; "
                "weighting its members uniformly"
            )
            fallback.append(a)
            w = np.ones(len(idx))
            total = float(len(idx))
        omega[idx] = w / total

    membership = partition.membership
    rows = membership.T @ (omega[:, None] * W.rows) @ membership
    return MacroScale(
        partition=partition,
        macro_tpm=TransitionMatrix(rows, partition.macro_labels),
        weighting=weighting,
        fallback_groups=tuple(fallback),
    )


def effective_information(W: TransitionMatrix) -> float:
    """Excess entropy under a uniform (maximum-entropy) prior, in bits.

    Computed as the mean KL divergence of each row from the mean row.
    """
    mean_row = ProbVector(W.rows.mean(axis=0), W.labels)
    return float(np.mean([kl_divergence(ProbVector(row, W.labels), mean_row) for row in W.rows]))


def effectiveness(W: TransitionMatrix) -> float:
    """Effective information normalised by log2 N.

    Raises:
        DomainError: N = 1
    """
    if W.n < 2:
        raise DomainError("Effectiveness is undefined for a single-state system")
    return float(min(max(effective_information(W) / np.log2(W.n), 0.0), 1.0))


def ei_decomposition(W: TransitionMatrix) -> EIDecomposition:
    """Effective information with its determinism and degeneracy terms"""
    log_n = np.log2(W.n)
    mean_row_entropy = float(np.mean([entropy(ProbVector(row)) for row in W.rows]))
    mean_row = ProbVector(W.rows.mean(axis=0))
    determinism = log_n - mean_row_entropy
    degeneracy = log_n - entropy(mean_row)
    ei = effective_information(W)
    return EIDecomposition(
        effective_information=ei,
        determinism=float(determinism),
        degeneracy=float(degeneracy),
        effectiveness=effectiveness(W) if W.n > 1 else None,
    )


def emergence_score(W: TransitionMatrix, macro: MacroScale) -> float:
    """log2 of macro effectiveness over micro effectiveness.

    Positive values mean the coarse-graining is more effective than the
    micro scale.

    Args:
        W (TransitionMatrix): Micro dynamics
        macro (MacroScale): Coarse-grained system built from W

    Raises:
        DomainError: Fewer than two macro states, or both effectiveness values are zero

    Returns:
        float: Score in bits; ``inf`` for an ineffective micro scale with an
        effective macro scale, ``-inf`` for the converse
    """
    if macro.partition.M < 2:
        raise DomainError("Emergence score needs at least two macro states")
    eff_micro = effectiveness(W)
    eff_macro = effectiveness(macro.macro_tpm)
    if eff_micro < ZERO_TOLERANCE:
        if eff_macro < ZERO_TOLERANCE:
            raise DomainError("Emergence score is 0/0: both scales have zero effectiveness")
        return np.inf
    if eff_macro < ZERO_TOLERANCE:
        return -np.inf
    return float(np.log2(eff_macro / eff_micro))


def _classify(e_micro: float, e_macro: float) -> TransitionClass:
    if np.isnan(e_micro) or np.isnan(e_macro):
        return TransitionClass.ZERO
    if abs(e_micro) < ZERO_TOLERANCE or abs(e_macro) < ZERO_TOLERANCE:
        return TransitionClass.ZERO
    if e_micro > 0:
        return (
            TransitionClass.CONGRUENT_INFORMATIVE
            if e_macro > 0
            else TransitionClass.INCONGRUOUS
        )
    return (
        TransitionClass.ANTI_INCONGRUOUS
        if e_macro > 0
        else TransitionClass.CONGRUENT_MISINFORMATIVE
    )


def classify_transitions(
    W: TransitionMatrix,
    macro: MacroScale,
    prior: "PriorPolicy | str | ProbVector" = PriorPolicy.UNIFORM,
) -> TransitionClassification:
    """Compare every micro transition's local excess entropy with its macro image.

    A transition is incongruous when it is informative at the micro scale and
    misinformative at the macro scale. Transitions out of zero-prior states or
    into unreachable macro states are classed ``zero`` and left out of the
    fraction, as are transitions whose macro value is exactly zero.

    Args:
        W (TransitionMatrix): Micro dynamics
        macro (MacroScale): Coarse-grained system built from W
        prior (PriorPolicy | ProbVector, optional): Prior over micro states. Defaults to uniform.

    Returns:
        TransitionClassification: Per-transition records and summary statistics
    """
    if macro.partition.n != W.n:
        raise ValidationError("Macro scale was built from a different state space")
    p = resolve_prior(W, prior)
    p_macro = macro.partition.project(p)
    micro_table = local_excess_entropy_table(W, p)
    macro_table = local_excess_entropy_table(macro.macro_tpm, p_macro)
    assignment = macro.partition.assignment

    records = []
    for i, j in np.argwhere(W.rows > 0):
        a, b = assignment[i], assignment[j]
        e_micro = float(micro_table[i, j]) if p.probs[i] > 0 else np.nan
        e_macro = float(macro_table[a, b]) if p_macro.probs[a] > 0 else np.nan
        records.append(
            TransitionRecord(
                src=int(i),
                dst=int(j),
                src_label=W.labels[i],
                dst_label=W.labels[j],
                macro_src=a,
                macro_dst=b,
                probability=float(p.probs[i] * W.rows[i, j]),
                e_micro=e_micro,
                e_macro=e_macro,
                kind=_classify(e_micro, e_macro),
            )
        )

    counts = {kind.value: 0 for kind in TransitionClass}
    for r in records:
        counts[r.kind.value] += 1
    n_informative = counts[TransitionClass.CONGRUENT_INFORMATIVE.value] + counts[
        TransitionClass.INCONGRUOUS.value
    ]
    n_incongruous = counts[TransitionClass.INCONGRUOUS.value]
    mass = sum(r.probability for r in records if r.kind is TransitionClass.INCONGRUOUS)
    return TransitionClassification(
        records=tuple(records),
        fraction=n_incongruous / n_informative if n_informative else 0.0,
        incongruous_mass=float(mass),
        counts=counts,
        n_informative=n_informative,
        all_zero=n_informative == 0,
    )


def transitions_frame(classification: TransitionClassification) -> pd.DataFrame:
    """Tidy table of classified transitions, one row per micro transition"""
    return pd.DataFrame(
        {
            "src": [r.src_label for r in classification.records],
            "dst": [r.dst_label for r in classification.records],
            "macro_src": [r.macro_src for r in classification.records],
            "macro_dst": [r.macro_dst for r in classification.records],
            "probability": [r.probability for r in classification.records],
            "e_micro": [r.e_micro for r in classification.records],
            "e_macro": [r.e_macro for r in classification.records],
            "class": [r.kind.value for r in classification.records],
        }
    )


# Partition search


def set_partitions(n: int) -> Iterator[Tuple[int, ...]]:
    """Every partition of n states as a canonical assignment, in lexicographic order"""
    assignment = [0] * n

    def extend(i: int, used: int) -> Iterator[Tuple[int, ...]]:
        if i == n:
            yield tuple(assignment)
            return
        for a in range(used + 1):
            assignment[i] = a
            yield from extend(i + 1, max(used, a + 1))

    if n > 0:
        yield from extend(1, 1)


def partition_score(rows: np.ndarray, assignment: Sequence[int]) -> float:
    """Macro effectiveness of a uniformly weighted coarse-graining (0 for one group)"""
    assignment = np.asarray(assignment)
    m = int(assignment.max()) + 1
    if m < 2:
        return 0.0
    membership = np.eye(m)[assignment]
    sizes = membership.sum(axis=0)
    macro = (membership.T @ rows @ membership) / sizes[:, None]
    mean_row = macro.mean(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(macro > 0, macro * (np.log2(macro) - np.log2(mean_row)), 0.0)
    ei = max(float(terms.sum()) / m, 0.0)
    return min(ei / np.log2(m), 1.0)


def _score_chunk(
    rows: np.ndarray, chunk: Sequence[Tuple[int, ...]]
) -> List[Tuple[float, int, Tuple[int, ...]]]:
    return [(partition_score(rows, a), max(a) + 1, a) for a in chunk]


def _select(scored: Sequence[Tuple[float, int, Tuple[int, ...]]]) -> Tuple[float, Tuple[int, ...]]:
    """Best score; ties go to fewer macro states, then the smallest assignment"""
    best = max(score for score, _, _ in scored)
    ties = [(m, a, score) for score, m, a in scored if score >= best - TIE_TOLERANCE]
    m, a, score = min(ties)
    return score, a


def _exhaustive(rows: np.ndarray, dask_config: Dict) -> Tuple[float, Tuple[int, ...]]:
    candidates = list(set_partitions(rows.shape[0]))
    chunk_size = int(dask_config.get("chunk_size") or 2048)
    chunks = [candidates[i : i + chunk_size] for i in range(0, len(candidates), chunk_size)]
    logger.info(
        f"Scoring {len(candidates)} partitions in {len(chunks)} chunks "
        f"with the {dask_config['scheduler']} scheduler"
    )
    tasks = [delayed(_score_chunk)(rows, chunk) for chunk in chunks]
    kwargs = {"scheduler": dask_config["scheduler"]}
    if dask_config.get("num_workers"):
        kwargs["num_workers"] = dask_config["num_workers"]
    results = compute(*tasks, **kwargs)
    return _select([item for chunk in results for item in chunk])


def _greedy(rows: np.ndarray) -> Tuple[float, Tuple[int, ...]]:
    current = tuple(range(rows.shape[0]))
    score = partition_score(rows, current)
    pbar = tqdm(
        desc="Greedy merging",
        total=max(rows.shape[0] - 1, 0),
        file=TQDM_OUT,
        disable=progress_disabled(),
    )
    while max(current) > 0:
        m = max(current) + 1
        candidates = []
        for a, b in itertools.combinations(range(m), 2):
            merged = canonical_assignment([a if x == b else x for x in current])
            candidates.append((partition_score(rows, merged), m - 1, merged))
        best_score, best = _select(candidates)
        if best_score <= score + TIE_TOLERANCE:
            break
        logger.debug(f"Merge accepted: {best} (score {best_score:.6f})")
        current, score = best, best_score
        pbar.update(1)
    pbar.close()
    return score, current


def partition_search(
    W: TransitionMatrix,
    mode: str = "exhaustive",
    dask_config: Optional[Dict] = None,
) -> SearchResult:
    """Find the coarse-graining with the highest macro effectiveness.

    Scores use uniform within-group weighting and a single group scores 0.
    Ties (within 1e-12) go to fewer macro states, then to the lexicographically
    smallest canonical assignment, so the answer does not depend on how the
    candidates were split across workers.

    Args:
        W (TransitionMatrix): Micro dynamics
        mode (str, optional): ``exhaustive`` (N <= 10) or ``greedy``. Defaults to "exhaustive".
        dask_config (Dict, optional): Scheduler settings for the exhaustive scan.

    Raises:
        SearchRefusedError: Exhaustive search requested for more than 10 states

    Returns:
        SearchResult: Best partition and its score
    """
    if mode == "exhaustive":
        if W.n > EXHAUSTIVE_MAX_STATES:
            raise SearchRefusedError(
                f"Exhaustive search over {W.n} states is refused "
                f"(limit {EXHAUSTIVE_MAX_STATES}); use --mode greedy"
            )
        score, assignment = _exhaustive(W.rows, dask_config or load_dask_config())
    elif mode == "greedy":
        score, assignment = _greedy(W.rows)
    else:
        raise ValidationError(f"Unknown search mode {mode!r}")
    partition = Partition(assignment, W.labels)
    logger.info(f"Best partition has {partition.M} macro states (score {score:.6f})")
    return SearchResult(partition=partition, score=float(score))


# Boolean aggregation of binary elements

BOOLEAN_FUNCTIONS: Dict[str, Callable[[Sequence[int]], int]] = {
    "AND": lambda bits: int(all(bits)),
    "OR": lambda bits: int(any(bits)),
    "XOR": lambda bits: sum(bits) % 2,
    "MAJ": lambda bits: int(2 * sum(bits) > len(bits)),
}


def element_bits(state: int, n_elements: int) -> Tuple[int, ...]:
    """Bits of a joint state, element 1 most significant"""
    return tuple((state >> (n_elements - k)) & 1 for k in range(1, n_elements + 1))


def boolean_partition(
    n_elements: int, groups: Sequence[Sequence[int]], functions: Sequence[str]
) -> Partition:
    """Partition of 2**n binary states induced by Boolean functions of element groups.

    Each group of (1-based) elements is collapsed into one macro element by its
    function (AND, OR, XOR, or MAJ, where MAJ is a strict majority). Groups
    must be disjoint and cover every element.

    Args:
        n_elements (int): Number of binary micro elements
        groups (Sequence[Sequence[int]]): 1-based element indices per macro element
        functions (Sequence[str]): Function name per group

    Returns:
        Partition: Micro and macro labels are the element bit strings
    """
    if n_elements < 1:
        raise ValidationError("Need at least one element")
    if len(groups) != len(functions):
        raise ValidationError(f"{len(groups)} groups but {len(functions)} functions")
    flat = sorted(e for g in groups for e in g)
    if flat != list(range(1, n_elements + 1)):
        raise ValidationError(
            f"Groups {list(map(list, groups))} must partition elements 1..{n_elements}"
        )
    funcs = []
    for name in functions:
        if name.upper() not in BOOLEAN_FUNCTIONS:
            raise ValidationError(f"Unknown Boolean function {name!r}")
        funcs.append(BOOLEAN_FUNCTIONS[name.upper()])

    g = len(groups)
    assignment = []
    micro_labels = []
    for state in range(2**n_elements):
        bits = element_bits(state, n_elements)
        out = [f([bits[e - 1] for e in group]) for f, group in zip(funcs, groups)]
        assignment.append(int("".join(map(str, out)), 2))
        micro_labels.append("".join(map(str, bits)))
    macro_labels = ["".join(map(str, element_bits(a, g))) for a in range(2**g)]
    return Partition(tuple(assignment), tuple(micro_labels), tuple(macro_labels))


def boolean_partition_from_spec(spec: Dict) -> Partition:
    """Build a Boolean partition from ``{"n_elements", "groups", "functions"}``"""
    try:
        return boolean_partition(
            int(spec["n_elements"]),
            [[int(e) for e in group] for group in spec["groups"]],
            [str(f) for f in spec["functions"]],
        )
    except (KeyError, TypeError) as e:
        raise ValidationError(f"Malformed Boolean aggregation spec: {e}") from None


# Command line


def _expected_block(W: TransitionMatrix) -> Dict:
    return ei_decomposition(W)._asdict()


def classification_block(classification: TransitionClassification) -> Dict:
    return {
        "transitions": [
            {
                "src": r.src_label,
                "dst": r.dst_label,
                "macro_src": r.macro_src,
                "macro_dst": r.macro_dst,
                "probability": r.probability,
                "e_micro": r.e_micro,
                "e_macro": r.e_macro,
                "class": r.kind.value,
            }
            for r in classification.records
        ]
    }


def classification_statistics(classification: TransitionClassification) -> Dict:
    return {
        "incongruous_fraction": classification.fraction,
        "incongruous_mass": classification.incongruous_mass,
        "n_informative": classification.n_informative,
        "all_zero": classification.all_zero,
        "counts": classification.counts,
    }


def main_analyze(
    tpm: Path,
    partition: Optional[Path] = None,
    boolean_spec: Optional[Path] = None,
    prior: Optional[str] = None,
    weighting: str = "uniform",
    tidy: Optional[Path] = None,
    out: Optional[Path] = None,
) -> EmergenceReport:
    """Coarse-graining analysis of one system and one partition"""
    prior = prior or PriorPolicy.UNIFORM.value
    W = read_tpm_csv(tpm)
    report = EmergenceReport(kind="analyze")
    report.add_input("tpm", tpm)
    if W.renormalized:
        report.warn(f"Renormalised rows {[W.labels[i] for i in W.renormalized]}")

    if partition is not None and boolean_spec is not None:
        raise ValidationError("Give either a partition file or a Boolean spec, not both")
    if partition is not None:
        report.add_input("partition", partition)
        part = read_partition_csv(partition, W.labels)
    elif boolean_spec is not None:
        report.add_input("boolean_spec", boolean_spec)
        part = boolean_partition_from_spec(read_json(boolean_spec))
        if part.n != W.n:
            raise ValidationError(
                f"Boolean spec describes {part.n} states but the matrix has {W.n}"
            )
        part = part.with_labels(W.labels)
    else:
        report.warn("No partition given; using the identity partition")
        part = Partition.identity(W.n, W.labels)

    macro = macro_tpm(W, part, weighting)
    for a in macro.fallback_groups:
        report.warn(f"Macro state {part.macro_labels[a]!r} has no stationary mass; weighted uniformly")
    report.parameters = {"prior": prior, "weighting": macro.weighting.value}

    micro_block = _expected_block(W)
    if micro_block["effectiveness"] is None:
        raise DomainError("Micro effectiveness is undefined for a single-state system")
    macro_block = _expected_block(macro.macro_tpm)
    score = None
    if part.M < 2:
        report.warn("macro-undefined: a single macro state has no effectiveness")
    else:
        try:
            score = emergence_score(W, macro)
        except DomainError as e:
            report.warn(f"Emergence score undefined: {e}")
    p = resolve_prior(W, prior)
    report.expected = {
        "micro": micro_block,
        "macro": macro_block,
        "emergence_score": score,
        "excess_entropy": {
            "micro": excess_entropy(W, p),
            "macro": excess_entropy(macro.macro_tpm, part.project(p)),
        },
        "partition": part.describe(),
        "macro_tpm": macro.macro_tpm.rows,
    }
    classification = classify_transitions(W, macro, p)
    report.local = classification_block(classification)
    report.statistics = classification_statistics(classification)
    if tidy is not None:
        transitions_frame(classification).to_csv(tidy, index=False, float_format="%.17g")
        logger.info(f"Wrote tidy transition table to {tidy}")
    report.write(out)
    return report


def main_search(
    tpm: Path,
    mode: str = "exhaustive",
    dask_config: Optional[Path] = None,
    partition_out: Optional[Path] = None,
    out: Optional[Path] = None,
) -> EmergenceReport:
    """Search for the most effective coarse-graining of one system"""
    W = read_tpm_csv(tpm)
    report = EmergenceReport(kind="search")
    report.add_input("tpm", tpm)
    report.parameters = {"mode": mode, "weighting": Weighting.UNIFORM.value}
    config = load_dask_config(dask_config) if mode == "exhaustive" else None
    result = partition_search(W, mode=mode, dask_config=config)
    score = None
    if result.partition.M >= 2 and W.n >= 2:
        try:
            score = emergence_score(W, macro_tpm(W, result.partition))
        except DomainError as e:
            report.warn(f"Emergence score undefined: {e}")
    report.expected = {
        "micro_effectiveness": effectiveness(W) if W.n > 1 else None,
        "macro_effectiveness": result.score,
        "emergence_score": score,
        "n_macro": result.partition.M,
    }
    report.local = {
        "partition": dict(
            zip(
                result.partition.micro_labels,
                [result.partition.macro_labels[a] for a in result.partition.assignment],
            )
        )
    }
    if partition_out is not None:
        write_partition_csv(result.partition, partition_out)
        logger.info(f"Wrote best partition to {partition_out}")
    report.write(out)
    return report


def analyze_parser(parent_parser: bool = False) -> argparse.ArgumentParser:
    # Help string to be shown using the -h option
    descStr = f"""
    {logo_str}
    Coarse-graining analysis:

    Effective information, effectiveness and emergence score of a partition,
    with every micro transition classified against its macro image.

    """

    analyze_parser = argparse.ArgumentParser(
        add_help=not parent_parser,
        description=descStr,
        formatter_class=UltimateHelpFormatter,
    )
    parser = analyze_parser.add_argument_group("analyze arguments")
    parser.add_argument("tpm", type=Path, help="Transition matrix CSV.")
    parser.add_argument(
        "--partition", type=Path, default=None, help="Partition CSV (micro_label,macro_label)."
    )
    parser.add_argument(
        "--boolean_spec",
        type=Path,
        default=None,
        help="JSON Boolean aggregation spec, instead of a partition file.",
    )
    parser.add_argument(
        "--weighting",
        type=str,
        choices=["uniform", "stationary"],
        default="uniform",
        help="Within-group weighting when lumping.",
    )
    parser.add_argument(
        "--tidy", type=Path, default=None, help="Also write the per-transition table as CSV."
    )

    return analyze_parser


def search_parser(parent_parser: bool = False) -> argparse.ArgumentParser:
    descStr = f"""
    {logo_str}
    Partition search:

    Find the coarse-graining with the highest macro effectiveness.

    """

    search_parser = argparse.ArgumentParser(
        add_help=not parent_parser,
        description=descStr,
        formatter_class=UltimateHelpFormatter,
    )
    parser = search_parser.add_argument_group("search arguments")
    parser.add_argument("tpm", type=Path, help="Transition matrix CSV.")
    parser.add_argument(
        "--mode",
        type=str,
        choices=["exhaustive", "greedy"],
        default="exhaustive",
        help="Search strategy (exhaustive is limited to 10 states).",
    )
    parser.add_argument(
        "--dask_config",
        type=Path,
        default=None,
        help="Dask settings YAML (defaults to the packaged config).",
    )
    parser.add_argument(
        "--partition_out", type=Path, default=None, help="Also write the best partition as CSV."
    )

    return search_parser
