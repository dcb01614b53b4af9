#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""Integrated information decomposition of two-element systems.

The excess entropy of a two-element Markov system is split into sixteen
atoms, one per pair of source and target collections on the redundancy
lattice. Atoms are solved from a double-redundancy function by Moebius
inversion, either for a single transition (local) or on average (expected).

The default double redundancy is the shared-exclusion form: the local mutual
information between the union of the realized source events at t-1 and the
union of the realized target events at t.
"""

import argparse
import itertools
import re
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from pathlib import Path
from typing import NamedTuple as Struct
from typing import Callable, Dict, FrozenSet, List, Optional, Sequence, Tuple, Union

import numpy as np

from flicker.logger import UltimateHelpFormatter, logger
from flicker.probability import (
    ZERO_TOLERANCE,
    JointDist,
    PriorPolicy,
    ProbVector,
    TransitionMatrix,
    excess_entropy,
    expected_mi,
    resolve_prior,
)
from flicker.report import EmergenceReport
from flicker.utils.exceptions import (
    UndefinedConditionalError,
    UndefinedRealizationError,
    ValidationError,
)
from flicker.utils.io import read_json
from flicker.utils.pipeline import logo_str

Collection = FrozenSet[FrozenSet[int]]
"""An antichain of non-empty element subsets, e.g. {{1}, {2}}"""
JointRealization = Tuple[int, int]
"""(source joint index, target joint index)"""

INDEXING = "element1-most-significant"


class Order(str, Enum):
    """Relative position of two atoms on the lattice"""

    BELOW = "below"
    ABOVE = "above"
    EQUAL = "equal"
    INCOMPARABLE = "incomparable"


class Scope(str, Enum):
    LOCAL = "local"
    EXPECTED = "expected"


def format_collection(collection: Collection) -> str:
    """Index-only notation: {1}{2}, {1}, {12}"""
    parts = sorted(tuple(sorted(subset)) for subset in collection)
    return "".join("{" + "".join(map(str, part)) + "}" for part in parts)


def parse_collection(text: str) -> Collection:
    parts = re.findall(r"\{(\d+)\}", text)
    if not parts or "".join("{" + p + "}" for p in parts) != text.replace(" ", ""):
        raise ValidationError(f"Cannot parse source collection {text!r}")
    return frozenset(frozenset(int(c) for c in part) for part in parts)


def collection_leq(alpha: Collection, beta: Collection) -> bool:
    """alpha precedes beta iff every subset in beta contains some subset in alpha"""
    return all(any(a <= b for a in alpha) for b in beta)


@lru_cache(maxsize=None)
def source_collections(n: int = 2) -> Tuple[Collection, ...]:
    """Every antichain of non-empty subsets of {1..n}, bottom first"""
    elements = range(1, n + 1)
    subsets = [
        frozenset(c) for r in range(1, n + 1) for c in itertools.combinations(elements, r)
    ]
    found = []
    for r in range(1, len(subsets) + 1):
        for combo in itertools.combinations(subsets, r):
            if all(not (a <= b or b <= a) for a, b in itertools.combinations(combo, 2)):
                found.append(frozenset(combo))
    below = {c: sum(collection_leq(d, c) for d in found) for c in found}
    return tuple(sorted(found, key=lambda c: (below[c], format_collection(c))))


class PhiAtom(Struct):
    """One source-collection to target-collection dependency"""

    source: Collection
    target: Collection

    def __str__(self) -> str:
        return f"{format_collection(self.source)}->{format_collection(self.target)}"

    @classmethod
    def parse(cls, text: str) -> "PhiAtom":
        try:
            source, target = text.split("->")
        except ValueError:
            raise ValidationError(f"Cannot parse atom {text!r}") from None
        return cls(parse_collection(source.strip()), parse_collection(target.strip()))


def lattice_order(a: PhiAtom, b: PhiAtom) -> Order:
    """Product order: a is below b when both its source and target are"""
    if a == b:
        return Order.EQUAL
    if collection_leq(a.source, b.source) and collection_leq(a.target, b.target):
        return Order.BELOW
    if collection_leq(b.source, a.source) and collection_leq(b.target, a.target):
        return Order.ABOVE
    return Order.INCOMPARABLE


@lru_cache(maxsize=None)
def atoms(n: int = 2) -> Tuple[PhiAtom, ...]:
    """All atoms in a topological order (every atom after everything below it)"""
    collections = source_collections(n)
    pairs = [PhiAtom(s, t) for s in collections for t in collections]
    depth = {
        atom: sum(lattice_order(other, atom) is Order.BELOW for other in pairs)
        for atom in pairs
    }
    return tuple(sorted(pairs, key=lambda atom: (depth[atom], pairs.index(atom))))


@lru_cache(maxsize=None)
def strictly_below(n: int = 2) -> Dict[PhiAtom, Tuple[PhiAtom, ...]]:
    lattice = atoms(n)
    return {
        atom: tuple(o for o in lattice if lattice_order(o, atom) is Order.BELOW)
        for atom in lattice
    }


def covering_pairs(n: int = 2) -> List[Tuple[PhiAtom, PhiAtom]]:
    """Edges of the Hasse diagram: (lower, upper) with nothing strictly between"""
    below = strictly_below(n)
    edges = []
    for upper in atoms(n):
        for lower in below[upper]:
            if not any(lower in below[mid] for mid in below[upper]):
                edges.append((lower, upper))
    return edges


CAUSAL_DECOUPLING = PhiAtom.parse("{12}->{12}")
DOWNWARD_ATOMS = tuple(PhiAtom.parse(t) for t in ("{12}->{1}", "{12}->{2}", "{12}->{1}{2}"))


def _joint_labels(cardinalities: Tuple[int, int]) -> Tuple[str, ...]:
    n1, n2 = cardinalities
    sep = "" if max(n1, n2) <= 10 else "."
    return tuple(f"{a1}{sep}{a2}" for a1 in range(n1) for a2 in range(n2))


@dataclass(frozen=True, eq=False)
class FactorizedSystem:
    """A Markov system over the product of two element state spaces.

    Joint index k corresponds to element states divmod(k, n2): element 1 is
    the most significant digit.
    """

    cardinalities: Tuple[int, int]
    """(n1, n2)"""
    tpm: TransitionMatrix
    """Joint dynamics over n1 * n2 states"""
    prior: ProbVector
    """Distribution of the previous joint state"""

    def __post_init__(self):
        cards = tuple(int(c) for c in self.cardinalities)
        if len(cards) != 2 or min(cards) < 1:
            raise ValidationError(f"Need two element cardinalities, got {self.cardinalities}")
        if cards[0] * cards[1] != self.tpm.n:
            raise ValidationError(
                f"Cardinalities {cards} imply {cards[0] * cards[1]} joint states, "
                f"but the matrix has {self.tpm.n}"
            )
        if self.prior.n != self.tpm.n:
            raise ValidationError(
                f"Prior has {self.prior.n} states but the matrix has {self.tpm.n}"
            )
        object.__setattr__(self, "cardinalities", cards)

    @property
    def n(self) -> int:
        return self.tpm.n

    @property
    def joint(self) -> np.ndarray:
        """p(x_{t-1}, x_t)"""
        return self.prior.probs[:, None] * self.tpm.rows

    def joint_index(self, s1: int, s2: int) -> int:
        n1, n2 = self.cardinalities
        if not (0 <= s1 < n1 and 0 <= s2 < n2):
            raise ValidationError(f"Element states ({s1}, {s2}) out of range for {self.cardinalities}")
        return s1 * n2 + s2

    def element_states(self, index: int) -> Tuple[int, int]:
        return divmod(int(index), self.cardinalities[1])

    @classmethod
    def build(
        cls,
        cardinalities: Sequence[int],
        rows: np.ndarray,
        prior: "PriorPolicy | str | Sequence[float] | ProbVector | None" = PriorPolicy.STATIONARY,
    ) -> "FactorizedSystem":
        """Build a system from a row-major joint matrix; the prior defaults to stationary"""
        cards = tuple(int(c) for c in cardinalities)
        if len(cards) != 2:
            raise ValidationError(f"Need two element cardinalities, got {list(cardinalities)}")
        tpm = TransitionMatrix.from_rows(rows, _joint_labels(cards))
        if prior is None or isinstance(prior, (str, PriorPolicy, ProbVector)):
            p = resolve_prior(tpm, prior or PriorPolicy.STATIONARY)
        else:
            p = ProbVector.from_values(prior, tpm.labels)
        return cls(cards, tpm, p)

    @classmethod
    def from_macro(
        cls,
        macro_tpm: TransitionMatrix,
        cardinalities: Sequence[int] = (2, 2),
        prior: "PriorPolicy | str | ProbVector" = PriorPolicy.STATIONARY,
    ) -> "FactorizedSystem":
        """View a coarse-grained system with two macro elements as a factorized system"""
        return cls.build(cardinalities, macro_tpm.rows, prior)


def system_from_json(data: Dict, prior: Optional[str] = None) -> FactorizedSystem:
    """Build a system from its JSON form.

    Keys: ``element_cardinalities``, ``tpm`` (row-major joint matrix), optional
    ``prior`` (values or a policy name) and optional ``indexing``, which must
    be ``element1-most-significant``. A prior in the file wins over ``prior``.
    """
    try:
        cards = data["element_cardinalities"]
        rows = np.array(data["tpm"], dtype=float)
    except (KeyError, TypeError, ValueError) as e:
        raise ValidationError(f"Malformed system description: {e}") from None
    indexing = data.get("indexing", INDEXING)
    if indexing != INDEXING:
        raise ValidationError(f"Unsupported joint indexing {indexing!r} (expected {INDEXING!r})")
    return FactorizedSystem.build(cards, rows, data.get("prior", prior))


def _as_joint(fsys: FactorizedSystem, realization) -> JointRealization:
    """Accept ((a1, a2), (b1, b2)) or (a, b) joint indices"""
    source, target = realization
    if isinstance(source, (tuple, list)):
        source = fsys.joint_index(*source)
    if isinstance(target, (tuple, list)):
        target = fsys.joint_index(*target)
    for k in (source, target):
        if not 0 <= k < fsys.n:
            raise ValidationError(f"Joint state {k} out of range [0, {fsys.n})")
    return int(source), int(target)


def _event(fsys: FactorizedSystem, collection: Collection, state: int) -> np.ndarray:
    """Joint states agreeing with ``state`` on at least one subset of the collection"""
    realized = np.array(fsys.element_states(state))
    grid = np.array([fsys.element_states(k) for k in range(fsys.n)])
    mask = np.zeros(fsys.n, dtype=bool)
    for subset in collection:
        cols = [e - 1 for e in sorted(subset)]
        mask |= np.all(grid[:, cols] == realized[cols], axis=1)
    return mask


def shared_exclusion_redundancy(
    fsys: FactorizedSystem, atom: PhiAtom, realization: JointRealization
) -> float:
    """Local double redundancy log2 p(S and T) / (p(S) p(T)).

    S is the union of the realized source events at t-1 and T the union of
    the realized target events at t.

    Raises:
        UndefinedConditionalError: p(S) = 0

    Returns:
        float: Signed bits, ``-inf`` when p(T) or p(S and T) is zero
    """
    source, target = realization
    s = _event(fsys, atom.source, source)
    t = _event(fsys, atom.target, target)
    P = fsys.joint
    p_s = P[s].sum()
    if p_s == 0:
        raise UndefinedConditionalError(f"Source event of {atom} has zero probability")
    p_t = P[:, t].sum()
    p_st = P[np.ix_(s, t)].sum()
    if p_t == 0 or p_st == 0:
        return -np.inf
    return float(np.log2(p_st) - np.log2(p_s) - np.log2(p_t))


RedundancyFunction = Callable[[FactorizedSystem, PhiAtom, JointRealization], float]


class AtomTable(Struct):
    """Solved atoms of one decomposition"""

    values: Dict[PhiAtom, float]
    """Atom -> bits"""
    scope: Scope
    """Local (one realization) or expected"""
    realization: Optional[JointRealization] = None
    """(source, target) joint indices for local tables"""

    def total(self) -> float:
        return float(sum(self.values.values()))

    def get(self, atom: Union[str, PhiAtom]) -> float:
        """Value of an atom given as a PhiAtom or a string such as ``{1}{2}->{12}``"""
        if isinstance(atom, str):
            atom = PhiAtom.parse(atom)
        return self.values[atom]

    def as_strings(self) -> Dict[str, float]:
        """Atoms keyed by their canonical strings, bottom of the lattice first"""
        return {str(atom): self.values[atom] for atom in atoms(2) if atom in self.values}


class EmergenceAtoms(Struct):
    """Emergence-relevant atoms of one table"""

    causal_decoupling: float
    """{12}->{12}"""
    downward: Dict[str, float]
    """{12}->{1}, {12}->{2} and {12}->{1}{2}"""
    incongruous: bool
    """Local decoupling is negative while the expected decoupling is positive"""


def _solve(
    fsys: FactorizedSystem, realization: JointRealization, redundancy: RedundancyFunction
) -> Dict[PhiAtom, float]:
    below = strictly_below(2)
    phi: Dict[PhiAtom, float] = {}
    for atom in atoms(2):
        phi[atom] = redundancy(fsys, atom, realization) - sum(phi[b] for b in below[atom])
    return phi


def realizations(fsys: FactorizedSystem) -> List[JointRealization]:
    """Transitions with positive joint probability, row-major"""
    return [(int(a), int(b)) for a, b in np.argwhere(fsys.joint > 0)]


def mobius_solve(
    fsys: FactorizedSystem,
    realization=None,
    redundancy: RedundancyFunction = shared_exclusion_redundancy,
) -> AtomTable:
    """Solve all sixteen atoms by Moebius inversion over the lattice.

    Each atom is its double redundancy minus the atoms strictly below it.

    Args:
        fsys (FactorizedSystem): Two-element system
        realization (optional): ((a1, a2), (b1, b2)) or joint (a, b) for a
            local table; None for the expected table.
        redundancy (RedundancyFunction, optional): Double-redundancy function.
            Defaults to the shared-exclusion form.

    Raises:
        UndefinedRealizationError: The realization has zero probability

    Returns:
        AtomTable: Solved atoms; they sum to the (local or expected) excess entropy
    """
    if realization is None:
        return expected_table(fsys, local_tables(fsys, redundancy))
    source, target = _as_joint(fsys, realization)
    if fsys.prior.probs[source] == 0:
        raise UndefinedRealizationError(
            f"source state {fsys.tpm.labels[source]!r} has zero prior probability"
        )
    if fsys.tpm.rows[source, target] == 0:
        raise UndefinedRealizationError(
            f"transition {fsys.tpm.labels[source]!r} -> {fsys.tpm.labels[target]!r} is impossible"
        )
    values = _solve(fsys, (source, target), redundancy)
    return AtomTable(values=values, scope=Scope.LOCAL, realization=(source, target))


def local_tables(
    fsys: FactorizedSystem, redundancy: RedundancyFunction = shared_exclusion_redundancy
) -> Dict[JointRealization, AtomTable]:
    """Local tables for every realization with positive probability"""
    return {r: mobius_solve(fsys, r, redundancy) for r in realizations(fsys)}


def expected_table(
    fsys: FactorizedSystem, tables: Dict[JointRealization, AtomTable]
) -> AtomTable:
    """Probability-weighted mean of local tables"""
    P = fsys.joint
    values = {atom: 0.0 for atom in atoms(2)}
    for (a, b), table in tables.items():
        for atom, value in table.values.items():
            values[atom] += P[a, b] * value
    return AtomTable(values=values, scope=Scope.EXPECTED)


def negative_synergy_fraction(tables: Dict[JointRealization, AtomTable]) -> float:
    """Share of realizations whose causal-decoupling atom is negative"""
    if not tables:
        return 0.0
    negative = sum(t.values[CAUSAL_DECOUPLING] < -ZERO_TOLERANCE for t in tables.values())
    return negative / len(tables)


def phi_heuristic(fsys: FactorizedSystem) -> float:
    """Whole-system excess entropy minus the sum of each element's own excess entropy.

    Can be negative when redundancy dominates.
    """
    n1, n2 = fsys.cardinalities
    P = fsys.joint
    whole = excess_entropy(fsys.tpm, fsys.prior)
    P4 = P.reshape(n1, n2, n1, n2)
    first = expected_mi(JointDist(P4.sum(axis=(1, 3))))
    second = expected_mi(JointDist(P4.sum(axis=(0, 2))))
    return float(whole - first - second)


def emergence_atoms(table: AtomTable, expected: Optional[AtomTable] = None) -> EmergenceAtoms:
    """Extract causal decoupling and the downward-causation atoms.

    Args:
        table (AtomTable): Solved table
        expected (AtomTable, optional): Expected table of the same system, needed
            to flag a local table.

    Returns:
        EmergenceAtoms: The extract; only local tables can be flagged
    """
    decoupling = table.values[CAUSAL_DECOUPLING]
    flagged = (
        table.scope is Scope.LOCAL
        and expected is not None
        and expected.values[CAUSAL_DECOUPLING] > ZERO_TOLERANCE
        and decoupling < -ZERO_TOLERANCE
    )
    return EmergenceAtoms(
        causal_decoupling=decoupling,
        downward={str(atom): table.values[atom] for atom in DOWNWARD_ATOMS},
        incongruous=bool(flagged),
    )


def _realization_block(fsys: FactorizedSystem, realization: JointRealization) -> Dict:
    source, target = realization
    return {
        "source": list(fsys.element_states(source)),
        "target": list(fsys.element_states(target)),
        "probability": float(fsys.joint[source, target]),
    }


def main(
    system: Path,
    realization: Optional[Sequence[int]] = None,
    expected: bool = False,
    prior: Optional[str] = None,
    out: Optional[Path] = None,
) -> EmergenceReport:
    """Decompose one realization (or the expectation) of a two-element system"""
    if (realization is None) == (not expected):
        raise ValidationError("Give exactly one of a realization or --expected")
    fsys = system_from_json(read_json(system), prior)
    report = EmergenceReport(kind="phiid")
    report.add_input("system", system)
    report.parameters = {
        "element_cardinalities": list(fsys.cardinalities),
        "indexing": INDEXING,
        "prior": fsys.prior.probs,
    }

    tables = local_tables(fsys)
    mean = expected_table(fsys, tables)
    report.expected = {
        "excess_entropy": excess_entropy(fsys.tpm, fsys.prior),
        "phi_heuristic": phi_heuristic(fsys),
        "causal_decoupling": mean.values[CAUSAL_DECOUPLING],
    }
    if expected:
        report.expected["atoms"] = mean.as_strings()
        report.local = {
            "tables": [
                {**_realization_block(fsys, r), "atoms": t.as_strings()}
                for r, t in tables.items()
            ]
        }
        extract = emergence_atoms(mean)
    else:
        a1, a2, b1, b2 = realization
        table = mobius_solve(fsys, ((a1, a2), (b1, b2)))
        report.local = {
            "realization": _realization_block(fsys, table.realization),
            "atoms": table.as_strings(),
        }
        extract = emergence_atoms(table, mean)
    report.statistics = {
        "emergence_atoms": extract._asdict(),
        "negative_synergy_fraction": negative_synergy_fraction(tables),
    }
    logger.info(f"Causal decoupling {extract.causal_decoupling:.6f} bits")
    report.write(out)
    return report


def phiid_parser(parent_parser: bool = False) -> argparse.ArgumentParser:
    descStr = f"""
    {logo_str}
    Integrated information decomposition:

    Sixteen-atom decomposition of a two-element system's excess entropy,
    for one transition or in expectation.

    """

    phiid_parser = argparse.ArgumentParser(
        add_help=not parent_parser,
        description=descStr,
        formatter_class=UltimateHelpFormatter,
    )
    parser = phiid_parser.add_argument_group("phiid arguments")
    parser.add_argument("system", type=Path, help="Factorized system JSON.")
    which = parser.add_mutually_exclusive_group(required=True)
    which.add_argument(
        "--realization",
        type=int,
        nargs=4,
        metavar=("A1", "A2", "B1", "B2"),
        default=None,
        help="Element states before (A1 A2) and after (B1 B2) the transition.",
    )
    which.add_argument(
        "--expected", action="store_true", help="Decompose the expected excess entropy."
    )

    return phiid_parser
