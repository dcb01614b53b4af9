#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""Random walkers on networks: edge information and community macro-nodes.

A weighted graph defines a random-walk transition matrix. Every edge then
carries a local excess entropy, and collapsing communities into macro-nodes
gives the coarse-grained walker whose effectiveness is compared with the
micro-scale walker's.
"""

import argparse
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple as Struct
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from flicker.coarse_grain import (
    EIDecomposition,
    Partition,
    TransitionClassification,
    classification_statistics,
    classify_transitions,
    ei_decomposition,
    emergence_score,
    macro_tpm,
)
from flicker.logger import UltimateHelpFormatter, logger
from flicker.probability import (
    ZERO_TOLERANCE,
    PriorPolicy,
    ProbVector,
    TransitionMatrix,
    local_excess_entropy_table,
    resolve_prior,
)
from flicker.report import EmergenceReport
from flicker.utils.exceptions import DomainError, ValidationError
from flicker.utils.io import read_communities_csv, read_edge_list_csv
from flicker.utils.pipeline import logo_str

EDGE_CLASSES = (
    "informative_within",
    "informative_between",
    "misinformative_within",
    "misinformative_between",
)


@dataclass(frozen=True, eq=False)
class WeightedGraph:
    """Directed weighted graph; undirected input is stored as two directed edges"""

    graph: nx.DiGraph
    """Edges carry a non-negative ``weight``"""
    directed: bool = True
    """Whether the input edges were directed"""

    def __post_init__(self):
        if self.graph.number_of_nodes() < 1:
            raise ValidationError("Graph has no nodes")
        for u, v, w in self.graph.edges(data="weight", default=1.0):
            if w is None or not np.isfinite(w) or w < 0:
                raise ValidationError(f"Edge ({u!r}, {v!r}) has invalid weight {w!r}")

    @property
    def nodes(self) -> Tuple[str, ...]:
        return tuple(self.graph.nodes)

    @classmethod
    def from_edges(
        cls,
        edges: Iterable[Tuple[str, str, float]],
        directed: bool = False,
        nodes: Optional[Sequence[str]] = None,
    ) -> "WeightedGraph":
        """Build a graph from (src, dst, weight) triples; repeated edges add up.

        Nodes are ordered by first appearance unless ``nodes`` is given.
        """
        G = nx.DiGraph()
        if nodes is not None:
            G.add_nodes_from(str(n) for n in nodes)
        for src, dst, weight in edges:
            src, dst = str(src), str(dst)
            if weight < 0:
                raise ValidationError(f"Edge ({src!r}, {dst!r}) has negative weight {weight}")
            pairs = [(src, dst)] if directed or src == dst else [(src, dst), (dst, src)]
            for u, v in pairs:
                if G.has_edge(u, v):
                    G[u][v]["weight"] += weight
                else:
                    G.add_edge(u, v, weight=float(weight))
        return cls(G, directed)

    @classmethod
    def from_networkx(cls, G: nx.Graph, weight: str = "weight") -> "WeightedGraph":
        """Wrap a networkx graph, relabelling nodes as strings (missing weights are 1)"""
        edges = [(u, v, float(w)) for u, v, w in G.edges(data=weight, default=1.0)]
        return cls.from_edges(edges, directed=G.is_directed(), nodes=list(G.nodes))


class CommunityAssignment(Struct):
    """Node -> community grouping that defines the macro-nodes"""

    communities: Dict[str, str]
    """Community label of each node"""
    source: str
    """``file`` or ``label-propagation``"""

    def to_partition(self, nodes: Sequence[str]) -> Partition:
        return Partition.from_mapping(self.communities, nodes, source="communities")

    @property
    def n_communities(self) -> int:
        return len(set(self.communities.values()))


class EdgeInfoMap(Struct):
    """Local excess entropy of every edge the walker can take"""

    edges: Tuple[Tuple[str, str], ...]
    """(src, dst) pairs with positive walk probability, row-major"""
    values: np.ndarray
    """Signed bits per edge"""
    within: Optional[np.ndarray] = None
    """Whether both ends share a community (None without communities)"""


class NetworkEmergence(Struct):
    """Micro versus macro-node walker comparison"""

    micro: EIDecomposition
    macro: EIDecomposition
    emergence_score: Optional[float]
    """None when the macro walker has no effectiveness"""
    classification: TransitionClassification
    edge_map: EdgeInfoMap
    edge_counts: Dict[str, int]
    edge_fractions: Dict[str, float]
    warnings: Tuple[str, ...]


def dangling_nodes(g: WeightedGraph) -> List[str]:
    """Nodes with no outgoing weight"""
    return [n for n in g.nodes if g.graph.out_degree(n, weight="weight") == 0]


def walk_tpm(g: WeightedGraph) -> TransitionMatrix:
    """Random-walk transition matrix: each row is a node's out-weights normalised.

    Dangling nodes get a self-loop of probability one.

    Args:
        g (WeightedGraph): Network

    Returns:
        TransitionMatrix: Walk dynamics labelled by node
    """
    nodes = list(g.nodes)
    A = nx.to_numpy_array(g.graph, nodelist=nodes, weight="weight", dtype=float)
    strength = A.sum(axis=1)
    dangling = np.flatnonzero(strength == 0)
    if dangling.size:
        logger.warning(f"Dangling nodes {[nodes[i] for i in dangling]} get self-loops")
        A[dangling, dangling] = 1.0
        strength = A.sum(axis=1)
    return TransitionMatrix(A / strength[:, None], tuple(nodes))


def edge_info_map(
    g: WeightedGraph,
    communities: Optional[CommunityAssignment] = None,
    prior: "PriorPolicy | str | ProbVector" = PriorPolicy.UNIFORM,
) -> EdgeInfoMap:
    """Local excess entropy of each edge, uniform prior by default.

    Positive edges are informative, negative ones misinformative.
    """
    W = walk_tpm(g)
    table = local_excess_entropy_table(W, resolve_prior(W, prior))
    pairs = np.argwhere(W.rows > 0)
    edges = tuple((W.labels[i], W.labels[j]) for i, j in pairs)
    values = np.array([table[i, j] for i, j in pairs])
    within = None
    if communities is not None:
        within = np.array(
            [communities.communities[u] == communities.communities[v] for u, v in edges],
            dtype=bool,
        )
    return EdgeInfoMap(edges=edges, values=values, within=within)


def label_propagation(g: WeightedGraph, seed: int = 0) -> CommunityAssignment:
    """Seeded asynchronous label propagation on the undirected weighted graph.

    Communities are numbered by their smallest member (in node order).
    """
    order = {node: i for i, node in enumerate(g.nodes)}
    undirected = g.graph.to_undirected()
    found = nx.community.asyn_lpa_communities(undirected, weight="weight", seed=seed)
    ranked = sorted((sorted(c, key=order.get) for c in found), key=lambda c: order[c[0]])
    communities = {node: str(k) for k, members in enumerate(ranked) for node in members}
    logger.info(f"Label propagation found {len(ranked)} communities")
    return CommunityAssignment(communities=communities, source="label-propagation")


def edge_classes(edge_map: EdgeInfoMap) -> Tuple[Dict[str, int], Dict[str, float]]:
    """Counts and fractions of informative/misinformative edges within/between communities.

    Fractions are taken within each sign class (so the two informative
    fractions sum to one); an empty class reports zeros.
    """
    if edge_map.within is None:
        raise ValidationError("Edge classes need a community assignment")
    counts = dict.fromkeys(EDGE_CLASSES, 0)
    for value, within in zip(edge_map.values, edge_map.within):
        if abs(value) < ZERO_TOLERANCE or np.isnan(value):
            continue
        sign = "informative" if value > 0 else "misinformative"
        place = "within" if within else "between"
        counts[f"{sign}_{place}"] += 1
    fractions = {}
    for sign in ("informative", "misinformative"):
        total = counts[f"{sign}_within"] + counts[f"{sign}_between"]
        for place in ("within", "between"):
            key = f"{sign}_{place}"
            fractions[key] = counts[key] / total if total else 0.0
    return counts, fractions


def network_emergence(
    g: WeightedGraph,
    c: CommunityAssignment,
    prior: "PriorPolicy | str | ProbVector" = PriorPolicy.UNIFORM,
) -> NetworkEmergence:
    """Compare the micro walker with the walker on community macro-nodes.

    Args:
        g (WeightedGraph): Network
        c (CommunityAssignment): Macro-node grouping covering every node
        prior (optional): Prior over nodes for local values. Defaults to uniform.

    Returns:
        NetworkEmergence: Effective information at both scales, the emergence
        score, transition classification and the edge-class statistics
    """
    missing = [n for n in g.nodes if n not in c.communities]
    if missing:
        raise ValidationError(f"No community for node {missing[0]!r}")
    warnings = []
    dangling = dangling_nodes(g)
    if dangling:
        warnings.append(f"dangling nodes given self-loops: {dangling}")

    W = walk_tpm(g)
    partition = c.to_partition(W.labels)
    macro = macro_tpm(W, partition)
    micro_ei = ei_decomposition(W)
    macro_ei = ei_decomposition(macro.macro_tpm)
    score = None
    if partition.M < 2:
        warnings.append("macro-undefined: a single community has no effectiveness")
    elif W.n >= 2:
        try:
            score = emergence_score(W, macro)
        except DomainError as e:
            warnings.append(f"emergence score undefined: {e}")

    edge_map = edge_info_map(g, c, prior)
    counts, fractions = edge_classes(edge_map)
    return NetworkEmergence(
        micro=micro_ei,
        macro=macro_ei,
        emergence_score=score,
        classification=classify_transitions(W, macro, prior),
        edge_map=edge_map,
        edge_counts=counts,
        edge_fractions=fractions,
        warnings=tuple(warnings),
    )


def main(
    edges: Path,
    communities: Optional[Path] = None,
    label_prop: bool = False,
    directed: bool = False,
    seed: int = 0,
    prior: Optional[str] = None,
    out: Optional[Path] = None,
) -> EmergenceReport:
    """Network emergence report for one graph and one community assignment"""
    if (communities is None) == (not label_prop):
        raise ValidationError("Give exactly one of a community file or --label_prop")
    prior = prior or PriorPolicy.UNIFORM.value
    g = WeightedGraph.from_edges(read_edge_list_csv(edges), directed=directed)
    report = EmergenceReport(kind="network")
    report.add_input("edges", edges)
    if communities is not None:
        report.add_input("communities", communities)
        c = CommunityAssignment(read_communities_csv(communities, g.nodes), "file")
    else:
        c = label_propagation(g, seed)
    report.parameters = {
        "prior": prior,
        "directed": directed,
        "community_source": c.source,
        "seed": seed if label_prop else None,
    }

    result = network_emergence(g, c, prior)
    for message in result.warnings:
        report.warn(message)
    report.expected = {
        "micro": result.micro._asdict(),
        "macro": result.macro._asdict(),
        "emergence_score": result.emergence_score,
        "n_nodes": len(g.nodes),
        "n_communities": c.n_communities,
    }
    report.local = {
        "communities": c.communities,
        "edges": [
            {"src": u, "dst": v, "bits": value, "within": bool(within)}
            for (u, v), value, within in zip(
                result.edge_map.edges, result.edge_map.values, result.edge_map.within
            )
        ],
    }
    report.statistics = {
        **classification_statistics(result.classification),
        "edge_counts": result.edge_counts,
        "edge_fractions": result.edge_fractions,
    }
    report.write(out)
    return report


def network_parser(parent_parser: bool = False) -> argparse.ArgumentParser:
    descStr = f"""
    {logo_str}
    Network emergence:

    Random-walker information on every edge, and the walker on community
    macro-nodes compared with the micro-scale walker.

    """

    network_parser = argparse.ArgumentParser(
        add_help=not parent_parser,
        description=descStr,
        formatter_class=UltimateHelpFormatter,
    )
    parser = network_parser.add_argument_group("network arguments")
    parser.add_argument("edges", type=Path, help="Edge list CSV (src,dst[,weight]).")
    parser.add_argument(
        "--directed", action="store_true", help="Treat edges as directed."
    )
    which = parser.add_mutually_exclusive_group(required=True)
    which.add_argument(
        "--communities", type=Path, default=None, help="Community CSV (node,community)."
    )
    which.add_argument(
        "--label_prop",
        action="store_true",
        help="Detect communities by label propagation (seeded by --seed).",
    )

    return network_parser
