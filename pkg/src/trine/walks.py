"""Metapath-guided random-walk corpus generation and per-type filtering."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .centrality import CentralityScores, walk_budget
from .graph import N_PARTIES, Metapath, Node, TripartiteGraph

log = logging.getLogger(__name__)

# Stream tag separating walk randomness from other seeded consumers.
_WALK_STREAM = 101


@dataclass
class WalkCorpus:
    """Raw walks plus provenance (which metapath produced each walk)."""

    walks: list[list[Node]] = field(default_factory=list)
    metapath_ids: list[int] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.walks)


@dataclass
class TypedCorpus:
    """Per-party homogeneous sequences of node indices, order preserved."""

    by_party: tuple[list[list[int]], list[list[int]], list[list[int]]]

    def sequences(self, party: int) -> list[list[int]]:
        return self.by_party[party]

    def occurrence_counts(self, party: int, n: int) -> np.ndarray:
        counts = np.zeros(n, dtype=np.int64)
        for seq in self.by_party[party]:
            for i in seq:
                counts[i] += 1
        return counts


def metapath_walk(g: TripartiteGraph, start: Node, path: Metapath, length: int,
                  rng: np.random.Generator) -> list[Node]:
    """One truncated random walk following the metapath's type pattern.

    At each step the next node is drawn uniformly from the current node's
    neighbors of the type the metapath prescribes next; the walk stops
    early when no such neighbor exists.
    """
    if not g.has_node(start):
        raise ValueError(f"start node {start} not in graph")
    if start.party != path.start:
        raise ValueError(
            f"start node party {start.party} does not match metapath start type {path.start}"
        )
    if length < 1:
        raise ValueError(f"walk length must be >= 1, got {length}")
    walk = [start]
    cur = start
    for step in range(1, length):
        nxt_type = path.type_at(step)
        if nxt_type == cur.party:
            break
        idx, _ = g.neighbor_arrays(cur.party, cur.index, nxt_type)
        if len(idx) == 0:
            break
        cur = Node(nxt_type, int(idx[rng.integers(len(idx))]))
        walk.append(cur)
    return walk


def generate_corpus(g: TripartiteGraph, metapaths: list[Metapath], scores: CentralityScores,
                    min_walks: int, max_walks: int, scale: float, length: int,
                    seed: int) -> WalkCorpus:
    """Launch centrality-budgeted walks from every node, per matching metapath.

    Each (node, metapath, walk index) triple gets its own RNG stream derived
    from the global seed, so the corpus is reproducible and independent of
    generation order.
    """
    if not metapaths:
        raise ValueError("need at least one metapath")
    starts_by_party: list[list[int]] = [[] for _ in range(N_PARTIES)]
    for m, path in enumerate(metapaths):
        starts_by_party[path.start].append(m)
    uncovered = [p for p in range(N_PARTIES) if not starts_by_party[p] and g.counts[p] > 0]
    if uncovered:
        names = ", ".join(g.schema.party_names[p] for p in uncovered)
        log.warning("no metapath starts at party type(s) %s; those nodes launch no walks", names)

    corpus = WalkCorpus()
    for party in range(N_PARTIES):
        for index in range(g.counts[party]):
            node = Node(party, index)
            budget = walk_budget(scores.of(node), min_walks, max_walks, scale)
            for m in starts_by_party[party]:
                path = metapaths[m]
                for w in range(budget):
                    rng = np.random.default_rng([seed, _WALK_STREAM, m, party, index, w])
                    corpus.walks.append(metapath_walk(g, node, path, length, rng))
                    corpus.metapath_ids.append(m)
    return corpus


def filter_by_type(corpus: WalkCorpus) -> TypedCorpus:
    """Split every walk into per-party subsequences, dropping empty ones."""
    by_party: tuple[list[list[int]], ...] = ([], [], [])
    for walk in corpus.walks:
        parts: tuple[list[int], ...] = ([], [], [])
        for node in walk:
            parts[node.party].append(node.index)
        for p in range(N_PARTIES):
            if parts[p]:
                by_party[p].append(parts[p])
    return TypedCorpus(by_party)


def write_walks(corpus: WalkCorpus, g: TripartiteGraph, path) -> None:
    """Write one walk per line as space-separated node labels."""
    with open(path, "w", encoding="utf-8") as fh:
        for walk in corpus.walks:
            fh.write(" ".join(g.label_of(n) for n in walk))
            fh.write("\n")
