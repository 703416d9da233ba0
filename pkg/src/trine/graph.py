"""Weighted tripartite graph: loading, validation, and neighbor queries.

Nodes belong to one of three parties (0, 1, 2). Edges only connect nodes
of different parties and are undirected. The three cross-party relations
are indexed 0: parties (0,1), 1: parties (1,2), 2: parties (0,2).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

import numpy as np

from .errors import EdgeListError, SchemaError

N_PARTIES = 3

# Relation index -> (party, party), with the lower party listed first.
RELATIONS: tuple[tuple[int, int], ...] = ((0, 1), (1, 2), (0, 2))

RELATION_OF_PAIR: dict[tuple[int, int], int] = {}
for _r, (_a, _b) in enumerate(RELATIONS):
    RELATION_OF_PAIR[(_a, _b)] = _r
    RELATION_OF_PAIR[(_b, _a)] = _r

# Relation names as used on the command line ("13" = parties T1 and T3).
RELATION_NAMES: tuple[str, ...] = ("12", "23", "13")


class Node(NamedTuple):
    """A node identified by its party and a dense per-party index."""

    party: int
    index: int


class Edge(NamedTuple):
    """An undirected weighted edge between two parties."""

    src: Node
    dst: Node
    weight: float

    @property
    def relation(self) -> int:
        return RELATION_OF_PAIR[(self.src.party, self.dst.party)]


@dataclass(frozen=True)
class Schema:
    """Declares the three parties: label prefixes and human-readable names.

    Node labels in edge-list files are a single type character followed by
    an identifier, e.g. ``u17``. The type character determines the party.
    """

    type_chars: tuple[str, str, str] = ("u", "p", "c")
    party_names: tuple[str, str, str] = ("user", "page", "category")

    def __post_init__(self):
        if len(set(self.type_chars)) != N_PARTIES:
            raise SchemaError(f"type characters must be three distinct chars, got {self.type_chars!r}")
        for ch in self.type_chars:
            if len(ch) != 1:
                raise SchemaError(f"type character must be a single char, got {ch!r}")

    def party_of_label(self, label: str) -> int:
        if not label:
            raise SchemaError("empty node label")
        try:
            return self.type_chars.index(label[0])
        except ValueError:
            raise SchemaError(
                f"unknown type prefix {label[0]!r} in label {label!r}; expected one of {self.type_chars}"
            ) from None

    def metapath(self, pattern: str) -> "Metapath":
        """Parse a metapath given as a string of type characters, e.g. ``upcpu``."""
        try:
            types = tuple(self.type_chars.index(ch) for ch in pattern)
        except ValueError:
            raise SchemaError(
                f"metapath {pattern!r} contains characters outside {self.type_chars}"
            ) from None
        return Metapath(types)


DEFAULT_SCHEMA = Schema()


@dataclass(frozen=True)
class Metapath:
    """A cyclic sequence of party types guiding random-walk transitions.

    Walks longer than the scheme continue by repeating the pattern from
    index 1, so a palindromic scheme such as (0,1,2,1,0) cycles seamlessly.
    """

    types: tuple[int, ...]

    def __post_init__(self):
        if len(self.types) < 2:
            raise SchemaError("metapath needs at least two node types")
        for t in self.types:
            if t not in (0, 1, 2):
                raise SchemaError(f"metapath type {t} outside parties 0..2")
        for a, b in itertools.pairwise(self.types):
            if a == b:
                raise SchemaError("metapath repeats a node type in consecutive positions; no intra-party edges exist")

    def __len__(self) -> int:
        return len(self.types)

    @property
    def start(self) -> int:
        return self.types[0]

    def type_at(self, step: int) -> int:
        """Party expected at walk position ``step`` (0-based), cycling past the end."""
        if step == 0:
            return self.types[0]
        return self.types[1 + (step - 1) % (len(self.types) - 1)]

    def describe(self, schema: Schema = DEFAULT_SCHEMA) -> str:
        return "".join(schema.type_chars[t] for t in self.types)


@dataclass
class ValidationReport:
    """Outcome of structural checks on a graph; empty violations = healthy."""

    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


class TripartiteGraph:
    """Immutable weighted tripartite graph with symmetric adjacency.

    Construction goes through :class:`GraphBuilder` or :func:`load_edge_list`.
    After construction the graph is read-only and safe to share across
    threads or workers.
    """

    def __init__(self, schema: Schema, labels: tuple[list[str], ...],
                 edge_weights: tuple[dict[tuple[int, int], float], ...]):
        self.schema = schema
        self.labels = labels
        self.counts = tuple(len(ls) for ls in labels)
        self._index_of = {lab: Node(p, i) for p in range(N_PARTIES) for i, lab in enumerate(labels[p])}
        # Per relation: edge arrays sorted by (i, j); i indexes the first
        # party of the relation, j the second.
        self._edge_weights = edge_weights
        self.edge_src: list[np.ndarray] = []
        self.edge_dst: list[np.ndarray] = []
        self.edge_wt: list[np.ndarray] = []
        self.total_weight: list[float] = []
        for r in range(len(RELATIONS)):
            pairs = sorted(edge_weights[r].items())
            src = np.array([ij[0] for ij, _ in pairs], dtype=np.int64)
            dst = np.array([ij[1] for ij, _ in pairs], dtype=np.int64)
            wt = np.array([w for _, w in pairs], dtype=np.float64)
            self.edge_src.append(src)
            self.edge_dst.append(dst)
            self.edge_wt.append(wt)
            self.total_weight.append(float(wt.sum()))
        self._adj = self._build_adjacency()

    # -- construction helpers -------------------------------------------------

    def _build_adjacency(self):
        """CSR-style neighbor arrays keyed by (party, target party)."""
        adj: dict[tuple[int, int], tuple[np.ndarray, np.ndarray, np.ndarray]] = {}
        for r, (a, b) in enumerate(RELATIONS):
            src, dst, wt = self.edge_src[r], self.edge_dst[r], self.edge_wt[r]
            adj[(a, b)] = _csr(src, dst, wt, self.counts[a])
            adj[(b, a)] = _csr(dst, src, wt, self.counts[b])
        return adj

    # -- queries ---------------------------------------------------------------

    @property
    def num_nodes(self) -> int:
        return sum(self.counts)

    @property
    def num_edges(self) -> int:
        return sum(len(w) for w in self.edge_wt)

    def label_of(self, node: Node) -> str:
        return self.labels[node.party][node.index]

    def node_of(self, label: str) -> Node:
        try:
            return self._index_of[label]
        except KeyError:
            raise KeyError(f"unknown node label {label!r}") from None

    def has_node(self, node: Node) -> bool:
        return 0 <= node.party < N_PARTIES and 0 <= node.index < self.counts[node.party]

    def nodes(self) -> Iterable[Node]:
        for p in range(N_PARTIES):
            for i in range(self.counts[p]):
                yield Node(p, i)

    def edges(self, relation: int) -> Iterable[Edge]:
        a, b = RELATIONS[relation]
        for i, j, w in zip(self.edge_src[relation], self.edge_dst[relation], self.edge_wt[relation]):
            yield Edge(Node(a, int(i)), Node(b, int(j)), float(w))

    def has_edge(self, relation: int, i: int, j: int) -> bool:
        return (i, j) in self._edge_weights[relation]

    def neighbor_arrays(self, party: int, index: int, target: int) -> tuple[np.ndarray, np.ndarray]:
        """Index and weight arrays of ``target``-party neighbors (may be empty)."""
        indptr, idx, wt = self._adj[(party, target)]
        lo, hi = indptr[index], indptr[index + 1]
        return idx[lo:hi], wt[lo:hi]

    def neighbors(self, node: Node, target: int) -> list[tuple[Node, float]]:
        """All ``target``-party nodes adjacent to ``node``, with edge weights.

        Raises ValueError when the query asks for same-party neighbors,
        which cannot exist in a tripartite graph.
        """
        if not self.has_node(node):
            raise ValueError(f"node {node} not in graph (counts {self.counts})")
        if target == node.party:
            raise ValueError(f"invalid query: target party {target} equals the node's own party")
        idx, wt = self.neighbor_arrays(node.party, node.index, target)
        return [(Node(target, int(j)), float(w)) for j, w in zip(idx, wt)]

    # -- derived graphs ----------------------------------------------------------

    def without_edges(self, relation: int, pairs: Iterable[tuple[int, int]]) -> "TripartiteGraph":
        """Copy of the graph with the given (i, j) edges of one relation removed.

        The node universe (counts and labels) is preserved even if nodes
        become isolated, so embedding matrices keep their shape.
        """
        removed = set(pairs)
        new_weights = []
        for r in range(len(RELATIONS)):
            if r == relation:
                kept = {ij: w for ij, w in self._edge_weights[r].items() if ij not in removed}
                new_weights.append(kept)
            else:
                new_weights.append(dict(self._edge_weights[r]))
        return TripartiteGraph(self.schema, self.labels, tuple(new_weights))

    # -- validation ----------------------------------------------------------------

    def validate(self) -> ValidationReport:
        """Structural checks: symmetry, positive weights, consistent totals."""
        report = ValidationReport()
        for r, (a, b) in enumerate(RELATIONS):
            wt = self.edge_wt[r]
            if np.any(wt <= 0):
                bad = int(np.argmax(wt <= 0))
                report.violations.append(
                    f"relation {RELATION_NAMES[r]}: non-positive weight {wt[bad]} on edge "
                    f"({self.labels[a][int(self.edge_src[r][bad])]}, {self.labels[b][int(self.edge_dst[r][bad])]})"
                )
            total = float(wt.sum())
            if not np.isclose(total, self.total_weight[r]):
                report.violations.append(
                    f"relation {RELATION_NAMES[r]}: stored total weight {self.total_weight[r]} "
                    f"!= recomputed {total}"
                )
            # Symmetric view: forward and reverse adjacency must agree.
            fwd = self._adj[(a, b)]
            rev = self._adj[(b, a)]
            for i in range(self.counts[a]):
                lo, hi = fwd[0][i], fwd[0][i + 1]
                for j, w in zip(fwd[1][lo:hi], fwd[2][lo:hi]):
                    rlo, rhi = rev[0][j], rev[0][j + 1]
                    pos = np.searchsorted(rev[1][rlo:rhi], i)
                    if pos >= rhi - rlo or rev[1][rlo + pos] != i or rev[2][rlo + pos] != w:
                        report.violations.append(
                            f"relation {RELATION_NAMES[r]}: asymmetric adjacency at "
                            f"({self.labels[a][i]}, {self.labels[b][int(j)]})"
                        )
        return report


def _csr(src: np.ndarray, dst: np.ndarray, wt: np.ndarray, n_rows: int):
    order = np.lexsort((dst, src))
    src, dst, wt = src[order], dst[order], wt[order]
    indptr = np.zeros(n_rows + 1, dtype=np.int64)
    np.add.at(indptr, src + 1, 1)
    np.cumsum(indptr, out=indptr)
    return indptr, dst, wt


class GraphBuilder:
    """Accumulates labeled edges, then produces a :class:`TripartiteGraph`.

    Duplicate edges have their weights summed. Node indices are assigned
    densely per party in order of first appearance.
    """

    def __init__(self, schema: Schema = DEFAULT_SCHEMA):
        self.schema = schema
        self._labels: tuple[list[str], ...] = ([], [], [])
        self._index: dict[str, Node] = {}
        self._weights: tuple[dict[tuple[int, int], float], ...] = ({}, {}, {})

    def _intern(self, label: str) -> Node:
        node = self._index.get(label)
        if node is None:
            party = self.schema.party_of_label(label)
            node = Node(party, len(self._labels[party]))
            self._labels[party].append(label)
            self._index[label] = node
        return node

    def add_node(self, label: str) -> None:
        """Declare a node that may have no edges (keeps isolated nodes loadable)."""
        self._intern(label)

    def add_edge(self, src_label: str, dst_label: str, weight: float = 1.0) -> None:
        if weight <= 0:
            raise EdgeListError(f"edge ({src_label}, {dst_label}) has non-positive weight {weight}")
        u = self._intern(src_label)
        v = self._intern(dst_label)
        if u.party == v.party:
            raise EdgeListError(
                f"intra-party edge ({src_label}, {dst_label}): both nodes are "
                f"{self.schema.party_names[u.party]} nodes"
            )
        r = RELATION_OF_PAIR[(u.party, v.party)]
        a, _ = RELATIONS[r]
        i, j = (u.index, v.index) if u.party == a else (v.index, u.index)
        self._weights[r][(i, j)] = self._weights[r].get((i, j), 0.0) + weight

    def build(self) -> TripartiteGraph:
        return TripartiteGraph(self.schema, tuple(list(ls) for ls in self._labels), self._weights)


def load_edge_list(path, schema: Schema = DEFAULT_SCHEMA) -> TripartiteGraph:
    """Load a graph from a whitespace-separated edge-list file.

    Each non-comment line is ``<src-label> <dst-label> [weight]``; a missing
    weight defaults to 1.0. A line holding a single label declares a node
    without edges, so graphs with isolated nodes survive a file round trip.
    Lines starting with ``#`` and blank lines are skipped. Raises
    :class:`EdgeListError` with the line number on malformed input and
    :class:`SchemaError` on unknown type prefixes.
    """
    builder = GraphBuilder(schema)
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) == 1:
                try:
                    builder.add_node(parts[0])
                except SchemaError as exc:
                    raise SchemaError(f"line {line_no}: {exc}") from None
                continue
            if len(parts) not in (2, 3):
                raise EdgeListError(f"expected 'src dst [weight]', got {line!r}", line_no)
            weight = 1.0
            if len(parts) == 3:
                try:
                    weight = float(parts[2])
                except ValueError:
                    raise EdgeListError(f"bad weight {parts[2]!r}", line_no) from None
            try:
                builder.add_edge(parts[0], parts[1], weight)
            except EdgeListError as exc:
                raise EdgeListError(str(exc), line_no) from None
            except SchemaError as exc:
                raise SchemaError(f"line {line_no}: {exc}") from None
    return builder.build()


def build_from_pairs(counts: tuple[int, int, int],
                     edges: Iterable[tuple[int, int, int, float]],
                     schema: Schema = DEFAULT_SCHEMA) -> TripartiteGraph:
    """Construct a graph from index-level edges ``(relation, i, j, weight)``.

    Labels are synthesized from the schema's type characters; mainly for
    tests and synthetic benchmarks.
    """
    labels = tuple([f"{schema.type_chars[p]}{i}" for i in range(counts[p])] for p in range(N_PARTIES))
    weights: tuple[dict[tuple[int, int], float], ...] = ({}, {}, {})
    for r, i, j, w in edges:
        a, b = RELATIONS[r]
        if not (0 <= i < counts[a] and 0 <= j < counts[b]):
            raise ValueError(f"edge ({r}, {i}, {j}) outside party sizes {counts}")
        weights[r][(i, j)] = weights[r].get((i, j), 0.0) + w
    return TripartiteGraph(schema, labels, weights)
