import numpy as np
import pytest

from trine.graph import GraphBuilder, build_from_pairs


@pytest.fixture
def write_edges(tmp_path):
    """Write an edge-list file from lines and return its path."""

    def _write(*lines, name="edges.txt"):
        path = tmp_path / name
        path.write_text("\n".join(lines) + ("\n" if lines else ""))
        return path

    return _write


@pytest.fixture
def schema_graph():
    """Nine-node fixture consistent with the documented neighbor sets.

    One-step page neighbors of u1 are {p1, p3}; the union of two-step
    neighbors of u1 over schema-valid continuations is {u2, u3, c1, c3}.
    """
    b = GraphBuilder()
    for src, dst in [("u1", "p1"), ("u1", "p3"), ("u2", "p1"), ("u3", "p3"),
                     ("p1", "c1"), ("p3", "c3"), ("u2", "p2"), ("p2", "c2")]:
        b.add_edge(src, dst)
    return b.build()


@pytest.fixture
def chain_graph():
    """u0 - p0 - c0 chain."""
    return build_from_pairs((1, 1, 1), [(0, 0, 0, 1.0), (1, 0, 0, 1.0)])


def random_tripartite(rng, counts=(8, 6, 5), density=0.3, max_weight=4):
    """Random weighted tripartite graph for property tests."""
    edges = []
    for r, (a, b) in enumerate(((0, 1), (1, 2), (0, 2))):
        for i in range(counts[a]):
            for j in range(counts[b]):
                if rng.random() < density:
                    edges.append((r, i, j, float(rng.integers(1, max_weight + 1))))
    return build_from_pairs(counts, edges)
