"""Shared fixtures and independent reference implementations used as oracles."""

import itertools
from fractions import Fraction

import networkx as nx
import pytest

from sparsecut.graph import Graph
from sparsecut.oracle import complete, cycle, dumbbell, grid, path, star


def brute_boundary(edges, side):
    """Boundary count straight from an edge list, independent of the Graph class."""
    side = set(side)
    return sum(1 for u, v in edges if u != v and ((u in side) != (v in side)))


def brute_sparsest(n, edges, max_size=None):
    """Minimum sparsity over all proper subsets, via plain itertools enumeration."""
    best = None
    top = n - 1 if max_size is None else min(max_size, n - 1)
    for k in range(1, top + 1):
        for side in itertools.combinations(range(n), k):
            val = Fraction(brute_boundary(edges, side), min(k, n - k))
            if best is None or val < best:
                best = val
    return best


def to_networkx(g: Graph) -> nx.MultiGraph:
    h = nx.MultiGraph()
    h.add_nodes_from(range(g.n))
    for u, v, k in g.edges():
        for _ in range(k):
            h.add_edge(u, v)
    return h


def edge_list(g: Graph):
    return [(u, v) for u, v, k in g.edges() for _ in range(k)]


@pytest.fixture
def k4():
    return complete(4)


@pytest.fixture
def p4():
    return path(4)


@pytest.fixture
def bell5():
    return dumbbell(5, 5)


@pytest.fixture
def c4():
    return cycle(4)


@pytest.fixture
def star4():
    return star(4)


@pytest.fixture
def grid33():
    return grid(3, 3)
