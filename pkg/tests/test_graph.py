import itertools
import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from sparsecut.graph import (EdgeCut, Graph, VertexCut, boundary_size, components, conductance,
                             edge_boundary, format_graph, induced_subgraph, neighbors, parse_graph,
                             set_vertex_sparsity, sparsity, terminal_sparsity, vertex_sparsity,
                             vertex_terminal_sparsity)
from sparsecut.oracle import complete, cycle, dumbbell, grid, path, star
from sparsecut.params import GraphFormatError, InvalidCutError, UndefinedConductanceError

from conftest import brute_boundary, edge_list


@st.composite
def multigraphs(draw, max_n=8):
    n = draw(st.integers(2, max_n))
    pairs = list(itertools.combinations(range(n), 2))
    chosen = draw(st.lists(st.sampled_from(pairs), max_size=3 * n))
    return Graph(n, chosen)


@st.composite
def graph_and_side(draw, max_n=8):
    g = draw(multigraphs(max_n))
    k = draw(st.integers(1, g.n - 1))
    side = draw(st.permutations(range(g.n)))[:k]
    return g, frozenset(side)


class TestConstruction:
    def test_parallel_edges_accumulate(self):
        g = Graph(3, [(0, 1), (1, 0), (1, 2, 3)])
        assert g.multiplicity(0, 1) == 2
        assert g.multiplicity(1, 2) == 3
        assert g.m == 5
        assert g.degree(1) == 5

    def test_rejects_out_of_range_endpoint(self):
        with pytest.raises(ValueError):
            Graph(3, [(0, 3)])

    def test_rejects_self_loop_by_default(self):
        with pytest.raises(ValueError):
            Graph(2, [(1, 1)])

    def test_self_loop_adds_two_to_degree_but_no_boundary(self):
        g = Graph(2, [(0, 0), (0, 1)], allow_self_loops=True)
        assert g.degree(0) == 3
        assert boundary_size(g, {0}) == 1

    def test_terminal_needs_positive_weight(self):
        with pytest.raises(ValueError):
            Graph(3, [(0, 1)], weights={0: 1}, terminals=[0, 1])

    def test_weights_imply_terminals(self):
        g = Graph(3, [(0, 1), (1, 2)], weights={0: 2, 2: 1})
        assert g.terminals == frozenset({0, 2})


class TestBoundary:
    def test_path_pair(self, p4):
        assert edge_boundary(p4, {0, 1}) == ((1, 2),)

    def test_k4_single_vertex(self, k4):
        assert len(edge_boundary(k4, {0})) == 3

    def test_dumbbell_clique(self, bell5):
        assert boundary_size(bell5, range(5)) == brute_boundary(edge_list(bell5), range(5)) == 1

    @pytest.mark.parametrize("side", [set(), {0, 1, 2, 3}])
    def test_invalid_sides(self, p4, side):
        with pytest.raises(InvalidCutError):
            edge_boundary(p4, side)

    @settings(max_examples=150, deadline=None)
    @given(graph_and_side())
    def test_complement_has_same_boundary(self, gs):
        g, side = gs
        comp = frozenset(range(g.n)) - side
        assert sorted(edge_boundary(g, side)) == sorted(edge_boundary(g, comp))
        assert boundary_size(g, side) == brute_boundary(edge_list(g), side)


class TestSparsity:
    def test_examples(self, p4, k4, bell5):
        assert sparsity(p4, {0, 1}) == Fraction(1, 2)
        assert sparsity(k4, {0}) == 3
        assert sparsity(bell5, range(5)) == Fraction(1, 5)

    @settings(max_examples=150, deadline=None)
    @given(graph_and_side())
    def test_symmetric_in_complement(self, gs):
        g, side = gs
        comp = frozenset(range(g.n)) - side
        assert sparsity(g, side) == sparsity(g, comp)
        assert isinstance(sparsity(g, side), Fraction)

    @settings(max_examples=150, deadline=None)
    @given(graph_and_side())
    def test_terminal_sparsity_with_all_vertices(self, gs):
        g, side = gs
        assert terminal_sparsity(g, range(g.n), side) == sparsity(g, side)

    def test_terminal_sparsity_exhaustive_small(self):
        for n in range(2, 7):
            g = complete(n) if n % 2 else cycle(n)
            for k in range(1, n):
                for side in itertools.combinations(range(n), k):
                    assert terminal_sparsity(g, range(n), side) == sparsity(g, side)

    def test_terminal_examples(self, bell5):
        assert terminal_sparsity(bell5, {0, 1, 5, 6}, range(5)) == Fraction(1, 2)
        assert terminal_sparsity(bell5, {5, 6, 7}, range(5)) == math.inf


class TestConductance:
    def test_examples(self, k4, bell5, c4):
        assert conductance(k4, {0}) == 1
        assert conductance(bell5, range(5)) == Fraction(1, 21)
        assert conductance(c4, {0, 1}) == Fraction(1, 2)

    def test_zero_volume_side(self):
        g = Graph(3, [(0, 1)])
        with pytest.raises(UndefinedConductanceError):
            conductance(g, {2})

    @pytest.mark.parametrize("g", [cycle(7), complete(6), grid(1, 2)])
    def test_regular_graph_identity(self, g):
        deg = g.degree(0)
        for k in range(1, g.n):
            for side in itertools.combinations(range(g.n), k):
                assert conductance(g, side) == sparsity(g, side) / deg


class TestVertexCuts:
    def test_star(self, star4):
        cut = VertexCut.from_parts(star4, {1}, {0}, {2, 3, 4})
        assert vertex_sparsity(star4, cut) == Fraction(1, 2)
        assert vertex_terminal_sparsity(star4, {1, 2, 3, 4}, cut) == 1

    def test_path(self):
        p5 = path(5)
        cut = VertexCut.from_parts(p5, {0, 1}, {2}, {3, 4})
        assert vertex_sparsity(p5, cut) == Fraction(1, 3)
        assert vertex_terminal_sparsity(p5, {0, 4}, cut) == 1

    def test_grid_middle_column(self, grid33):
        # |C| = 3 over min(|L∪C|, |R∪C|) = 6
        cut = VertexCut.from_parts(grid33, {0, 3, 6}, {1, 4, 7}, {2, 5, 8})
        assert vertex_sparsity(grid33, cut) == Fraction(1, 2)

    def test_terminal_with_all_vertices(self, grid33):
        cut = VertexCut.from_parts(grid33, {0, 3, 6}, {1, 4, 7}, {2, 5, 8})
        assert vertex_terminal_sparsity(grid33, range(9), cut) == vertex_sparsity(grid33, cut)

    def test_rejects_left_right_edge(self, p4):
        with pytest.raises(InvalidCutError):
            VertexCut.from_parts(p4, {0, 1}, {3}, {2})

    def test_rejects_empty_side(self, p4):
        with pytest.raises(InvalidCutError):
            VertexCut.from_parts(p4, set(), {0}, {1, 2, 3})

    @settings(max_examples=200, deadline=None)
    @given(multigraphs(7), st.randoms(use_true_random=False))
    def test_random_partitions_validated(self, g, rnd):
        labels = [rnd.randrange(3) for _ in range(g.n)]
        L = {v for v in range(g.n) if labels[v] == 0}
        C = {v for v in range(g.n) if labels[v] == 1}
        R = {v for v in range(g.n) if labels[v] == 2}
        crossing = any((u in L and v in R) or (u in R and v in L) for u, v, _ in g.edges())
        if crossing or not L or not R:
            with pytest.raises(InvalidCutError):
                VertexCut.from_parts(g, L, C, R)
        else:
            cut = VertexCut.from_parts(g, L, C, R)
            assert cut.sparsity == Fraction(len(C), min(len(L) + len(C), len(R) + len(C)))

    def test_set_vertex_sparsity(self, star4):
        assert set_vertex_sparsity(star4, {1}) == Fraction(1, 2)


class TestNeighborsAndStructure:
    def test_neighbors(self, p4, k4):
        assert neighbors(p4, {0}) == {1}
        assert neighbors(k4, {0, 1}) == {2, 3}
        assert neighbors(k4, set()) == frozenset()

    def test_induced(self, k4, bell5):
        sub, back = induced_subgraph(k4, {1, 3})
        assert sub.n == 2 and sub.m == 1 and back == [1, 3]
        sub, _ = induced_subgraph(bell5, range(5))
        assert sub == complete(5)
        sub, _ = induced_subgraph(k4, range(4))
        assert sub == k4

    def test_components(self):
        g = dumbbell(3, 3)
        assert components(g, {2}) == [frozenset({0, 1}), frozenset({3, 4, 5})]


class TestFormat:
    def test_round_trip(self):
        g = Graph(4, [(0, 1, 2), (1, 2), (2, 3)], weights={0: 3, 3: 1})
        text = format_graph(g)
        assert parse_graph(text) == g
        assert format_graph(parse_graph(text)) == text

    def test_comments_and_unweighted_terminals(self):
        g = parse_graph("# header\n3 2 1\n0 1\n1 2 # bridge\nterminal 2\n")
        assert g.terminals == frozenset({2}) and g.weights is None

    @pytest.mark.parametrize("text, line", [
        ("3 2\n0 1\n1 x\n", 3),
        ("3 1\n0 5\n", 2),
        ("3 1\n1 1\n", 2),
        ("3 1\n0 1\nterminal 0 0\n", 3),
    ])
    def test_errors_carry_line_numbers(self, text, line):
        with pytest.raises(GraphFormatError) as info:
            parse_graph(text)
        assert f"line {line}" in str(info.value)

    def test_edge_count_mismatch(self):
        with pytest.raises(GraphFormatError):
            parse_graph("3 5\n0 1\n")

    @settings(max_examples=100, deadline=None)
    @given(multigraphs(9))
    def test_round_trip_random(self, g):
        assert parse_graph(format_graph(g)) == g


def test_edge_cut_record(bell5):
    cut = EdgeCut.from_side(bell5, range(5), terminals={0, 9})
    assert cut.boundary_size == 1 and cut.sparsity == Fraction(1, 5) and cut.terminal_sparsity == 1
    assert cut.to_dict()["sparsity"] == "1/5"
