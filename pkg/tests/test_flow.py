import itertools
from fractions import Fraction

import networkx as nx
import pytest
from hypothesis import given, settings, strategies as st

from sparsecut.flow import (FlowNetwork, check_flow, composed_congestion, decompose_paths,
                            edge_network, extract_matching, max_flow_min_cut, vertex_capacitated,
                            verify_embedding, with_super_terminals)
from sparsecut.graph import Graph, components
from sparsecut.oracle import complete, dumbbell, path, star
from sparsecut.params import NotAMatchingError


def brute_min_cut(num_nodes, arcs, s, t):
    """Cheapest source-side set, by enumerating every subset of the other nodes."""
    others = [v for v in range(num_nodes) if v not in (s, t)]
    best = None
    for k in range(len(others) + 1):
        for extra in itertools.combinations(others, k):
            side = {s, *extra}
            cap = sum(c for u, v, c in arcs if u in side and v not in side)
            best = cap if best is None else min(best, cap)
    return best


@st.composite
def random_networks(draw, max_nodes=8):
    n = draw(st.integers(2, max_nodes))
    arcs = draw(st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1),
                                   st.fractions(min_value=0, max_value=5, max_denominator=4)),
                         max_size=4 * n))
    arcs = [(u, v, c) for u, v, c in arcs if u != v]
    return n, arcs


class TestMaxFlow:
    def test_single_arc(self):
        net = FlowNetwork(2, 0, 1)
        net.add_arc(0, 1, 5)
        res = max_flow_min_cut(net)
        assert res.exact_value == 5 and res.source_side == {0}

    def test_k4_adjacent(self):
        net = edge_network(complete(4))
        net.source, net.sink = 0, 1
        assert max_flow_min_cut(net).exact_value == 3

    def test_dumbbell_bridge(self):
        g = dumbbell(5, 5)
        net = edge_network(g)
        net.source, net.sink = 0, 9
        res = max_flow_min_cut(net)
        assert res.exact_value == 1
        assert res.source_side == frozenset(range(5))

    def test_disconnected_is_zero(self):
        net = FlowNetwork(3, 0, 2)
        net.add_arc(0, 1, 4)
        assert max_flow_min_cut(net).value == 0

    def test_rational_capacities_scaled(self):
        net = FlowNetwork(3, 0, 2)
        net.add_arc(0, 1, Fraction(1, 3))
        net.add_arc(1, 2, Fraction(1, 2))
        res = max_flow_min_cut(net)
        assert net.scale == 6 and res.exact_value == Fraction(1, 3)

    def test_negative_capacity_rejected(self):
        with pytest.raises(ValueError):
            FlowNetwork(2).add_arc(0, 1, -1)

    @settings(max_examples=150, deadline=None)
    @given(random_networks())
    def test_matches_bruteforce_and_networkx(self, inst):
        n, arcs = inst
        net = FlowNetwork(n, 0, n - 1)
        dg = nx.DiGraph()
        dg.add_nodes_from(range(n))
        for u, v, c in arcs:
            net.add_arc(u, v, c)
            prev = dg.get_edge_data(u, v, {"capacity": 0})["capacity"]
            dg.add_edge(u, v, capacity=prev + c)
        res = max_flow_min_cut(net)
        check_flow(net, res)
        expected = brute_min_cut(n, arcs, 0, n - 1)
        assert res.exact_value == expected
        assert Fraction(nx.maximum_flow_value(dg, 0, n - 1)) == expected
        cut_cap = sum(c for u, v, c in arcs if u in res.source_side and v not in res.source_side)
        assert cut_cap == res.exact_value
        assert 0 in res.source_side and n - 1 not in res.source_side

    def test_dimacs_dump(self):
        net = FlowNetwork(2, 0, 1)
        net.add_arc(0, 1, Fraction(3, 2))
        text = net.to_dimacs()
        assert "c scale 2" in text and "a 1 2 3" in text and "p max 2 1" in text


class TestVertexCapacitated:
    def test_path_center(self):
        net = vertex_capacitated(path(3), {0: 10, 1: 1, 2: 10}, source=0, sink=2)
        assert max_flow_min_cut(net).exact_value == 1

    def test_k4_uncapacitated_endpoints(self):
        # graph edges are unbounded, so the direct s-t edge carries everything the endpoints allow
        net = vertex_capacitated(complete(4), {0: 100, 1: 100, 2: 1, 3: 1}, source=0, sink=1)
        assert max_flow_min_cut(net).exact_value == 100
        k4_minus = Graph(4, [e for e in itertools.combinations(range(4), 2) if e != (0, 1)])
        net = vertex_capacitated(k4_minus, {0: 100, 1: 100, 2: 1, 3: 1}, source=0, sink=1)
        assert max_flow_min_cut(net).exact_value == 2

    def test_k4_endpoint_caps_count(self):
        net = vertex_capacitated(complete(4), {v: 1 for v in range(4)}, source=0, sink=1)
        assert max_flow_min_cut(net).exact_value == 1

    def test_star_single_path(self):
        caps = {0: 2, 1: 10, 2: 10, 3: 10}
        net = vertex_capacitated(star(3), caps, source=1, sink=2)
        assert max_flow_min_cut(net).exact_value == 2
        net = vertex_capacitated(star(3), {0: 2, 1: 1, 2: 1, 3: 1}, source=1, sink=2)
        assert max_flow_min_cut(net).exact_value == 1

    def test_nonpositive_capacity(self):
        with pytest.raises(ValueError):
            vertex_capacitated(path(3), {0: 1, 1: 0, 2: 1})

    @settings(max_examples=80, deadline=None)
    @given(st.integers(3, 9), st.data())
    def test_round_trip_against_bruteforce(self, n, data):
        pairs = list(itertools.combinations(range(n), 2))
        edges = data.draw(st.lists(st.sampled_from(pairs), min_size=1, max_size=2 * n))
        g = Graph(n, edges)
        caps = {v: data.draw(st.integers(1, 4)) for v in range(n)}
        s, t = 0, n - 1
        best = None
        for k in range(n + 1):
            for C in itertools.combinations(range(n), k):
                Cs = set(C)
                if s in Cs or t in Cs or not any(s in c and t in c for c in components(g, Cs)):
                    cost = sum(caps[v] for v in Cs)
                    best = cost if best is None else min(best, cost)
        net = vertex_capacitated(g, caps, source=s, sink=t)
        assert max_flow_min_cut(net).exact_value == best


class TestMatchings:
    def test_direct_pair(self):
        g = Graph(2, [(0, 1)])
        net = edge_network(g)
        with_super_terminals(net, {0: 1}, {1: 1})
        res = max_flow_min_cut(net)
        assert extract_matching(net, res, [0], [1]) == [(0, 1)]

    def test_k4_perfect(self):
        g = complete(4)
        net = edge_network(g, 2)
        with_super_terminals(net, {0: 1, 1: 1}, {2: 1, 3: 1})
        res = max_flow_min_cut(net)
        m = extract_matching(net, res, [0, 1], [2, 3])
        assert sorted(x for x, _ in m) == [0, 1] and sorted(y for _, y in m) == [2, 3]
        paths = decompose_paths(net, res)
        assert sum(a for _, a in paths) == res.value

    def test_disconnected_raises(self):
        g = Graph(4, [(0, 1), (2, 3)])
        net = edge_network(g)
        with_super_terminals(net, {0: 1, 1: 1}, {2: 1, 3: 1})
        res = max_flow_min_cut(net)
        with pytest.raises(NotAMatchingError):
            extract_matching(net, res, [0, 1], [2, 3])

    @settings(max_examples=60, deadline=None)
    @given(st.integers(2, 5), st.integers(0, 10**6))
    def test_random_matchings_cover_each_side_once(self, half, seed):
        import random
        rnd = random.Random(seed)
        n = 2 * half + rnd.randrange(3)
        g = Graph(n, [e for e in itertools.combinations(range(n), 2) if rnd.random() < 0.6])
        order = list(range(n))
        rnd.shuffle(order)
        X, Y = order[:half], order[half:2 * half]
        net = edge_network(g, half)
        with_super_terminals(net, {x: 1 for x in X}, {y: 1 for y in Y})
        res = max_flow_min_cut(net)
        if res.value < half * res.scale:
            with pytest.raises(NotAMatchingError):
                extract_matching(net, res, X, Y)
            return
        m = extract_matching(net, res, X, Y)
        assert sorted(x for x, _ in m) == sorted(X)
        assert sorted(y for _, y in m) == sorted(Y)


class TestEmbedding:
    def test_single_edge(self):
        ok, wit = verify_embedding(Graph(2, [(0, 1)]), [(0, 1, 1)], 1)
        assert ok and wit.max_edge_load <= 1

    def test_bridge_overloaded(self):
        ok, wit = verify_embedding(dumbbell(3, 3), [(0, 5, 1), (1, 4, 1)], 1)
        assert not ok and wit.routed == 1

    def test_composition(self):
        assert composed_congestion([4, 4, 4]) == 12

    def test_vertex_version(self):
        ok, _ = verify_embedding(star(4), [(1, 2, 1), (3, 4, 1)], 2, vertex=True)
        assert ok
        ok, _ = verify_embedding(star(4), [(1, 2, 1), (3, 4, 1)], 1, vertex=True)
        assert not ok
