import itertools
import math
import warnings
from fractions import Fraction

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sparsecut.graph import Graph, boundary_size, set_vertex_sparsity
from sparsecut.oracle import (dumbbell, enumerate_cut_family, enumerate_sparse_family, incidence_graph,
                              path, planted_bisection, random_tree, star)
from sparsecut.params import ParamSet, PreconditionError
from sparsecut.sample_sets import (SampleSet, check_decomposition, edge_sample_set, steiner_decomposition,
                                   vertex_sample_set, vertex_sample_size, verify_sample_set,
                                   weighted_sample_set)

from conftest import to_networkx


def independent_decomposition_check(g, dec, measure=None):
    measure = measure or {v: 1 for v in range(g.n)}
    covered = sorted(v for b in dec.bags for v in b)
    assert covered == list(range(g.n))
    nxg = to_networkx(g)
    for i, (bag, part, extra) in enumerate(zip(dec.bags, dec.edge_parts, dec.attach)):
        weight = sum(measure.get(v, 0) for v in bag)
        assert weight <= 2 * dec.t
        if i > 0:
            assert weight >= dec.t
        span = set(bag) | ({extra} if extra is not None else set())
        sub = nx.Graph()
        sub.add_nodes_from(span)
        sub.add_edges_from(part)
        assert set(sub.nodes) == span
        assert nx.is_connected(sub)
        for u, w in part:
            assert nxg.has_edge(u, w)
    parts = [e for p in dec.edge_parts for e in p] + list(dec.leftover)
    assert len(parts) == len(set(parts)) == len({(u, v) for u, v, _ in g.edges()})


@st.composite
def connected_graphs(draw, max_n=64):
    n = draw(st.integers(1, max_n))
    seed = draw(st.integers(0, 10**6))
    rnd = np.random.default_rng(seed)
    edges = {(int(rnd.integers(0, v)), v) for v in range(1, n)}
    extra = draw(st.integers(0, 2 * n))
    for _ in range(extra):
        u, v = sorted(int(x) for x in rnd.integers(0, n, size=2))
        if u != v:
            edges.add((u, v))
    return Graph(n, sorted(edges))


class TestSteinerDecomposition:
    def test_path6_t2(self):
        g = path(6)
        dec = steiner_decomposition(g, 2)
        for i, b in enumerate(dec.bags):
            assert len(b) <= 4
            if i > 0:
                assert len(b) >= 2
        independent_decomposition_check(g, dec)

    def test_t_equals_n_single_bag(self):
        g = dumbbell(4, 4)
        dec = steiner_decomposition(g, g.n)
        assert dec.bags == (frozenset(range(g.n)),)

    def test_star_uses_attached_center(self):
        g = star(9)
        dec = steiner_decomposition(g, 3)
        assert len(dec.bags) >= 3
        assert all(len(b) <= 6 for b in dec.bags)
        assert any(extra == 0 for extra in dec.attach)
        independent_decomposition_check(g, dec)

    def test_rejects_disconnected(self):
        with pytest.raises(PreconditionError):
            steiner_decomposition(Graph(3, [(0, 1)]), 1)

    def test_rejects_heavy_vertex(self):
        with pytest.raises(PreconditionError):
            steiner_decomposition(path(3), 2, {0: 3})

    @settings(max_examples=200, deadline=None)
    @given(connected_graphs(), st.data())
    def test_invariants_random(self, g, data):
        t = data.draw(st.integers(1, g.n))
        dec = steiner_decomposition(g, t)
        check_decomposition(g, dec)
        independent_decomposition_check(g, dec)

    @settings(max_examples=60, deadline=None)
    @given(connected_graphs(40), st.data())
    def test_weighted_invariants_random(self, g, data):
        t = data.draw(st.integers(1, 6))
        mu = {v: data.draw(st.integers(0, t)) for v in range(g.n)}
        dec = steiner_decomposition(g, t, mu)
        check_decomposition(g, dec, mu)
        independent_decomposition_check(g, dec, mu)


class TestEdgeSampleSet:
    def test_fallback_above_threshold(self):
        g = dumbbell(5, 5)
        eps = Fraction(1, 100)
        ss = edge_sample_set(g, eps, eps * eps / 200)
        assert ss.kind == "fallback" and ss.terminals == frozenset(range(10))

    def test_long_path_parameters_hit_fallback(self):
        # eps = 1/128, phi = 1/51200 gives t = 4 but phi >= eps^2/200, so the whole set is returned
        g = path(2000)
        ss = edge_sample_set(g, Fraction(1, 128), Fraction(1, 51200))
        assert ss.kind == "fallback"

    def test_dumbbell_k50_fallback_and_zero_violations(self):
        g = dumbbell(50, 50)
        eps = Fraction(1, 128)
        phi = eps / (100 * 5)
        ss = edge_sample_set(g, eps, phi)
        assert ss.kind == "fallback"
        fam = enumerate_cut_family(g, 1)
        assert verify_sample_set(g, ss, fam) == []

    def test_sampling_branch_on_long_path(self):
        # t = 20, t*eps = 5/2: roughly two fifths of every bag is kept
        n = 40000
        g = path(n)
        eps = Fraction(1, 8)
        phi = Fraction(1, 16000)
        with pytest.warns(UserWarning):
            ss = edge_sample_set(g, eps, phi)
        assert ss.kind == "edge" and ss.threshold == 20
        upper = Fraction(n) / (ss.threshold * eps)
        assert (1 - 2 * eps) * upper <= len(ss.terminals) <= upper
        prefixes = [frozenset(range(k)) for k in range(16000, 24001, 250)]
        fam = prefixes + [frozenset(range(n)) - p for p in prefixes]
        assert all(boundary_size(g, w) * 16000 <= min(len(w), n - len(w)) for w in fam)
        assert verify_sample_set(g, ss, fam) == []
        assert verify_sample_set(g, ss, fam, tolerance=eps / 4) == []

    def test_deterministic(self):
        g = planted_bisection(30, 0.5, 0.05, 1)
        a = edge_sample_set(g, Fraction(1, 100), Fraction(1, 10**7))
        b = edge_sample_set(g, Fraction(1, 100), Fraction(1, 10**7))
        assert a == b

    def test_parameter_errors(self):
        g = path(4)
        with pytest.raises(PreconditionError):
            edge_sample_set(g, 0, Fraction(1, 2))
        with pytest.raises(PreconditionError):
            edge_sample_set(g, Fraction(1, 100), 0)
        with pytest.warns(UserWarning):
            edge_sample_set(g, Fraction(1, 2), Fraction(1, 2))

    def test_fallback_kind_iff_whole_unit_set(self):
        for g in (path(12), dumbbell(6, 6), random_tree(20, 3)):
            for phi in (Fraction(1, 10), Fraction(1, 10**6), Fraction(1, 10**9)):
                ss = edge_sample_set(g, Fraction(1, 100), phi)
                whole = ss.terminals == frozenset(range(g.n)) and set(ss.weights.values()) == {1}
                assert (ss.kind == "fallback") == whole


class TestWeightedSampleSet:
    def test_high_vertex_rule(self):
        g = path(5)
        eps = Fraction(1, 100)
        phi = Fraction(1, 10**7)
        ss = weighted_sample_set(g, {2: 5000}, eps, phi)
        assert ss.threshold == 1000
        assert ss.terminals == {2} and ss.weights[2] == 5000 // 10

    def test_concentrated_measure_on_dumbbell(self):
        g = dumbbell(5, 5)
        mu = {v: 3 for v in range(5)}
        for phi in (Fraction(1, 5), Fraction(1, 100), Fraction(1, 10**7)):
            ss = weighted_sample_set(g, mu, Fraction(1, 100), phi)
            fam = enumerate_cut_family(g, 3)
            assert verify_sample_set(g, ss, fam) == []

    def test_unit_measure_passes_weighted_check(self):
        for g in (dumbbell(6, 6), planted_bisection(24, 0.6, 0.05, 2)):
            mu = {v: 1 for v in range(g.n)}
            fam = enumerate_cut_family(g, 3)
            for phi in (Fraction(1, 4), Fraction(1, 10**6)):
                ss = weighted_sample_set(g, mu, Fraction(1, 100), phi)
                assert verify_sample_set(g, ss, fam) == []

    def test_needs_positive_measure(self):
        with pytest.raises(PreconditionError):
            weighted_sample_set(path(3), {}, Fraction(1, 100), Fraction(1, 2))


class TestVertexSampleSet:
    def test_full_when_size_reaches_n(self):
        g = path(10)
        ss = vertex_sample_set(g, Fraction(1, 100), Fraction(1, 4), rng=np.random.default_rng(0))
        assert ss.kind == "fallback" and len(ss.terminals) == 10

    def test_size_formula(self):
        n, eps, phi = 10**6, Fraction(1, 10), Fraction(1, 10**6)
        base = n * phi / eps**2
        expected = math.ceil(float(base) * max(math.log(float(n * phi / eps**3)), 1.0))
        assert vertex_sample_size(n, eps, phi, 1) == expected == 691

    def test_seed_reproducible(self):
        g = Graph(2000, [(i, i + 1) for i in range(1999)])
        eps, phi = Fraction(1, 2), Fraction(1, 1000)
        a = vertex_sample_set(g, eps, phi, rng=np.random.default_rng(7))
        b = vertex_sample_set(g, eps, phi, rng=np.random.default_rng(7))
        assert a.kind == "vertex" and a.terminals == b.terminals
        assert len(a.terminals) == vertex_sample_size(2000, eps, phi, 1)

    def test_rejects_large_phi(self):
        with pytest.raises(PreconditionError):
            vertex_sample_set(path(4), Fraction(1, 2), Fraction(1, 2))

    def test_incidence_graph_shape(self):
        g = incidence_graph(4)
        assert g.n == 10
        assert all(g.degree(v) == 2 for v in range(6))

    @settings(max_examples=40, deadline=None)
    @given(st.data())
    def test_incidence_lower_bound_mechanics(self, data):
        # n = 6 vertex nodes and k = 3: every colouring of K_6 has a monochromatic triangle Y,
        # and the three edge nodes U inside Y break the sample condition for any small T
        n, k = 6, 3
        g = incidence_graph(n)
        pairs = list(itertools.combinations(range(n), 2))
        m = len(pairs)
        edge_nodes = data.draw(st.sets(st.integers(0, m - 1), max_size=m // 2))
        vertex_nodes = data.draw(st.sets(st.integers(m, g.n - 1)))
        T = frozenset(edge_nodes) | frozenset(vertex_nodes)
        if not T:
            return
        phi = Fraction(2, k + 1)
        ss = SampleSet(T, {v: 1 for v in T}, Fraction(1, 2), phi, "vertex", Fraction(1, 2))
        fam = []
        for Y in itertools.combinations(range(n), k):
            U = frozenset(i for i, (a, b) in enumerate(pairs) if a in Y and b in Y)
            assert set_vertex_sparsity(g, U) == phi
            fam.append(U)
        assert verify_sample_set(g, ss, fam)

class TestVerify:
    def test_whole_set_never_violates(self):
        g = dumbbell(6, 6)
        ss = edge_sample_set(g, Fraction(1, 100), Fraction(1, 2))
        assert verify_sample_set(g, ss, enumerate_cut_family(g, 3)) == []

    def test_non_sparse_family_is_vacuous(self):
        g = dumbbell(5, 5)
        T = frozenset({0})
        ss = SampleSet(T, {0: 1}, Fraction(1, 100), Fraction(1, 100), "edge", Fraction(0))
        assert verify_sample_set(g, ss, [frozenset(range(5))]) == []

    def test_detects_bad_sample(self):
        g = dumbbell(5, 5)
        T = frozenset({0, 1, 2, 3, 4})
        ss = SampleSet(T, {v: 1 for v in T}, Fraction(1, 100), Fraction(1, 2), "edge", Fraction(1, 25))
        bad = verify_sample_set(g, ss, [frozenset(range(5))])
        assert bad and bad[0][1] == 1

    def test_family_agrees_with_sparse_filter(self):
        g = dumbbell(4, 4)
        fam = enumerate_sparse_family(g, Fraction(1, 4), 1)
        assert fam == [frozenset(range(4)), frozenset(range(4, 8))]
