from fractions import Fraction

import pytest
from sklearn.base import clone

from sparsecut.graph import EdgeCut, Graph, VertexCut, boundary_size, sparsity
from sparsecut.oracle import (cliques_sharing_vertex, complete, cycle, dumbbell, exact_sparsest_cut,
                              exact_sse, exact_vertex_sparsest, path, planted_bisection)
from sparsecut.params import NoSuchSet, ParamSet, PreconditionError
from sparsecut.pipelines import (SmallSetExpansion, SparsestCut, VertexSparsestCut, WeightedUnbalancedCut,
                                 sparsest_cut_cut_matching, sse_log_k, vertex_sparsest_cut_cut_matching,
                                 vertex_sparsest_cut_lp, weighted_unbalanced_cut)


class TestSmallSetExpansion:
    def test_dumbbell_finds_a_clique(self):
        g = dumbbell(5, 5)
        res = sse_log_k(g, Fraction(1, 4), 5)
        assert res.cut.side in (frozenset(range(5)), frozenset(range(5, 10)))
        assert res.cut.boundary_size == 1
        res.verify(g)
        assert len(res.cut.side) <= res.claims["size_max"]

    def test_complete_graph_small_budget(self):
        g = complete(8)
        res = sse_log_k(g, 1, 2)
        assert 1 <= len(res.cut.side) <= 20
        assert res.cut.sparsity == exact_sse(g, len(res.cut.side)).value

    def test_rejects_large_s(self):
        with pytest.raises(PreconditionError):
            sse_log_k(complete(8), 1, 5)
        with pytest.raises(PreconditionError):
            sse_log_k(complete(8), 0, 2)

    def test_claims_hold_on_planted(self):
        g = planted_bisection(12, 0.8, 0.05, 4)
        res = sse_log_k(g, Fraction(1, 2), 6)
        res.verify(g)
        opt = exact_sse(g, 6).value
        assert res.cut.sparsity >= opt


class TestSparsestCut:
    def test_dumbbell_bridge(self):
        g = dumbbell(5, 5)
        res = sparsest_cut_cut_matching(g)
        assert res.cut.sparsity == Fraction(1, 5) == exact_sparsest_cut(g).value
        assert res.lower_bound is None or res.lower_bound <= Fraction(1, 5)

    def test_complete_graph_within_bound(self):
        g = complete(16)
        res = sparsest_cut_cut_matching(g)
        opt = exact_sparsest_cut(g).value
        assert opt == 8
        assert res.cut.sparsity <= res.ratio_bound * opt
        res.verify(g)

    def test_cycle_ratio(self):
        g = cycle(12)
        res = sparsest_cut_cut_matching(g)
        opt = exact_sparsest_cut(g).value
        assert opt <= res.cut.sparsity <= res.ratio_bound * opt

    def test_disconnected_rejected(self):
        with pytest.raises(PreconditionError):
            sparsest_cut_cut_matching(Graph(4, [(0, 1), (2, 3)]))


class TestVertexSparsest:
    @pytest.mark.parametrize("solver", [vertex_sparsest_cut_lp, vertex_sparsest_cut_cut_matching])
    def test_cliques_sharing_a_vertex(self, solver):
        g = cliques_sharing_vertex(5, 5, 5)
        res = solver(g)
        assert res.cut.separator == frozenset({0})
        assert res.cut.sparsity == exact_vertex_sparsest(g).value == Fraction(1, 5)

    @pytest.mark.parametrize("solver", [vertex_sparsest_cut_lp, vertex_sparsest_cut_cut_matching])
    def test_path_separator_valid(self, solver):
        g = path(9)
        res = solver(g)
        cut = res.cut
        VertexCut.from_parts(g, cut.left, cut.separator, cut.right)
        opt = exact_vertex_sparsest(g).value
        assert opt == Fraction(1, 5)
        assert opt <= cut.sparsity <= res.ratio_bound * opt

    @pytest.mark.parametrize("solver", [vertex_sparsest_cut_lp, vertex_sparsest_cut_cut_matching])
    def test_complete_graph_has_none(self, solver):
        with pytest.raises(NoSuchSet):
            solver(complete(6))


class TestWeightedUnbalanced:
    def test_weight_on_one_clique(self):
        g = dumbbell(5, 5)
        res = weighted_unbalanced_cut(g, {v: 1 for v in range(5)}, Fraction(1, 4), Fraction(1, 2))
        assert res.cut.side == frozenset(range(5))
        assert res.cut.boundary_size == 1
        assert res.constants["weight_of_side"] >= res.claims["weight_min"]

    def test_zero_tau_accepts_any_weight(self):
        g = dumbbell(5, 5)
        res = weighted_unbalanced_cut(g, {v: 1 for v in range(10)}, 0, Fraction(1, 2))
        assert res.claims["weight_min"] == 0
        assert boundary_size(g, res.cut.side) == 1

    @pytest.mark.parametrize("tau, rho", [(1, Fraction(1, 2)), (Fraction(1, 4), 0), (Fraction(1, 4), 1)])
    def test_parameter_ranges(self, tau, rho):
        with pytest.raises(PreconditionError):
            weighted_unbalanced_cut(dumbbell(3, 3), {0: 1}, tau, rho)

    def test_rho_too_small(self):
        with pytest.raises(NoSuchSet):
            weighted_unbalanced_cut(dumbbell(3, 3), {0: 1}, Fraction(1, 4), Fraction(1, 10))


class TestEstimators:
    def test_params_round_trip_and_clone(self):
        est = SmallSetExpansion(phi=Fraction(1, 3), s=4, seed=7)
        params = est.get_params()
        assert params["phi"] == Fraction(1, 3) and params["s"] == 4 and params["seed"] == 7
        copy = clone(est)
        assert copy.get_params() == params and not hasattr(copy, "cut_")
        est.set_params(s=5)
        assert est.s == 5

    def test_fit_sets_learned_attributes(self):
        g = dumbbell(5, 5)
        est = SparsestCut().fit(g)
        assert isinstance(est.cut_, EdgeCut)
        assert est.result_.cut is est.cut_
        assert est.cut_.sparsity == Fraction(1, 5)

    def test_vertex_engines(self):
        g = cliques_sharing_vertex(4, 4)
        opt = exact_vertex_sparsest(g).value
        assert VertexSparsestCut(engine="lp").fit(g).cut_.separator == frozenset({0})
        est = VertexSparsestCut(engine="game").fit(g)
        assert isinstance(est.cut_, VertexCut)
        assert opt <= est.cut_.sparsity <= est.result_.ratio_bound * opt
        with pytest.raises(PreconditionError):
            VertexSparsestCut(engine="nope").fit(g)

    def test_weighted_uses_y(self):
        g = dumbbell(5, 5)
        est = WeightedUnbalancedCut(tau=Fraction(1, 4), rho=Fraction(1, 2)).fit(g, {v: 1 for v in range(5, 10)})
        assert est.cut_.side == frozenset(range(5, 10))

    def test_params_override_passes_through(self):
        est = SparsestCut(seed=3, params=ParamSet(rounds_d=6))
        assert est._params().rounds_d == 6 and est._params().seed == 3

    def test_same_seed_same_answer(self):
        g = planted_bisection(14, 0.7, 0.1, 5)
        a = SmallSetExpansion(phi=Fraction(1, 2), s=7, seed=2).fit(g).result_.to_dict()
        b = SmallSetExpansion(phi=Fraction(1, 2), s=7, seed=2).fit(g).result_.to_dict()
        assert a == b
