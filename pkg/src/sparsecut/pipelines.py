"""End-to-end approximation algorithms built from sample sets, the cut-matching
game and LP rounding, plus scikit-learn style estimator wrappers.

Every pipeline returns an :class:`ApproxResult` whose claims are recomputed from
the returned cut before it leaves the function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

import numpy as np
from sklearn.base import BaseEstimator

from .cut_matching import Certificate, SparseCut, run_game
from .graph import (EdgeCut, Graph, VertexCut, boundary_size, components, is_connected, neighbors,
                    sparsity)
from .lp_rounding import build_sse_lp, build_vertex_lp, round_sse, round_vertex, solve_lp
from .params import (NoSuchSet, ParamSet, PreconditionError, RandomizedFailure, as_fraction,
                     clamped_log)
from .sample_sets import edge_sample_set, vertex_sample_set, weighted_sample_set
from ._serialize import encode

# from this many vertices on, triangle rows are separated lazily (faster, same optimum)
LAZY_METRIC_FROM = 16


@dataclass
class ApproxResult:
    problem: str
    cut: object
    claims: dict
    ratio_bound: object
    constants: dict
    transcript: list = field(default_factory=list)
    lower_bound: object = None
    seed: int = 0

    def verify(self, g: Graph) -> None:
        """Recompute every claim from the cut itself; raises ``AssertionError`` on mismatch."""
        cut = self.cut
        if isinstance(cut, EdgeCut):
            fresh = EdgeCut.from_side(g, cut.side)
            assert fresh.boundary_size == cut.boundary_size and fresh.sparsity == cut.sparsity
            values = {"size": len(cut.side), "boundary": cut.boundary_size, "sparsity": cut.sparsity}
        else:
            fresh = VertexCut.from_parts(g, cut.left, cut.separator, cut.right)
            assert fresh.sparsity == cut.sparsity
            values = {"separator": len(cut.separator), "sparsity": cut.sparsity}
        for name, bound in self.claims.items():
            key, _, _ = name.partition("_")
            if name == "weight_min":
                assert self.constants["weight_of_side"] >= bound, f"claim {name} fails"
                continue
            actual = values[key]
            assert actual <= bound, f"claim {name}: {actual} > {bound}"
        if self.lower_bound is not None:
            assert self.lower_bound <= values["sparsity"], "lower bound above the found cut"

    def to_dict(self) -> dict:
        return {"problem": self.problem, "cut": self.cut.to_dict(),
                "claims": {k: encode(v) for k, v in sorted(self.claims.items())},
                "ratio_bound": encode(self.ratio_bound), "constants": encode(self.constants),
                "lower_bound": encode(self.lower_bound), "seed": self.seed,
                "transcript": encode(self.transcript)}


def _powers_of_two(upper) -> list[int]:
    out, k = [], 1
    while k <= max(upper, 1):
        out.append(k)
        k *= 2
    return out


def _ell_grid(lo: int, hi: int) -> list[int]:
    """All values at desk scale; a doubling grid beyond 64 values."""
    if hi < lo:
        return []
    if hi - lo <= 64:
        return list(range(lo, hi + 1))
    vals = set()
    k = lo
    while k <= hi:
        vals.add(k)
        k *= 2
    vals.add(hi)
    return sorted(vals)


def _with_retries(fn, params: ParamSet, seed_offset: int):
    last = None
    for attempt in range(params.retries):
        rng = np.random.default_rng([params.seed, seed_offset, attempt])
        try:
            return fn(rng), attempt
        except RandomizedFailure as exc:
            last = exc
    raise last


def _frac(x: float) -> Fraction:
    return Fraction(x)


# ---------------------------------------------------------------------------
# small set expansion


def sse_log_k(g: Graph, phi, s: int, params: ParamSet | None = None) -> ApproxResult:
    """Small set expansion through sample sets and the terminal LP rounding."""
    params = params or ParamSet()
    phi = as_fraction(phi)
    n = g.n
    if phi <= 0:
        raise PreconditionError("phi must be positive")
    if not 1 <= s or 2 * s > n:
        raise PreconditionError("need 1 <= s <= n/2")
    transcript = []
    candidates = []
    seen_terminals = set()
    any_feasible = False
    for k in _powers_of_two(phi * s):
        phi_s = params.c * phi * _frac(clamped_log(k))
        ss = edge_sample_set(g, params.eps, phi_s, params)
        key = tuple(sorted(ss.terminals))
        if key in seen_terminals:
            transcript.append({"k": k, "phi_sample": phi_s, "sample": ss.kind, "reused": True})
            continue
        seen_terminals.add(key)
        T = sorted(ss.terminals)
        x = {v: 1 for v in T}
        for ell in _ell_grid(1, min(len(T), s)):
            entry = {"k": k, "phi_sample": phi_s, "sample": ss.kind, "s": s, "ell": ell}
            try:
                sol = solve_lp(build_sse_lp(g, T, x, s, ell, lazy=n >= LAZY_METRIC_FROM), params.lp_tol)
            except NoSuchSet:
                entry["status"] = "infeasible"
                transcript.append(entry)
                continue
            any_feasible = True
            entry["lp"] = sol.objective
            try:
                res, attempt = _with_retries(
                    lambda rng: round_sse(g, T, x, s, ell, sol, rng, _reps(n, params)), params, ell)
            except RandomizedFailure:
                entry["status"] = "rounding_failed"
                transcript.append(entry)
                continue
            Y = res.chosen
            entry.update(status="ok", size=len(Y), retries=attempt)
            transcript.append(entry)
            if 0 < len(Y) < n:
                bound = 200 * _frac(clamped_log(ell)) * _frac(max(sol.objective, 0.0)) * len(Y & set(T)) / ell
                candidates.append((sparsity(g, Y), len(Y), tuple(sorted(Y)), bound))
    if not candidates:
        if not any_feasible:
            raise NoSuchSet("every LP relaxation is infeasible")
        raise RandomizedFailure("rounding failed at every grid point")
    sp, _, side, bound = min(candidates)
    cut = EdgeCut.from_side(g, side)
    L = clamped_log(s)
    result = ApproxResult(
        "sse", cut,
        claims={"size_max": 10 * s, "boundary_lp": bound},
        ratio_bound=200 * _frac(L),
        constants={"size_factor": 10, "boundary_factor": 200, "log_s": _frac(L)},
        transcript=transcript, seed=params.seed)
    result.verify(g)
    return result


def _reps(n: int, params: ParamSet) -> int:
    return math.ceil(params.c_rep * n * math.log(n + 1))


# ---------------------------------------------------------------------------
# sparsest cut via the game


def _phi_grid_desc(top: int, floor: Fraction):
    """Powers of two from ``top`` down, then reciprocals of powers of two down to ``floor``."""
    k = 1
    while k < top:
        k *= 2
    val = Fraction(k)
    while val >= floor:
        yield val
        val /= 2


def sparsest_cut_cut_matching(g: Graph, params: ParamSet | None = None) -> ApproxResult:
    """Bracket the sparsest cut: cuts from the matching player above, a certificate below."""
    params = params or ParamSet()
    n = g.n
    if n < 2 or not is_connected(g):
        raise PreconditionError("graph must be connected with at least two vertices")
    transcript = []
    best = None  # (sparsity, side, phi)
    cert_info = None
    floor = Fraction(1, 4 * n * n * max(g.m, 1))
    for phi in _phi_grid_desc(g.m + 1, floor):
        k_guess = max(1, int(phi * n))
        ss = edge_sample_set(g, params.eps, params.improve_depth * phi * _frac(clamped_log(k_guess) ** 2), params)
        T = sorted(ss.terminals)
        s = max(1, len(T) // 2)
        out = run_game(g, T, phi, s, params)
        entry = {"phi": phi, "sample": ss.kind, "terminals": len(T), "rounds": out.rounds}
        if isinstance(out.result, SparseCut):
            cut = out.result.cut
            entry["cut_sparsity"] = cut.sparsity
            if best is None or (cut.sparsity, sorted(cut.side)) < (best[0], sorted(best[1])):
                best = (cut.sparsity, cut.side, phi)
            transcript.append(entry)
            continue
        cert: Certificate = out.result
        entry.update(certified=cert.certified, h=cert.expansion, matchings=cert.matchings)
        transcript.append(entry)
        if len(T) == n:
            cert_info = (phi, cert)
            break
    if best is None:
        raise RuntimeError("matching player produced no cut above the certificate")
    cut = EdgeCut.from_side(g, best[1])
    claims = {"sparsity_phi": best[2]}
    lower = None
    ratio = None
    constants = {"c": params.c}
    if cert_info is not None:
        phi_c, cert = cert_info
        lower = cert.lower_bound
        h_used = cert.target if cert.certified else cert.expansion
        ratio = best[2] / cert.lower_bound_at(h_used) if h_used else math.inf
        constants.update(matchings=cert.matchings, certificate_phi=phi_c, h=cert.expansion,
                         target=cert.target, exhaustive=cert.exhaustive)
    result = ApproxResult("sparsest_cut", cut, claims, ratio, constants, transcript, lower, params.seed)
    result.verify(g)
    return result


# ---------------------------------------------------------------------------
# vertex sparsest cut


def _rebalance(g: Graph, cut: VertexCut) -> VertexCut:
    """Redistribute the components left after removing the separator so both sides are large."""
    comps = components(g, cut.separator)
    comps = sorted(comps, key=lambda c: (-len(c), min(c)))
    A, B = set(), set()
    for c in comps:
        (A if len(A) <= len(B) else B).update(c)
    if not A or not B:
        return cut
    if min(A | B) in B:
        A, B = B, A
    return VertexCut.from_parts(g, A, cut.separator, B)


def _postprocess(g: Graph, cut: VertexCut, terminals, alpha: int) -> VertexCut:
    T = frozenset(terminals)
    s1 = len(cut.left & T)
    s2 = Fraction(g.n, len(T)) * s1
    biggest = max(len(c) for c in components(g, cut.separator))
    assert biggest <= g.n - s2 / alpha, "a component swallows almost everything"
    other = _rebalance(g, cut)
    return min((cut, other), key=lambda c: (c.sparsity, sorted(c.separator), sorted(c.left)))


def _fallback_neighbourhood_cut(g: Graph) -> VertexCut | None:
    best = None
    for v in range(g.n):
        nb = neighbors(g, {v})
        rest = frozenset(range(g.n)) - nb - {v}
        if rest:
            c = VertexCut.from_parts(g, {v}, nb, rest)
            if best is None or (c.sparsity, v) < (best.sparsity, min(best.left)):
                best = c
    return best


def _vertex_terminals(g: Graph, phi_v, params: ParamSet, seed: int):
    if phi_v >= Fraction(1, 2):
        return list(range(g.n)), "fallback"
    ss = vertex_sample_set(g, params.eps, phi_v, rng=np.random.default_rng([params.seed, seed]), params=params)
    return sorted(ss.terminals), ss.kind


def vertex_sparsest_cut_lp(g: Graph, params: ParamSet | None = None) -> ApproxResult:
    """Vertex sparsest cut from the separator LP and its rounding, with component post-processing."""
    params = params or ParamSet()
    n = g.n
    if n < 3 or not is_connected(g):
        raise PreconditionError("graph must be connected with at least three vertices")
    if all(g.degree(v) == n - 1 for v in range(n)) and g.m == n * (n - 1) // 2:
        raise NoSuchSet("complete graphs have no vertex cut")
    transcript = []
    candidates = []
    seen = set()
    for k in _powers_of_two(n):
        phi_guess = Fraction(k, n)
        loglog = _frac(clamped_log(clamped_log(n * phi_guess)))
        phi_v = params.lam * phi_guess * (_frac(clamped_log(k)) + loglog)
        T, kind = _vertex_terminals(g, phi_v, params, k)
        if tuple(T) in seen:
            continue
        seen.add(tuple(T))
        for s in range(1, len(T) // 2 + 1):
            entry = {"k": k, "phi_sample": phi_v, "sample": kind, "s": s}
            try:
                sol = solve_lp(build_vertex_lp(g, T, s, lazy=n >= LAZY_METRIC_FROM), params.lp_tol)
            except NoSuchSet:
                entry["status"] = "infeasible"
                transcript.append(entry)
                continue
            entry["lp"] = sol.objective
            try:
                (cut, rr), attempt = _with_retries(
                    lambda rng: round_vertex(g, T, s, sol, rng, _reps(n, params)), params, 1000 + s)
            except RandomizedFailure:
                entry["status"] = "rounding_failed"
                transcript.append(entry)
                continue
            final = _postprocess(g, cut, T, params.alpha)
            entry.update(status="ok", separator=len(final.separator), retries=attempt)
            transcript.append(entry)
            candidates.append(final)
    fallback = False
    if not candidates:
        fb = _fallback_neighbourhood_cut(g)
        if fb is None:
            raise NoSuchSet("graph has no vertex cut")
        candidates.append(fb)
        fallback = True
    best = min(candidates, key=lambda c: (c.sparsity, sorted(c.separator), sorted(c.left)))
    L = clamped_log(Fraction(n, 2))
    result = ApproxResult("vertex_sparsest_lp", best, {"sparsity_max": best.sparsity},
                          max(8000 * _frac(L), Fraction(2)),
                          {"rounding_factor": 2000, "alpha": params.alpha, "log_s": _frac(L),
                           "fallback": fallback},
                          transcript, None, params.seed)
    result.verify(g)
    return result


def vertex_sparsest_cut_cut_matching(g: Graph, params: ParamSet | None = None) -> ApproxResult:
    """Vertex sparsest cut from the vertex-capacitated game, bracketed by its certificate."""
    params = params or ParamSet()
    n = g.n
    if n < 3 or not is_connected(g):
        raise PreconditionError("graph must be connected with at least three vertices")
    if g.m == n * (n - 1) // 2 and all(g.degree(v) == n - 1 for v in range(n)):
        raise NoSuchSet("complete graphs have no vertex cut")
    transcript = []
    best = None
    cert_info = None
    floor = Fraction(1, 4 * n * n)
    phi = Fraction(1)
    while phi >= floor:
        T, kind = _vertex_terminals(g, phi, params, int(1 / phi))
        s = len(T)
        out = run_game(g, T, phi, s, params, vertex=True)
        entry = {"phi": phi, "sample": kind, "terminals": len(T), "rounds": out.rounds}
        if isinstance(out.result, SparseCut):
            cut = _postprocess(g, out.result.cut, T, params.alpha)
            entry["cut_sparsity"] = cut.sparsity
            transcript.append(entry)
            if best is None or (cut.sparsity, sorted(cut.separator)) < (best[0].sparsity, sorted(best[0].separator)):
                best = (cut, phi)
            phi /= 2
            continue
        cert = out.result
        entry.update(certified=cert.certified, h=cert.expansion, matchings=cert.matchings)
        transcript.append(entry)
        if len(T) == n:
            cert_info = (phi, cert)
            break
        phi /= 2
    fallback = False
    if best is None:
        fb = _fallback_neighbourhood_cut(g)
        if fb is None:
            raise NoSuchSet("graph has no vertex cut")
        best = (fb, Fraction(1))
        fallback = True
    cut, phi_cut = best
    lower = None
    ratio = None
    constants = {"c": params.c, "alpha": params.alpha, "fallback": fallback}
    if cert_info is not None:
        phi_c, cert = cert_info
        lower = cert.lower_bound
        h_used = cert.target if cert.certified else cert.expansion
        upper = cut.sparsity if fallback else phi_cut
        ratio = upper / cert.lower_bound_at(h_used) if h_used else math.inf
        constants.update(matchings=cert.matchings, certificate_phi=phi_c, h=cert.expansion,
                         target=cert.target)
    result = ApproxResult("vertex_sparsest_game", cut, {"sparsity_max": cut.sparsity}, ratio,
                          constants, transcript, lower, params.seed)
    result.verify(g)
    return result


# ---------------------------------------------------------------------------
# weighted unbalanced cut


def _integer_weights(y: Mapping[int, object]) -> dict:
    fr = {int(v): as_fraction(w) for v, w in y.items()}
    if any(w < 0 for w in fr.values()):
        raise PreconditionError("weights must be nonnegative")
    den = math.lcm(*(w.denominator for w in fr.values())) if fr else 1
    return {v: int(w * den) for v, w in fr.items() if w > 0}


def weighted_unbalanced_cut(g: Graph, y: Mapping[int, object], tau, rho_frac,
                            params: ParamSet | None = None) -> ApproxResult:
    """Small set (at most ``rho_frac * n`` vertices) carrying a ``tau`` share of the weight, few boundary edges."""
    params = params or ParamSet()
    tau, rho_frac = as_fraction(tau), as_fraction(rho_frac)
    if not (0 <= tau < 1) or not (0 < rho_frac < 1):
        raise PreconditionError("need tau in [0,1) and rho in (0,1)")
    n = g.n
    w = _integer_weights(y)
    if not w:
        raise PreconditionError("weights must have positive total")
    total = sum(w.values())
    size_cap = math.floor(rho_frac * n)
    if size_cap < 1:
        raise NoSuchSet("rho * n < 1 admits no nonempty set")
    lo = max(1, math.ceil(tau * total))
    transcript = []
    candidates = []
    any_feasible = False
    for opt_guess in _powers_of_two(g.m):
        phi_s = params.C * Fraction(opt_guess, max(size_cap, 1)) * _frac(clamped_log(opt_guess))
        ss = weighted_sample_set(g, w, params.eps, phi_s, params)
        T = sorted(ss.terminals)
        x = {v: ss.weights[v] for v in T}
        K = sum(x.values())
        scale = Fraction(K, total)
        for s in sorted(set(_powers_of_two(size_cap)) | {size_cap}):
            for ell in _ell_grid(max(1, math.ceil(lo * scale)), K):
                entry = {"opt_guess": opt_guess, "s": s, "ell": ell, "sample": ss.kind}
                try:
                    sol = solve_lp(build_sse_lp(g, T, x, s, ell, lazy=n >= LAZY_METRIC_FROM), params.lp_tol)
                except NoSuchSet:
                    entry["status"] = "infeasible"
                    transcript.append(entry)
                    continue
                any_feasible = True
                entry["lp"] = sol.objective
                try:
                    res, attempt = _with_retries(
                        lambda rng: round_sse(g, T, x, s, ell, sol, rng, _reps(n, params)),
                        params, 7919 * s + ell)
                except RandomizedFailure:
                    entry["status"] = "rounding_failed"
                    transcript.append(entry)
                    continue
                Y = res.chosen
                entry.update(status="ok", size=len(Y))
                transcript.append(entry)
                if 0 < len(Y) < n:
                    wY = sum(w.get(v, 0) for v in Y)
                    bound = 600 * _frac(clamped_log(ell)) * _frac(max(sol.objective, 0.0))
                    candidates.append((boundary_size(g, Y), len(Y), tuple(sorted(Y)), wY, bound))
        if ss.kind in ("fallback", "weighted") and ss.guarantee == 0:
            break  # the sample set is the measure itself; further guesses repeat the same LPs
    if not candidates:
        if not any_feasible:
            raise NoSuchSet("no set of the requested size carries enough weight")
        raise RandomizedFailure("rounding failed at every grid point")
    beta, gamma = 10, 10
    ok = [c for c in candidates if c[1] <= beta * size_cap and gamma * c[3] >= tau * total]
    pool = ok or candidates
    d, size, side, wY, bound = min(pool)
    cut = EdgeCut.from_side(g, side)
    L = clamped_log(total)
    result = ApproxResult(
        "weighted_unbalanced", cut,
        claims={"size_max": beta * size_cap, "boundary_lp": bound, "weight_min": tau * total / gamma},
        ratio_bound=600 * _frac(L),
        constants={"alpha": 600 * _frac(L), "beta": beta, "gamma": gamma, "weight_of_side": wY,
                   "total_weight": total},
        transcript=transcript, seed=params.seed)
    result.verify(g)
    return result


# ---------------------------------------------------------------------------
# estimators


class _CutEstimator(BaseEstimator):
    def _params(self) -> ParamSet:
        base = self.params if self.params is not None else ParamSet()
        return base.with_overrides(seed=self.seed, mode=self.mode)

    def _store(self, result: ApproxResult):
        self.result_ = result
        self.cut_ = result.cut
        return self


class SmallSetExpansion(_CutEstimator):
    def __init__(self, phi=Fraction(1, 4), s=1, seed=0, mode="exact", params=None):
        self.phi = phi
        self.s = s
        self.seed = seed
        self.mode = mode
        self.params = params

    def fit(self, graph: Graph, y=None):
        return self._store(sse_log_k(graph, self.phi, self.s, self._params()))


class SparsestCut(_CutEstimator):
    def __init__(self, seed=0, mode="exact", params=None):
        self.seed = seed
        self.mode = mode
        self.params = params

    def fit(self, graph: Graph, y=None):
        return self._store(sparsest_cut_cut_matching(graph, self._params()))


class VertexSparsestCut(_CutEstimator):
    def __init__(self, engine="lp", seed=0, mode="exact", params=None):
        self.engine = engine
        self.seed = seed
        self.mode = mode
        self.params = params

    def fit(self, graph: Graph, y=None):
        if self.engine == "lp":
            res = vertex_sparsest_cut_lp(graph, self._params())
        elif self.engine == "game":
            res = vertex_sparsest_cut_cut_matching(graph, self._params())
        else:
            raise PreconditionError(f"unknown engine {self.engine!r}")
        return self._store(res)


class WeightedUnbalancedCut(_CutEstimator):
    def __init__(self, tau=Fraction(1, 4), rho=Fraction(1, 2), seed=0, mode="exact", params=None):
        self.tau = tau
        self.rho = rho
        self.seed = seed
        self.mode = mode
        self.params = params

    def fit(self, graph: Graph, y=None):
        weights = y if y is not None else {v: 1 for v in range(graph.n)}
        return self._store(weighted_unbalanced_cut(graph, weights, self.tau, self.rho, self._params()))
