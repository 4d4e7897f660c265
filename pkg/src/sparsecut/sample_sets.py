"""Steiner decompositions and terminal sample sets for sparse cuts.

A sample set is a terminal subset (optionally weighted) whose share of every
sparse set ``W`` matches ``W``'s share of the whole graph up to a factor
``1 +- eps``.  Three constructions live here: a deterministic one for edge cuts
built on a Steiner decomposition, its measure-weighted variant, and a seeded
random one for vertex cuts.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from .graph import (Graph, boundary_size, components, is_connected, neighbors,
                    set_vertex_sparsity)
from .params import ParamSet, PreconditionError, RandomizedFailure, as_fraction


@dataclass(frozen=True)
class SteinerDecomposition:
    """Vertex bags, the edge part of each bag, and the leftover edges.

    ``attach[i]`` is the extra vertex outside ``bags[i]`` that its edge part
    touches, or ``None`` when the edge part stays inside the bag.
    """

    bags: tuple[frozenset, ...]
    edge_parts: tuple[frozenset, ...]
    leftover: frozenset
    attach: tuple
    t: Fraction


def _spanning_forest_order(g: Graph, root: int = 0):
    parent = [-1] * g.n
    order = []
    seen = [False] * g.n
    seen[root] = True
    stack = [root]
    while stack:
        v = stack.pop()
        order.append(v)
        for u in sorted(g.adjacency(v), reverse=True):
            if not seen[u]:
                seen[u] = True
                parent[u] = v
                stack.append(u)
    return order, parent


def steiner_decomposition(g: Graph, t, mu: Mapping[int, object] | None = None) -> SteinerDecomposition:
    """Partition into connected bags of measure in ``[t, 2t]`` (the first bag may be lighter).

    Works bottom-up over a DFS spanning tree. A vertex collects the light
    leftovers of its children; groups of leftovers reaching ``t`` become bags
    hanging off that vertex, and the vertex together with what remains is
    passed up (or emitted once it reaches ``t``).
    """
    t = as_fraction(t)
    if t < 1:
        raise PreconditionError("t must be at least 1")
    if g.n == 0:
        raise PreconditionError("empty graph")
    if not is_connected(g):
        raise PreconditionError("graph must be connected")
    measure = [Fraction(1)] * g.n if mu is None else [as_fraction(mu.get(v, 0)) for v in range(g.n)]
    for v, x in enumerate(measure):
        if x < 0:
            raise PreconditionError("measure must be nonnegative")
        if x > t:
            raise PreconditionError(f"vertex {v} has measure {x} above t={t}")

    order, parent = _spanning_forest_order(g)
    # residual[v] = (vertices, tree edges, measure) passed to parent, or None
    residual: list = [None] * g.n
    children: list[list[int]] = [[] for _ in range(g.n)]
    for v in order[1:]:
        children[parent[v]].append(v)
    bags, parts, attach = [], [], []
    tree_used = set()

    def edge(u, v):
        return (u, v) if u < v else (v, u)

    for v in reversed(order):
        group_v, group_e, group_m = [], [], Fraction(0)
        keep_v, keep_e, keep_m = [v], [], measure[v]
        for c in sorted(children[v]):
            res = residual[c]
            if res is None:
                continue
            cv, ce, cm = res
            group_v.extend(cv)
            group_e.extend(ce)
            group_e.append(edge(v, c))
            group_m += cm
            if group_m >= t:
                bags.append(frozenset(group_v))
                parts.append(frozenset(group_e))
                attach.append(v)
                tree_used.update(group_e)
                group_v, group_e, group_m = [], [], Fraction(0)
        if group_v:
            keep_v.extend(group_v)
            keep_e.extend(group_e)
            keep_m += group_m
        if keep_m >= t and v != order[0]:
            bags.append(frozenset(keep_v))
            parts.append(frozenset(keep_e))
            attach.append(None)
            tree_used.update(keep_e)
        elif v == order[0]:
            bags.insert(0, frozenset(keep_v))
            parts.insert(0, frozenset(keep_e))
            attach.insert(0, None)
            tree_used.update(keep_e)
        else:
            residual[v] = (keep_v, keep_e, keep_m)
    all_edges = {(u, w) for u, w, _k in g.edges() if u != w}
    leftover = frozenset(all_edges - tree_used)
    return SteinerDecomposition(tuple(bags), tuple(parts), leftover, tuple(attach), t)


def check_decomposition(g: Graph, dec: SteinerDecomposition, mu: Mapping[int, object] | None = None) -> None:
    """Assert the partition, connectivity and measure invariants."""
    measure = (lambda S: Fraction(len(S))) if mu is None else (
        lambda S: sum((as_fraction(mu.get(v, 0)) for v in S), Fraction(0)))
    seen = set()
    for b in dec.bags:
        assert not (seen & b), "bags overlap"
        seen |= b
    assert seen == set(range(g.n)), "bags do not cover V"
    edges_seen = set(dec.leftover)
    for i, (b, part, extra) in enumerate(zip(dec.bags, dec.edge_parts, dec.attach)):
        assert not (edges_seen & part), "edge parts overlap"
        edges_seen |= part
        span = set(b) if extra is None else set(b) | {extra}
        for u, w in part:
            assert u in span and w in span, "edge part leaves its bag"
        # connectivity of the edge part over its span
        if len(span) > 1:
            adj = {x: [] for x in span}
            for u, w in part:
                adj[u].append(w)
                adj[w].append(u)
            start = next(iter(span))
            stack, reach = [start], {start}
            while stack:
                x = stack.pop()
                for y in adj[x]:
                    if y not in reach:
                        reach.add(y)
                        stack.append(y)
            assert reach == span, f"bag {i} edge part is disconnected"
        assert measure(b) <= 2 * dec.t, f"bag {i} exceeds 2t"
        if i > 0:
            assert measure(b) >= dec.t, f"bag {i} below t"
    all_edges = {(u, w) for u, w, _k in g.edges() if u != w}
    assert edges_seen == all_edges, "edge parts do not partition E"


@dataclass(frozen=True)
class SampleSet:
    terminals: frozenset
    weights: Mapping[int, int]
    eps: Fraction
    phi: Fraction
    kind: str
    guarantee: Fraction
    threshold: Fraction | None = None
    measure: Mapping[int, int] | None = field(default=None, compare=False)

    def __post_init__(self):
        if not self.terminals:
            raise ValueError("sample set must be nonempty")
        if any(self.weights[v] < 1 for v in self.terminals):
            raise ValueError("terminal weights must be >= 1")

    @property
    def total_weight(self) -> int:
        return sum(self.weights[v] for v in self.terminals)

    def graph_lines(self) -> str:
        return "".join(f"terminal {v} {self.weights[v]}\n" for v in sorted(self.terminals))

    def to_dict(self) -> dict:
        from ._serialize import encode
        return {"kind": self.kind, "eps": encode(self.eps), "phi": encode(self.phi),
                "guarantee": encode(self.guarantee), "threshold": encode(self.threshold),
                "terminals": sorted(self.terminals),
                "weights": {str(v): self.weights[v] for v in sorted(self.terminals)}}


def _check_params(eps, phi):
    eps, phi = as_fraction(eps), as_fraction(phi)
    if eps <= 0 or phi <= 0:
        raise PreconditionError("eps and phi must be positive")
    if eps >= 1:
        raise PreconditionError("eps must be below 1")
    if eps > Fraction(1, 100):
        warnings.warn("sample-set constants assume eps < 1/100", stacklevel=3)
    return eps, phi


def _full(g: Graph, eps, phi, guarantee=Fraction(0)) -> SampleSet:
    return SampleSet(frozenset(range(g.n)), {v: 1 for v in range(g.n)}, eps, phi, "fallback", guarantee)


def edge_sample_set(g: Graph, eps, phi, params: ParamSet | None = None) -> SampleSet:
    """Deterministic edge sample set; every ``phi``-sparse set is represented within ``4 eps``."""
    params = params or ParamSet()
    eps, phi = _check_params(eps, phi)
    if phi >= eps * eps / params.sample_d:
        return _full(g, eps, phi)
    t = max(eps / (100 * phi), Fraction(1))
    dec = steiner_decomposition(g, t)
    chosen = []
    for bag in dec.bags[1:]:
        quota = min(math.floor(Fraction(len(bag)) / (t * eps)), len(bag))
        chosen.extend(sorted(bag)[:quota])
    if not chosen:
        return _full(g, eps, phi)
    size = len(chosen)
    upper = Fraction(g.n) / (t * eps)
    assert size <= upper
    if t <= eps * g.n / 4:
        assert size >= (1 - 2 * eps) * upper, "sample size outside the expected window"
    return SampleSet(frozenset(chosen), {v: 1 for v in chosen}, eps, phi, "edge", 4 * eps, t)


def weighted_sample_set(g: Graph, mu: Mapping[int, int], eps, phi, params: ParamSet | None = None) -> SampleSet:
    """Weighted sample set for an integer measure ``mu``; heavy vertices keep their own terminal."""
    params = params or ParamSet()
    eps, phi = _check_params(eps, phi)
    mu = {int(v): int(x) for v, x in mu.items() if int(x) > 0}
    if sum(mu.values()) < 1:
        raise PreconditionError("measure must have positive total")
    if phi >= eps * eps / params.sample_d:
        support = sorted(mu)
        kind = "fallback" if len(support) == g.n and all(x == 1 for x in mu.values()) else "weighted"
        return SampleSet(frozenset(support), dict(mu), eps, phi, kind, Fraction(0), None, dict(mu))
    t = max(eps / (100 * phi), Fraction(1))
    weights: dict[int, int] = {}
    reduced = {}
    for v in range(g.n):
        x = mu.get(v, 0)
        if x > t:
            w = math.floor(Fraction(x) / (t * eps))
            if w >= 1:
                weights[v] = w
        else:
            reduced[v] = x
    dec = steiner_decomposition(g, t, reduced)
    for bag in dec.bags[1:]:
        w = math.floor(sum(Fraction(reduced.get(v, 0)) for v in bag) / (t * eps))
        if w >= 1:
            rep = min(bag)
            weights[rep] = weights.get(rep, 0) + w
    if not weights:
        support = sorted(mu)
        return SampleSet(frozenset(support), dict(mu), eps, phi, "weighted", Fraction(0), None, dict(mu))
    return SampleSet(frozenset(weights), weights, eps, phi, "weighted", 4 * eps, t, dict(mu))


def vertex_sample_size(n: int, eps, phi, c) -> int:
    eps, phi, c = as_fraction(eps), as_fraction(phi), as_fraction(c)
    base = n * phi / (eps * eps)
    inner = float(n * phi / (eps ** 3))
    logterm = max(math.log(inner), 1.0) if inner > 0 else 1.0
    return min(n, max(1, math.ceil(float(c * base) * logterm)))


def vertex_sample_set(g: Graph, eps, phi, c=None, rng=None, family: Sequence[frozenset] | None = None,
                      params: ParamSet | None = None, attempts: int = 20) -> SampleSet:
    """Uniform random terminal set of the prescribed size.

    When ``family`` is given, every draw is checked against it at ``20 eps`` and
    redrawn on failure (up to ``attempts`` times).
    """
    params = params or ParamSet()
    eps, phi = as_fraction(eps), as_fraction(phi)
    if not (0 < eps < 1) or phi <= 0:
        raise PreconditionError("eps must lie in (0,1) and phi must be positive")
    if phi >= Fraction(1, 2):
        raise PreconditionError("vertex sample sets need phi < 1/2")
    c = params.vertex_sample_c if c is None else as_fraction(c)
    rng = rng if rng is not None else np.random.default_rng(params.seed)
    size = vertex_sample_size(g.n, eps, phi, c)
    if size >= g.n:
        return _full(g, eps, phi)
    for _ in range(attempts):
        pick = rng.choice(g.n, size=size, replace=False)
        terms = frozenset(int(v) for v in pick)
        ss = SampleSet(terms, {v: 1 for v in terms}, eps, phi, "vertex", 20 * eps)
        if family is None or not verify_sample_set(g, ss, family, factor=params.sample_factor):
            return ss
    raise RandomizedFailure(f"no valid vertex sample set after {attempts} draws")


def verify_sample_set(g: Graph, ss: SampleSet, family: Iterable[Iterable[int]], factor: int = 10,
                      tolerance=None) -> list[tuple[frozenset, Fraction]]:
    """Sets of ``family`` that qualify as sparse but break the sample condition.

    Returns ``(W, relative deviation)`` pairs. The tolerance defaults to the
    guarantee recorded on the sample set.
    """
    tol = ss.guarantee if tolerance is None else as_fraction(tolerance)
    T = ss.terminals
    violations = []
    if ss.measure is not None:
        mu = ss.measure
        K = sum(mu.values())
        aT = ss.total_weight
        for W in family:
            W = frozenset(W)
            muW = sum(mu.get(v, 0) for v in W)
            if muW == 0:
                continue
            d = boundary_size(g, W)
            aW = sum(ss.weights[v] for v in W & T)
            qualifies = Fraction(d, muW) <= ss.phi
            if not qualifies and aW > 0:
                qualifies = Fraction(d, aW) <= Fraction(K, factor * aT) * ss.phi
            if not qualifies:
                continue
            dev = abs(Fraction(K * aW, aT) - muW)
            if dev > tol * muW:
                violations.append((W, dev / muW))
        return violations

    n = g.n
    for W in family:
        W = frozenset(W)
        if not W or len(W) >= n:
            continue
        inside = len(W & T)
        if ss.kind == "vertex":
            nb = neighbors(g, W)
            spars = set_vertex_sparsity(g, W)
            covered = len((W | nb) & T)
            tspars = Fraction(len(nb), covered) if covered else math.inf
        else:
            d = boundary_size(g, W)
            spars = Fraction(d, min(len(W), n - len(W)))
            lo = min(inside, len(T) - inside)
            tspars = Fraction(d, lo) if lo else math.inf
        qualifies = spars <= ss.phi or tspars <= Fraction(n, factor * len(T)) * ss.phi
        if not qualifies:
            continue
        dev = abs(Fraction(n * inside, len(T)) - len(W))
        if dev > tol * len(W):
            violations.append((W, dev / len(W)))
    return violations
