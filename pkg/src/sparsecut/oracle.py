"""Brute-force ground truth and fixture generators.

Exact optima come from exhaustive enumeration, so every routine here has a
size limit. Cut families (components and co-components after deleting a few
edges or vertices) are enumerated through a contraction trick: edges whose
endpoints are more than ``kmax``-connected can never be cut, so they are
merged first and only the remaining edges are tried.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

import networkx as nx
import numpy as np

from ._subsets import SubsetTable, argmin_ratio, from_mask, lex_key
from .flow import edge_network, max_flow_min_cut
from .graph import Graph, VertexCut, components, set_vertex_sparsity, sparsity
from .params import OracleBudgetError

EDGE_LIMIT = 22
VERTEX_LIMIT = 18


@dataclass(frozen=True)
class OracleAnswer:
    problem: str
    value: Fraction
    argmin: object
    enumerated: int
    wall_time: float

    def to_dict(self) -> dict:
        from ._serialize import encode
        arg = self.argmin
        if isinstance(arg, frozenset):
            arg = {"side": sorted(arg)}
        elif arg is not None:
            arg = arg.to_dict()
        return {"problem": self.problem, "value": encode(self.value), "argmin": arg,
                "enumerated": self.enumerated, "telemetry": {"wall_time_s": {"float": "%.6f" % self.wall_time}}}


def _check_limit(g: Graph, limit: int):
    if g.n > limit:
        raise OracleBudgetError(f"n={g.n} exceeds oracle limit {limit}")


# ---------------------------------------------------------------------------
# exact edge problems


def exact_sparsest_cut(g: Graph, limit: int = EDGE_LIMIT) -> OracleAnswer:
    _check_limit(g, limit)
    if g.n < 2:
        raise OracleBudgetError("need at least two vertices")
    start = time.perf_counter()
    tab = SubsetTable(g, limit)
    den = np.minimum(tab.sizes, g.n - tab.sizes)
    valid = den > 0
    val, mask = argmin_ratio(tab.boundary, np.maximum(den, 1), valid)
    return OracleAnswer("sparsest", val, from_mask(mask), int(valid.sum()), time.perf_counter() - start)


def exact_sse(g: Graph, s: int, limit: int = EDGE_LIMIT) -> OracleAnswer:
    """Minimum sparsity over sets of size ``1..s``."""
    _check_limit(g, limit)
    if not 1 <= s < g.n:
        raise OracleBudgetError("need 1 <= s < n")
    start = time.perf_counter()
    tab = SubsetTable(g, limit)
    den = np.minimum(tab.sizes, g.n - tab.sizes)
    valid = (tab.sizes >= 1) & (tab.sizes <= s)
    val, mask = argmin_ratio(tab.boundary, np.maximum(den, 1), valid)
    return OracleAnswer("sse", val, from_mask(mask), int(valid.sum()), time.perf_counter() - start)


def exact_min_conductance(g: Graph, limit: int = EDGE_LIMIT) -> OracleAnswer:
    _check_limit(g, limit)
    start = time.perf_counter()
    tab = SubsetTable(g, limit)
    total = int(tab.volume[-1])
    den = np.minimum(tab.volume, total - tab.volume)
    valid = (tab.sizes > 0) & (tab.sizes < g.n) & (den > 0)
    val, mask = argmin_ratio(tab.boundary, np.maximum(den, 1), valid)
    return OracleAnswer("conductance", val, None if mask is None else from_mask(mask),
                        int(valid.sum()), time.perf_counter() - start)


# ---------------------------------------------------------------------------
# exact vertex problems


def _best_split(sizes: list[int]) -> tuple[int, int]:
    """Subset-sum over component sizes: (best min side, bitmask of components forming the smaller side)."""
    total = sum(sizes)
    reach = {0: 0}
    for i, sz in enumerate(sizes):
        for val, sel in list(reach.items()):
            nv = val + sz
            if nv not in reach:
                reach[nv] = sel | (1 << i)
    best = max((min(v, total - v), v) for v in reach if 0 < v < total)
    return best[0], reach[best[1]]


def _vertex_cut_from(g: Graph, cmask: int, comps: list[frozenset], sel: int) -> VertexCut:
    C = from_mask(cmask)
    A = frozenset().union(*[c for i, c in enumerate(comps) if sel >> i & 1])
    B = frozenset(range(g.n)) - C - A
    if min(A | B) in B:
        A, B = B, A
    return VertexCut.from_parts(g, A, C, B)


def exact_vertex_sparsest(g: Graph, limit: int = VERTEX_LIMIT) -> OracleAnswer:
    """Minimum of ``|C| / (|C| + min(|L|,|R|))`` over all vertex cuts."""
    _check_limit(g, limit)
    start = time.perf_counter()
    n = g.n
    best = None
    best_key = None
    count = 0
    for csize in range(0, n - 1):
        if best is not None and Fraction(2 * csize, n + csize) > best:
            break
        for cset in itertools.combinations(range(n), csize):
            comps = components(g, cset)
            if len(comps) < 2:
                continue
            count += 1
            m, sel = _best_split([len(c) for c in comps])
            val = Fraction(csize, csize + m)
            cmask = sum(1 << v for v in cset)
            key = (val, cset)
            if best is None or key < best_key:
                best, best_key = val, key
                best_cut = (cmask, comps, sel)
    if best is None:
        raise OracleBudgetError("graph has no vertex cut")
    cut = _vertex_cut_from(g, *best_cut)
    return OracleAnswer("vertex_sparsest", best, cut, count, time.perf_counter() - start)


def exact_ssve(g: Graph, s: int, limit: int = VERTEX_LIMIT) -> OracleAnswer:
    """Minimum ``|C| / |L ∪ C|`` over vertex cuts with ``|L| <= s`` and ``|R| >= |L|``."""
    _check_limit(g, limit)
    start = time.perf_counter()
    n = g.n
    best = None
    best_key = None
    count = 0
    for lmask in range(1, 1 << n):
        L = from_mask(lmask)
        if len(L) > s:
            continue
        C = frozenset(u for v in L for u in g.adjacency(v)) - L
        R = n - len(L) - len(C)
        if R < len(L) or R == 0:
            continue
        count += 1
        val = Fraction(len(C), len(L) + len(C))
        key = (val, tuple(sorted(L)))
        if best is None or key < best_key:
            best, best_key = val, key
            best_parts = (L, C)
    if best is None:
        raise OracleBudgetError("no admissible small vertex cut")
    L, C = best_parts
    cut = VertexCut.from_parts(g, L, C, frozenset(range(n)) - L - C)
    return OracleAnswer("ssve", best, cut, count, time.perf_counter() - start)


# ---------------------------------------------------------------------------
# cut families


def _union_find(n):
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    return parent, find


def _local_connectivity(g: Graph, u: int, v: int) -> int:
    net = edge_network(g)
    net.source, net.sink = u, v
    return max_flow_min_cut(net).value


def enumerate_cut_family(g: Graph, kmax: int) -> list[frozenset]:
    """Components and co-components after deleting at most ``kmax`` edges (with multiplicity)."""
    if kmax < 0:
        raise ValueError("kmax must be nonnegative")
    parent, find = _union_find(g.n)
    for u, v, k in g.edges():
        if u == v:
            continue
        if k > kmax or _local_connectivity(g, u, v) > kmax:
            ru, rv = find(u), find(v)
            if ru != rv:
                parent[ru] = rv
    groups: dict[int, list[int]] = {}
    for v in range(g.n):
        groups.setdefault(find(v), []).append(v)
    roots = sorted(groups, key=lambda r: min(groups[r]))
    index = {r: i for i, r in enumerate(roots)}
    q = len(roots)
    qedges: dict[tuple[int, int], int] = {}
    for u, v, k in g.edges():
        a, b = index[find(u)], index[find(v)]
        if a != b:
            key = (min(a, b), max(a, b))
            qedges[key] = qedges.get(key, 0) + k
    elist = sorted(qedges.items())
    members = [frozenset(groups[r]) for r in roots]
    full = frozenset(range(g.n))
    found: set[frozenset] = set()
    qgraph_adj = [[] for _ in range(q)]
    for idx, ((a, b), _k) in enumerate(elist):
        qgraph_adj[a].append((b, idx))
        qgraph_adj[b].append((a, idx))

    def comps_without(removed: set[int]):
        seen = [False] * q
        out = []
        for s0 in range(q):
            if seen[s0]:
                continue
            seen[s0] = True
            stack, comp = [s0], [s0]
            while stack:
                x = stack.pop()
                for y, ei in qgraph_adj[x]:
                    if ei not in removed and not seen[y]:
                        seen[y] = True
                        stack.append(y)
                        comp.append(y)
            out.append(comp)
        return out

    def rec(start: int, budget: int, removed: list[int]):
        if removed:
            comps = comps_without(set(removed))
            if len(comps) > 1:
                for comp in comps:
                    W = frozenset().union(*(members[i] for i in comp))
                    found.add(W)
                    found.add(full - W)
        for i in range(start, len(elist)):
            k = elist[i][1]
            if k <= budget:
                removed.append(i)
                rec(i + 1, budget - k, removed)
                removed.pop()

    rec(0, kmax, [])
    found.discard(frozenset())
    found.discard(full)
    return sorted(found, key=lambda w: (len(w), sorted(w)))


def enumerate_cut_family_bruteforce(g: Graph, kmax: int, limit: int = 20) -> list[frozenset]:
    """Subset-enumeration reference for :func:`enumerate_cut_family`."""
    _check_limit(g, limit)
    tab = SubsetTable(g, limit)
    full = frozenset(range(g.n))
    found = set()
    for mask in np.flatnonzero((tab.boundary <= kmax) & (tab.sizes > 0) & (tab.sizes < g.n)):
        W = from_mask(int(mask))
        sub = Graph(g.n, [(u, v, k) for u, v, k in g.edges() if u in W and v in W])
        if len(components(sub, full - W)) == 1:
            found.add(W)
            found.add(full - W)
    return sorted(found, key=lambda w: (len(w), sorted(w)))


def enumerate_vertex_cut_family(g: Graph, kmax: int) -> list[frozenset]:
    """Components and unions of all-but-one components after deleting at most ``kmax`` vertices."""
    found: set[frozenset] = set()
    for size in range(1, kmax + 1):
        for cset in itertools.combinations(range(g.n), size):
            comps = components(g, cset)
            if len(comps) < 2:
                continue
            rest = frozenset(range(g.n)) - frozenset(cset)
            for c in comps:
                found.add(c)
                found.add(rest - c)
    found.discard(frozenset())
    return sorted(found, key=lambda w: (len(w), sorted(w)))


def enumerate_sparse_family(g: Graph, phi, kmax: int, vertex: bool = False) -> list[frozenset]:
    """Members of the cut family whose sparsity is at most ``phi``."""
    phi = Fraction(phi)
    if vertex:
        return [W for W in enumerate_vertex_cut_family(g, kmax) if set_vertex_sparsity(g, W) <= phi]
    return [W for W in enumerate_cut_family(g, kmax) if sparsity(g, W) <= phi]


def certify_small_sets(g: Graph, s: int, limit: int = EDGE_LIMIT):
    """Exact minimum sparsity over sets of size at most ``s`` (used by the game certifier)."""
    return exact_sse(g, min(s, g.n - 1), limit)


# ---------------------------------------------------------------------------
# generators


def complete(n: int) -> Graph:
    return Graph(n, itertools.combinations(range(n), 2))


def path(n: int) -> Graph:
    return Graph(n, [(i, i + 1) for i in range(n - 1)])


def cycle(n: int) -> Graph:
    return Graph(n, [(i, (i + 1) % n) for i in range(n)])


def star(leaves: int) -> Graph:
    """Centre ``0`` joined to leaves ``1..leaves``."""
    return Graph(leaves + 1, [(0, i) for i in range(1, leaves + 1)])


def grid(rows: int, cols: int) -> Graph:
    edges = []
    for r in range(rows):
        for c in range(cols):
            v = r * cols + c
            if c + 1 < cols:
                edges.append((v, v + 1))
            if r + 1 < rows:
                edges.append((v, v + cols))
    return Graph(rows * cols, edges)


def dumbbell(a: int, b: int) -> Graph:
    """``K_a`` on ``0..a-1`` and ``K_b`` on ``a..a+b-1`` joined by the bridge ``(a-1, a)``."""
    edges = list(itertools.combinations(range(a), 2))
    edges += list(itertools.combinations(range(a, a + b), 2))
    edges.append((a - 1, a))
    return Graph(a + b, edges)


def cliques_sharing_vertex(*sizes: int) -> Graph:
    """Cliques of the given sizes glued at vertex ``0`` (each size counts the shared vertex)."""
    edges = []
    nxt = 1
    for sz in sizes:
        block = [0] + list(range(nxt, nxt + sz - 1))
        nxt += sz - 1
        edges += list(itertools.combinations(block, 2))
    return Graph(nxt, edges)


def planted_bisection(n: int, p: float, q: float, seed: int) -> Graph:
    """Two halves with edge probabilities ``p`` inside and ``q`` across.

    A path through each half and one crossing edge are always added so the
    result is connected.
    """
    rng = np.random.default_rng(seed)
    half = n // 2
    side = [0 if v < half else 1 for v in range(n)]
    edges = set()
    for u in range(n):
        for v in range(u + 1, n):
            prob = p if side[u] == side[v] else q
            if rng.random() < prob:
                edges.add((u, v))
    edges.update((i, i + 1) for i in range(half - 1))
    edges.update((i, i + 1) for i in range(half, n - 1))
    edges.add((0, half))
    return Graph(n, sorted(edges))


def random_regular(n: int, d: int, seed: int) -> Graph:
    for attempt in range(100):
        h = nx.random_regular_graph(d, n, seed=seed + 7919 * attempt)
        if nx.is_connected(h):
            return Graph(n, sorted((min(u, v), max(u, v)) for u, v in h.edges()))
    raise RuntimeError("could not draw a connected regular graph")


def random_tree(n: int, seed: int) -> Graph:
    rng = np.random.default_rng(seed)
    return Graph(n, [(int(rng.integers(0, v)), v) for v in range(1, n)])


def incidence_graph(n: int) -> Graph:
    """Vertex-edge incidence graph of ``K_n`` plus a clique on the ``n`` vertex nodes.

    Edge nodes come first (``0..C(n,2)-1``, degree 2); vertex nodes follow.
    """
    pairs = list(itertools.combinations(range(n), 2))
    m = len(pairs)
    edges = []
    for i, (a, b) in enumerate(pairs):
        edges.append((i, m + a))
        edges.append((i, m + b))
    edges += [(m + a, m + b) for a, b in pairs]
    return Graph(m + n, edges)


def corpus(max_n: int = 16) -> dict[str, Graph]:
    """Named small instances used across the test-suite and the CLI ``gen`` command."""
    items = {
        "path6": path(6),
        "path8": path(8),
        "cycle8": cycle(8),
        "star6": star(6),
        "grid3x3": grid(3, 3),
        "grid3x4": grid(3, 4),
        "dumbbell4_4": dumbbell(4, 4),
        "dumbbell5_5": dumbbell(5, 5),
        "dumbbell6_6": dumbbell(6, 6),
        "dumbbell3_6": dumbbell(3, 6),
        "cliques4_4": cliques_sharing_vertex(4, 4),
        "cliques4_5_4": cliques_sharing_vertex(4, 5, 4),
        "complete6": complete(6),
        "planted12": planted_bisection(12, 0.8, 0.05, 3),
        "regular12": random_regular(12, 3, 5),
        "tree10": random_tree(10, 2),
    }
    return {k: g for k, g in items.items() if g.n <= max_n}
