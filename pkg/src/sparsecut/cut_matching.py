"""Cut-matching game that builds small-set expanders on a terminal set.

Each round the cut player looks for a balanced low-conductance cut in the game
graph ``H``, sharpens it with one max-flow (:func:`improve_cut`), and emits a
handful of vertex-set pairs. For each pair the matching player either routes
a perfect matching through the host graph ``G`` with congestion ``1/phi`` or
returns a cut of ``G`` that is ``phi``-sparse relative to the terminals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from ._subsets import SubsetTable, from_mask, lex_key
from .flow import (FlowNetwork, extract_matching, max_flow_min_cut, vertex_capacitated,
                   verify_embedding, with_super_terminals, edge_network)
from .graph import (EdgeCut, Graph, VertexCut, boundary_size, sparsity, terminal_sparsity,
                    vertex_terminal_sparsity)
from .params import OracleBudgetError, ParamSet, PreconditionError, as_fraction


# ---------------------------------------------------------------------------
# ImproveCut


@dataclass(frozen=True)
class ImproveCutResult:
    side: frozenset
    removed: frozenset
    flow: Fraction
    source_side: frozenset


def improve_cut(h: Graph, w: Iterable[int], rho=Fraction(4), precondition=None,
                min_balance=Fraction(0)) -> ImproveCutResult:
    """Shrink ``w`` with one max-flow so it becomes sparse inside every sparse set.

    Boundary edges of ``w`` are subdivided; each subdivision node receives one
    unit from the source, every ``v`` in ``w`` drains ``1/rho**2`` to the sink,
    and edges of ``H[w]`` carry their multiplicity. The vertices of ``w``
    reachable from the source in the residual graph are moved to the other
    side. For any ``S``: ``|δ_{H[S]}(Q∩S)| <= |Q∩S|/rho**2 + |δ_H(S)|``, and at
    most ``rho**2 * flow`` vertices leave ``w``.
    """
    rho = as_fraction(rho)
    W = frozenset(w)
    if not W or len(W) >= h.n:
        raise PreconditionError("w must be a nonempty proper subset")
    if precondition is not None:
        measured = sparsity(h, W)
        if measured > as_fraction(precondition):
            raise PreconditionError(f"sparsity {measured} of w exceeds {precondition}")
    smaller = min(len(W), h.n - len(W))
    if Fraction(smaller, h.n) < as_fraction(min_balance):
        raise PreconditionError("w is not balanced enough")

    net = FlowNetwork(0)
    s = net.add_node("s")
    t = net.add_node("t")
    node = {v: net.add_node(v) for v in sorted(W)}
    sink_cap = 1 / (rho * rho)
    for v in sorted(W):
        net.add_arc(node[v], t, sink_cap)
    for u, v, k in h.edges():
        if u == v:
            continue
        if u in W and v in W:
            net.add_edge(node[u], node[v], k)
        elif u in W or v in W:
            inner = u if u in W else v
            x = net.add_node(("x", u, v))
            net.add_arc(s, x, k)
            net.add_edge(x, node[inner], k)
    net.source, net.sink = s, t
    res = max_flow_min_cut(net)
    reach = {net.labels[i] for i in res.source_side if isinstance(net.labels[i], int)}
    removed = frozenset(reach)
    Q = W - removed
    flow = res.exact_value
    assert len(removed) <= rho * rho * flow, "balance accounting broken"
    return ImproveCutResult(Q, removed, flow, frozenset(res.source_side))


def improve_cut_inner_bound(h: Graph, q: frozenset, s: Iterable[int], rho) -> tuple[int, Fraction]:
    """``(|δ_{H[S]}(Q∩S)|, |Q∩S|/rho**2 + |δ_H(S)|)`` for a given ``S``."""
    S = frozenset(s)
    QS = q & S
    inner = sum(k for u, v, k in h.edges() if u != v and u in S and v in S and ((u in QS) != (v in QS)))
    rho = as_fraction(rho)
    return inner, Fraction(len(QS)) / (rho * rho) + boundary_size(h, S)


# ---------------------------------------------------------------------------
# balanced sparse cuts in H


@dataclass(frozen=True)
class BalancedCut:
    side: frozenset
    conductance: Fraction


@dataclass(frozen=True)
class OverlapSet:
    side: frozenset
    conductance: Fraction | None = None


def _conductance_parts(h: Graph):
    tab = SubsetTable(h)
    total = int(tab.volume[-1])
    den = np.minimum(tab.volume, total - tab.volume)
    return tab, den


def balanced_sparse_cut(h: Graph, b, psi, mode: str = "exact", limit: int = 20):
    """Most balanced cut of conductance at most ``psi``.

    Returns :class:`BalancedCut` when its smaller side holds at least ``b/4`` of
    the vertices, otherwise :class:`OverlapSet` with that smaller side (empty
    when no cut qualifies). Sides with zero volume count as conductance 0.
    """
    b, psi = as_fraction(b), as_fraction(psi)
    n = h.n
    if n < 2:
        return OverlapSet(frozenset())
    if mode == "heuristic":
        return _spectral_balanced_cut(h, b, psi)
    if n > limit:
        raise OracleBudgetError(f"exact balanced cut needs n <= {limit}")
    tab, den = _conductance_parts(h)
    bnd = tab.boundary
    proper = (tab.sizes > 0) & (tab.sizes < n)
    ok = proper & (bnd * psi.denominator <= psi.numerator * den)
    idx = np.flatnonzero(ok)
    if idx.size == 0:
        return OverlapSet(frozenset())
    small = np.minimum(tab.sizes[idx], n - tab.sizes[idx])
    best_bal = small.max()
    cand = idx[small == best_bal]
    # lowest conductance, then lexicographic smaller side
    def key(m):
        m = int(m)
        d = int(den[m])
        cond = Fraction(int(bnd[m]), d) if d else Fraction(0)
        size = int(tab.sizes[m])
        side = m if (size < n - size or (size == n - size and m & 1)) else ((1 << n) - 1) ^ m
        return (cond, lex_key(side)), side, cond
    best = min((key(m) for m in cand), key=lambda x: x[0])
    _, side_mask, cond = best
    side = from_mask(side_mask)
    if Fraction(int(best_bal), n) >= b / 4:
        return BalancedCut(side, cond)
    return OverlapSet(side, cond)


def _spectral_balanced_cut(h: Graph, b, psi):
    """Fiedler-vector sweep; empirical, no optimality claim."""
    n = h.n
    A = np.zeros((n, n))
    for u, v, k in h.edges():
        if u != v:
            A[u, v] += k
            A[v, u] += k
    L = np.diag(A.sum(axis=1)) - A
    _, vecs = np.linalg.eigh(L)
    order = np.lexsort((np.arange(n), vecs[:, 1]))
    deg = [h.degree(v) for v in range(n)]
    total = sum(deg)
    best = None
    side = set()
    for i in range(n - 1):
        side.add(int(order[i]))
        S = frozenset(side)
        d = boundary_size(h, S)
        vol = sum(deg[v] for v in S)
        den = min(vol, total - vol)
        cond = Fraction(d, den) if den else Fraction(0)
        if cond <= psi:
            small = S if len(S) <= n - len(S) else frozenset(range(n)) - S
            key = (-len(small), cond, tuple(sorted(small)))
            if best is None or key < best[0]:
                best = (key, small, cond)
    if best is None:
        return OverlapSet(frozenset())
    _, small, cond = best
    if Fraction(len(small), n) >= b / 4:
        return BalancedCut(small, cond)
    return OverlapSet(small, cond)


# ---------------------------------------------------------------------------
# cut player


@dataclass(frozen=True)
class Pair:
    left: tuple
    right: tuple
    kind: str  # "bisection" or "partial"


@dataclass(frozen=True)
class PairCollection:
    pairs: tuple
    branch: str
    psi: Fraction
    q: frozenset
    w: frozenset | None = None

    def to_dict(self) -> dict:
        return {"branch": self.branch, "psi": f"{self.psi.numerator}/{self.psi.denominator}",
                "q": sorted(self.q), "pairs": [[len(p.left), len(p.right), p.kind] for p in self.pairs]}


def cut_player_round(h: Graph, params: ParamSet | None = None, mode: str | None = None) -> PairCollection:
    params = params or ParamSet()
    mode = mode or params.mode
    n = h.n
    if mode == "exact" and n > params.exhaustive_limit:
        mode = "heuristic"  # subset tables stop scaling here
    delta = max(h.max_degree(), 1)
    tau = params.precondition_threshold
    psi = tau / delta if mode == "exact" else tau / (delta * delta)
    out = balanced_sparse_cut(h, params.balance_b, psi, mode, params.exhaustive_limit)
    pairs = []
    everything = list(range(n))
    if isinstance(out, BalancedCut):
        W = out.side
        imp = improve_cut(h, W, params.rho, precondition=tau)
        Q = imp.side
        if len(Q) > n - len(Q):
            Q = frozenset(everything) - Q
        rest = [v for v in everything if v not in Q]
        q_sorted = tuple(sorted(Q))
        blocks = []
        for i in range(0, len(rest), len(Q)):
            blk = rest[i:i + len(Q)]
            if len(blk) < len(Q):
                blk = blk + [v for v in rest if v not in blk][: len(Q) - len(blk)]
            blocks.append(tuple(sorted(blk)))
        for blk in blocks:
            pairs.append(Pair(q_sorted, blk, "partial"))
        covered = set(Q).union(*blocks) if blocks else set(Q)
        leftover = [v for v in everything if v not in covered]
        if len(leftover) >= 2:
            half = len(leftover) // 2
            pairs.append(Pair(tuple(leftover[:half]), tuple(leftover[half:]), "partial"))
        branch = "balanced"
    else:
        Q = out.side
        W = None
        branch = "overlap"
    fill = [v for v in everything if v not in Q]
    B = sorted(Q) + fill[: max(0, n // 2 - len(Q))]
    Bbar = [v for v in everything if v not in set(B)]
    pairs.append(Pair(tuple(sorted(B)), tuple(Bbar), "bisection"))
    return PairCollection(tuple(pairs), branch, psi, frozenset(Q), W)


# ---------------------------------------------------------------------------
# matching player


@dataclass(frozen=True)
class Matching:
    pairs: tuple
    congestion: Fraction
    routed_pairwise: bool
    embedding_ok: bool

    def __len__(self):
        return len(self.pairs)


@dataclass(frozen=True)
class SparseCut:
    cut: object  # EdgeCut or VertexCut
    flow: Fraction


def matching_player_round(g: Graph, terminals: Iterable[int], phi, pair) -> Matching | SparseCut:
    """Route ``X -> Y`` with edge capacities ``mult/phi``; a deficient flow yields a sparse cut."""
    phi = as_fraction(phi)
    T = frozenset(terminals)
    X, Y = (tuple(sorted(p)) for p in pair)
    if set(X) & set(Y):
        raise PreconditionError("pair sides must be disjoint")
    if not (set(X) | set(Y)) <= T:
        raise PreconditionError("pair sides must be terminals")
    need = min(len(X), len(Y))
    cong = 1 / phi
    if need == 0:
        return Matching((), cong, True, True)
    net = edge_network(g, cong)
    with_super_terminals(net, {x: 1 for x in X}, {y: 1 for y in Y})
    res = max_flow_min_cut(net)
    if res.value < need * res.scale:
        side = frozenset(v for v in res.source_side if v < g.n)
        cut = EdgeCut.from_side(g, side, T)
        assert cut.terminal_sparsity <= phi, "matching player produced a cut that is not phi-sparse"
        return SparseCut(cut, res.exact_value)
    pairs = tuple(extract_matching(net, res, X, Y))
    ok, _w = verify_embedding(g, [(x, y, 1) for x, y in pairs], cong)
    assert ok, "matching does not embed at congestion 1/phi"
    return Matching(pairs, cong, res.scale == 1, ok)


def vertex_matching_player_round(g: Graph, terminals: Iterable[int], phi, pair) -> Matching | SparseCut:
    """Vertex-capacity version: every vertex carries ``1/phi``; a deficient flow yields a vertex cut."""
    phi = as_fraction(phi)
    if phi > 1:
        raise PreconditionError("vertex matching player needs phi <= 1")
    T = frozenset(terminals)
    X, Y = (tuple(sorted(p)) for p in pair)
    if set(X) & set(Y):
        raise PreconditionError("pair sides must be disjoint")
    need = min(len(X), len(Y))
    cong = 1 / phi
    if need == 0:
        return Matching((), cong, True, True)
    net = vertex_capacitated(g, {v: cong for v in range(g.n)})
    with_super_terminals(net, {2 * x: 1 for x in X}, {2 * y + 1: 1 for y in Y})
    res = max_flow_min_cut(net)
    if res.value < need * res.scale:
        M = res.source_side
        left = frozenset(v for v in range(g.n) if 2 * v in M and 2 * v + 1 in M)
        sep = frozenset(v for v in range(g.n) if 2 * v in M and 2 * v + 1 not in M)
        right = frozenset(range(g.n)) - left - sep
        cut = VertexCut.from_parts(g, left, sep, right, T)
        assert cut.terminal_sparsity <= phi, "vertex matching player produced a non-sparse cut"
        return SparseCut(cut, res.exact_value)
    pairs = tuple(extract_matching(net, res, X, Y))
    ok, _w = verify_embedding(g, [(x, y, 1) for x, y in pairs], cong, vertex=True)
    assert ok, "matching does not embed at vertex congestion 1/phi"
    return Matching(pairs, cong, res.scale == 1, ok)


# ---------------------------------------------------------------------------
# potential


class PotentialTracker:
    """Mass-averaging walk restricted to a tracked set ``S``; potential is total row entropy."""

    def __init__(self, tracked: Iterable[int]):
        self.tracked = tuple(sorted(set(tracked)))
        self.index = {v: i for i, v in enumerate(self.tracked)}
        k = len(self.tracked)
        self.mass = [[Fraction(int(i == j)) for j in range(k)] for i in range(k)]
        self.history = [0.0]
        self.outside_matches = 0
        self.leak = Fraction(0)

    @property
    def phi(self) -> float:
        return self.history[-1]

    def _entropy(self) -> float:
        tot = 0.0
        for row in self.mass:
            for p in row:
                if p > 0:
                    pf = float(p)
                    tot -= pf * math.log(pf)
        return tot

    def bound(self) -> float:
        k = len(self.tracked)
        return k * math.log(k) if k > 1 else 0.0


def potential_step(tracker: PotentialTracker, matching: Iterable[tuple[int, int]]) -> PotentialTracker:
    """Average the mass columns of every matched pair inside the tracked set."""
    for a, b in matching:
        ia, ib = tracker.index.get(a), tracker.index.get(b)
        if ia is None and ib is None:
            continue
        if ia is None or ib is None:
            tracker.outside_matches += 1
            continue
        for row in tracker.mass:
            avg = (row[ia] + row[ib]) / 2
            row[ia] = avg
            row[ib] = avg
    for row in tracker.mass:
        assert sum(row) <= 1
    value = tracker._entropy()
    assert value >= tracker.history[-1] - 1e-12, "potential decreased"
    assert value <= tracker.bound() + 1e-12, "potential above |S| log |S|"
    tracker.history.append(value)
    return tracker


# ---------------------------------------------------------------------------
# certification and the game driver


@dataclass(frozen=True)
class ExpansionCheck:
    ok: bool
    value: Fraction | None
    worst: frozenset | None
    exhaustive: bool


def certify_small_set_expansion(h: Graph, s: int, bound, limit: int = 22, samples: int = 20000,
                                seed: int = 0) -> ExpansionCheck:
    """Is every set of at most ``s`` vertices at least ``bound``-expanding in ``h``?"""
    bound = as_fraction(bound)
    n = h.n
    if n < 2:
        return ExpansionCheck(True, None, None, True)
    s = min(s, n - 1)
    if n <= limit:
        tab = SubsetTable(h, limit)
        den = np.minimum(tab.sizes, n - tab.sizes)
        valid = (tab.sizes >= 1) & (tab.sizes <= s)
        idx = np.flatnonzero(valid)
        ratio = tab.boundary[idx] / den[idx]
        low = ratio.min()
        near = idx[ratio <= low + 1e-9 * max(1.0, low)]
        exact = [(Fraction(int(tab.boundary[i]), int(den[i])), int(i)) for i in near]
        val = min(f for f, _ in exact)
        worst = min((i for f, i in exact if f == val), key=lex_key)
        return ExpansionCheck(val >= bound, val, from_mask(worst), True)
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(samples):
        k = int(rng.integers(1, s + 1))
        S = frozenset(int(v) for v in rng.choice(n, size=k, replace=False))
        val = Fraction(boundary_size(h, S), min(k, n - k))
        if best is None or val < best[0]:
            best = (val, S)
    return ExpansionCheck(best[0] >= bound, best[0], best[1], False)


@dataclass(frozen=True)
class Certificate:
    terminals: tuple
    game_graph: Graph
    rounds: int
    matchings: int
    phi: Fraction
    s: int
    expansion: Fraction | None
    target: Fraction
    exhaustive: bool
    routed_pairwise: bool
    heuristic: bool
    vertex: bool

    @property
    def congestion(self) -> Fraction:
        return self.matchings / self.phi

    def lower_bound_at(self, expansion):
        """Implied lower bound in ``G`` if ``H`` expands at rate ``expansion``.

        Edge version: terminal sparsity of sets with at most ``s`` terminals.
        Vertex version: each matching pushes at most ``|C|/phi`` crossing pairs
        through a separator ``C`` and adds at most ``|C|`` edges at ``C``, which
        bounds the terminal vertex sparsity below by ``beta/(1+beta)``.
        """
        if expansion is None or self.matchings == 0:
            return math.inf
        if self.vertex:
            beta = expansion * self.phi / (self.matchings * (1 + self.phi))
            return beta / (1 + beta)
        return expansion * self.phi / self.matchings

    @property
    def lower_bound(self):
        return self.lower_bound_at(self.expansion)

    @property
    def measured_c(self):
        if not self.expansion:
            return math.inf
        return 1 / (self.expansion * Fraction(max(math.log2(self.s), 1)).limit_denominator(10**6))

    @property
    def certified(self) -> bool:
        return self.expansion is not None and self.expansion >= self.target

    def to_dict(self) -> dict:
        from ._serialize import encode
        return {"type": "certificate", "vertex": self.vertex, "rounds": self.rounds,
                "matchings": self.matchings, "phi": encode(self.phi), "s": self.s,
                "h_expansion": encode(self.expansion), "target": encode(self.target),
                "lower_bound": encode(self.lower_bound), "congestion": encode(self.congestion),
                "exhaustive": self.exhaustive, "routed_pairwise": self.routed_pairwise,
                "empirical": not self.exhaustive or (self.heuristic and not self.certified), "certified": self.certified,
                "terminals": list(self.terminals),
                "game_edges": [[u, v, k] for u, v, k in self.game_graph.edges()]}


@dataclass
class GameOutcome:
    result: object  # SparseCut or Certificate
    rounds: int
    trace: list = field(default_factory=list)
    trackers: list = field(default_factory=list)
    collections: list = field(default_factory=list)
    round_matchings: list = field(default_factory=list)


def round_budget(s: int, d: int) -> int:
    return (math.ceil(d * math.log2(s)) if s > 1 else 0) + 1


def expansion_target(s: int, c: int) -> Fraction:
    return 1 / (c * Fraction(max(math.log2(s), 1)).limit_denominator(10**6))


def run_game(g: Graph, terminals: Iterable[int], phi, s: int, params: ParamSet | None = None,
             vertex: bool = False, track: Sequence[Iterable[int]] = (), stop_early: bool = True) -> GameOutcome:
    """Play rounds until a terminal-sparse cut appears or ``H`` expands on sets of size ``<= s``.

    ``track`` lists vertex sets (in host ids, terminals only) whose entropy
    potential is followed round by round.
    """
    params = params or ParamSet()
    phi = as_fraction(phi)
    T = tuple(sorted(set(terminals)))
    if not T:
        raise PreconditionError("terminal set must be nonempty")
    if not 1 <= s <= len(T):
        raise PreconditionError("need 1 <= s <= |T|")
    index = {v: i for i, v in enumerate(T)}
    nT = len(T)
    budget = round_budget(s, params.rounds_d)
    target = expansion_target(s, params.c)
    trackers = [PotentialTracker(index[v] for v in S) for S in track]
    edges: list[tuple[int, int]] = []
    trace = []
    collections = []
    round_matchings = []
    matchings = 0
    pairwise = True
    player = vertex_matching_player_round if vertex else matching_player_round
    check = ExpansionCheck(True, None, None, True)
    rounds = 0
    if nT == 1:
        cert = Certificate(T, Graph(1), 0, 0, phi, s, None, target, True, True, False, vertex)
        return GameOutcome(cert, 0, trace, trackers)
    for r in range(1, budget + 1):
        rounds = r
        H = Graph(nT, edges)
        coll = cut_player_round(H, params)
        collections.append(coll)
        entry = {"round": r, "psi": f"{coll.psi.numerator}/{coll.psi.denominator}", "branch": coll.branch,
                 "pair_sizes": [[len(p.left), len(p.right)] for p in coll.pairs], "matching_sizes": []}
        this_round = []
        for p in coll.pairs:
            X = [T[i] for i in p.left]
            Y = [T[i] for i in p.right]
            out = player(g, T, phi, (X, Y))
            if isinstance(out, SparseCut):
                entry["cut"] = out.cut.to_dict()
                trace.append(entry)
                return GameOutcome(out, r, trace, trackers, collections, round_matchings)
            matchings += 1
            pairwise = pairwise and out.routed_pairwise
            local = [(index[x], index[y]) for x, y in out.pairs]
            edges.extend(local)
            this_round.append((p, local))
            entry["matching_sizes"].append(len(local))
        round_matchings.append(this_round)
        for tr in trackers:
            for _p, local in this_round:
                potential_step(tr, local)
        entry["potentials"] = [tr.phi for tr in trackers]
        H = Graph(nT, edges)
        if nT <= params.exhaustive_limit:
            check = certify_small_set_expansion(H, s, target, limit=params.exhaustive_limit)
            entry["h_expansion"] = f"{check.value.numerator}/{check.value.denominator}"
        trace.append(entry)
        if stop_early and check.exhaustive and check.value is not None and check.value >= target:
            break
    H = Graph(nT, edges)
    if not (nT <= params.exhaustive_limit):
        check = certify_small_set_expansion(H, s, target, limit=params.exhaustive_limit, seed=params.seed)
    cert = Certificate(T, H, rounds, matchings, phi, s, check.value, target, check.exhaustive,
                       pairwise, params.mode == "heuristic" or nT > params.exhaustive_limit, vertex)
    return GameOutcome(cert, rounds, trace, trackers, collections, round_matchings)


def classify_collection(h: Graph, coll: PairCollection, S: Iterable[int], balance=None,
                        inner=Fraction(1, 8)) -> str | None:
    """Which guarantee of the cut player's collection covers ``S`` (``None`` if none).

    ``balance`` defaults to ``|Q|/(4n)``: if every pair splits ``S`` evenly up
    to that fraction, the blocks covering the complement of ``Q`` force ``Q``
    to split ``S`` at least that evenly too.
    """
    S = frozenset(S)
    if coll.branch == "overlap":
        return "overlap"
    Q = coll.q
    if balance is None:
        balance = Fraction(len(Q), 4 * h.n)
    for p in coll.pairs:
        a = len(S & set(p.left))
        b = len(S & set(p.right))
        if abs(a - b) >= balance * len(S):
            return "unbalanced_pair"
    qa, qb = len(S & Q), len(S - Q)
    if min(qa, qb) >= balance * len(S):
        d, _ = improve_cut_inner_bound(h, Q, S, 1)
        if d <= inner * len(S):
            return "sparse_inside"
    return None
