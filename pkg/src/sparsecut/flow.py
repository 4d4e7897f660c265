"""Exact integer max-flow (Dinic), vertex splitting, matchings from flows, embedding checks.

Capacities may be given as rationals; they are multiplied through by the LCM of
their denominators before solving, and the scale is kept on the network so that
callers can convert values back.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Hashable, Iterable, Mapping

from .graph import Graph
from .params import NotAMatchingError


class FlowNetwork:
    """Residual-style network: arc ``i`` and ``i ^ 1`` are mutual reverses."""

    def __init__(self, num_nodes: int = 0, source: int | None = None, sink: int | None = None):
        self.num_nodes = num_nodes
        self.source = source
        self.sink = sink
        self.heads: list[int] = []
        self.raw_caps: list[Fraction] = []
        self.adj: list[list[int]] = [[] for _ in range(num_nodes)]
        self.labels: list[Hashable] = [None] * num_nodes
        self._scale: int | None = None
        self._caps: list[int] | None = None

    def add_node(self, label: Hashable = None) -> int:
        self.adj.append([])
        self.labels.append(label)
        self.num_nodes += 1
        return self.num_nodes - 1

    def add_arc(self, u: int, v: int, cap, reverse_cap=0) -> int:
        cap = Fraction(cap)
        reverse_cap = Fraction(reverse_cap)
        if cap < 0 or reverse_cap < 0:
            raise ValueError("capacities must be nonnegative")
        idx = len(self.heads)
        self.heads.extend((v, u))
        self.raw_caps.extend((cap, reverse_cap))
        self.adj[u].append(idx)
        self.adj[v].append(idx + 1)
        self._scale = None
        return idx

    def add_edge(self, u: int, v: int, cap) -> int:
        """Undirected edge: one arc pair, capacity ``cap`` each way."""
        return self.add_arc(u, v, cap, cap)

    def tail(self, arc: int) -> int:
        return self.heads[arc ^ 1]

    @property
    def scale(self) -> int:
        self._freeze()
        return self._scale

    @property
    def capacities(self) -> list[int]:
        self._freeze()
        return self._caps

    def _freeze(self) -> None:
        if self._scale is not None:
            return
        scale = 1
        for c in self.raw_caps:
            scale = math.lcm(scale, c.denominator)
        self._scale = scale
        self._caps = [int(c * scale) for c in self.raw_caps]

    def to_dimacs(self) -> str:
        """DIMACS max-flow dump (1-based nodes, integer capacities at the recorded scale)."""
        caps = self.capacities
        lines = [f"c scale {self.scale}", f"p max {self.num_nodes} {sum(1 for c in caps if c > 0)}",
                 f"n {self.source + 1} s", f"n {self.sink + 1} t"]
        for a, c in enumerate(caps):
            if c > 0:
                lines.append(f"a {self.tail(a) + 1} {self.heads[a] + 1} {c}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class MaxFlowResult:
    value: int
    arc_flow: tuple[int, ...]
    source_side: frozenset[int]
    scale: int

    @property
    def exact_value(self) -> Fraction:
        return Fraction(self.value, self.scale)


def max_flow_min_cut(net: FlowNetwork) -> MaxFlowResult:
    s, t = net.source, net.sink
    if s is None or t is None or s == t:
        raise ValueError("source and sink must be distinct nodes")
    caps = net.capacities
    res = list(caps)
    heads = net.heads
    adj = net.adj
    nn = net.num_nodes
    total = 0

    while True:
        level = [-1] * nn
        level[s] = 0
        q = deque([s])
        while q:
            v = q.popleft()
            for a in adj[v]:
                w = heads[a]
                if res[a] > 0 and level[w] < 0:
                    level[w] = level[v] + 1
                    q.append(w)
        if level[t] < 0:
            break
        it = [0] * nn
        stack: list[int] = []
        v = s
        while True:
            if v == t:
                push = min(res[a] for a in stack)
                for a in stack:
                    res[a] -= push
                    res[a ^ 1] += push
                total += push
                # retreat to the tail of the first saturated arc
                k = next(i for i, a in enumerate(stack) if res[a] == 0)
                del stack[k:]
                v = heads[stack[-1]] if stack else s
                continue
            advanced = False
            lst = adj[v]
            while it[v] < len(lst):
                a = lst[it[v]]
                w = heads[a]
                if res[a] > 0 and level[w] == level[v] + 1:
                    stack.append(a)
                    v = w
                    advanced = True
                    break
                it[v] += 1
            if not advanced:
                if v == s:
                    break
                level[v] = -1
                a = stack.pop()
                v = heads[a ^ 1]
                it[v] += 1

    # residual-reachable source side
    seen = [False] * nn
    seen[s] = True
    q = deque([s])
    while q:
        v = q.popleft()
        for a in adj[v]:
            w = heads[a]
            if res[a] > 0 and not seen[w]:
                seen[w] = True
                q.append(w)
    side = frozenset(i for i in range(nn) if seen[i])
    cut_cap = sum(caps[a] for a in range(len(caps)) if seen[net.tail(a)] and not seen[heads[a]])
    assert cut_cap == total, "max-flow value differs from min-cut capacity"
    flow = tuple(max(0, caps[a] - res[a]) for a in range(len(caps)))
    return MaxFlowResult(total, flow, side, net.scale)


def check_flow(net: FlowNetwork, result: MaxFlowResult) -> None:
    """Assert conservation and capacity bounds of a flow (net flow per arc pair)."""
    caps = net.capacities
    bal = [0] * net.num_nodes
    for a in range(0, len(caps), 2):
        f = result.arc_flow[a] - result.arc_flow[a + 1]
        if f > 0:
            assert f <= caps[a]
        elif f < 0:
            assert -f <= caps[a + 1]
        bal[net.tail(a)] -= f
        bal[net.heads[a]] += f
    for v in range(net.num_nodes):
        if v == net.source:
            assert bal[v] == -result.value
        elif v == net.sink:
            assert bal[v] == result.value
        else:
            assert bal[v] == 0, f"conservation broken at node {v}"


# ---------------------------------------------------------------------------
# network builders


def edge_network(g: Graph, edge_cap=1) -> FlowNetwork:
    """Nodes ``0..n-1`` labelled by vertex; each edge becomes an undirected arc pair."""
    net = FlowNetwork(g.n)
    net.labels = list(range(g.n))
    edge_cap = Fraction(edge_cap)
    for u, v, k in g.edges():
        if u != v:
            net.add_edge(u, v, edge_cap * k)
    return net


def _attach_terminal(net: FlowNetwork, spec, node_of, label) -> int:
    if isinstance(spec, Mapping):
        hub = net.add_node(label)
        for v, cap in sorted(spec.items()):
            if label == "source":
                net.add_arc(hub, node_of(v), cap)
            else:
                net.add_arc(node_of(v), hub, cap)
        return hub
    return node_of(spec)


def vertex_capacitated(g: Graph, caps: Mapping[int, object], source=None, sink=None) -> FlowNetwork:
    """Split every vertex ``v`` into ``in = 2v`` and ``out = 2v + 1`` joined by ``caps[v]``.

    Graph edges become ``out -> in`` arcs in both directions with capacity
    ``sum(caps) + 1``, which exceeds any finite vertex cut. A vertex ``source``
    enters at its in-node and a vertex ``sink`` leaves at its out-node, so their
    own capacities count. Mappings ``{vertex: cap}`` create super nodes.
    """
    caps = {v: Fraction(c) for v, c in caps.items()}
    for v in range(g.n):
        if caps.get(v, 0) <= 0:
            raise ValueError(f"vertex {v} needs a positive capacity")
    big = sum(caps.values()) + 1
    net = FlowNetwork(2 * g.n)
    net.labels = [v for v in range(g.n) for _ in (0, 1)]
    for v in range(g.n):
        net.add_arc(2 * v, 2 * v + 1, caps[v])
    for u, v, _k in g.edges():
        if u != v:
            net.add_arc(2 * u + 1, 2 * v, big)
            net.add_arc(2 * v + 1, 2 * u, big)
    if source is not None:
        net.source = _attach_terminal(net, source, lambda v: 2 * v, "source")
    if sink is not None:
        net.sink = _attach_terminal(net, sink, lambda v: 2 * v + 1, "sink")
    return net


def with_super_terminals(net: FlowNetwork, sources: Mapping[int, object], sinks: Mapping[int, object]) -> FlowNetwork:
    """Add a super source feeding ``sources`` (node -> cap) and a super sink fed by ``sinks``."""
    s = net.add_node("source")
    t = net.add_node("sink")
    for v, c in sorted(sources.items()):
        net.add_arc(s, v, c)
    for v, c in sorted(sinks.items()):
        net.add_arc(v, t, c)
    net.source, net.sink = s, t
    return net


# ---------------------------------------------------------------------------
# path decomposition and matchings


def decompose_paths(net: FlowNetwork, result: MaxFlowResult) -> list[tuple[list[int], int]]:
    """Split a flow into source-sink paths (node lists) with integer amounts; cycles are cancelled."""
    caps = net.capacities
    flow = {}
    for a in range(0, len(caps), 2):
        f = result.arc_flow[a] - result.arc_flow[a + 1]
        if f > 0:
            flow[a] = f
        elif f < 0:
            flow[a + 1] = -f
    out_arcs: dict[int, list[int]] = {}
    for a in sorted(flow):
        out_arcs.setdefault(net.tail(a), []).append(a)
    s, t = net.source, net.sink
    paths = []
    remaining = result.value
    while remaining > 0:
        node_pos = {s: 0}
        arcs: list[int] = []
        v = s
        while v != t:
            lst = out_arcs.get(v, [])
            while lst and flow.get(lst[0], 0) == 0:
                lst.pop(0)
            if not lst:
                raise AssertionError("flow decomposition stalled: conservation violated")
            a = lst[0]
            arcs.append(a)
            v = net.heads[a]
            if v in node_pos:
                start = node_pos[v]
                cyc = arcs[start:]
                amt = min(flow[c] for c in cyc)
                for c in cyc:
                    flow[c] -= amt
                del arcs[start:]
                node_pos = {k: p for k, p in node_pos.items() if p <= start}
                continue
            node_pos[v] = len(arcs)
        amt = min(flow[a] for a in arcs)
        for a in arcs:
            flow[a] -= amt
        nodes = [s] + [net.heads[a] for a in arcs]
        paths.append((nodes, amt))
        remaining -= amt
    return paths


def _bipartite_max_matching(left: list, right: list, pairs: Iterable[tuple]) -> list[tuple]:
    net = FlowNetwork(0)
    s = net.add_node("s")
    t = net.add_node("t")
    lnode = {x: net.add_node(("L", x)) for x in left}
    rnode = {y: net.add_node(("R", y)) for y in right}
    for x in left:
        net.add_arc(s, lnode[x], 1)
    for y in right:
        net.add_arc(rnode[y], t, 1)
    arc_pair = {}
    for x, y in sorted(set(pairs)):
        arc_pair[net.add_arc(lnode[x], rnode[y], 1)] = (x, y)
    net.source, net.sink = s, t
    res = max_flow_min_cut(net)
    return sorted(p for a, p in arc_pair.items() if res.arc_flow[a] > 0)


def extract_matching(net: FlowNetwork, result: MaxFlowResult, p1: Iterable[int], p2: Iterable[int]) -> list[tuple[int, int]]:
    """Matching ``p1 -> p2`` supported on flow paths; must cover the smaller side entirely.

    The flow is decomposed into paths; the endpoints (by node label) give a
    fractional matching whose support contains an integral matching saturating
    the smaller side whenever the flow saturates it.
    """
    p1 = sorted(set(p1))
    p2 = sorted(set(p2))
    need = min(len(p1), len(p2))
    if need == 0:
        return []
    if result.value < need * result.scale:
        raise NotAMatchingError(f"flow {result.exact_value} does not saturate {need} pairs")
    s1, s2 = set(p1), set(p2)
    support = set()
    for nodes, _amt in decompose_paths(net, result):
        inner = [net.labels[v] for v in nodes[1:-1] if net.labels[v] is not None]
        if not inner:
            continue
        x, y = inner[0], inner[-1]
        if x in s1 and y in s2:
            support.add((x, y))
    matching = _bipartite_max_matching(p1, p2, support)
    if len(matching) < need:
        raise NotAMatchingError(f"support admits only {len(matching)} of {need} pairs")
    return matching


# ---------------------------------------------------------------------------
# embeddings


@dataclass(frozen=True)
class EmbeddingWitness:
    feasible: bool
    routed: Fraction
    demand: Fraction
    congestion: Fraction
    max_edge_load: Fraction


def verify_embedding(g: Graph, demands: Iterable[tuple[int, int, object]], congestion,
                     vertex: bool = False) -> tuple[bool, EmbeddingWitness]:
    """Check that the demand pairs can be routed with per-edge (or per-vertex) load ``<= congestion``.

    Single-commodity check: every ``u`` is fed its demand from a super source
    and every ``v`` drains to a super sink. This is exact for demands forming a
    matching between two disjoint sides whose routing is taken from the flow
    decomposition; it is an upper bound otherwise.
    """
    congestion = Fraction(congestion)
    src: dict[int, Fraction] = {}
    dst: dict[int, Fraction] = {}
    for u, v, w in demands:
        w = Fraction(w)
        src[u] = src.get(u, 0) + w
        dst[v] = dst.get(v, 0) + w
    total = sum(src.values(), Fraction(0))
    if total == 0:
        return True, EmbeddingWitness(True, Fraction(0), Fraction(0), congestion, Fraction(0))
    if vertex:
        net = vertex_capacitated(g, {v: congestion for v in range(g.n)})
        sources = {2 * v: c for v, c in src.items()}
        sinks = {2 * v + 1: c for v, c in dst.items()}
    else:
        net = edge_network(g, congestion)
        sources, sinks = src, dst
    with_super_terminals(net, sources, sinks)
    res = max_flow_min_cut(net)
    check_flow(net, res)
    routed = res.exact_value
    load = Fraction(0)
    if vertex:
        # the split arcs were added first, one pair per vertex
        for v in range(g.n):
            load = max(load, Fraction(res.arc_flow[2 * v], net.scale))
    else:
        for a in range(0, len(net.capacities), 2):
            u, w = net.tail(a), net.heads[a]
            if u < g.n and w < g.n:
                f = abs(res.arc_flow[a] - res.arc_flow[a + 1])
                load = max(load, Fraction(f, net.scale * g.multiplicity(u, w)))
    ok = routed == total
    return ok, EmbeddingWitness(ok, routed, total, congestion, load)


def composed_congestion(per_matching: Iterable) -> Fraction:
    """Congestion of a union of embeddings is at most the sum of the parts."""
    return sum((Fraction(c) for c in per_matching), Fraction(0))
