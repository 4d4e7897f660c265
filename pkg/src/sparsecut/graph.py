"""Undirected multigraphs, cut objects and exact sparsity metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

from .params import GraphFormatError, InvalidCutError, UndefinedConductanceError

INF = math.inf


def _pair(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u <= v else (v, u)


class Graph:
    """Immutable undirected multigraph on vertices ``0..n-1``.

    Parallel edges are stored as multiplicities. Self-loops are rejected unless
    ``allow_self_loops`` is set; they add 2 to a vertex degree but never appear
    in a boundary. ``weights`` is an optional integer measure (>= 1 on
    terminals, 0 elsewhere) and ``terminals`` an optional marked subset.
    """

    __slots__ = ("n", "_mult", "_adj", "_deg", "weights", "terminals", "allow_self_loops")

    def __init__(self, n: int, edges: Iterable = (), *, weights: Mapping[int, int] | None = None,
                 terminals: Iterable[int] | None = None, allow_self_loops: bool = False):
        if n < 0:
            raise ValueError("vertex count must be nonnegative")
        self.n = int(n)
        self.allow_self_loops = allow_self_loops
        mult: dict[tuple[int, int], int] = {}
        for e in edges:
            if len(e) == 2:
                u, v = e
                k = 1
            else:
                u, v, k = e
            u, v, k = int(u), int(v), int(k)
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u},{v}) has an endpoint outside [0,{n})")
            if k < 1:
                raise ValueError("edge multiplicity must be >= 1")
            if u == v and not allow_self_loops:
                raise ValueError(f"self-loop at {u} not allowed")
            key = _pair(u, v)
            mult[key] = mult.get(key, 0) + k
        self._mult = dict(sorted(mult.items()))
        adj: list[dict[int, int]] = [dict() for _ in range(n)]
        deg = [0] * n
        for (u, v), k in self._mult.items():
            if u == v:
                deg[u] += 2 * k
                adj[u][u] = adj[u].get(u, 0) + k
            else:
                adj[u][v] = k
                adj[v][u] = k
                deg[u] += k
                deg[v] += k
        self._adj = adj
        self._deg = deg

        if weights is not None:
            w = {int(v): int(x) for v, x in weights.items() if int(x) != 0}
            for v, x in w.items():
                if not (0 <= v < n):
                    raise ValueError(f"weight on unknown vertex {v}")
                if x < 0:
                    raise ValueError("weights must be nonnegative")
            self.weights = dict(sorted(w.items()))
        else:
            self.weights = None
        if terminals is not None:
            t = frozenset(int(v) for v in terminals)
            for v in t:
                if not (0 <= v < n):
                    raise ValueError(f"terminal {v} outside vertex range")
        elif self.weights is not None:
            t = frozenset(self.weights)
        else:
            t = None
        if t is not None and self.weights is not None:
            for v in t:
                if self.weights.get(v, 0) < 1:
                    raise ValueError(f"terminal {v} must carry weight >= 1")
            for v in self.weights:
                if v not in t:
                    raise ValueError(f"non-terminal {v} carries positive weight")
        self.terminals = t

    # basic accessors -------------------------------------------------
    @property
    def vertices(self) -> range:
        return range(self.n)

    def edges(self) -> list[tuple[int, int, int]]:
        """Sorted ``(u, v, multiplicity)`` triples with ``u <= v``."""
        return [(u, v, k) for (u, v), k in self._mult.items()]

    @property
    def m(self) -> int:
        return sum(self._mult.values())

    def multiplicity(self, u: int, v: int) -> int:
        return self._mult.get(_pair(u, v), 0)

    def adjacency(self, v: int) -> Mapping[int, int]:
        return self._adj[v]

    def degree(self, v: int) -> int:
        return self._deg[v]

    def max_degree(self) -> int:
        return max(self._deg, default=0)

    def volume(self, s: Iterable[int]) -> int:
        return sum(self._deg[v] for v in s)

    def weight(self, v: int) -> int:
        if self.weights is None:
            return 1
        return self.weights.get(v, 0)

    def with_terminals(self, terminals: Iterable[int] | None, weights: Mapping[int, int] | None = None) -> "Graph":
        return Graph(self.n, self.edges(), weights=weights, terminals=terminals,
                     allow_self_loops=self.allow_self_loops)

    def __eq__(self, other):
        return (isinstance(other, Graph) and self.n == other.n and self._mult == other._mult
                and self.weights == other.weights and self.terminals == other.terminals)

    def __hash__(self):
        return hash((self.n, tuple(self._mult.items())))

    def __repr__(self):
        return f"Graph(n={self.n}, m={self.m})"


# ---------------------------------------------------------------------------
# cut validation and metrics


def _as_side(g: Graph, s: Iterable[int]) -> frozenset[int]:
    side = frozenset(int(v) for v in s)
    for v in side:
        if not (0 <= v < g.n):
            raise InvalidCutError(f"vertex {v} not in graph")
    if not side or len(side) >= g.n:
        raise InvalidCutError("cut side must be a nonempty proper subset")
    return side


def edge_boundary(g: Graph, s: Iterable[int]) -> tuple[tuple[int, int], ...]:
    """Edges with exactly one endpoint in ``s``, each repeated by its multiplicity."""
    side = _as_side(g, s)
    out = []
    for (u, v), k in g._mult.items():
        if (u in side) != (v in side):
            out.extend([(u, v)] * k)
    return tuple(out)


def boundary_size(g: Graph, s: Iterable[int]) -> int:
    side = frozenset(s)
    return sum(k for (u, v), k in g._mult.items() if (u in side) != (v in side))


def sparsity(g: Graph, s: Iterable[int]) -> Fraction:
    side = _as_side(g, s)
    return Fraction(boundary_size(g, side), min(len(side), g.n - len(side)))


def conductance(g: Graph, s: Iterable[int]) -> Fraction:
    side = _as_side(g, s)
    vol = g.volume(side)
    other = sum(g._deg) - vol
    denom = min(vol, other)
    if denom == 0:
        raise UndefinedConductanceError("a side has zero volume")
    return Fraction(boundary_size(g, side), denom)


def terminal_sparsity(g: Graph, t: Iterable[int], s: Iterable[int]):
    """Boundary over the smaller terminal count; ``math.inf`` if a side has no terminal."""
    side = _as_side(g, s)
    tset = frozenset(t)
    inside = len(tset & side)
    outside = len(tset) - inside
    if inside == 0 or outside == 0:
        return INF
    return Fraction(boundary_size(g, side), min(inside, outside))


def weighted_sparsity(g: Graph, measure: Mapping[int, int], s: Iterable[int]):
    """Boundary over the smaller measure of the two sides (``inf`` on a zero side)."""
    side = _as_side(g, s)
    inside = sum(measure.get(v, 0) for v in side)
    total = sum(measure.values())
    denom = min(inside, total - inside)
    if denom <= 0:
        return INF
    return Fraction(boundary_size(g, side), denom)


def neighbors(g: Graph, l: Iterable[int]) -> frozenset[int]:
    side = frozenset(l)
    out = set()
    for v in side:
        out.update(g._adj[v])
    return frozenset(out - side)


def set_vertex_sparsity(g: Graph, l: Iterable[int]) -> Fraction:
    """``|N(L)| / |L ∪ N(L)|`` for a nonempty set ``L``."""
    side = frozenset(l)
    if not side:
        raise InvalidCutError("set must be nonempty")
    nb = neighbors(g, side)
    return Fraction(len(nb), len(side | nb))


@dataclass(frozen=True)
class EdgeCut:
    side: frozenset
    boundary_size: int
    sparsity: Fraction
    terminal_sparsity: object = None

    @classmethod
    def from_side(cls, g: Graph, s: Iterable[int], terminals: Iterable[int] | None = None) -> "EdgeCut":
        side = _as_side(g, s)
        t = g.terminals if terminals is None else frozenset(terminals)
        ts = terminal_sparsity(g, t, side) if t else None
        return cls(side, boundary_size(g, side), sparsity(g, side), ts)

    @property
    def small_side(self) -> frozenset:
        return self.side

    def to_dict(self) -> dict:
        from ._serialize import encode
        return {"type": "edge_cut", "side": sorted(self.side), "boundary_size": self.boundary_size,
                "sparsity": encode(self.sparsity), "terminal_sparsity": encode(self.terminal_sparsity)}


@dataclass(frozen=True)
class VertexCut:
    left: frozenset
    separator: frozenset
    right: frozenset
    sparsity: Fraction = field(compare=False)
    terminal_sparsity: object = field(default=None, compare=False)

    @classmethod
    def from_parts(cls, g: Graph, left, separator, right, terminals=None) -> "VertexCut":
        L, C, R = frozenset(left), frozenset(separator), frozenset(right)
        if L & C or L & R or C & R:
            raise InvalidCutError("parts must be disjoint")
        if (L | C | R) != frozenset(range(g.n)):
            raise InvalidCutError("parts must cover every vertex")
        if not L or not R:
            raise InvalidCutError("left and right must be nonempty")
        for v in L:
            for u in g._adj[v]:
                if u in R:
                    raise InvalidCutError(f"edge ({v},{u}) joins left and right")
        sp = Fraction(len(C), min(len(L | C), len(R | C)))
        t = g.terminals if terminals is None else frozenset(terminals)
        ts = _vertex_terminal_value(L, C, R, t) if t else None
        return cls(L, C, R, sp, ts)

    def to_dict(self) -> dict:
        from ._serialize import encode
        return {"type": "vertex_cut", "left": sorted(self.left), "separator": sorted(self.separator),
                "right": sorted(self.right), "sparsity": encode(self.sparsity),
                "terminal_sparsity": encode(self.terminal_sparsity)}


def _vertex_terminal_value(L, C, R, t):
    a = len((L | C) & t)
    b = len((R | C) & t)
    if a == 0 or b == 0:
        return INF
    return Fraction(len(C), min(a, b))


def vertex_sparsity(g: Graph, c: VertexCut) -> Fraction:
    VertexCut.from_parts(g, c.left, c.separator, c.right)
    return Fraction(len(c.separator), min(len(c.left | c.separator), len(c.right | c.separator)))


def vertex_terminal_sparsity(g: Graph, t: Iterable[int], c: VertexCut):
    VertexCut.from_parts(g, c.left, c.separator, c.right)
    return _vertex_terminal_value(c.left, c.separator, c.right, frozenset(t))


# ---------------------------------------------------------------------------
# structure


def induced_subgraph(g: Graph, s: Iterable[int]) -> tuple[Graph, list[int]]:
    """Subgraph on ``s`` relabelled to ``0..|s|-1``; returns it with the back-map list."""
    verts = sorted(set(int(v) for v in s))
    if not verts:
        raise ValueError("induced subgraph needs a nonempty vertex set")
    index = {v: i for i, v in enumerate(verts)}
    edges = [(index[u], index[v], k) for (u, v), k in g._mult.items() if u in index and v in index]
    weights = None
    terminals = None
    if g.weights is not None:
        weights = {index[v]: x for v, x in g.weights.items() if v in index}
    if g.terminals is not None:
        terminals = [index[v] for v in g.terminals if v in index]
        if weights is not None:
            terminals = None if not weights else list(weights)
    return Graph(len(verts), edges, weights=weights, terminals=terminals,
                 allow_self_loops=g.allow_self_loops), verts


def components(g: Graph, removed: Iterable[int] = ()) -> list[frozenset[int]]:
    """Connected components after deleting ``removed``, sorted by smallest vertex."""
    gone = set(removed)
    seen = set(gone)
    out = []
    for start in range(g.n):
        if start in seen:
            continue
        comp = [start]
        seen.add(start)
        stack = [start]
        while stack:
            v = stack.pop()
            for u in g._adj[v]:
                if u not in seen:
                    seen.add(u)
                    comp.append(u)
                    stack.append(u)
        out.append(frozenset(comp))
    return out


def is_connected(g: Graph) -> bool:
    return g.n <= 1 or len(components(g)) == 1


# ---------------------------------------------------------------------------
# text format


def parse_graph(text: str) -> Graph:
    """Parse ``n m [t]`` / ``u v [mult]`` / ``terminal v [weight]`` text."""
    header = None
    edges = []
    terms: dict[int, int] = {}
    explicit_weight = False
    expected_t = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            if header is None:
                if len(parts) not in (2, 3):
                    raise GraphFormatError("header must be 'n m [t]'", lineno)
                nums = [int(p) for p in parts]
                if any(x < 0 for x in nums):
                    raise GraphFormatError("header values must be nonnegative", lineno)
                header = nums
                expected_t = nums[2] if len(nums) == 3 else None
                continue
            if parts[0] == "terminal":
                if len(parts) not in (2, 3):
                    raise GraphFormatError("terminal line must be 'terminal v [weight]'", lineno)
                v = int(parts[1])
                w = 1
                if len(parts) == 3:
                    w = int(parts[2])
                    explicit_weight = True
                if not (0 <= v < header[0]):
                    raise GraphFormatError(f"terminal {v} outside [0,{header[0]})", lineno)
                if w < 1:
                    raise GraphFormatError("terminal weight must be >= 1", lineno)
                if v in terms:
                    raise GraphFormatError(f"duplicate terminal {v}", lineno)
                terms[v] = w
                continue
            if len(parts) not in (2, 3):
                raise GraphFormatError("edge line must be 'u v [mult]'", lineno)
            u, v = int(parts[0]), int(parts[1])
            k = int(parts[2]) if len(parts) == 3 else 1
            n = header[0]
            if not (0 <= u < n and 0 <= v < n):
                raise GraphFormatError(f"edge ({u},{v}) outside [0,{n})", lineno)
            if u == v:
                raise GraphFormatError("self-loops are not allowed in input graphs", lineno)
            if k < 1:
                raise GraphFormatError("multiplicity must be >= 1", lineno)
            edges.append((u, v, k))
        except ValueError as exc:
            if isinstance(exc, GraphFormatError):
                raise
            raise GraphFormatError(f"malformed integer: {exc}", lineno) from None
    if header is None:
        raise GraphFormatError("missing header", None)
    n, m = header[0], header[1]
    total = sum(k for _, _, k in edges)
    if len(edges) != m and total != m:
        raise GraphFormatError(f"header declares {m} edges, found {len(edges)}", None)
    if expected_t is not None and expected_t != len(terms):
        raise GraphFormatError(f"header declares {expected_t} terminals, found {len(terms)}", None)
    if not terms:
        return Graph(n, edges)
    return Graph(n, edges, weights=terms if explicit_weight else None, terminals=list(terms))


def format_graph(g: Graph) -> str:
    """Deterministic text serialisation (edges sorted, terminals sorted)."""
    edges = g.edges()
    header = [str(g.n), str(len(edges))]
    if g.terminals is not None:
        header.append(str(len(g.terminals)))
    lines = [" ".join(header)]
    for u, v, k in edges:
        lines.append(f"{u} {v}" if k == 1 else f"{u} {v} {k}")
    if g.terminals is not None:
        for v in sorted(g.terminals):
            if g.weights is not None:
                lines.append(f"terminal {v} {g.weights[v]}")
            else:
                lines.append(f"terminal {v}")
    return "\n".join(lines) + "\n"


def read_graph(path) -> Graph:
    with open(path, encoding="utf-8") as fh:
        return parse_graph(fh.read())


def write_graph(g: Graph, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_graph(g))
