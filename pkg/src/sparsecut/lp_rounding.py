"""LP relaxations for small-set (terminal) expansion and vertex separators, plus
randomized region-growing roundings.

Every ``min{a, b}`` inside a spreading constraint is linearized with an
auxiliary variable bounded by both arguments. Constraints are stored as a
sparse ``A x <= b`` system and solved with HiGHS through
:func:`scipy.optimize.linprog`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

import numpy as np
from scipy.optimize import linprog
from scipy.sparse import coo_matrix

from .graph import Graph, VertexCut, boundary_size, neighbors
from .params import NoSuchSet, PreconditionError, RandomizedFailure, clamped_log


@dataclass
class LpInstance:
    kind: str
    n: int
    terminals: tuple
    weights: dict
    s: int
    ell: int | None
    columns: list = field(default_factory=list)
    index: dict = field(default_factory=dict)
    rows: list = field(default_factory=list)
    cols: list = field(default_factory=list)
    vals: list = field(default_factory=list)
    rhs: list = field(default_factory=list)
    row_kind: list = field(default_factory=list)
    objective: dict = field(default_factory=dict)
    lazy_triangles: bool = False

    def var(self, key) -> int:
        if key not in self.index:
            self.index[key] = len(self.columns)
            self.columns.append(key)
        return self.index[key]

    def dvar(self, u: int, v: int) -> int:
        return self.index[("d", min(u, v), max(u, v))]

    def add_row(self, kind: str, terms: Mapping[int, float], rhs: float) -> None:
        r = len(self.rhs)
        for c, a in terms.items():
            if a:
                self.rows.append(r)
                self.cols.append(c)
                self.vals.append(float(a))
        self.rhs.append(float(rhs))
        self.row_kind.append(kind)

    @property
    def num_rows(self) -> int:
        return len(self.rhs)

    def matrix(self):
        return coo_matrix((self.vals, (self.rows, self.cols)),
                          shape=(self.num_rows, len(self.columns))).tocsr()

    def cost_vector(self) -> np.ndarray:
        c = np.zeros(len(self.columns))
        for j, a in self.objective.items():
            c[j] = a
        return c

    def kind_counts(self) -> dict:
        out: dict = {}
        for k in self.row_kind:
            out[k] = out.get(k, 0) + 1
        return out


def _add_metric(inst: LpInstance) -> None:
    n = inst.n
    for u in range(n):
        for v in range(u + 1, n):
            inst.var(("d", u, v))
    for v in range(n):
        inst.var(("y", v))


def _add_triangles(inst: LpInstance) -> None:
    n = inst.n
    for u in range(n):
        for v in range(u + 1, n):
            duv = inst.dvar(u, v)
            for w in range(n):
                if w == u or w == v:
                    continue
                inst.add_row("triangle", {duv: 1, inst.dvar(u, w): -1, inst.dvar(w, v): -1}, 0)


def _violated_triangles(D: np.ndarray, tol: float, cap: int) -> list:
    """Triples ``(u, v, w)``, ``u < v``, with ``d(u,v) > d(u,w) + d(w,v) + tol``, worst first.

    ``w`` equal to an endpoint gives a gap of exactly zero, so only ``u < v`` needs masking.
    """
    n = D.shape[0]
    gap = D[:, :, None] - D[:, None, :] - D.T[None, :, :]
    gap[np.tril_indices(n)] = -np.inf
    flat = np.flatnonzero(gap > tol)
    if flat.size > cap:
        flat = flat[np.argsort(-gap.ravel()[flat], kind="stable")[:cap]]
    return sorted(zip(*(a.tolist() for a in np.unravel_index(flat, gap.shape))))


def _add_y_differences(inst: LpInstance) -> None:
    n = inst.n
    for u in range(n):
        for v in range(n):
            if u != v:
                inst.add_row("y_difference", {inst.index[("y", u)]: 1, inst.index[("y", v)]: -1,
                                              inst.dvar(u, v): -1}, 0)


def _add_spreading(inst: LpInstance, family: str, centers, others, coeff, total: float) -> None:
    """``sum_u coeff(u) * min(d(u,v), y_v) >= total * y_v`` for every centre ``v``."""
    for v in centers:
        yv = inst.index[("y", v)]
        terms = {yv: total}
        for u in others:
            if u == v:
                continue
            z = inst.var((family, u, v))
            inst.add_row(f"{family}_le_d", {z: 1, inst.dvar(u, v): -1}, 0)
            inst.add_row(f"{family}_le_y", {z: 1, yv: -1}, 0)
            terms[z] = terms.get(z, 0) - coeff(u)
        inst.add_row(f"{family}_spread", terms, 0)


def build_sse_lp(g: Graph, terminals: Iterable[int], x: Mapping[int, int], s: int, ell: int,
                 lazy: bool = False) -> LpInstance:
    """Relaxation of: a set of at most ``s`` vertices with weight ``ell`` and few boundary edges.

    With ``lazy`` the triangle rows are left out and :func:`solve_lp` adds the
    violated ones on demand; the optimum is the same.
    """
    T = tuple(sorted(set(terminals)))
    n = g.n
    weights = {int(v): int(w) for v, w in x.items() if w}
    for v, w in weights.items():
        if v not in T:
            raise PreconditionError("weights must be supported on the terminals")
        if w < 1:
            raise PreconditionError("weights must be positive integers")
    K = sum(weights.values())
    if not 1 <= s <= n:
        raise PreconditionError("need 1 <= s <= n")
    if not 1 <= ell <= K:
        raise PreconditionError("need 1 <= ell <= x(V)")
    inst = LpInstance("sse", n, T, weights, s, ell)
    _add_metric(inst)
    for u, v, k in g.edges():
        if u != v:
            j = inst.dvar(u, v)
            inst.objective[j] = inst.objective.get(j, 0) + k
    _add_spreading(inst, "z1", range(n), range(n), lambda u: 1, n - s)
    support = sorted(weights)
    _add_spreading(inst, "z2", range(n), support, lambda u: weights[u], K - ell)
    inst.add_row("weight_budget", {inst.index[("y", v)]: -w for v, w in weights.items()}, -ell)
    inst.add_row("size_budget", {inst.index[("y", v)]: 1 for v in range(n)}, s)
    _finish_metric(inst, lazy)
    return inst


def sse_row_count(n: int, support: int) -> int:
    """Closed-form number of constraints of :func:`build_sse_lp`."""
    pairs = n * (n - 1) // 2
    z1 = n * (n - 1)
    z2 = support * (n - 1)
    return 2 * z1 + n + 2 * z2 + n + 2 + pairs * (n - 2) + n * (n - 1)


def _finish_metric(inst: LpInstance, lazy: bool) -> None:
    if lazy:
        inst.lazy_triangles = True
    else:
        _add_triangles(inst)
    _add_y_differences(inst)


def build_vertex_lp(g: Graph, terminals: Iterable[int], s: int, lazy: bool = False) -> LpInstance:
    """Relaxation of: a vertex cut whose left side holds ``s`` terminals, minimizing its separator."""
    T = tuple(sorted(set(terminals)))
    n = g.n
    if not 1 <= s <= len(T):
        raise PreconditionError("need 1 <= s <= |T|")
    inst = LpInstance("vertex", n, T, {v: 1 for v in T}, s, None)
    _add_metric(inst)
    for v in range(n):
        inst.objective[inst.var(("b", v))] = 1
    _add_spreading(inst, "z", T, T, lambda u: 1, len(T) - s)
    inst.add_row("terminal_budget", {inst.index[("y", v)]: -1 for v in T}, -s)
    if not lazy:
        _add_triangles(inst)
    else:
        inst.lazy_triangles = True
    simple = [(u, v) for u, v, _k in g.edges() if u != v]
    for a, b in simple:
        for w, v in ((a, b), (b, a)):
            for u in range(n):
                if u == v:
                    continue
                terms = {inst.dvar(u, v): 1, inst.index[("b", v)]: -1, inst.index[("b", w)]: -1}
                if u != w:
                    terms[inst.dvar(u, w)] = -1
                inst.add_row("edge_step", terms, 0)
    _add_y_differences(inst)
    return inst


def vertex_row_count(n: int, t: int, simple_edges: int) -> int:
    pairs = n * (n - 1) // 2
    z = t * (t - 1)
    return 2 * z + t + 1 + pairs * (n - 2) + 2 * simple_edges * (n - 1) + n * (n - 1)


# ---------------------------------------------------------------------------
# solving


@dataclass
class LpSolution:
    instance: LpInstance
    values: np.ndarray
    objective: float
    residual: float
    distance: np.ndarray
    y: np.ndarray
    b: np.ndarray | None

    def d(self, u: int, v: int) -> float:
        return float(self.distance[u, v])

    def to_dict(self) -> dict:
        return {"kind": self.instance.kind, "objective": {"float": repr(self.objective)},
                "residual": {"float": repr(self.residual)},
                "y": [{"float": repr(float(v))} for v in self.y]}


def _distance_matrix(inst: LpInstance, xval: np.ndarray) -> np.ndarray:
    n = inst.n
    D = np.zeros((n, n))
    iu = np.triu_indices(n, 1)
    D[iu] = xval[[inst.dvar(u, v) for u, v in zip(*iu)]]
    return D + D.T


def solve_lp(inst: LpInstance, tol: float = 1e-7, batch: int | None = None) -> LpSolution:
    """Solve with HiGHS; infeasibility means no qualifying set exists.

    Lazy instances are re-solved with the worst violated triangle rows added
    until none is violated by more than ``tol / 10``.
    """
    batch = batch or 20 * inst.n * inst.n
    while True:
        A = inst.matrix()
        bvec = np.asarray(inst.rhs)
        res = linprog(inst.cost_vector(), A_ub=A, b_ub=bvec, bounds=(0, None), method="highs",
                      options={"primal_feasibility_tolerance": 1e-9, "dual_feasibility_tolerance": 1e-9})
        if res.status == 2:
            raise NoSuchSet("LP relaxation is infeasible")
        if res.status != 0:
            raise RuntimeError(f"LP solver failed: {res.message}")
        xval = np.maximum(res.x, 0.0)
        if not inst.lazy_triangles:
            break
        cuts = _violated_triangles(_distance_matrix(inst, xval), tol / 10, batch)
        if not cuts:
            break
        for u, v, w in cuts:
            inst.add_row("triangle", {inst.dvar(u, v): 1, inst.dvar(u, w): -1, inst.dvar(w, v): -1}, 0)
    residual = float(max(0.0, (A @ xval - bvec).max(initial=0.0)))
    if residual > tol:
        raise RuntimeError(f"LP residual {residual} above tolerance {tol}")
    n = inst.n
    D = _distance_matrix(inst, xval)
    y = np.array([xval[inst.index[("y", v)]] for v in range(n)])
    b = None
    if inst.kind == "vertex":
        b = np.array([xval[inst.index[("b", v)]] for v in range(n)])
    return LpSolution(inst, xval, float(res.fun), residual, D, y, b)


def to_lp_format(inst: LpInstance) -> str:
    """CPLEX LP text, for cross-checking with external solvers."""
    names = []
    for key in inst.columns:
        names.append("_".join(str(p) for p in key))
    A = inst.matrix().tocoo()
    by_row: dict = {}
    for r, c, a in zip(A.row, A.col, A.data):
        by_row.setdefault(int(r), []).append((int(c), float(a)))

    def expr(items):
        parts = []
        for c, a in items:
            sign = "-" if a < 0 else "+"
            parts.append(f"{sign} {abs(a):.17g} {names[c]}")
        text = " ".join(parts) if parts else "0"
        return text[2:] if text.startswith("+ ") else text

    lines = ["\\ " + inst.kind + " relaxation", "Minimize", " obj: " + expr(sorted(inst.objective.items())),
             "Subject To"]
    for r in range(inst.num_rows):
        lines.append(f" c{r}: {expr(sorted(by_row.get(r, [])))} <= {inst.rhs[r]:.17g}")
    lines.append("Bounds")
    lines.extend(f" {nm} >= 0" for nm in names)
    lines.append("End")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# rounding


def _slack(sol: LpSolution) -> float:
    return 10 * max(sol.residual, 1e-9) * sol.instance.n ** 2


def ball(sol: LpSolution, v: int, r: float) -> frozenset:
    """``{u : d(u, v) <= r * y_v}``, asserting the spreading-implied size bounds."""
    if not 0 <= r < 1:
        raise PreconditionError("radius must lie in [0, 1)")
    yv = float(sol.y[v])
    members = frozenset(int(u) for u in np.flatnonzero(sol.distance[v] <= r * yv)) | {v}
    inst = sol.instance
    if yv > 0:
        slack = _slack(sol) / yv
        if inst.kind == "sse":
            assert len(members) <= (inst.s + slack) / (1 - r), "ball larger than s/(1-r)"
            xw = sum(inst.weights.get(u, 0) for u in members)
            assert xw <= (inst.ell + slack) / (1 - r), "ball weight larger than ell/(1-r)"
        else:
            tset = set(inst.terminals)
            if v in tset:
                assert len(members & tset) <= (inst.s + slack) / (1 - r), "ball holds too many terminals"
    return members


def _exact(value: float) -> Fraction:
    return Fraction(value)


@dataclass(frozen=True)
class CarveRecord:
    threshold: float
    radius: float
    order: tuple
    clusters: tuple

    def to_dict(self) -> dict:
        return {"threshold": {"float": repr(self.threshold)}, "radius": {"float": repr(self.radius)},
                "order": list(self.order), "clusters": [sorted(c) for c in self.clusters]}


def _carve(sol: LpSolution, candidates, excluded: frozenset, rng) -> CarveRecord:
    delta = float(rng.random())
    X = [v for v in candidates if v not in excluded and delta <= sol.y[v] <= 2 * delta]
    order = tuple(int(v) for v in rng.permutation(np.array(X, dtype=np.int64))) if X else ()
    r = float(rng.uniform(0.05, 0.1))
    used = set(excluded)
    clusters = []
    for center in order:
        B = ball(sol, center, r)
        C = frozenset(u for u in B if u not in used)
        if C:
            assert C <= B
        used |= C
        clusters.append(C)
    return CarveRecord(delta, r, order, tuple(clusters))


def sse_score(g: Graph, x: Mapping[int, int], s: int, ell: int, lp_value: float, C: frozenset):
    """Exact f-score of a candidate cluster; ``None`` for the empty set."""
    if not C:
        return None
    weight = sum(x.get(v, 0) for v in C)
    cut = boundary_size(g, C) if len(C) < g.n else 0
    base = Fraction(weight) - Fraction(ell, 10 * s) * len(C)
    if lp_value <= 0:
        return base if cut == 0 else Fraction(-1)
    coef = Fraction(ell) / (200 * _exact(lp_value) * _exact(clamped_log(ell)))
    return base - coef * cut


def sse_iteration(g: Graph, terminals, x, s, ell, sol: LpSolution, rng, excluded=frozenset()):
    """One inner iteration: carve, draw one slot out of ``n``; returns ``(C, f, record)``."""
    rec = _carve(sol, sorted(terminals), frozenset(excluded), rng)
    slot = int(rng.integers(g.n))
    C = rec.clusters[slot] if slot < len(rec.clusters) else frozenset()
    return C, sse_score(g, x, s, ell, sol.objective, C), rec


@dataclass
class RoundingResult:
    chosen: frozenset
    clusters: list
    iterations: int
    trace: list

    def to_dict(self) -> dict:
        return {"set": sorted(self.chosen), "clusters": [sorted(c) for c in self.clusters],
                "iterations": self.iterations}


def default_reps(n: int, c_rep: int = 4) -> int:
    return math.ceil(c_rep * n * math.log(n + 1))


def round_sse(g: Graph, terminals, x: Mapping[int, int], s: int, ell: int, sol: LpSolution, rng,
              reps: int | None = None, keep_trace: bool = False) -> RoundingResult:
    """Grow ``Y`` from clusters with positive f-score until it is large or heavy enough."""
    reps = reps or default_reps(g.n)
    x = {int(v): int(w) for v, w in x.items()}
    Y: set = set()
    clusters = []
    trace = []
    total = 0
    while len(Y) <= s and sum(x.get(v, 0) for v in Y) * 4 <= ell:
        for _ in range(reps):
            total += 1
            C, f, rec = sse_iteration(g, terminals, x, s, ell, sol, rng, frozenset(Y))
            if keep_trace:
                trace.append({**rec.to_dict(), "picked": sorted(C),
                              "f": None if f is None else f"{f.numerator}/{f.denominator}"})
            if f is not None and f > 0:
                assert not (C & Y)
                Y |= C
                clusters.append(C)
                break
        else:
            raise RandomizedFailure(f"no cluster with positive score in {reps} attempts")
    Yf = frozenset(Y)
    xY = sum(x.get(v, 0) for v in Yf)
    assert len(Yf) <= 10 * s, "rounded set too large"
    assert Fraction(ell, 10) <= xY <= 3 * ell, "rounded set weight outside [ell/10, 3 ell]"
    cut = boundary_size(g, Yf) if len(Yf) < g.n else 0
    bound = 200 * _exact(clamped_log(ell)) * _exact(max(sol.objective, 0.0)) * xY / ell
    assert cut <= bound, "rounded set boundary exceeds the LP-based bound"
    return RoundingResult(Yf, clusters, total, trace)


def vertex_score(g: Graph, terminals, s: int, lp_value: float, U: frozenset):
    if not U:
        return None
    tset = frozenset(terminals)
    nb = neighbors(g, U)
    base = Fraction(len(U & tset))
    if lp_value <= 0:
        return base if not nb else Fraction(-1)
    return base - Fraction(s) / (2000 * _exact(lp_value) * _exact(clamped_log(s))) * len(nb)


def _split_groups(clusters, tset):
    """Greedy two-way split by terminal count, heaviest cluster first."""
    ordered = sorted((c for c in clusters if c), key=lambda c: (-len(c & tset), min(c)))
    groups = [set(), set()]
    load = [0, 0]
    for c in ordered:
        i = 0 if load[0] <= load[1] else 1
        groups[i] |= c
        load[i] += len(c & tset)
    return [frozenset(gr) for gr in groups], load


def vertex_iteration(g: Graph, terminals, s: int, sol: LpSolution, rng):
    """One iteration of the separator rounding; returns ``(U', f, accepted_cut_or_None, record)``."""
    T = sorted(set(terminals))
    tset = frozenset(T)
    rec = _carve(sol, T, frozenset(), rng)
    U = frozenset().union(*rec.clusters) if rec.clusters else frozenset()
    if 2 * len(U & tset) < len(T):
        Up = U
    else:
        groups, load = _split_groups(rec.clusters, tset)
        ok = [i for i in (0, 1) if 2 * load[i] <= len(T)]
        if not ok:
            return frozenset(), None, None, rec
        Up = groups[max(ok, key=lambda i: (load[i], -i))]
    f = vertex_score(g, T, s, sol.objective, Up)
    cut = None
    if f is not None and f > 0:
        nb = neighbors(g, Up)
        rest = frozenset(range(g.n)) - Up - nb
        if 4 * len(rest & tset) >= len(T) and rest:
            cut = VertexCut.from_parts(g, Up, nb, rest, T)
            bound = 2000 * _exact(clamped_log(s)) * _exact(max(sol.objective, 0.0)) * len(Up & tset) / s
            assert len(nb) <= bound, "separator exceeds the LP-based bound"
    return Up, f, cut, rec


def round_vertex(g: Graph, terminals, s: int, sol: LpSolution, rng, reps: int | None = None,
                 keep_trace: bool = False):
    """Repeat separator rounding until a positive-score set leaves a quarter of the terminals behind."""
    reps = reps or default_reps(g.n)
    trace = []
    for i in range(1, reps + 1):
        Up, f, cut, rec = vertex_iteration(g, terminals, s, sol, rng)
        if keep_trace:
            trace.append({**rec.to_dict(), "picked": sorted(Up),
                          "f": None if f is None else f"{f.numerator}/{f.denominator}"})
        if cut is not None:
            return cut, RoundingResult(Up, list(rec.clusters), i, trace)
    raise RandomizedFailure(f"separator rounding failed in {reps} attempts")
