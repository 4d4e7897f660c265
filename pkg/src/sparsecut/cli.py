"""Command-line entry point: ``sparsecut <subcommand> [options] GRAPH``.

Exit codes: 0 success, 1 usage or I/O error, 2 no qualifying set, 3 randomized failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import oracle as oracle_mod
from ._serialize import dumps, encode
from .cut_matching import run_game
from .graph import format_graph, read_graph
from .params import (NoSuchSet, ParamSet, RandomizedFailure, SparsecutError, as_fraction)
from .pipelines import (sparsest_cut_cut_matching, sse_log_k, vertex_sparsest_cut_cut_matching,
                        vertex_sparsest_cut_lp, weighted_unbalanced_cut)
from .sample_sets import edge_sample_set, vertex_sample_set, verify_sample_set, weighted_sample_set

EXIT_OK, EXIT_USAGE, EXIT_NO_SET, EXIT_RANDOMIZED = 0, 1, 2, 3
THREADS_ENV = "SPARSECUT_THREADS"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _rational(text: str) -> Fraction:
    try:
        return as_fraction(Fraction(text))
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a rational: {text!r}") from exc


def _common(p: argparse.ArgumentParser, graph: bool = True) -> None:
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--verify", action="store_true", help="cross-check against the exact oracle when small enough")
    p.add_argument("--threads", type=int, default=int(os.environ.get(THREADS_ENV, "1")))
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a constant")
    p.add_argument("--mode", choices=("exact", "heuristic"), default="exact")
    p.add_argument("-o", "--output", help="write JSON here instead of stdout")
    if graph:
        p.add_argument("graph", help="graph file")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sparsecut", description="Sparse and small-set cut approximation toolkit.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("sse", help="small set expansion")
    p.add_argument("--phi", type=_rational, required=True)
    p.add_argument("--s", type=int, required=True)
    _common(p)

    for name, help_ in (("sparsest-cut", "sparsest cut via the cut-matching game"),
                        ("vertex-sparsest", "vertex sparsest cut via LP rounding"),
                        ("vertex-sparsest-game", "vertex sparsest cut via the vertex game")):
        _common(sub.add_parser(name, help=help_))

    p = sub.add_parser("unbalanced", help="weighted unbalanced cut (weights from terminal lines)")
    p.add_argument("--tau", type=_rational, required=True)
    p.add_argument("--rho", type=_rational, required=True)
    _common(p)

    p = sub.add_parser("game", help="play the cut-matching game on the graph's terminals")
    p.add_argument("--phi", type=_rational, required=True)
    p.add_argument("--s", type=int, required=True)
    p.add_argument("--vertex", action="store_true")
    p.add_argument("--trace", help="write round-by-round JSON lines here")
    _common(p)

    p = sub.add_parser("oracle", help="exact brute-force optimum")
    p.add_argument("--mode", dest="problem", choices=("sparsest", "sse", "vertex", "ssve"), required=True)
    p.add_argument("--s", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output")
    p.add_argument("graph")

    p = sub.add_parser("verify-sample-set", help="build a sample set and check it against the sparse family")
    p.add_argument("--phi", type=_rational, required=True)
    p.add_argument("--eps", type=_rational, default=Fraction(1, 100))
    p.add_argument("--kind", choices=("edge", "weighted", "vertex"), default="edge")
    p.add_argument("--kmax", type=int, default=3)
    _common(p)

    p = sub.add_parser("gen", help="write generated graphs")
    p.add_argument("name", nargs="?", help="corpus name, or a generator call such as dumbbell:5,5")
    p.add_argument("--list", action="store_true")
    p.add_argument("--corpus-dir", help="write the whole corpus with expected answers into this directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output")
    return parser


def _params(args) -> ParamSet:
    params = ParamSet(seed=args.seed, mode=getattr(args, "mode", "exact"))
    names = {f.name: f for f in dataclasses.fields(ParamSet)}
    overrides = {}
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep or key not in names:
            raise ValueError(f"bad override {item!r}")
        current = getattr(params, key)
        if isinstance(current, Fraction):
            overrides[key] = Fraction(value)
        elif isinstance(current, bool):
            overrides[key] = value.lower() in ("1", "true", "yes")
        elif isinstance(current, int):
            overrides[key] = int(value)
        elif isinstance(current, float):
            overrides[key] = float(value)
        else:
            overrides[key] = value
    return params.with_overrides(**overrides)


def _emit(payload, args) -> None:
    text = dumps(payload)
    if getattr(args, "output", None):
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _oracle_check(kind: str, g, s=None):
    limit = oracle_mod.VERTEX_LIMIT if kind in ("vertex", "ssve") else oracle_mod.EDGE_LIMIT
    if g.n > limit:
        print(f"warning: --verify skipped, n={g.n} exceeds oracle limit {limit}", file=sys.stderr)
        return {"status": "skipped", "reason": f"n exceeds {limit}"}
    if kind == "sparsest":
        ans = oracle_mod.exact_sparsest_cut(g)
    elif kind == "sse":
        ans = oracle_mod.exact_sse(g, s)
    else:
        ans = oracle_mod.exact_vertex_sparsest(g)
    return {"status": "checked", "optimum": encode(ans.value)}


def _answer_dict(ans) -> dict:
    d = ans.to_dict()
    d.pop("telemetry", None)
    return d


def _run(args) -> dict:
    cmd = args.command
    if cmd == "gen":
        return _gen(args)
    g = read_graph(args.graph)
    if cmd == "oracle":
        if args.problem == "sparsest":
            ans = oracle_mod.exact_sparsest_cut(g)
        elif args.problem == "sse":
            ans = oracle_mod.exact_sse(g, args.s if args.s else g.n // 2)
        elif args.problem == "vertex":
            ans = oracle_mod.exact_vertex_sparsest(g)
        else:
            ans = oracle_mod.exact_ssve(g, args.s if args.s else g.n // 2)
        return {"command": cmd, "seed": args.seed, "result": _answer_dict(ans)}

    params = _params(args)
    out = {"command": cmd, "seed": args.seed, "config": params.to_dict(), "threads": args.threads}
    if cmd == "sse":
        res = sse_log_k(g, args.phi, args.s, params)
        check = ("sse", args.s)
    elif cmd == "sparsest-cut":
        res = sparsest_cut_cut_matching(g, params)
        check = ("sparsest", None)
    elif cmd == "vertex-sparsest":
        res = vertex_sparsest_cut_lp(g, params)
        check = ("vertex", None)
    elif cmd == "vertex-sparsest-game":
        res = vertex_sparsest_cut_cut_matching(g, params)
        check = ("vertex", None)
    elif cmd == "unbalanced":
        weights = g.weights if g.weights is not None else (
            {v: 1 for v in g.terminals} if g.terminals is not None else {v: 1 for v in range(g.n)})
        res = weighted_unbalanced_cut(g, weights, args.tau, args.rho, params)
        check = None
    elif cmd == "game":
        terms = sorted(g.terminals) if g.terminals is not None else list(range(g.n))
        game = run_game(g, terms, args.phi, args.s, params, vertex=args.vertex)
        if args.trace:
            import json
            with open(args.trace, "w", encoding="utf-8") as fh:
                for entry in game.trace:
                    fh.write(json.dumps(encode(entry), sort_keys=True) + "\n")
        result = game.result
        out["result"] = result.to_dict() if hasattr(result, "to_dict") else {
            "type": "sparse_cut", "cut": result.cut.to_dict(), "flow": encode(result.flow)}
        out["rounds"] = game.rounds
        return out
    elif cmd == "verify-sample-set":
        return _verify_sample(g, args, params, out)
    else:  # pragma: no cover - argparse restricts choices
        raise ValueError(cmd)
    out["result"] = res.to_dict()
    if args.verify and check is not None:
        out["oracle"] = _oracle_check(check[0], g, check[1])
        if out["oracle"]["status"] == "checked":
            opt = Fraction(out["oracle"]["optimum"])
            out["oracle"]["ratio"] = encode(res.cut.sparsity / opt) if opt else "inf"
    return out


def _verify_sample(g, args, params, out) -> dict:
    if args.kind == "edge":
        ss = edge_sample_set(g, args.eps, args.phi, params)
    elif args.kind == "weighted":
        mu = g.weights if g.weights is not None else {v: 1 for v in range(g.n)}
        ss = weighted_sample_set(g, mu, args.eps, args.phi, params)
    else:
        ss = vertex_sample_set(g, args.eps, args.phi, rng=np.random.default_rng(args.seed), params=params)
    vertex = args.kind == "vertex"
    family = oracle_mod.enumerate_sparse_family(g, args.phi, args.kmax, vertex=vertex)
    bad = verify_sample_set(g, ss, family, factor=params.sample_factor)
    out["sample_set"] = ss.to_dict()
    out["family_size"] = len(family)
    out["violations"] = [{"set": sorted(w), "deviation": encode(dev)} for w, dev in bad]
    return out


def _parse_generator(spec: str, seed: int):
    name, _, argtext = spec.partition(":")
    nums = [int(a) for a in argtext.split(",") if a] if argtext else []
    gens = {
        "complete": oracle_mod.complete, "path": oracle_mod.path, "cycle": oracle_mod.cycle,
        "star": oracle_mod.star, "grid": oracle_mod.grid, "dumbbell": oracle_mod.dumbbell,
        "cliques": oracle_mod.cliques_sharing_vertex, "incidence": oracle_mod.incidence_graph,
        "regular": lambda n, d: oracle_mod.random_regular(n, d, seed),
        "tree": lambda n: oracle_mod.random_tree(n, seed),
        "planted": lambda n: oracle_mod.planted_bisection(n, 0.8, 0.05, seed),
    }
    corpus = oracle_mod.corpus(64)
    if spec in corpus:
        return corpus[spec]
    if name not in gens:
        raise ValueError(f"unknown generator {spec!r}")
    return gens[name](*nums)


def _gen(args) -> dict | None:
    if args.list:
        return {"corpus": sorted(oracle_mod.corpus(64)),
                "generators": ["cliques:a,b,..", "complete:n", "cycle:n", "dumbbell:a,b", "grid:r,c",
                               "incidence:n", "path:n", "planted:n", "regular:n,d", "star:leaves", "tree:n"]}
    if args.corpus_dir:
        d = Path(args.corpus_dir)
        d.mkdir(parents=True, exist_ok=True)
        names = []
        for name, g in sorted(oracle_mod.corpus(16).items()):
            (d / f"{name}.graph").write_text(format_graph(g), encoding="utf-8")
            expected = {"sparsest": _answer_dict(oracle_mod.exact_sparsest_cut(g))}
            try:
                expected["vertex"] = _answer_dict(oracle_mod.exact_vertex_sparsest(g))
            except SparsecutError:
                expected["vertex"] = None
            (d / f"{name}.expected.json").write_text(dumps(expected), encoding="utf-8")
            names.append(name)
        return {"command": "gen", "written": names}
    if not args.name:
        raise ValueError("gen needs a name, --list or --corpus-dir")
    g = _parse_generator(args.name, args.seed)
    text = format_graph(g)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return None


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    try:
        payload = _run(args)
    except NoSuchSet as exc:
        print(f"no such set: {exc}", file=sys.stderr)
        return EXIT_NO_SET
    except RandomizedFailure as exc:
        print(f"randomized failure: {exc}", file=sys.stderr)
        return EXIT_RANDOMIZED
    except (SparsecutError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if payload is not None:
        _emit(payload, args)
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
