"""Command-line front end: ``isospec <subcommand> ...``.

Every report is a JSON object carrying the run configuration, the package
version and a timestamp; everything else in it depends only on the
configuration.  Exit codes: 0 when every requested check passes, 1 when a
check fails, 2 on usage or resource errors (with an error JSON).
"""
from __future__ import annotations

import argparse
import datetime as _dt
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from . import __version__
from .graph_core import (FiniteGraph, GraphError, IntegerLattice, ResourceError, VertexSubset, Window,
                         dumps_graph, generate_family)

THREADS_ENV = "ISOSPEC_THREADS"
EXIT_OK, EXIT_CHECK, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    subcommand: str
    graph: str | None = None
    p: list[float] = field(default_factory=lambda: [2.0])
    seed: int = 0
    threads: int = 1
    budget_vertices: int | None = None
    out: str | None = None
    format: str = "json"
    tol: float | None = None
    options: dict = field(default_factory=dict)


# ------------------------------------------------------------------ output

def _plain(x):
    if isinstance(x, Fraction):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (set, frozenset)):
        return sorted(x)
    raise TypeError(f"cannot serialise {type(x).__name__}")


def _clean(x):
    # NaN and infinity are not JSON; keep them readable
    if isinstance(x, float) and not math.isfinite(x):
        return None if math.isnan(x) else ("inf" if x > 0 else "-inf")
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    return x


def envelope(cfg: RunConfig, result, passed: bool | None) -> dict:
    return {"artifact": "isospec", "version": __version__,
            "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
            "config": asdict(cfg), "pass": passed, "result": result}


def dump_json(obj) -> str:
    return json.dumps(_clean(json.loads(json.dumps(obj, default=_plain))), indent=2, sort_keys=True) + "\n"


def _emit(cfg: RunConfig, text: str) -> None:
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _report(cfg: RunConfig, result, passed: bool | None, csv: str | None = None) -> int:
    if cfg.format == "csv":
        if csv is None:
            raise UsageError(f"{cfg.subcommand} has no CSV output")
        _emit(cfg, csv)
    else:
        _emit(cfg, dump_json(envelope(cfg, result, passed)))
    return EXIT_OK if passed is not False else EXIT_CHECK


# ------------------------------------------------------------------ inputs

def _budget(cfg: RunConfig) -> dict:
    return {} if cfg.budget_vertices is None else {"budget": cfg.budget_vertices}


def resolve_graph(spec: str, cfg: RunConfig) -> tuple[FiniteGraph | Window, VertexSubset | None]:
    """A graph (or window) for the descriptor, plus its natural subset if it has one."""
    if spec.startswith("lamplighter-window:"):
        from .lamplighter import lamplighter_window
        w = lamplighter_window(int(spec.split(":", 1)[1]), **_budget(cfg))
        return w, w.core
    if spec.startswith("file:"):
        from .graph_core import loads_graph
        with open(spec[5:]) as fh:
            return loads_graph(fh.read(), spec[5:]), None
    g = generate_family(spec)
    if cfg.budget_vertices is not None and g.n > cfg.budget_vertices:
        raise ResourceError(f"{spec} has {g.n} vertices, budget {cfg.budget_vertices}")
    return g, None


def _host(w) -> FiniteGraph:
    return w.graph if isinstance(w, Window) else w


def _subset(w, default: VertexSubset | None, text: str | None) -> VertexSubset:
    if text:
        try:
            idx = [int(s) for s in text.split(",") if s.strip()]
        except ValueError as exc:
            raise UsageError(f"bad --subset {text!r}") from exc
        return VertexSubset.from_indices(_host(w), idx)
    if default is None:
        raise UsageError("this graph has no natural subset; pass --subset")
    return default


def resolve_lazy(spec: str):
    """Lazy graph and root for the walk command; finite descriptors fall back to vertex 0."""
    from .lamplighter import lamplighter_lazy
    if spec == "lamplighter":
        g = lamplighter_lazy()
        return g, g.origin()
    if spec.startswith("lattice:"):
        g = IntegerLattice(int(spec.split(":", 1)[1]))
        return g, g.origin()
    return generate_family(spec), 0


# ------------------------------------------------------------------ subcommands

def cmd_gen(cfg: RunConfig, args) -> int:
    g, _ = resolve_graph(args.graph, cfg)
    g = _host(g)
    if cfg.format == "csv":
        _emit(cfg, dumps_graph(g))
        return EXIT_OK
    return _report(cfg, {"name": g.name, "n": g.n, "m": g.m, "regular": g.is_regular,
                         "degree": g.d, "edges": g.edges.tolist()}, None)


def _spectral(cfg: RunConfig, args, with_cheeger: bool) -> int:
    from .spectral import cheeger_inequality, verify_chain
    g, _ = resolve_graph(args.graph, cfg)
    g = _host(g)
    tol = 1e-6 if cfg.tol is None else cfg.tol
    reports = [verify_chain(g, p, tol=tol, restarts=args.restarts, seed=cfg.seed) for p in cfg.p]
    ok = all(r.all_pass for r in reports)
    result = {"reports": [r.to_dict() for r in reports]}
    if with_cheeger:
        ch = cheeger_inequality(g)
        result["cheeger"] = ch.to_dict()
        ok = ok and ch.passed
    rows = ["p,item,lhs,rhs,pass,slack"] + [f"{r.p!r},{c.item},{c.lhs!r},{c.rhs!r},{c.passed},{c.slack!r}"
                                            for r in reports for c in r.chain]
    return _report(cfg, result if with_cheeger else result["reports"][0] if len(reports) == 1 else result,
                   ok, "\n".join(rows) + "\n")


def cmd_constants(cfg: RunConfig, args) -> int:
    return _spectral(cfg, args, False)


def cmd_verify_chain(cfg: RunConfig, args) -> int:
    return _spectral(cfg, args, True)


def cmd_profile(cfg: RunConfig, args) -> int:
    from .isoperimetry import classify_profile, doubling_check, profile_exact
    g, _ = resolve_graph(args.graph, cfg)
    prof = profile_exact(_host(g), args.max_size, limit=args.limit)
    xs = prof.sizes
    result = {"graph": prof.graph, "rows": prof.rows(), "subadditivity_violations": prof.subadditivity_violations(),
              "doubling": doubling_check(prof)}
    try:
        cls = classify_profile(xs, [float(prof.G_of_x[x]) for x in xs])
        result["class"] = {"label": cls.label, "estimate": cls.estimate, "params": cls.params}
    except ValueError as exc:
        result["class"] = {"label": "inconclusive", "reason": str(exc)}
    return _report(cfg, result, None, prof.to_csv())


def cmd_geometry(cfg: RunConfig, args) -> int:
    from .graph_core import induced_subgraph
    from .isoperimetry import geometry, geometry_bound_checks, radial_check, volume_growth
    from .spectral import cheeger_exact, cheeger_heuristic
    w, default = resolve_graph(args.graph, cfg)
    F = _subset(w, default, args.subset)
    rep = geometry(w, F)
    vol = None
    if isinstance(w, Window) and w.lazy is not None and w.lazy.transitive:
        vol = volume_growth(w.lazy, args.rmax)
    elif isinstance(w, FiniteGraph):
        vol = volume_growth(w, min(args.rmax, w.n))
    sub, _ = induced_subgraph(F)
    k1 = None
    if rep.connected and sub.n >= 2:
        k1 = (cheeger_exact(sub) if sub.n <= 20 else cheeger_heuristic(sub)).ratio
    checks = geometry_bound_checks(rep, vol, kappa1_F=float(k1) if k1 else None,
                                   max_degree_F=sub.max_degree if sub.n else None)
    rad = radial_check(w, F, args.K, args.k)
    ok = all(c.passed for c in checks if c.theorem)
    result = {"geometry": rep.to_dict(), "checks": [c.to_dict() for c in checks], "radial": rad.to_dict(),
              "kappa1_F": k1}
    return _report(cfg, result, ok)


def cmd_counterexample(cfg: RunConfig, args) -> int:
    from .counterexample import counterexample_report
    if args.n % args.j:
        raise UsageError("j must divide n")
    rep = counterexample_report(args.n, args.j, args.K, args.k, **_budget(cfg))
    return _report(cfg, rep.to_dict(), rep.all_pass)


def _pair(w, F, args) -> tuple[int, int]:
    if args.v is not None and args.w is not None:
        return args.v, args.w
    from .battery import central_pair, lamplighter_pair
    if isinstance(w, Window) and w.graph.name.startswith("lamplighter-window:"):
        return lamplighter_pair(int(w.graph.name.split(":")[1]))
    return central_pair(w, F)


def cmd_transport(cfg: RunConfig, args) -> int:
    from .transport import harmonic_difference_pipeline
    w, default = resolve_graph(args.graph, cfg)
    F = _subset(w, default, args.subset)
    v, u = _pair(w, F, args)
    p = cfg.p[0]
    rep = harmonic_difference_pipeline(w, F, v, u, p=p, r=args.radius, mode=args.mode,
                                       keep_pattern=cfg.format == "csv" or bool(args.pattern_out))
    if args.pattern_out:
        with open(args.pattern_out, "w") as fh:
            fh.write(rep.pattern.to_csv())
    tol = 1e-10 if cfg.tol is None else cfg.tol
    ok = rep.residual < tol and (p != 2 or rep.norm_total <= rep.certified_bound)
    return _report(cfg, rep.to_dict(), ok, rep.pattern.to_csv() if rep.pattern is not None else None)


def cmd_folner(cfg: RunConfig, args) -> int:
    from .transport import eps0_r0, folner_profile
    w, default = resolve_graph(args.graph, cfg)
    F = _subset(w, default, args.subset)
    rows = []
    ok = True
    for e in args.eps:
        eps = Fraction(e).limit_denominator(10 ** 6)
        prof = folner_profile(w, F, eps_min=eps, **_budget(cfg))
        r = prof.radius(eps)
        bound = prof.lemma_bound(eps)
        good = r is None or Fraction(r) >= bound
        ok = ok and good
        rows.append({"eps": str(eps), "radius": r, "lemma_bound": float(bound), "lemma_ok": good})
    result = {"radii": rows}
    try:
        result["crossing"] = eps0_r0(w, F).to_dict()
    except GraphError as exc:
        result["crossing"] = {"error": str(exc)}
    csv = "eps,radius,lemma_bound\n" + "".join(f"{r['eps']},{r['radius']},{r['lemma_bound']!r}\n" for r in rows)
    return _report(cfg, result, ok, csv)


def cmd_walk(cfg: RunConfig, args) -> int:
    from .walks import fit_gamma, return_probability
    g, x = resolve_lazy(args.graph)
    series = return_probability(g, x, args.k_max)
    result = {"bipartite": series.bipartite, "method": series.method, "notes": series.notes,
              "max_relative_loss": series.max_relative_loss, "k_max": args.k_max,
              "rho": series.rho.tolist(), "loss": series.loss.tolist()}
    if args.fit:
        lo, _, hi = args.fit.partition(":")
        k_lo, k_hi = int(lo), int(hi or args.k_max)
        result["fit"] = fit_gamma(series.rho, k_lo, k_hi).to_dict()
        result["loss_in_range"] = float(series.loss[k_lo:k_hi + 1].max())
    tol = cfg.tol
    ok = None if tol is None else bool(series.max_relative_loss < tol)
    return _report(cfg, result, ok, series.to_csv())


def cmd_suite(cfg: RunConfig, args) -> int:
    from .battery import run_battery
    only = None if not args.only else {int(s) for s in args.only.split(",")}
    results = run_battery(quick=args.quick, seed=cfg.seed, only=only)
    for c in results:
        print(c.line(), file=sys.stderr)
    ok = all(c.passed for c in results)
    csv = "criterion,name,pass,seconds\n" + "".join(
        f"{c.number},{c.name},{c.passed},{c.seconds:.3f}\n" for c in results)
    return _report(cfg, {"quick": args.quick, "criteria": [c.to_dict() for c in results]}, ok, csv)


COMMANDS = {
    "gen": cmd_gen, "constants": cmd_constants, "verify-chain": cmd_verify_chain, "profile": cmd_profile,
    "geometry": cmd_geometry, "counterexample": cmd_counterexample, "transport": cmd_transport,
    "folner": cmd_folner, "walk": cmd_walk, "suite": cmd_suite,
}


# ------------------------------------------------------------------ parser

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--p", type=float, action="append", help="exponent p (repeatable)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=None, help=f"recorded only; else ${THREADS_ENV}")
    common.add_argument("--budget-vertices", type=int, default=None)
    common.add_argument("--tol", type=float, default=None)
    common.add_argument("--out", default=None)
    common.add_argument("--format", choices=("json", "csv"), default="json")

    ap = _Parser(prog="isospec", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    def add(name, help_):
        return sub.add_parser(name, parents=[common], help=help_)

    s = add("gen", "build a graph; CSV format writes the 'n m / u v' text form")
    s.add_argument("graph")
    for name, h in (("constants", "spectral constants"), ("verify-chain", "inequality chain with verdicts")):
        s = add(name, h)
        s.add_argument("graph")
        s.add_argument("--restarts", type=int, default=32)
    s = add("profile", "isoperimetric profile")
    s.add_argument("graph")
    s.add_argument("--max-size", type=int, default=None)
    s.add_argument("--limit", type=int, default=20, help="largest graph enumerated exhaustively")
    s = add("geometry", "inradius, diameter and the geometric lemmas for a subset")
    s.add_argument("graph")
    s.add_argument("--subset", default=None, help="comma-separated vertex indices")
    s.add_argument("--rmax", type=int, default=8)
    s.add_argument("--K", type=float, default=1.0)
    s.add_argument("--k", type=float, default=1.0)
    s = add("counterexample", "the lamplighter sets F_{n;j}")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--j", type=int, required=True)
    s.add_argument("--K", type=float, default=1.0)
    s.add_argument("--k", type=float, default=1.0)
    s = add("transport", "harmonic-difference transport pattern")
    s.add_argument("graph")
    s.add_argument("--subset", default=None)
    s.add_argument("--v", type=int, default=None)
    s.add_argument("--w", type=int, default=None)
    s.add_argument("--mode", choices=("radial", "folner"), default="radial")
    s.add_argument("--radius", type=int, default=None)
    s.add_argument("--pattern-out", default=None, help="write the pattern as CSV u,v,flow")
    s = add("folner", "Følner radii and the eps0/r0 crossing")
    s.add_argument("graph")
    s.add_argument("--subset", default=None)
    s.add_argument("--eps", type=float, nargs="+", default=[0.1, 0.25, 0.5, 0.75])
    s = add("walk", "return probabilities and the decay fit")
    s.add_argument("graph", help="lamplighter, lattice:D or a finite descriptor")
    s.add_argument("--k-max", type=int, default=200)
    s.add_argument("--fit", default=None, help="k range as KMIN:KMAX")
    s = add("suite", "acceptance battery")
    s.add_argument("--quick", action="store_true")
    s.add_argument("--only", default=None, help="comma-separated criterion numbers")
    return ap


def _threads(flag: int | None) -> int:
    if flag:
        return flag
    env = os.environ.get(THREADS_ENV)
    if env and env.isdigit() and int(env) > 0:
        return int(env)
    return os.cpu_count() or 1


def _config(args) -> RunConfig:
    skip = {"subcommand", "graph", "p", "seed", "threads", "budget_vertices", "out", "format", "tol"}
    return RunConfig(args.subcommand, getattr(args, "graph", None), args.p or [2.0], args.seed,
                     _threads(args.threads), args.budget_vertices, args.out, args.format, args.tol,
                     {k: v for k, v in sorted(vars(args).items()) if k not in skip})


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    cfg = None
    try:
        args = build_parser().parse_args(argv)
        cfg = _config(args)
        if any(p < 1 for p in cfg.p):
            raise UsageError("p must be >= 1")
        return COMMANDS[args.subcommand](cfg, args)
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except (UsageError, GraphError, ResourceError, ValueError, MemoryError, OSError) as exc:
        err = {"error": type(exc).__name__, "message": str(exc), "argv": list(argv), "version": __version__}
        text = dump_json(err)
        if cfg is not None and cfg.out:
            try:
                _emit(cfg, text)
            except OSError:
                sys.stderr.write(text)
        else:
            sys.stdout.write(text)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
