"""Isoperimetric profiles, optimal sets, inradius and related geometry."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.sparse import csgraph

from . import _subsets
from .graph_core import (FiniteGraph, GraphError, LazyGraph, VertexSubset, Window, ball_labels,
                         bfs_distances, boundary_size, induced_subgraph)

EXACT_DIAMETER_LIMIT = 10_000
SAMPLED_MAX_SIZE = 8


@dataclass
class IsoProfile:
    sizes: list[int]
    F_of_x: dict[int, int]
    witnesses: dict[int, tuple[int, ...]]
    exact: dict[int, bool]
    graph: str = ""

    @property
    def G_of_x(self) -> dict[int, Fraction]:
        return {x: Fraction(self.F_of_x[x], x) for x in self.sizes}

    @property
    def G_down(self) -> dict[int, Fraction]:
        out, run = {}, None
        for x in self.sizes:
            g = Fraction(self.F_of_x[x], x)
            run = g if run is None else min(run, g)
            out[x] = run
        return out

    @property
    def J(self) -> dict[int, Fraction]:
        return {x: 1 / g for x, g in self.G_of_x.items() if g}

    @property
    def J_up(self) -> dict[int, Fraction]:
        return {x: 1 / g for x, g in self.G_down.items() if g}

    @property
    def F_up(self) -> dict[int, Fraction]:
        """x * G_down(x), the smallest boundary a set of size x could have under the running minimum."""
        return {x: x * g for x, g in self.G_down.items()}

    def subadditivity_violations(self) -> list[tuple[int, int]]:
        F = self.F_of_x
        bad = []
        for a in self.sizes:
            for b in self.sizes:
                if b < a or a + b not in F:
                    continue
                if all(self.exact[s] for s in (a, b, a + b)) and F[a + b] > F[a] + F[b]:
                    bad.append((a, b))
        return bad

    def rows(self) -> list[dict]:
        G, Gd = self.G_of_x, self.G_down
        return [{"x": x, "F": self.F_of_x[x], "G": float(G[x]), "Gdown": float(Gd[x]),
                 "exact": self.exact[x]} for x in self.sizes]

    def to_csv(self) -> str:
        lines = ["x,F,G,Gdown,exact"]
        for r in self.rows():
            lines.append(f"{r['x']},{r['F']},{r['G']!r},{r['Gdown']!r},{str(r['exact']).lower()}")
        return "\n".join(lines) + "\n"


def _lex_better(a: tuple, b: tuple | None) -> bool:
    return b is None or a < b


def profile_exact(g: FiniteGraph, max_size: int | None = None,
                  limit: int = _subsets.EXHAUSTIVE_LIMIT) -> IsoProfile:
    """F(x), G(x) and G_down(x) for 1 <= x <= min(max_size, |V|/2).

    Small graphs are enumerated exhaustively.  On larger graphs sizes up to 8
    are covered by enumerating connected subsets only; those entries are upper
    bounds and marked inexact.
    """
    top = g.n // 2 if max_size is None else min(max_size, g.n // 2)
    if top < 1:
        raise GraphError("graph too small for a profile")
    if g.n <= limit:
        t = _subsets.minimum_boundaries(g, top, limit=limit)
        sizes = sorted(t.min_boundary)
        return IsoProfile(sizes, t.min_boundary, t.witness, {x: True for x in sizes}, g.name)
    if top > SAMPLED_MAX_SIZE:
        raise GraphError(f"exact profile needs |V| <= {limit}; for larger graphs request "
                         f"max_size <= {SAMPLED_MAX_SIZE} (sampled connected-subset mode)")
    deg = g.degree
    best: dict[int, int] = {}
    wit: dict[int, tuple] = {}
    for sub in _subsets.connected_subsets(g, top):
        idx = np.fromiter(sub, dtype=np.int64)
        mask = np.zeros(g.n, dtype=bool)
        mask[idx] = True
        nb = np.concatenate([g.neighbors(v) for v in idx])
        b = int(deg[idx].sum()) - int(np.count_nonzero(mask[nb]))
        x = len(sub)
        if x not in best or b < best[x] or (b == best[x] and _lex_better(sub, wit[x])):
            best[x], wit[x] = b, sub
    sizes = sorted(best)
    return IsoProfile(sizes, best, wit, {x: False for x in sizes}, g.name)


@dataclass
class OptimalSet:
    size: int
    witness: tuple[int, ...]
    ratio: Fraction


def optimal_sets(profile: IsoProfile) -> list[OptimalSet]:
    """Sizes whose witness attains the running minimum: G(x) = G_down(x)."""
    G, Gd = profile.G_of_x, profile.G_down
    return [OptimalSet(x, profile.witnesses[x], G[x]) for x in profile.sizes
            if profile.exact[x] and G[x] == Gd[x]]


def doubling_check(profile: IsoProfile) -> list[dict]:
    """For each optimal size n with 2n covered: is there an optimal size in (n, 2n]?

    This is guaranteed when two disjoint non-adjacent copies of the witness
    fit, i.e. whenever F(2n) <= 2 F(n); the record says whether that holds.
    """
    opt = {o.size for o in optimal_sets(profile)}
    out = []
    for n in sorted(opt):
        if 2 * n not in profile.F_of_x:
            continue
        hosts = profile.F_of_x[2 * n] <= 2 * profile.F_of_x[n]
        found = any(n < m <= 2 * n for m in opt)
        out.append({"n": n, "hosts_two_copies": hosts, "next_optimal_within_2n": found,
                    "pass": found or not hosts})
    return out


# ------------------------------------------------------------------ geometry

def _ambient(w: Window | FiniteGraph) -> tuple[FiniteGraph, np.ndarray]:
    """Ambient graph and the mask of vertices whose full neighbourhood is present."""
    if isinstance(w, FiniteGraph):
        return w, np.ones(w.n, dtype=bool)
    complete = np.ones(w.graph.n, dtype=bool)
    if w.layers and len(w.layers) > 1:
        complete[w.layers[-1]] = False
    return w.graph, complete


def distance_to_complement(w: Window | FiniteGraph, F: VertexSubset) -> np.ndarray:
    """d(x, V \\ F) for x in F (ambient distances)."""
    g, complete = _ambient(w)
    if F.host is not g:
        raise GraphError("subset does not live on this window")
    if not np.all(complete[F.members]):
        raise GraphError("set touches the window's outer layer; materialise a larger margin")
    outside = np.flatnonzero(~F.members)
    if outside.size == 0:
        raise GraphError("set has empty complement; inradius undefined")
    return bfs_distances(g, outside)[F.members]


def inradius(w: Window | FiniteGraph, F: VertexSubset) -> int:
    """max{r : B_x(r) inside F for some x in F}."""
    return int(distance_to_complement(w, F).max()) - 1


def diameter_bounds(g: FiniteGraph) -> tuple[int, int]:
    """Exact diameter (lo == hi) up to 10^4 vertices, else a double-sweep interval."""
    if not g.is_connected():
        raise GraphError("diameter of a disconnected set is infinite")
    if g.n == 1:
        return 0, 0
    A = g.adjacency()
    if g.n <= EXACT_DIAMETER_LIMIT:
        best = 0
        for start in range(0, g.n, 512):
            rows = np.arange(start, min(g.n, start + 512))
            D = csgraph.shortest_path(A, unweighted=True, indices=rows)
            best = max(best, int(D.max()))
        return best, best
    d0 = bfs_distances(g, [0])
    a = int(np.argmax(d0))
    da = bfs_distances(g, [a])
    b = int(np.argmax(da))
    lo = int(da[b])
    mid = int(np.flatnonzero(da == lo // 2)[0]) if lo else a
    hi = min(2 * int(d0.max()), 2 * int(bfs_distances(g, [mid]).max()))
    return lo, max(lo, hi)


@dataclass
class GeometryReport:
    size: int
    boundary: int
    inradius: int
    diameter: tuple[int, int]
    avg_boundary_distance: float
    connected: bool
    f_v: list[int] = field(default_factory=list)
    f_V: list[int] = field(default_factory=list)

    @property
    def diameter_exact(self) -> bool:
        return self.diameter[0] == self.diameter[1]

    def to_dict(self) -> dict:
        return {"size": self.size, "boundary": self.boundary, "inradius": self.inradius,
                "diameter": list(self.diameter), "diameter_exact": self.diameter_exact,
                "avg_boundary_distance": self.avg_boundary_distance, "connected": self.connected,
                "f_v": self.f_v, "f_V": self.f_V}


def geometry(w: Window | FiniteGraph, F: VertexSubset) -> GeometryReport:
    """Inradius, induced diameter and average distance to the boundary of F.

    The distance of x to the boundary is d(x, V \\ F), so r_bar >= 1.
    """
    dist = distance_to_complement(w, F)
    sub, _ = induced_subgraph(F)
    conn = sub.is_connected()
    diam = diameter_bounds(sub) if conn else (-1, -1)
    return GeometryReport(len(F), boundary_size(F), int(dist.max()) - 1, diam,
                          float(dist.mean()), conn)


# ------------------------------------------------------------------ volume growth

@dataclass
class VolumeGrowth:
    radii: list[int]
    f_v: list[int]
    f_V: list[int]
    transitive: bool
    centers: int

    def inv_v(self, N: float) -> int | None:
        """max{r : f_v(r) <= N}; None when the table never exceeds N (the answer is >= rmax)."""
        ok = [r for r, v in zip(self.radii, self.f_v) if v <= N]
        if len(ok) == len(self.radii):
            return None
        return max(ok) if ok else -1

    def inv_V(self, N: float) -> int | None:
        """min{r : f_V(r) >= N}; None when the table never reaches N."""
        for r, v in zip(self.radii, self.f_V):
            if v >= N:
                return r
        return None


def volume_growth(g: LazyGraph | FiniteGraph, rmax: int, centers=None) -> VolumeGrowth:
    """Ball sizes |B_r(x)| for r <= rmax, minimised and maximised over ``centers``.

    On transitive lazy graphs the origin alone is exact; otherwise the
    extremes are over the supplied centres only (all vertices by default on a
    finite graph).
    """
    radii = list(range(rmax + 1))
    if isinstance(g, FiniteGraph):
        cs = range(g.n) if centers is None else centers
        rows = []
        for c in cs:
            dist = bfs_distances(g, [int(c)], max_depth=rmax)
            counts = np.bincount(dist[dist >= 0], minlength=rmax + 1)[: rmax + 1]
            rows.append(np.cumsum(counts))
        M = np.array(rows)
        return VolumeGrowth(radii, M.min(0).tolist(), M.max(0).tolist(), False, len(rows))
    transitive = bool(getattr(g, "transitive", False))
    cs = [g.origin()] if centers is None else list(centers)
    rows = [np.cumsum([len(layer) for layer in ball_labels(g, c, rmax)]) for c in cs]
    M = np.array(rows)
    return VolumeGrowth(radii, M.min(0).tolist(), M.max(0).tolist(), transitive and len(cs) >= 1, len(cs))


# ------------------------------------------------------------------ bound checks

@dataclass
class BoundCheck:
    bound: str
    lhs: float
    rhs: float
    passed: bool
    theorem: bool = True
    note: str = ""

    def to_dict(self) -> dict:
        return {"bound": self.bound, "lhs": self.lhs, "rhs": self.rhs, "pass": self.passed,
                "theorem": self.theorem, "note": self.note}


def geometry_bound_checks(report: GeometryReport, volume: VolumeGrowth | None = None,
                          G_at_size: Fraction | None = None, optimal: bool = False,
                          kappa1_F: float | None = None, max_degree_F: int | None = None,
                          K: float | None = None, k: float | None = None) -> list[BoundCheck]:
    """Evaluate the volume, inradius, diameter and radial lemmas that apply to ``report``."""
    out: list[BoundCheck] = []
    n = report.size
    if volume is not None and report.connected:
        rv = volume.inv_V(n)
        if rv is not None:
            out.append(BoundCheck("diameter >= f_V^-1(|F|)", report.diameter[1], rv,
                                  report.diameter[1] >= rv, note="upper end of the diameter interval"))
        rv = volume.inv_v(n)
        if rv is not None:
            out.append(BoundCheck("inrad <= f_v^-1(|F|)", report.inradius, rv, report.inradius <= rv))
    if volume is not None and optimal and G_at_size:
        rv = volume.inv_V(1 / G_at_size)
        if rv is not None:
            out.append(BoundCheck("inrad >= f_V^-1(1/G(|F|))", report.inradius, rv, report.inradius >= rv))
    if kappa1_F and report.connected and report.diameter[0] >= 3 and max_degree_F:
        rhs = 3 * max_degree_F * math.log(n) / (kappa1_F * math.log(2))
        out.append(BoundCheck("diameter <= 3k log|F| / (kappa1(F) log 2)", report.diameter[0], rhs,
                              report.diameter[0] <= rhs, note="lower end of the diameter interval"))
    if optimal and G_at_size and K is not None and k is not None:
        r = radial_ratio(report.size, report.boundary, report.inradius, K, k)
        if r >= 1:
            rhs = 1 / (K * float(G_at_size) ** (1 / k)) - 1
            out.append(BoundCheck("inrad >= 1/(K G^(1/k)) - 1 under radiso", report.inradius, rhs,
                                  report.inradius >= rhs - 1e-12))
    out.append(BoundCheck("inrad <= r_bar", report.inradius, report.avg_boundary_distance,
                          report.inradius <= report.avg_boundary_distance, theorem=False,
                          note="not a theorem: fails for long intervals in a path"))
    return out


# ------------------------------------------------------------------ radial inequality

def radial_ratio(size: int, boundary: int, inrad: int, K: float, k: float):
    """K |dA| (1 + inrad)^k / |A|, exact when K and k are integers."""
    if float(K).is_integer() and float(k).is_integer():
        return Fraction(int(K) * boundary * (1 + inrad) ** int(k), size)
    return K * boundary * (1 + inrad) ** k / size


@dataclass
class RadialCheck:
    K: float
    k: float
    size: int
    boundary: int
    inradius: int
    ratio: float
    passes: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def radial_check(w: Window | FiniteGraph, F: VertexSubset, K: float = 1, k: float = 1) -> RadialCheck:
    if K < 1 or k < 1:
        raise ValueError("K and k must be >= 1")
    size, bnd, r = len(F), boundary_size(F), inradius(w, F)
    ratio = radial_ratio(size, bnd, r, K, k)
    return RadialCheck(K, k, size, bnd, r, float(ratio), bool(ratio >= 1))


# ------------------------------------------------------------------ classification

@dataclass
class ProfileClass:
    label: str  # "IS_omega", "IS_d", "IIS_nu" or "inconclusive"
    estimate: float | None
    residuals: dict[str, float]
    params: dict[str, float]


def classify_profile(xs, Gs, margin: float = 0.5, flat_tol: float = 1e-3) -> ProfileClass:
    """Fit log G_down against constant, power-law and log-power shapes.

    IS_omega is chosen when the constant model fits within ``flat_tol``;
    otherwise the better of IS_d / IIS_nu wins if its RMS residual is below
    ``margin`` times the other's.
    """
    x = np.asarray(xs, dtype=float)
    y = np.log(np.asarray(Gs, dtype=float))
    if x.size < 5:
        raise ValueError("need at least 5 samples")
    if x.max() / x.min() < 100:
        raise ValueError("samples must span at least two decades")

    def fit(t):
        A = np.stack([np.ones_like(t), -t], 1)
        coef, *_ = np.linalg.lstsq(A, y, rcond=None)
        return coef, float(np.sqrt(np.mean((A @ coef - y) ** 2)))

    res = {"IS_omega": float(np.sqrt(np.mean((y - y.mean()) ** 2)))}
    (c_d, s_d), res["IS_d"] = fit(np.log(x))
    (c_n, s_n), res["IIS_nu"] = fit(np.log1p(np.log(x)))
    params = {"K_omega": float(np.exp(y.mean())), "K_d": float(np.exp(c_d)), "K_nu": float(np.exp(c_n)),
              "d": float(1 / s_d) if s_d > 0 else math.inf, "nu": float(1 / s_n) if s_n > 0 else math.inf}
    if res["IS_omega"] < flat_tol:
        return ProfileClass("IS_omega", params["K_omega"], res, params)
    if res["IS_d"] < margin * res["IIS_nu"] and s_d > 0:
        return ProfileClass("IS_d", params["d"], res, params)
    if res["IIS_nu"] < margin * res["IS_d"] and s_n > 0:
        return ProfileClass("IIS_nu", params["nu"], res, params)
    return ProfileClass("inconclusive", None, res, params)
