"""Transport patterns, the Følner radius and the harmonic-difference pipeline.

A transport pattern from xi to mu is an edge function tau with
div(tau) = mu - xi.  For any vertex function f,
<f, mu> - <f, xi> = <grad f, tau>, which is the whole point.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import scipy.sparse.linalg as spla

from .graph_core import (FiniteGraph, GraphError, ResourceError, VertexSubset, Window, bfs_distances,
                         boundary_size, induced_subgraph, materialize)
from .operators import EdgeFunction, conjugate, divergence, gradient, lp_norm, pairing

MAX_FOLNER_RADIUS = 10_000


def _host(w: Window | FiniteGraph) -> FiniteGraph:
    return w if isinstance(w, FiniteGraph) else w.graph


def ambient_degree(w: Window | FiniteGraph) -> int:
    if isinstance(w, FiniteGraph):
        return int(w.d if w.is_regular else w.max_degree)
    if w.lazy is not None and w.lazy.degree_bound:
        return int(w.lazy.degree_bound)
    return int(w.graph.max_degree)


def _complete_mask(w: Window | FiniteGraph) -> np.ndarray:
    """Vertices whose whole ambient neighbourhood is materialised."""
    g = _host(w)
    return g.degree == ambient_degree(w)


def edge_ids(g: FiniteGraph, u, v) -> np.ndarray:
    """Row of g.edges for each pair (u, v); raises if some pair is not an edge."""
    u, v = np.asarray(u, dtype=np.int64), np.asarray(v, dtype=np.int64)
    lo, hi = np.minimum(u, v), np.maximum(u, v)
    keys = g.edges[:, 0].astype(np.int64) * g.n + g.edges[:, 1]
    want = lo * g.n + hi
    pos = np.searchsorted(keys, want)
    pos = np.minimum(pos, keys.size - 1)
    if keys.size == 0 or np.any(keys[pos] != want):
        raise GraphError("consecutive vertices are not adjacent")
    return pos


# ------------------------------------------------------------------ measures

@dataclass(frozen=True, eq=False)
class Measure:
    host: FiniteGraph
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (self.host.n,) or not np.all(np.isfinite(self.values)):
            raise ValueError("measure needs one finite value per vertex")

    @classmethod
    def zero(cls, host: FiniteGraph) -> "Measure":
        return cls(host, np.zeros(host.n))

    @classmethod
    def dirac(cls, host: FiniteGraph, v: int, mass: float = 1.0) -> "Measure":
        x = np.zeros(host.n)
        x[v] = mass
        return cls(host, x)

    @property
    def total(self) -> float:
        return math.fsum(self.values)

    @property
    def plus(self) -> np.ndarray:
        return np.maximum(self.values, 0.0)

    @property
    def minus(self) -> np.ndarray:
        return np.maximum(-self.values, 0.0)

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.values)


def split_measure(pi: Measure, tol: float = 1e-12) -> tuple[Measure, Measure]:
    """pi = pi_plus - pi_minus with both parts nonnegative and of equal mass."""
    scale = max(1.0, float(np.abs(pi.values).sum()))
    if abs(pi.total) > tol * scale:
        raise ValueError(f"measure must sum to zero (sum = {pi.total:.3e})")
    return Measure(pi.host, pi.plus), Measure(pi.host, pi.minus)


@dataclass(frozen=True, eq=False)
class TransportPattern:
    tau: EdgeFunction
    source: Measure
    target: Measure
    residual: float = field(default=0.0)

    def __post_init__(self):
        g = self.tau.host
        if self.source.host is not g or self.target.host is not g:
            raise GraphError("pattern pieces live on different graphs")
        r = self.divergence_residual()
        scale = max(1.0, float(np.abs(self.target.values - self.source.values).sum()),
                    float(np.abs(self.tau.values).max(initial=0.0)))
        if r > 1e-12 * scale * max(1.0, math.sqrt(g.n)):
            raise ValueError(f"divergence(tau) != target - source (residual {r:.3e})")
        object.__setattr__(self, "residual", r)

    def divergence_residual(self) -> float:
        d = divergence(self.tau.host, self.tau.values) - (self.target.values - self.source.values)
        return float(np.abs(d).max(initial=0.0))

    def norm(self, p: float) -> float:
        return self.tau.norm(p)

    def __add__(self, other: "TransportPattern") -> "TransportPattern":
        g = self.tau.host
        return TransportPattern(EdgeFunction(g, self.tau.values + other.tau.values),
                                Measure(g, self.source.values + other.source.values),
                                Measure(g, self.target.values + other.target.values))

    def to_csv(self) -> str:
        e = self.tau.host.edges
        lines = ["u,v,flow"]
        for (u, v), t in zip(e, self.tau.values):
            if t:
                lines.append(f"{u},{v},{float(t)!r}")
        return "\n".join(lines) + "\n"


def pattern_from_csv(g: FiniteGraph, text: str) -> TransportPattern:
    """Read a ``u,v,flow`` edge list back; source and target are the two parts of its divergence."""
    rows = [ln.split(",") for ln in text.strip().splitlines()[1:] if ln.strip()]
    tau = np.zeros(g.m)
    if rows:
        u = np.array([int(r[0]) for r in rows])
        v = np.array([int(r[1]) for r in rows])
        flow = np.array([float(r[2]) for r in rows])
        np.add.at(tau, edge_ids(g, u, v), np.where(u < v, flow, -flow))
    div = divergence(g, tau)
    return TransportPattern(EdgeFunction(g, tau), Measure(g, np.maximum(-div, 0.0)), Measure(g, np.maximum(div, 0.0)))


@dataclass
class PairingResult:
    exact_diff: float
    grad_pairing: float
    bound: float

    @property
    def identity_error(self) -> float:
        return abs(self.exact_diff - self.grad_pairing)


def pairing_bound(f: np.ndarray, t: TransportPattern, p: float, tol: float = 1e-9) -> PairingResult:
    """<f, mu - xi> = <grad f, tau> <= ||grad f||_p ||tau||_p'."""
    g = t.tau.host
    f = np.asarray(f, dtype=float)
    diff = pairing(f, t.target.values - t.source.values)
    gf = gradient(g, f)
    gp = pairing(gf, t.tau.values)
    bound = lp_norm(gf, p) * lp_norm(t.tau.values, conjugate(p))
    scale = max(1.0, float(np.abs(f).max(initial=0.0)) * (float(np.abs(t.tau.values).sum()) + 1.0))
    if abs(diff - gp) > tol * scale:
        raise AssertionError(f"pairing identity fails: {diff!r} vs {gp!r}")
    if diff > bound + tol * scale:
        raise AssertionError(f"Hölder bound fails: {diff!r} > {bound!r}")
    return PairingResult(diff, gp, bound)


def path_pattern(g: FiniteGraph, path, mass: float = 1.0) -> TransportPattern:
    """Move ``mass`` from path[0] to path[-1] along the path."""
    path = np.asarray(path, dtype=np.int64)
    if path.size == 0:
        raise GraphError("empty path")
    tau = np.zeros(g.m)
    if path.size > 1:
        u, v = path[:-1], path[1:]
        ids = edge_ids(g, u, v)
        np.add.at(tau, ids, np.where(u < v, mass, -mass))
    src = Measure.dirac(g, int(path[0]), mass)
    tgt = Measure.dirac(g, int(path[-1]), mass)
    return TransportPattern(EdgeFunction(g, tau), src, tgt)


# ------------------------------------------------------------------ potentials

@dataclass
class PotentialSolve:
    pattern: TransportPattern
    h: np.ndarray  # potential on F (indexed like F.indices)
    relative_residual: float
    iterations: int


def potential_pattern(w: Window | FiniteGraph, F: VertexSubset, g_values: np.ndarray,
                      tol: float = 1e-12, maxiter: int | None = None) -> PotentialSolve:
    """tau = grad h inside F where (grad_F^* grad_F) h = g, extended by zero.

    ``g_values`` is either a full vertex function (zero off F) or one value per
    vertex of F in ``F.indices`` order.  Its sum must vanish.
    """
    host = _host(w)
    idx = F.indices
    gv = np.asarray(g_values, dtype=float)
    if gv.shape == (host.n,):
        if np.any(gv[~F.members]):
            raise ValueError("g must vanish outside F")
        gv = gv[idx]
    if gv.shape != (idx.size,):
        raise ValueError("g has the wrong length")
    scale = float(np.abs(gv).sum())
    if abs(math.fsum(gv)) > 1e-12 * max(1.0, scale):
        raise ValueError("g must sum to zero")
    sub, _ = induced_subgraph(F)
    if not sub.is_connected():
        raise GraphError("induced graph on F is disconnected; potential undefined")
    tau = np.zeros(host.m)
    src = Measure.zero(host)
    if scale == 0.0:
        return PotentialSolve(TransportPattern(EdgeFunction(host, tau), src, Measure.zero(host)),
                              np.zeros(idx.size), 0.0, 0)
    L = sub.laplacian().astype(float).tocsr()
    b = gv - gv.mean()
    its = [0]

    def count(_):
        its[0] += 1

    maxiter = maxiter or 20 * idx.size
    h, info = spla.cg(L, b, rtol=tol, atol=0.0, maxiter=maxiter, callback=count)
    h -= h.mean()
    rel = float(np.linalg.norm(L @ h - gv) / np.linalg.norm(gv))
    if info != 0 and rel > 1e-10:
        raise RuntimeError(f"CG did not converge (info={info}, relative residual {rel:.3e})")
    se = sub.edges
    ids = edge_ids(host, idx[se[:, 0]], idx[se[:, 1]])
    # sub edges are oriented low->high in sub indices; idx is increasing so orientation survives
    tau[ids] = h[se[:, 1]] - h[se[:, 0]]
    tgt = np.zeros(host.n)
    tgt[idx] = gv
    return PotentialSolve(TransportPattern(EdgeFunction(host, tau), src, Measure(host, tgt)), h, rel, its[0])


def induced_lambda2(F: VertexSubset, degree: int) -> float:
    """Smallest non-zero eigenvalue of L_F / d for the graph induced on F (d = ambient degree)."""
    from .spectral import lambda2_exact
    sub, _ = induced_subgraph(F)
    return lambda2_exact(sub, degree=degree)


# ------------------------------------------------------------------ Følner radius

def _walk_counts(w: Window | FiniteGraph, F: VertexSubset):
    """Generator of (r, c_r) with c_r = d^r P^r 1_F as exact integers.

    Missing window neighbours count as zero, which is exact as long as r
    does not exceed the window's margin around F.
    """
    g = _host(w)
    A = g.adjacency().astype(np.int64).tocsr()
    d = ambient_degree(w)
    c = F.members.astype(np.int64)
    r = 0
    yield r, c
    big = False
    while True:
        r += 1
        if not big and d ** r >= 2 ** 62:
            big = True
            c = c.astype(object)
        if big:
            c = _obj_matvec(g, c)
        else:
            c = A @ c
        yield r, c


def _obj_matvec(g: FiniteGraph, c: np.ndarray) -> np.ndarray:
    out = np.zeros(g.n, dtype=object)
    for v in range(g.n):
        nb = g.neighbors(v)
        if nb.size:
            out[v] = sum(c[nb].tolist())
    return out


def _margin_around(w: Window | FiniteGraph, F: VertexSubset) -> float:
    """How far from F the window is exact (infinite for finite ambient graphs)."""
    if isinstance(w, FiniteGraph):
        return math.inf
    g = w.graph
    dist = bfs_distances(g, F.indices)
    incomplete = ~_complete_mask(w)
    if not incomplete.any():
        return math.inf
    return float(dist[incomplete].min())


def _float_first_hit(g: FiniteGraph, F: VertexSubset, target: float, r_max: int) -> int | None:
    """First r where the float iterate comes within 1e-9 of the target, None if it never does."""
    P = g.adjacency().astype(float).tocsr()
    c = F.members.astype(float)
    d = ambient_degree(g)
    prev = [c, c]
    for r in range(r_max + 1):
        if c.max() <= target + 1e-9:
            return r
        c = (P @ c) / d
        if r > 2 and np.abs(c - prev[0]).max() < 1e-15:
            return None  # even/odd limits reached
        prev = [prev[1], c]
    return None


@dataclass
class FolnerProfile:
    """m_r = max_x P^r 1_F(x) for r = 0..len-1, as exact fractions."""

    d: int
    size: int
    boundary: int
    maxima: list[Fraction]
    exhausted: bool  # True when m_r stopped decreasing (finite graph plateau)

    def radius(self, eps) -> int | None:
        """min{r : m_r <= 1 - eps}; None when never reached within the profile."""
        eps = Fraction(eps).limit_denominator(10 ** 12) if isinstance(eps, float) else Fraction(eps)
        for r, m in enumerate(self.maxima):
            if m <= 1 - eps:
                return r
        return None

    def lemma_bound(self, eps) -> Fraction:
        eps = Fraction(eps).limit_denominator(10 ** 12) if isinstance(eps, float) else Fraction(eps)
        return Fraction(self.d, 2) * eps * Fraction(self.size, self.boundary)


def folner_profile(w: Window | FiniteGraph, F: VertexSubset, eps_min=None, r_max: int = MAX_FOLNER_RADIUS,
                   budget: int | None = None) -> FolnerProfile:
    """Iterate m_r until it reaches 1 - eps_min.

    Without ``eps_min`` the iteration runs until eps -> 1/sqrt(eps) can no
    longer meet r_F, i.e. 1 - m_r >= 1/(r+1)^2, or until m_r stops changing.
    """
    if boundary_size(F) == 0:
        raise GraphError("F has empty boundary: mass never leaves")
    d = ambient_degree(w)
    target = None if eps_min is None else 1 - Fraction(eps_min)
    if (target is not None and isinstance(w, FiniteGraph) and w.is_regular
            and target < Fraction(len(F), w.n)):
        # P preserves the mean on a regular graph, so max P^r 1_F >= |F|/|V| forever
        return FolnerProfile(d, len(F), boundary_size(F), [Fraction(1)], True)
    if target is not None and isinstance(w, FiniteGraph):
        # floats settle bipartite oscillation or a limit above the target long before r_max;
        # when the limit equals the target, an exact hit comes within a few periods or never
        hit = _float_first_hit(w, F, float(target), r_max)
        if hit is None:
            return FolnerProfile(d, len(F), boundary_size(F), [Fraction(1)], True)
        r_max = min(r_max, hit + 4 * w.n + 8)
    margin = _margin_around(w, F)
    maxima: list[Fraction] = []
    stall = 0
    for r, c in _walk_counts(w, F):
        if r > margin:
            if isinstance(w, Window) and w.lazy is not None:
                labels = [w.labels[i] for i in F.indices]
                kw = {} if budget is None else {"budget": budget}
                w2 = materialize(w.lazy, labels, margin=max(2 * int(margin), 4), **kw)
                F2 = VertexSubset.from_indices(w2.graph, range(len(labels)))
                return folner_profile(w2, F2, eps_min, r_max, budget)
            raise ResourceError(f"window margin {margin} too small for radius {r}")
        m = Fraction(int(max(c)), d ** r)
        maxima.append(m)
        if target is not None and m <= target:
            return FolnerProfile(d, len(F), boundary_size(F), maxima, False)
        if len(maxima) > 1 and maxima[-1] == maxima[-2]:
            stall += 1
        else:
            stall = 0
        if r >= r_max or (target is None and stall >= 2 * len(F) + 2) or (
                isinstance(w, FiniteGraph) and stall >= 2 * w.n + 2):
            return FolnerProfile(d, len(F), boundary_size(F), maxima, True)
        if target is None and (m == 0 or 1 - m >= Fraction(1, (r + 1) ** 2)):
            return FolnerProfile(d, len(F), boundary_size(F), maxima, False)


def folner_radius(w: Window | FiniteGraph, F: VertexSubset, eps) -> int | None:
    """Smallest r with ||P^r 1_F||_inf <= 1 - eps (None if the walk never gets there)."""
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    prof = folner_profile(w, F, eps_min=eps)
    r = prof.radius(eps)
    if r is not None and Fraction(r) < prof.lemma_bound(eps):
        raise AssertionError(f"Følner lemma violated: r={r} < {prof.lemma_bound(eps)}")
    return r


@dataclass
class FolnerRecord:
    size: int
    boundary: int
    d: int
    eps0: Fraction
    r0: int
    crossing: tuple[Fraction, Fraction]  # curves swap sides somewhere in this interval
    r_after: int | None
    grid: list[tuple[float, int | None]]
    lemma_ok: bool
    r0_cubed_ok: bool  # r0^3 >= (d/2)|F|/|dF| (holds when eps0 = 1/r0^2)

    def to_dict(self) -> dict:
        return {"size": self.size, "boundary": self.boundary, "d": self.d,
                "eps0": float(self.eps0), "eps0_exact": str(self.eps0), "r0": self.r0,
                "crossing": [float(self.crossing[0]), float(self.crossing[1])], "r_after": self.r_after,
                "grid": [[e, r] for e, r in self.grid], "lemma_ok": self.lemma_ok,
                "r0_cubed_ok": self.r0_cubed_ok}


def eps0_r0(w: Window | FiniteGraph, F: VertexSubset, grid_levels: int = 40) -> FolnerRecord:
    """Where eps -> r_F(eps) crosses eps -> 1/sqrt(eps).

    r_F is a step function: r_F = r exactly on (1 - m_{r-1}, 1 - m_r].  On
    that piece r_F(eps) <= 1/sqrt(eps) iff eps <= 1/r^2, so
    eps0 = max over pieces of min(1 - m_r, 1/r^2), computed exactly.
    """
    prof = folner_profile(w, F)
    m = prof.maxima
    best, best_r = None, None
    for r in range(1, len(m)):
        a, b = 1 - m[r - 1], 1 - m[r]
        if b <= a:
            continue
        cap = Fraction(1, r * r)
        if a >= cap:
            break
        top = min(b, cap)
        if best is None or top > best:
            best, best_r = top, r
    if best is None:
        raise GraphError("r_F never drops below 1/sqrt(eps)")
    r_after = prof.radius(best + Fraction(1, 10 ** 15)) if best < 1 else None
    hi = Fraction(1, best_r * best_r) if best < Fraction(1, best_r * best_r) else best
    if r_after is not None and best == 1 - m[best_r]:
        hi = min(Fraction(1, best_r * best_r), Fraction(1, 1))
    grid = []
    for i in range(1, grid_levels + 1):
        e = 2.0 ** -i
        grid.append((e, prof.radius(e)))
    lemma_ok = Fraction(best_r) >= prof.lemma_bound(best)
    r0_cubed = Fraction(best_r ** 3) >= Fraction(prof.d, 2) * Fraction(prof.size, prof.boundary)
    return FolnerRecord(prof.size, prof.boundary, prof.d, best, best_r, (best, hi), r_after, grid,
                        lemma_ok, r0_cubed)


# ------------------------------------------------------------------ pipeline

def walk_measure(w: Window | FiniteGraph, v: int, steps: int) -> np.ndarray:
    """P^steps delta_v as a measure, refusing to touch vertices with missing neighbours."""
    g = _host(w)
    d = ambient_degree(w)
    A = g.adjacency()
    complete = _complete_mask(w)
    mu = np.zeros(g.n)
    mu[v] = 1.0
    for _ in range(steps):
        if np.any(mu[~complete]):
            raise ResourceError("walk reached the edge of the window; increase the margin")
        mu = A @ (mu / d)
    return mu


@dataclass
class PipelineReport:
    mode: str
    n_vertices: int
    r: int
    v: int
    w: int
    norm_in: float
    norm_out: float
    norm_total: float
    g_norm: float
    return_sup: float
    g_bound: float
    lambda2: float
    certified_bound: float
    energy_bound: float
    kappa1: float | None
    kappa1_certified: bool
    kappa_bound: float | None
    escaped_mass: float | None
    escaped_l1_cost: float | None
    escaped_claim: float | None
    residual: float
    p: float
    pattern: TransportPattern | None = None
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        out = {k: v for k, v in self.__dict__.items() if k != "pattern"}
        return out


def _route_outside(w: Window | FiniteGraph, F: VertexSubset, g_full: np.ndarray):
    """Move the part of g lying outside F to the nearest vertex of F along BFS trees.

    Returns (tau_out, moved) where div(tau_out) = moved - g_out and moved is
    supported on F.
    """
    host = _host(w)
    outside = np.flatnonzero((g_full != 0) & ~F.members)
    tau = np.zeros(host.m)
    moved = np.zeros(host.n)
    if outside.size == 0:
        return tau, moved, 0.0, 0
    dist = bfs_distances(host, F.indices)
    cost, longest = 0.0, 0
    for x in outside:
        mass = g_full[x]
        path = [int(x)]
        while not F.members[path[-1]]:
            nb = host.neighbors(path[-1])
            path.append(int(nb[dist[nb] == dist[path[-1]] - 1].min()))
        pat = path_pattern(host, path, mass)
        tau += pat.tau.values
        moved[path[-1]] += mass
        cost += abs(mass) * (len(path) - 1)
        longest = max(longest, len(path) - 1)
    return tau, moved, cost, longest


def harmonic_difference_pipeline(w: Window | FiniteGraph, F: VertexSubset, v: int, w_vertex: int,
                                 p: float = 2.0, r: int | None = None, mode: str = "radial",
                                 r0: int | None = None, kappa1: float | None = None,
                                 kappa1_certified: bool = False, keep_pattern: bool = False) -> PipelineReport:
    """Transport pattern for g = P^r(delta_w - delta_v) built from an F-potential.

    mode "radial": r = inrad(F) - 1 (or the given r); the walk must stay in F.
    mode "folner": r = r0(F) - 1; mass escaping F is routed back along
    shortest paths and everything left inside F is inverted through the
    induced Laplacian.
    """
    from .isoperimetry import inradius
    host = _host(w)
    if w_vertex not in set(host.neighbors(v).tolist()):
        raise GraphError("v and w must be adjacent")
    d = ambient_degree(w)
    notes: list[str] = []
    if mode == "radial":
        if r is None:
            r = inradius(w, F) - 1
        dist = bfs_distances(host, np.flatnonzero(~F.members))
        need = r + 1
        if dist[v] < need or dist[w_vertex] < need:
            raise GraphError(f"balls of radius {r} around v, w must lie in F "
                             f"(distances to the complement: {dist[v]}, {dist[w_vertex]})")
    elif mode == "folner":
        if r0 is None:
            r0 = eps0_r0(w, F).r0
        r = max(r0 - 1, 0) if r is None else r
    else:
        raise ValueError("mode must be 'radial' or 'folner'")
    mu_v = walk_measure(w, v, r)
    mu_w = walk_measure(w, w_vertex, r)
    g_full = mu_w - mu_v
    q = conjugate(p)
    tau_out, moved, cost, longest = _route_outside(w, F, g_full)
    escaped = float(np.abs(g_full[~F.members]).sum())
    g_in = np.where(F.members, g_full, 0.0) + moved
    g_in[F.members] -= math.fsum(g_in[F.members]) / len(F)  # rounding only
    solve = potential_pattern(w, F, g_in)
    tau = solve.pattern.tau.values - tau_out  # tau_out carries g_out into F; we need the reverse
    pattern = TransportPattern(EdgeFunction(host, tau), Measure(host, np.maximum(-g_full, 0.0)),
                               Measure(host, np.maximum(g_full, 0.0)))
    lam2 = induced_lambda2(F, d)
    g_norm = lp_norm(g_full, p)
    gin_norm = lp_norm(g_in, p)
    ret = float(max(mu_v.max(), mu_w.max()))
    norm_in = lp_norm(solve.pattern.tau.values, p)
    norm_out = lp_norm(tau_out, p)
    kb = None
    if kappa1:
        kb = 2 * q * d ** 3 / kappa1 ** 2 * ret ** (1 / q)
    return PipelineReport(
        mode, len(F), int(r), int(v), int(w_vertex), norm_in, norm_out, lp_norm(tau, p), g_norm, ret,
        2 * ret ** (1 / q), lam2, d * gin_norm / lam2, gin_norm / math.sqrt(d * lam2) if p == 2 else math.nan,
        kappa1, kappa1_certified, kb,
        escaped if mode == "folner" else None, cost if mode == "folner" else None,
        (1 / r0 ** 2) if mode == "folner" and r0 else None, solve.relative_residual, p,
        pattern if keep_pattern else None, notes)
