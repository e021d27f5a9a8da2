"""Random-walk distributions, return probabilities, decay fits and the 1/(n+1) witnesses."""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np
import scipy.optimize as opt
from scipy.signal import lfilter
from scipy.special import comb

from .graph_core import (DEFAULT_BUDGET_VERTICES, CycleLazy, FiniteGraph, GraphError, LazyGraph,
                         ResourceError, materialize_ball)
from .lamplighter import Lamplighter

DEFAULT_SUPPORT_BUDGET = 2_000_000


@dataclass
class SparseDistribution:
    graph: LazyGraph
    probs: dict
    k: int
    loss: float = 0.0

    @property
    def total(self) -> float:
        return math.fsum(self.probs.values())

    @property
    def degraded(self) -> bool:
        return self.loss > 0.0

    def __getitem__(self, x) -> float:
        return self.probs.get(x, 0.0)

    def __len__(self) -> int:
        return len(self.probs)


def _step(g: LazyGraph, probs: dict) -> dict:
    out: dict = defaultdict(float)
    for x, p in probs.items():
        nb = g.neighbors(x)
        q = p / len(nb)
        for y in nb:
            out[y] += q
    return out


def _truncate(probs: dict, budget: int) -> tuple[dict, float]:
    if len(probs) <= budget:
        return probs, 0.0
    items = sorted(probs.items(), key=lambda kv: kv[1], reverse=True)
    kept = dict(items[:budget])
    return kept, math.fsum(p for _, p in items[budget:])


def walk_distribution(g: LazyGraph, x, k: int, budget: int = DEFAULT_SUPPORT_BUDGET) -> SparseDistribution:
    """P^k delta_x on a lazy graph by sparse front expansion.

    When the support exceeds ``budget`` the smallest entries are dropped and
    the dropped mass is recorded as ``loss``.
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    probs, loss = {x: 1.0}, 0.0
    for _ in range(k):
        probs, lost = _truncate(_step(g, probs), budget)
        loss += lost
    return SparseDistribution(g, dict(probs), k, loss)


# ------------------------------------------------------------------ lamplighter, vectorised

def _lamp_encode(mask, z, k):
    return (mask << np.uint64(7)) | (z + 64).astype(np.uint64)


def lamplighter_distributions(k_max: int):
    """Yield (k, masks, z, probs) for the exact walk on the lamplighter from the identity.

    Lamp positions -k..k are stored as bits 0..2k of ``masks`` (bit k is position 0).
    """
    if k_max > 28:
        raise ResourceError("vectorised lamplighter walk limited to 28 steps (use the transfer method)")
    off = np.uint64(k_max)
    masks = np.zeros(1, dtype=np.uint64)
    z = np.zeros(1, dtype=np.int64)
    p = np.ones(1)
    yield 0, masks, z, p
    for k in range(1, k_max + 1):
        bit = np.uint64(1) << (z.astype(np.uint64) + off)
        m2 = np.concatenate([masks ^ bit, masks, masks])
        z2 = np.concatenate([z, z + 1, z - 1])
        p2 = np.concatenate([p, p, p]) / 3.0
        keys = _lamp_encode(m2, z2, k_max)
        uk, inv = np.unique(keys, return_inverse=True)
        p = np.bincount(inv, weights=p2)
        masks = uk >> np.uint64(7)
        z = (uk & np.uint64(127)).astype(np.int64) - 64
        yield k, masks, z, p


def lamplighter_return_enumerated(k_max: int) -> np.ndarray:
    rho = np.zeros(k_max + 1)
    for k, masks, z, p in lamplighter_distributions(k_max):
        hit = (masks == 0) & (z == 0)
        rho[k] = p[hit].sum()
    return rho


# ------------------------------------------------------------------ lamplighter, transfer over sites

def _shift_scale(X: np.ndarray, K: int) -> np.ndarray:
    """Row u multiplied by (t^2/9)^u and truncated at degree K."""
    out = np.zeros_like(X)
    for u in range(X.shape[0]):
        s = 2 * u
        if s > K:
            break
        out[u, s:] = X[u, : K + 1 - s] * 9.0 ** -u
    return out


def _times_a_powers(X: np.ndarray) -> np.ndarray:
    """Row u multiplied by a(t)^u, a = 1/(1 - t/3)."""
    Y = X.copy()
    for i in range(1, Y.shape[0]):
        Y[i:] = lfilter([1.0], [1.0, -1.0 / 3.0], Y[i:], axis=1)
    return Y


@dataclass
class TransferResult:
    rho: np.ndarray
    u_cap: int
    depth: int


def _lamplighter_transfer(K: int, U: int, D: int) -> TransferResult:
    """Generating function of return probabilities, truncated at U crossings per edge and depth D.

    For a closed lamplighter walk, let u be the number of crossings of an
    edge (x, x+1) in each direction.  Site x > 0 entered u times from the
    left and left u' times to the right orders its exits in C(u+u'-1, u')
    ways, hosts u+u' sojourns and needs an even number of switches there,
    which contributes the even part of (1 - t/3)^-(u+u').  Summing sites
    outward-in gives R(u); the origin joins two such halves.  All terms are
    nonnegative, so truncation only loses mass.
    """
    us = np.arange(U + 1)
    C = comb(us[:, None] + us[None, :] - 1, us[None, :])
    C[0, :] = 0.0
    C[0, 0] = 1.0
    R = np.zeros((U + 1, K + 1))
    R[0, 0] = 1.0
    for _ in range(D):
        X = _times_a_powers(_shift_scale(R, K))
        Y = _times_a_powers(C @ X)
        Y[:, 1::2] = 0.0
        Y[0] = 0.0
        Y[0, 0] = 1.0
        R = Y
    X = _times_a_powers(_shift_scale(R, K))
    C0 = comb(us[:, None] + us[None, :], us[None, :])
    Z = C0 @ X
    G = np.zeros(K + 1)
    for u in range(U + 1):
        if X[u].any():
            G += np.convolve(X[u], Z[u])[: K + 1]
    G = lfilter([1.0], [1.0, -1.0 / 3.0], G)
    G[1::2] = 0.0
    return TransferResult(G, U, D)


@dataclass
class ReturnSeries:
    rho: np.ndarray
    loss: np.ndarray  # estimated truncation loss per k (relative)
    bipartite: bool
    method: str
    notes: list[str] = field(default_factory=list)

    @property
    def max_relative_loss(self) -> float:
        return float(np.max(self.loss)) if self.loss.size else 0.0

    def to_csv(self) -> str:
        lines = ["k,rho,loss"]
        for k, (r, l) in enumerate(zip(self.rho, self.loss)):
            lines.append(f"{k},{float(r)!r},{float(l)!r}")
        return "\n".join(lines) + "\n"


def lamplighter_return_probabilities(k_max: int, u_cap: int | None = None, depth: int | None = None,
                                     refine: int = 20) -> ReturnSeries:
    """Exact-up-to-truncation rho_k for k <= k_max; loss estimated from a refined run."""
    U = u_cap or int(2.2 * k_max ** 0.5) + 40
    D = depth or int(1.5 * k_max ** (1 / 3)) + 40
    base = _lamplighter_transfer(k_max, U, D)
    ref = _lamplighter_transfer(k_max, U + refine, D + refine // 2)
    rho = ref.rho
    with np.errstate(divide="ignore", invalid="ignore"):
        loss = np.where(rho > 0, (ref.rho - base.rho) / rho, 0.0)
    note = f"u_cap={U + refine}, depth={D + refine // 2}; loss = change from u_cap={U}, depth={D}"
    return ReturnSeries(rho, np.maximum(loss, 0.0), True, "transfer", [note])


def _is_lamplighter(g) -> bool:
    return isinstance(g, Lamplighter)


def return_probability(g: LazyGraph | FiniteGraph, x, k_max: int,
                       budget: int = DEFAULT_SUPPORT_BUDGET) -> ReturnSeries:
    """rho_k = (P^k delta_x)(x) for k <= k_max.

    The lamplighter from its identity uses the site-transfer method; other
    graphs iterate the walk (sparse on lazy graphs, dense on finite ones).
    """
    if _is_lamplighter(g) and x == g.origin():
        return lamplighter_return_probabilities(k_max)
    rho = np.zeros(k_max + 1)
    loss = np.zeros(k_max + 1)
    if isinstance(g, FiniteGraph):
        A = g.adjacency()
        mu = np.zeros(g.n)
        mu[x] = 1.0
        for k in range(k_max + 1):
            rho[k] = mu[x]
            mu = A @ (mu / g.degree)
        bip = _finite_bipartite(g)
    else:
        probs, lost = {x: 1.0}, 0.0
        for k in range(k_max + 1):
            rho[k] = probs.get(x, 0.0)
            loss[k] = lost
            if k < k_max:
                probs, dl = _truncate(_step(g, probs), budget)
                lost += dl
        bip = bool(np.all(rho[1::2] == 0.0))
    return ReturnSeries(rho, loss, bip, "iteration")


def _finite_bipartite(g: FiniteGraph) -> bool:
    from scipy.sparse.csgraph import breadth_first_order
    color = np.full(g.n, -1)
    for s in range(g.n):
        if color[s] >= 0:
            continue
        order, pred = breadth_first_order(g.adjacency(), s, directed=False)
        color[s] = 0
        for v in order[1:]:
            color[v] = 1 - color[pred[v]]
    e = g.edges
    return bool(np.all(color[e[:, 0]] != color[e[:, 1]]))


# ------------------------------------------------------------------ decay fit

@dataclass
class DecayFit:
    k_range: tuple[int, int]
    gamma: float
    K1: float
    K2: float
    residual: float
    ks: np.ndarray
    rho: np.ndarray

    def to_dict(self) -> dict:
        return {"gamma": self.gamma, "K1": self.K1, "K2": self.K2, "residual": self.residual,
                "k_range": list(self.k_range)}


def _fit_fixed_k1(logk, logrho, logK1):
    y = np.log(logK1 - logrho)
    A = np.stack([np.ones_like(logk), logk], 1)
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    r = A @ coef - y
    return coef, float(np.sqrt(np.mean(r ** 2)))


def fit_gamma(rho, k_min: int, k_max: int, ks=None) -> DecayFit:
    """Fit rho_k ~ K1 exp(-K2 k^gamma) by least squares of log(-log(rho/K1)) on log k.

    K1 is profiled: log K1 = max log rho + e^s, with e^s searched up to ten times
    the spread of log rho, which keeps the fit invariant under rescaling rho.
    Zero entries (odd k on bipartite graphs) are skipped.
    """
    rho = np.asarray(rho, dtype=float)
    ks = np.arange(rho.size) if ks is None else np.asarray(ks)
    sel = (ks >= k_min) & (ks <= k_max) & (rho != 0)
    if np.any(rho[(ks >= k_min) & (ks <= k_max)] < 0):
        raise ValueError("negative entries in the fitted range")
    k, r = ks[sel].astype(float), rho[sel]
    if k.size < 3:
        raise ValueError("need at least 3 positive entries in range")
    logk, logr = np.log(k), np.log(r)
    top = float(logr.max())

    def obj(s):
        return _fit_fixed_k1(logk, logr, top + math.exp(s))[1]

    span = max(20.0, 10.0 * (top - float(logr.min())))
    grid = np.linspace(math.log(1e-9), math.log(span), 241)
    vals = [obj(s) for s in grid]
    i = int(np.argmin(vals))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]
    res = opt.minimize_scalar(obj, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
    s = float(res.x) if res.fun <= vals[i] else float(grid[i])
    logK1 = top + math.exp(s)
    coef, resid = _fit_fixed_k1(logk, logr, logK1)
    return DecayFit((k_min, k_max), float(coef[1]), float(math.exp(logK1)), float(math.exp(coef[0])),
                    resid, k, r)


# ------------------------------------------------------------------ witnesses

@dataclass
class WitnessC0:
    n: int
    scaled_values: np.ndarray  # (n+1) f_n on the ball window, integers
    sup_gradient: float
    sup_gradient_scaled: int
    root_value: float

    @property
    def passes(self) -> bool:
        return self.sup_gradient_scaled <= 1 and self.root_value == 1.0


def witness_c0(g: LazyGraph, root, n: int, budget: int = DEFAULT_BUDGET_VERTICES) -> WitnessC0:
    """f_n = (1/(n+1)) sum_{i<=n} 1_{B_i}, i.e. (n+1) f_n(x) = max(0, n+1 - |x|)."""
    if n < 0:
        raise ValueError("n must be >= 0")
    w = materialize_ball(g, root, n + 1, margin=1, budget=budget)
    dist = np.full(w.graph.n, n + 2, dtype=np.int64)
    for r, layer in enumerate(w.layers[: n + 2]):
        dist[layer] = r
    scaled = np.maximum(0, n + 1 - dist)
    e = w.graph.edges
    jump = int(np.abs(scaled[e[:, 0]] - scaled[e[:, 1]]).max(initial=0))
    return WitnessC0(n, scaled, jump / (n + 1), jump, scaled[0] / (n + 1))


@dataclass
class WitnessL1:
    n: int
    mass: float
    laplacian_l1: float
    bound: float
    method: str

    @property
    def passes(self) -> bool:
        return self.laplacian_l1 <= self.bound * (1 + 1e-12)


def witness_l1(g: LazyGraph, x, n: int, budget: int = 200_000,
               rho: np.ndarray | None = None) -> WitnessL1:
    """f_n = (1/(n+1)) sum_{i<=n} P^i delta_x and ||(I - P) f_n||_1.

    By telescoping (I - P) f_n = (delta_x - P^{n+1} delta_x)/(n+1), whose l1
    norm is 2(1 - rho_{n+1})/(n+1).  Small n are evaluated directly on the
    sparse support; beyond the support budget the identity is used with the
    return probability rho_{n+1}.
    """
    bound = 2.0 / (n + 1)
    try:
        acc: dict = defaultdict(float)
        probs = {x: 1.0}
        for i in range(n + 1):
            for y, p in probs.items():
                acc[y] += p / (n + 1)
            if i < n:
                probs = _step(g, probs)
                if len(probs) > budget:
                    raise ResourceError("support budget")
        f = dict(acc)
        Pf = _step(g, f)
        keys = set(f) | set(Pf)
        lap = math.fsum(abs(f.get(y, 0.0) - Pf.get(y, 0.0)) for y in keys)
        return WitnessL1(n, math.fsum(f.values()), lap, bound, "direct")
    except ResourceError:
        pass
    if rho is None:
        rho = return_probability(g, x, n + 1).rho
    return WitnessL1(n, 1.0, 2.0 * (1.0 - float(rho[n + 1])) / (n + 1), bound, "identity")


def cycle_lazy(n: int) -> CycleLazy:
    return CycleLazy(n)
