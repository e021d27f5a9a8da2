"""Spectral gap, Cheeger constant, p-conductance and the p-spectral gap.

``lambda2`` and ``kappa1`` are computed exactly (eigensolve, exhaustive
enumeration).  ``kappa_p`` and ``lambda_p`` are minima of non-convex ratios;
they are estimated from above by multi-start local optimisation, and on graphs
with at most four vertices bracketed by a dense grid over the zero-sum sphere.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np
import scipy.linalg as la
import scipy.optimize as opt
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import _subsets
from .graph_core import FiniteGraph, GraphError, VertexSubset
from .operators import conjugate

DENSE_LIMIT = 3000


def p_bar(p: float) -> float:
    return max(p, conjugate(p))


def _degree_scale(g: FiniteGraph, degree: float | None) -> float:
    if degree is not None:
        return float(degree)
    return float(g.d if g.is_regular else g.max_degree)


def laplacian_spectrum(g: FiniteGraph, degree: float | None = None) -> np.ndarray:
    """Full spectrum of L/d (= I - P on d-regular graphs), ascending."""
    d = _degree_scale(g, degree)
    return np.linalg.eigvalsh(g.laplacian().toarray() / d)


def lambda2_exact(g: FiniteGraph, degree: float | None = None) -> float:
    """Smallest non-zero eigenvalue of L/d.

    On a d-regular graph this is the spectral gap of I - P.  For induced
    (non-regular) pieces of a regular graph pass the ambient degree.
    """
    if g.n < 2:
        raise GraphError("need at least two vertices")
    if not g.is_connected():
        raise GraphError("lambda2 requires a connected graph")
    d = _degree_scale(g, degree)
    if g.n <= DENSE_LIMIT:
        return float(laplacian_spectrum(g, d)[1])
    L = g.laplacian().astype(float) / d
    # shift-invert around a small negative shift picks the two smallest eigenvalues
    vals = spla.eigsh(L.tocsc(), k=2, sigma=-1e-3, which="LM", return_eigenvectors=False, tol=1e-12)
    return float(np.sort(vals)[1])


def _fiedler(g: FiniteGraph) -> np.ndarray:
    """Second eigenvector of the random-walk Laplacian I - D^-1 A."""
    if g.n <= DENSE_LIMIT:
        L = g.laplacian().toarray()
        D = np.diag(g.degree.astype(float))
        _, vec = la.eigh(L, D)
        return vec[:, 1]
    L = g.laplacian().astype(float).tocsc()
    D = sp.diags(g.degree.astype(float)).tocsc()
    _, vec = spla.eigsh(L, k=2, M=D, sigma=-1e-3, which="LM")
    return vec[:, 1]


@dataclass
class CheegerResult:
    value: float
    ratio: Fraction
    witness: VertexSubset
    exact: bool

    def members(self) -> list[int]:
        return [int(v) for v in self.witness.indices]


def cheeger_exact(g: FiniteGraph, limit: int = _subsets.EXHAUSTIVE_LIMIT) -> CheegerResult:
    """min |dF|/|F| over 0 < |F| <= |V|/2 by exhaustive enumeration."""
    if g.n < 2:
        raise GraphError("need at least two vertices")
    try:
        table = _subsets.minimum_boundaries(g, limit=limit)
    except GraphError as exc:
        raise GraphError(f"{exc}; use cheeger_heuristic for larger graphs") from exc
    best = min(table.min_boundary, key=lambda x: (Fraction(table.min_boundary[x], x), x))
    ratio = Fraction(table.min_boundary[best], best)
    w = VertexSubset.from_indices(g, table.witness[best])
    return CheegerResult(float(ratio), ratio, w, True)


def _sweep(g: FiniteGraph, order: np.ndarray) -> tuple[Fraction, np.ndarray]:
    A = g.adjacency()
    half = g.n // 2
    best, best_mask = None, None
    for seq in (order, order[::-1]):
        mask = np.zeros(g.n, dtype=bool)
        bnd = 0
        for k, v in enumerate(seq[:half], start=1):
            inside = int(mask[g.neighbors(v)].sum())
            bnd += int(g.degree[v]) - 2 * inside
            mask[v] = True
            r = Fraction(bnd, k)
            if best is None or r < best:
                best, best_mask = r, mask.copy()
    return best, best_mask


def _local_moves(g: FiniteGraph, mask: np.ndarray, max_rounds: int = 10_000) -> tuple[Fraction, np.ndarray]:
    A = g.adjacency()
    deg = g.degree.astype(np.int64)
    mask = mask.copy()
    size = int(mask.sum())
    bnd = int(np.count_nonzero(mask[g.edges[:, 0]] != mask[g.edges[:, 1]]))
    half = g.n // 2
    for _ in range(max_rounds):
        inside = np.rint(A @ mask.astype(float)).astype(np.int64)
        add_b = bnd + deg - 2 * inside  # adding a vertex outside F
        rem_b = bnd - deg + 2 * inside  # removing a vertex of F
        cur = Fraction(bnd, size)
        best_r, move = cur, None
        if size < half:
            cand = np.flatnonzero(~mask)
            if cand.size:
                vals = add_b[cand] / (size + 1)
                i = int(np.argmin(vals))
                r = Fraction(int(add_b[cand[i]]), size + 1)
                if r < best_r:
                    best_r, move = r, int(cand[i])
        if size > 1:
            cand = np.flatnonzero(mask)
            vals = rem_b[cand] / (size - 1)
            i = int(np.argmin(vals))
            r = Fraction(int(rem_b[cand[i]]), size - 1)
            if r < best_r:
                best_r, move = r, int(cand[i])
        if move is None:
            return cur, mask
        if mask[move]:
            bnd, size = int(rem_b[move]), size - 1
        else:
            bnd, size = int(add_b[move]), size + 1
        mask[move] = not mask[move]
    return Fraction(bnd, size), mask


def cheeger_heuristic(g: FiniteGraph) -> CheegerResult:
    """Upper bound on kappa_1: Fiedler sweep cut refined by single-vertex moves."""
    if not g.is_connected():
        raise GraphError("cheeger_heuristic requires a connected graph")
    order = np.argsort(_fiedler(g), kind="stable")
    _, mask = _sweep(g, order)
    ratio, mask = _local_moves(g, mask)
    return CheegerResult(float(ratio), ratio, VertexSubset(g, mask), False)


# ------------------------------------------------------------------ p-ratios

def zero_sum_basis(n: int) -> np.ndarray:
    """Orthonormal basis (n x (n-1)) of the zero-sum subspace."""
    q, _ = np.linalg.qr(np.eye(n) - 1.0 / n)
    # the first n-1 columns of a Householder basis of 1^perp
    u, s, _ = np.linalg.svd(np.eye(n) - 1.0 / n)
    return u[:, : n - 1]


def gradient_matrix(g: FiniteGraph) -> np.ndarray:
    e = g.edges
    G = np.zeros((e.shape[0], g.n))
    G[np.arange(e.shape[0]), e[:, 1]] = 1.0
    G[np.arange(e.shape[0]), e[:, 0]] = -1.0
    return G


def walk_laplacian_matrix(g: FiniteGraph, degree: float | None = None) -> np.ndarray:
    """Dense L/d (the operator I - P on d-regular graphs)."""
    return g.laplacian().toarray() / _degree_scale(g, degree)


def _pnorm(x: np.ndarray, p: float) -> float:
    return float(np.sum(np.abs(x) ** p) ** (1 / p))


def _log_ratio_and_grad(y: np.ndarray, M: np.ndarray, Q: np.ndarray, p: float):
    a, b = M @ y, Q @ y
    sa, sb = np.sum(np.abs(a) ** p), np.sum(np.abs(b) ** p)
    if sa == 0.0:
        return -np.inf, np.zeros_like(y)
    val = (math.log(sa) - math.log(sb)) / p
    ga = M.T @ (np.sign(a) * np.abs(a) ** (p - 1)) / sa
    gb = Q.T @ (np.sign(b) * np.abs(b) ** (p - 1)) / sb
    return val, ga - gb


def _ratio(y, M, Q, p):
    return _pnorm(M @ y, p) / _pnorm(Q @ y, p)


@dataclass
class RatioMin:
    value: float
    witness: np.ndarray  # vertex function (zero-sum)
    starts: int


def minimize_ratio(M: np.ndarray, Q: np.ndarray, p: float, starts: list[np.ndarray]) -> RatioMin:
    """min over y of ||M y||_p / ||Q y||_p from the given start vectors (L-BFGS)."""
    best_val, best_y = np.inf, None
    for y0 in starts:
        y0 = y0 / np.linalg.norm(y0)
        res = opt.minimize(_log_ratio_and_grad, y0, args=(M, Q, p), jac=True, method="L-BFGS-B",
                           options={"maxiter": 2000, "ftol": 1e-15, "gtol": 1e-12})
        y = res.x / np.linalg.norm(res.x)
        val = _ratio(y, M, Q, p)
        if val < best_val:
            best_val, best_y = val, y
    return RatioMin(float(best_val), Q @ best_y, len(starts))


def _starts(g: FiniteGraph, Q: np.ndarray, restarts: int, seed: int) -> list[np.ndarray]:
    rng = np.random.default_rng(seed)
    k = Q.shape[1]
    out = []
    if g.n > 2:
        L = g.laplacian().toarray()
        _, vec = np.linalg.eigh(L)
        for j in range(1, min(g.n, 4)):
            out.append(Q.T @ vec[:, j])
    else:
        out.append(np.ones(k))
    if g.n <= _subsets.EXHAUSTIVE_LIMIT:
        F = cheeger_exact(g).witness.members
        f = np.where(F, g.n - F.sum(), -F.sum()).astype(float)
        out.append(Q.T @ f)
    while len(out) < restarts:
        out.append(rng.standard_normal(k))
    return out


def kappa_p_estimate(g: FiniteGraph, p: float, restarts: int = 32, seed: int = 0) -> RatioMin:
    """Upper bound on kappa_p = min ||grad f||_p / ||f||_p over zero-sum f."""
    if not 1 < p < math.inf:
        raise ValueError("kappa_p estimation needs 1 < p < inf")
    if not g.is_connected():
        raise GraphError("graph must be connected")
    Q = zero_sum_basis(g.n)
    return minimize_ratio(gradient_matrix(g) @ Q, Q, p, _starts(g, Q, restarts, seed))


@dataclass
class LambdaP:
    upper: float
    lower: float
    witness: np.ndarray


def lambda_p_lower(lam2: float, p: float, rho: float | None = None) -> float:
    """Interpolation lower bound max(2*lam2/pbar, 1 - rho^(2/pbar)).

    ``rho`` is the l2 norm of P on zero-sum functions (max |1 - eigenvalue|);
    it defaults to 1 - lam2.
    """
    pb = p_bar(p)
    rho = 1 - lam2 if rho is None else rho
    interp = 1 - abs(rho) ** (2 / pb) if abs(rho) < 1 else 0.0
    return max(2 * lam2 / pb, interp)


def lambda_p_estimate(g: FiniteGraph, p: float, restarts: int = 32, seed: int = 0,
                      degree: float | None = None) -> LambdaP:
    """Upper estimate of lambda_p = min ||Delta g||_p / ||g||_p (zero-sum g) and its lower bound."""
    if not 1 < p < math.inf:
        raise ValueError("lambda_p estimation needs 1 < p < inf")
    if not g.is_connected():
        raise GraphError("graph must be connected")
    Q = zero_sum_basis(g.n)
    D = walk_laplacian_matrix(g, degree)
    r = minimize_ratio(D @ Q, Q, p, _starts(g, Q, restarts, seed))
    spec = np.linalg.eigvalsh(D)
    rho = max(abs(1 - spec[1]), abs(1 - spec[-1]))
    return LambdaP(r.value, lambda_p_lower(float(spec[1]), p, rho), r.witness)


# ------------------------------------------------------------------ grid oracle

@dataclass
class Bracket:
    lo: float
    hi: float

    def contains(self, x: float, tol: float = 1e-9) -> bool:
        return self.lo - tol <= x <= self.hi + tol


@dataclass
class GridOracle:
    kappa_p: Bracket
    lambda_p: Bracket
    points: int


def _sphere_grid(k: int, resolution: int) -> tuple[np.ndarray, float]:
    """Unit vectors covering the projective sphere in R^k and a covering radius."""
    if k == 1:
        return np.array([[1.0]]), 0.0
    if k == 2:
        th = np.linspace(0, np.pi, resolution, endpoint=False)
        return np.stack([np.cos(th), np.sin(th)], 1), np.pi / resolution / 2
    th = np.linspace(0, np.pi, resolution + 1)
    ph = np.linspace(0, np.pi, resolution + 1)
    T, P = np.meshgrid(th, ph, indexing="ij")
    pts = np.stack([np.sin(T) * np.cos(P), np.sin(T) * np.sin(P), np.cos(T)], -1).reshape(-1, 3)
    step = np.pi / resolution
    return pts, math.hypot(step, step) / 2


def _ratio_bracket(M: np.ndarray, Q: np.ndarray, p: float, pts: np.ndarray, h: float) -> Bracket:
    num = np.sum(np.abs(pts @ M.T) ** p, axis=1) ** (1 / p)
    den = np.sum(np.abs(pts @ Q.T) ** p, axis=1) ** (1 / p)
    vals = num / den
    i = int(np.argmin(vals))
    hi = float(vals[i])
    # Lipschitz constant of ||M u|| / ||Q u|| on the unit sphere (norm equivalence constants)
    n, m = Q.shape[0], M.shape[0]
    c_m = np.linalg.norm(M, 2) * m ** max(0.0, 1 / p - 1 / 2)
    c_q = np.linalg.norm(Q, 2) * n ** max(0.0, 1 / p - 1 / 2)
    qmin = n ** min(0.0, 1 / p - 1 / 2)
    lip = (c_m + vals.max() * c_q) / qmin
    return Bracket(max(0.0, hi - lip * h), hi)


def grid_oracle(g: FiniteGraph, p: float, resolution: int = 400) -> GridOracle:
    """Brute-force brackets for kappa_p and lambda_p on graphs with at most 4 vertices."""
    if g.n > 4:
        raise GraphError("grid oracle limited to graphs with at most 4 vertices")
    if resolution > 4000:
        raise ValueError("resolution too large")
    Q = zero_sum_basis(g.n)
    pts, h = _sphere_grid(Q.shape[1], resolution)
    kap = _ratio_bracket(gradient_matrix(g) @ Q, Q, p, pts, h)
    lam = _ratio_bracket(walk_laplacian_matrix(g) @ Q, Q, p, pts, h)
    return GridOracle(kap, lam, pts.shape[0])


# ------------------------------------------------------------------ chain

@dataclass
class ChainItem:
    item: str
    lhs: float
    rhs: float
    passed: bool
    slack: float
    certified: bool
    note: str = ""

    def to_dict(self) -> dict:
        return {"item": self.item, "lhs": self.lhs, "rhs": self.rhs, "pass": self.passed,
                "slack": self.slack, "certified": self.certified, "note": self.note}


@dataclass
class SpectralReport:
    graph: str
    d: int
    p: float
    p_bar: float
    lambda2: float
    kappa1: float
    kappa1_witness: list[int]
    kappa_p_upper: float
    lambda_p_upper: float
    lambda_p_lower: float
    kappa2: float
    chain: list[ChainItem] = field(default_factory=list)

    @property
    def all_pass(self) -> bool:
        return all(c.passed for c in self.chain if not c.item.startswith("4-table"))

    def to_dict(self) -> dict:
        out = asdict(self)
        out["chain"] = [c.to_dict() for c in self.chain]
        return out


def _ge(name, lhs, rhs, tol, certified, note=""):
    slack = lhs - rhs
    return ChainItem(name, float(lhs), float(rhs), bool(slack >= -tol), float(slack), certified, note)


def cheeger_inequality(g: FiniteGraph, tol: float = 1e-9) -> ChainItem:
    """kappa1^2 / (2 d^2) <= lambda2 <= 2 kappa1 / d, with exact kappa1."""
    d = _degree_scale(g, None)
    k1 = cheeger_exact(g).ratio
    lam2 = lambda2_exact(g)
    lo = float(k1 * k1) / (2 * d * d)
    hi = 2 * float(k1) / d
    slack = min(lam2 - lo, hi - lam2)
    return ChainItem("cheeger", lam2, lo, bool(slack >= -tol), float(slack), True,
                     f"{lo!r} <= lambda2 <= {hi!r}")


def verify_chain(g: FiniteGraph, p: float, tol: float = 1e-6, rel_tol_k2: float = 1e-5,
                 restarts: int = 32, seed: int = 0) -> SpectralReport:
    """Evaluate the inequality chain between lambda2, kappa1, kappa_p and lambda_p.

    Sound one-sided use of the estimates: kappa_p and lambda_p are upper
    bounds, so items with them on the smaller side (1, 5) are certified; the
    others are marked as estimates unless the grid oracle brackets them.
    """
    if not g.is_connected():
        raise GraphError("graph must be connected")
    d = _degree_scale(g, None)
    k1 = cheeger_exact(g)
    lam2 = lambda2_exact(g)
    kappa1 = float(k1.ratio)
    pb = p_bar(p)
    if not g.is_regular:
        item6a = _ge("6a", 4 * d * kappa1, 2 * d * d * lam2, tol, True)
        item6b = _ge("6b", 2 * d * d * lam2, kappa1 ** 2, tol, True)
        return SpectralReport(g.name, int(d), p, pb, lam2, kappa1, k1.members(), math.nan, math.nan,
                              math.nan, math.nan, [item6a, item6b])
    kp = kappa_p_estimate(g, p, restarts, seed)
    lp = lambda_p_estimate(g, p, restarts, seed)
    k2 = kappa_p_estimate(g, 2.0, restarts, seed)
    kappa_p, lambda_p = kp.value, lp.upper
    kappa_cert = lambda_cert = False
    if g.n <= 4:
        orc = grid_oracle(g, p)
        kappa_lo, lambda_lo = orc.kappa_p.lo, orc.lambda_p.lo
        kappa_cert = lambda_cert = True
    else:
        kappa_lo, lambda_lo = kappa_p, lambda_p
    chain = [
        _ge("1", 2 ** (p - 1) * kappa1, kappa_p ** p, tol, True),
        ChainItem("2", k2.value ** 2, d * lam2,
                  bool(abs(k2.value ** 2 - d * lam2) <= rel_tol_k2 * d * lam2),
                  -abs(k2.value ** 2 - d * lam2), False, "relative tolerance"),
        _ge("3", max(2, p) * d ** ((p - 1) / p) * kappa_lo, 2 ** ((p - 1) / p) * kappa1, tol, kappa_cert),
        _ge("4-lemma", kappa_lo, d ** (1 / p) / 2 * lambda_p, tol, kappa_cert),
        _ge("4-table", kappa_lo, d ** (1 / p) * lambda_p, tol, kappa_cert,
            "summary-table form; weaker constant than the lemma, may fail"),
        _ge("5", pb * lambda_p, 2 * lam2, tol, True),
        _ge("6a", 4 * d * kappa1, 2 * d * d * lam2, tol, True),
        _ge("6b", 2 * d * d * lam2, kappa1 ** 2, tol, True),
        _ge("summary-last", 2 ** ((4 * p - 1) / (2 * p)) * lam2 ** (1 / (2 * p)),
            2 ** ((2 * p - 1) / p) * kappa1 ** (1 / p) / d ** (1 / p), tol, True,
            "final link of the summary display, as stated"),
    ]
    return SpectralReport(g.name, int(d), p, pb, lam2, kappa1, k1.members(), kappa_p, lambda_p,
                          lp.lower, k2.value, chain)
