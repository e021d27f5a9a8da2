"""A Følner sequence in the lamplighter group violating the radial inequality.

F_n = {(f, z) : z in [1, n], supp f in [1, n]} is paved by translates of F_j
(j | n): for a block i with interval I_i = [ij+1, (i+1)j] and a lamp state f0
on [1, n] minus I_i, the translate T(i, f0) collects every (f0 + f, l) with
l in I_i and supp f in I_i.  One element is picked in each translate, the
translates are joined to each other and to the outside by a spanning tree,
and the vertices of paths realising the tree edges are removed from F_n.

Everything works on the index box of :class:`~isospec.lamplighter.LampBox`
with vectorised index arithmetic, so no adjacency structure is built; n = 20
needs about 23 million box entries.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .graph_core import DEFAULT_BUDGET_VERTICES, GraphError, ResourceError
from .lamplighter import LampBox, lamplighter_window

DEGREE = 3
OUTSIDE = -1


def _block_nodes(n: int, j: int, i: int) -> np.ndarray:
    """Every lamp state on [1, n] with the bits of I_i cleared, ascending."""
    rest = np.arange(1 << (n - j), dtype=np.int64)
    lo = i * j
    return (rest & ((1 << lo) - 1)) | ((rest >> lo) << (lo + j))


def _interval_mask(j: int, i: int) -> int:
    return ((1 << j) - 1) << (i * j)


@dataclass
class SpanningTree:
    """Edges (child, parent) of a BFS tree on the translate graph.

    Nodes are keyed ``i * 2**n + f0``; the outside of F_n is ``OUTSIDE``.
    """

    child: np.ndarray
    parent: np.ndarray
    depth: int


def translate_tree(n: int, j: int) -> SpanningTree:
    """BFS tree from the outside node, each node hanging off its smallest-key discoverer."""
    L = n // j
    W = 1 << n
    seen = np.zeros(L * W, dtype=bool)
    first = sorted({0, L - 1})
    frontier = np.concatenate([i * W + _block_nodes(n, j, i) for i in first])
    seen[frontier] = True
    children = [frontier]
    parents = [np.full(frontier.size, OUTSIDE, dtype=np.int64)]
    s = np.arange(1 << j, dtype=np.int64)
    depth = 1
    while frontier.size:
        blk, f0 = frontier >> n, frontier & (W - 1)
        tgt, src = [], []
        for di in (-1, 1):
            b2 = blk + di
            ok = (b2 >= 0) & (b2 < L)
            if not ok.any():
                continue
            b2o, f0o, blko, keys = b2[ok], f0[ok], blk[ok], frontier[ok]
            clear = np.array([~_interval_mask(j, int(b)) for b in range(L)], dtype=np.int64)[b2o]
            base = f0o & clear
            g0 = base[:, None] | (s[None, :] << (blko * j)[:, None])
            tgt.append((b2o[:, None] * W + g0).ravel())
            src.append(np.repeat(keys, s.size))
        if not tgt:
            break
        tgt, src = np.concatenate(tgt), np.concatenate(src)
        new = ~seen[tgt]
        tgt, src = tgt[new], src[new]
        if tgt.size == 0:
            break
        order = np.lexsort((src, tgt))
        tgt, src = tgt[order], src[order]
        head = np.ones(tgt.size, dtype=bool)
        head[1:] = tgt[1:] != tgt[:-1]
        tgt, src = tgt[head], src[head]
        seen[tgt] = True
        children.append(tgt)
        parents.append(src)
        frontier = tgt
        depth += 1
    return SpanningTree(np.concatenate(children), np.concatenate(parents), depth)


def realise_paths(n: int, j: int, tree: SpanningTree) -> tuple[np.ndarray, np.ndarray]:
    """Box indices of the path realising each tree edge, padded with -1, and the step counts.

    Paths run between picked elements x_T = (f0, ij+1).  Edges to the outside
    leave through z = 0 (block 0) or by walking right to z = n + 1 (last
    block); the exit vertex itself is outside F_n and is not listed.
    """
    box = LampBox(n)
    W = box.width
    L = n // j
    E = tree.child.size
    maxlen = 6 * j - 1
    out = np.full((E, maxlen), -1, dtype=np.int64)
    ln = np.zeros(E, dtype=np.int64)
    steps_extra = np.zeros(E, dtype=np.int64)

    def emit(active, mask, z):
        rows = np.flatnonzero(active)
        out[rows, ln[rows]] = z[rows] * W + mask[rows]
        ln[rows] += 1

    cb, cf = tree.child >> n, tree.child & (W - 1)
    to_out = tree.parent == OUTSIDE
    pb, pf = tree.parent >> n, tree.parent & (W - 1)

    # edges to the outside
    left = to_out & (cb == 0)
    right = to_out & (cb != 0)
    z = cb * j + 1
    emit(left, cf, z)
    steps_extra[to_out] = 1
    for pos in range(j):
        emit(right, cf, z + pos)

    # translate-translate edges: run from the lower block a to block a + 1
    tt = ~to_out
    low = np.where(cb < pb, cb, pb)
    lf = np.where(cb < pb, cf, pf)
    uf = np.where(cb < pb, pf, cf)
    cur = lf.copy()
    base = low * j  # bit offset of I_a; z of its left end is base + 1
    sbits = (uf >> base) & ((1 << j) - 1)
    emit(tt, cur, base + 1)
    for pos in range(j):
        zz = base + 1 + pos
        tog = tt & (((sbits >> pos) & 1) == 1)
        cur = np.where(tog, cur ^ (np.int64(1) << (base + pos)), cur)
        emit(tog, cur, zz)
        if pos < j - 1:
            emit(tt, cur, zz + 1)
    up = base + j  # bit offset of I_{a+1}
    emit(tt, cur, up + 1)
    tbits = np.where(tt, (cur >> np.where(tt, up, 0)) & ((1 << j) - 1), 0)
    q = np.full(E, -1, dtype=np.int64)
    for pos in range(j):
        q = np.where(((tbits >> pos) & 1) == 1, pos, q)
    for pos in range(j):
        act = tt & (pos <= q)
        tog = act & (((tbits >> pos) & 1) == 1)
        cur = np.where(tog, cur ^ (np.int64(1) << (up + pos)), cur)
        emit(tog, cur, up + 1 + pos)
        emit(act & (pos < q), cur, up + 2 + pos)
    for pos in range(j - 2, -1, -1):
        emit(tt & (pos < q), cur, up + 1 + pos)
    if np.any(tt & (cur != uf)):
        raise AssertionError("translate path did not reach the picked element")
    return out, ln - 1 + steps_extra


def _box_neighbors(box: LampBox, idx: np.ndarray) -> list[np.ndarray]:
    """Neighbours of box indices that stay inside the box (one array per generator)."""
    n, W = box.n, box.width
    mask, z = idx & (W - 1), idx >> n
    res = []
    up = z < n + 1
    res.append(idx[up] + W)
    dn = z > 0
    res.append(idx[dn] - W)
    sw = (z >= 1) & (z <= n)
    res.append(idx[sw] ^ (np.int64(1) << (z[sw] - 1)))
    return res


def box_boundary(box: LampBox, members: np.ndarray) -> int:
    """Number of edges leaving ``members`` (a boolean mask over the box, empty collar rows)."""
    n, W = box.n, box.width
    if members[:W].any() or members[(n + 1) * W:].any():
        raise GraphError("member set must avoid the collar rows")
    count = 0
    for z in range(n + 1):
        a = members[z * W:(z + 1) * W]
        b = members[(z + 1) * W:(z + 2) * W]
        count += int(np.count_nonzero(a != b))
    masks = np.arange(W, dtype=np.int64)
    for z in range(1, n + 1):
        row = members[z * W:(z + 1) * W]
        lo = masks[((masks >> (z - 1)) & 1) == 0]
        count += int(np.count_nonzero(row[lo] != row[lo | (1 << (z - 1))]))
    return count


def box_inradius(box: LampBox, members: np.ndarray) -> int:
    """Inradius of ``members`` via multi-source BFS from the rest of the box."""
    dist = np.full(box.size, -1, dtype=np.int16)
    frontier = np.flatnonzero(~members)
    dist[frontier] = 0
    d = 0
    while frontier.size:
        nxt = np.concatenate(_box_neighbors(box, frontier))
        nxt = np.unique(nxt[dist[nxt] < 0])
        d += 1
        dist[nxt] = d
        frontier = nxt
    return int(dist[members].max()) - 1


def complement_connected(box: LampBox, removed: np.ndarray) -> bool:
    """Is (G minus F_n) together with ``removed`` connected?

    G minus F_n is connected: a vertex outside F_n either has z outside
    [1, n] or a lit lamp outside [1, n], and in both cases it can walk off
    to infinity without entering F_n.  It is therefore merged into one node;
    the search runs over the removed vertices from those next to the collar.
    """
    n, W = box.n, box.width
    seen = np.zeros(box.size, dtype=bool)
    z = np.flatnonzero(removed) >> n
    idx = np.flatnonzero(removed)
    frontier = idx[(z == 1) | (z == n)]
    seen[frontier] = True
    while frontier.size:
        nxt = np.concatenate(_box_neighbors(box, frontier))
        nxt = np.unique(nxt[removed[nxt] & ~seen[nxt]])
        seen[nxt] = True
        frontier = nxt
    return bool(np.array_equal(seen, removed))


@dataclass
class Counterexample:
    n: int
    j: int
    box: LampBox
    core: np.ndarray  # F_n as a mask over the box
    removed: np.ndarray
    paths: np.ndarray
    path_steps: np.ndarray
    tree: SpanningTree
    log: list[str] = field(default_factory=list)

    @property
    def members(self) -> np.ndarray:
        """F_{n;j} as a mask over the box."""
        return self.core & ~self.removed

    @property
    def translate_count(self) -> int:
        return int(self.tree.child.size)


def counterexample_build(n: int, j: int, budget: int = DEFAULT_BUDGET_VERTICES) -> Counterexample:
    if j < 1 or n % j:
        raise GraphError(f"j must divide n (n={n}, j={j})")
    if j < 5:
        raise GraphError("the construction needs j >= 5")
    box = LampBox(n)
    if box.size > budget:
        raise ResourceError(f"lamplighter box for n={n} has {box.size} vertices (budget {budget})")
    W = box.width
    log = [f"F_{n}: {n * W} vertices, paved by translates of F_{j}"]
    tree = translate_tree(n, j)
    log.append(f"translate graph: {tree.child.size} translates, BFS depth {tree.depth}")
    paths, steps = realise_paths(n, j, tree)
    if steps.max() > 8 * j + 1:
        raise AssertionError("a tree edge needed a path longer than 8j + 1")
    log.append(f"paths: longest {int(steps.max())} steps, {int((paths >= 0).sum())} vertex visits")
    core = np.zeros(box.size, dtype=bool)
    core[W:(n + 1) * W] = True
    removed = np.zeros(box.size, dtype=bool)
    removed[paths[paths >= 0]] = True
    if np.any(removed & ~core):
        raise AssertionError("a path left F_n")
    log.append(f"removed {int(removed.sum())} vertices")
    return Counterexample(n, j, box, core, removed, paths, steps, tree, log)


@dataclass
class CounterexampleReport:
    n: int
    j: int
    K: float
    k: float
    translate_count: int
    translate_count_expected: int
    size_F_n: int
    boundary_F_n: int
    inradius_F_n: int
    size: int
    size_lower_bound: float
    removed: int
    removed_bound: int
    boundary: int
    boundary_bound_corrected: float
    boundary_bound_as_printed: float
    inradius: int
    inradius_bound: int
    complement_connected: bool
    translate_diameter: int
    ratio: float
    ratio_F_n: float
    comparison_5j: float
    checks: dict[str, bool]

    @property
    def all_pass(self) -> bool:
        return all(self.checks.values())

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def counterexample_report(n: int, j: int, K: float = 1, k: float = 1,
                          budget: int = DEFAULT_BUDGET_VERTICES,
                          built: Counterexample | None = None) -> CounterexampleReport:
    from .isoperimetry import diameter_bounds, radial_ratio
    from .graph_core import induced_subgraph

    c = built or counterexample_build(n, j, budget)
    box, W = c.box, c.box.width
    members = c.members
    size = int(members.sum())
    size_Fn = n * W
    bnd = box_boundary(box, members)
    bnd_Fn = box_boundary(box, c.core)
    inr = box_inradius(box, members)
    inr_Fn = box_inradius(box, c.core)
    conn = complement_connected(box, c.removed)
    tw = lamplighter_window(j)
    diam = diameter_bounds(induced_subgraph(tw.core)[0])[1]
    expected = (n // j) << (n - j)
    removed = int(c.removed.sum())
    removed_bound = (8 * j + 1) * expected
    size_lb = n * W * (1 - 9 * 2.0 ** -j)
    b_corr = W * (2 + 27 * n * 2.0 ** -j)
    checks = {
        "translate_count": c.translate_count == expected,
        "removed <= (8j+1)(n/j)2^(n-j)": removed <= removed_bound,
        "|F_nj| >= n2^n(1-9*2^-j)": size * (1 << j) >= n * W * ((1 << j) - 9),
        "|dF_nj| <= 2^n(2+27n*2^-j)": bnd * (1 << j) <= W * (2 * (1 << j) + 27 * n),
        "inrad <= 4j": inr <= 4 * j,
        "complement connected": conn,
        "translate diameter <= 4j": diam <= 4 * j,
        "|F_n| = n2^n": int(c.core.sum()) == size_Fn,
        "|dF_n| = 2^(n+1)": bnd_Fn == 2 * W,
    }
    return CounterexampleReport(
        n, j, K, k, c.translate_count, expected, size_Fn, bnd_Fn, inr_Fn, size, size_lb, removed,
        removed_bound, bnd, b_corr, W * (2 - 27 * 2.0 ** -j), inr, 4 * j, conn, diam,
        float(radial_ratio(size, bnd, inr, K, k)), float(radial_ratio(size_Fn, bnd_Fn, inr_Fn, K, k)),
        float((5 * j) ** k * K / n), checks)
