"""Graph containers, family generators, boundaries and windows.

Finite graphs are stored in CSR form (sorted neighbour lists).  Infinite
Cayley graphs are described lazily by a label type plus a neighbour rule and
are materialised into finite :class:`Window` objects on demand.
"""
from __future__ import annotations

import re
import struct
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Callable, Hashable, Iterable, Sequence

import numpy as np
import scipy.sparse as sp

DEFAULT_BUDGET_VERTICES = 1 << 25


class GraphError(ValueError):
    """Invalid graph specification or malformed graph data."""


class ResourceError(RuntimeError):
    """A materialisation would exceed the configured vertex budget."""


@dataclass(frozen=True, eq=False)
class FiniteGraph:
    indptr: np.ndarray
    indices: np.ndarray
    name: str = ""

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]] | np.ndarray, name: str = "") -> "FiniteGraph":
        e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if n <= 0:
            raise GraphError("graph needs at least one vertex")
        if e.size and (e.min() < 0 or e.max() >= n):
            raise GraphError("edge endpoint out of range")
        if np.any(e[:, 0] == e[:, 1]):
            raise GraphError("self-loops are not allowed")
        lo = np.minimum(e[:, 0], e[:, 1])
        hi = np.maximum(e[:, 0], e[:, 1])
        key = lo * n + hi
        if np.unique(key).size != key.size:
            raise GraphError("duplicate edges are not allowed")
        rows = np.concatenate([lo, hi])
        cols = np.concatenate([hi, lo])
        return cls._from_coo(n, rows, cols, name)

    @classmethod
    def _from_coo(cls, n: int, rows: np.ndarray, cols: np.ndarray, name: str = "") -> "FiniteGraph":
        idx_dtype = np.int32 if n < 2**31 - 1 else np.int64
        data = np.ones(rows.size, dtype=np.int8)
        a = sp.csr_matrix((data, (rows.astype(idx_dtype), cols.astype(idx_dtype))), shape=(n, n))
        a.sort_indices()
        return cls(a.indptr.astype(np.int64), a.indices.astype(idx_dtype), name)

    @property
    def n(self) -> int:
        return self.indptr.size - 1

    @property
    def vertex_count(self) -> int:
        return self.n

    @cached_property
    def degree(self) -> np.ndarray:
        return np.diff(self.indptr)

    @cached_property
    def edges(self) -> np.ndarray:
        """Unordered edges as an (m, 2) array with u < v, lexicographically sorted."""
        rows = np.repeat(np.arange(self.n, dtype=self.indices.dtype), self.degree)
        keep = self.indices > rows
        return np.stack([rows[keep], self.indices[keep]], axis=1)

    @property
    def m(self) -> int:
        return int(self.degree.sum() // 2)

    @cached_property
    def is_regular(self) -> bool:
        return bool(self.n == 0 or np.all(self.degree == self.degree[0]))

    @property
    def d(self) -> int | None:
        """Common degree when regular, else None."""
        return int(self.degree[0]) if self.is_regular else None

    @property
    def max_degree(self) -> int:
        return int(self.degree.max()) if self.n else 0

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def adjacency(self) -> sp.csr_matrix:
        data = np.ones(self.indices.size)
        return sp.csr_matrix((data, self.indices, self.indptr), shape=(self.n, self.n))

    def laplacian(self) -> sp.csr_matrix:
        """Divergence-form Laplacian D - A (equals grad^T grad)."""
        return (sp.diags(self.degree.astype(float)) - self.adjacency()).tocsr()

    def gather_neighbors(self, frontier: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Neighbours of every vertex in ``frontier`` (flattened) and their source."""
        starts = self.indptr[frontier]
        counts = self.indptr[frontier + 1] - starts
        total = int(counts.sum())
        src = np.repeat(frontier, counts)
        offs = np.arange(total) - np.repeat(np.cumsum(counts) - counts, counts)
        return self.indices[np.repeat(starts, counts) + offs], src

    def is_connected(self) -> bool:
        return bool(np.all(bfs_distances(self, [0]) >= 0))

    def validate(self) -> None:
        a = self.adjacency()
        if (a != a.T).nnz:
            raise GraphError("adjacency is not symmetric")
        if np.any(a.diagonal()):
            raise GraphError("self-loop present")
        for v in range(self.n):
            nb = self.neighbors(v)
            if nb.size > 1 and np.any(np.diff(nb) <= 0):
                raise GraphError(f"neighbour list of {v} not strictly sorted")

    def __repr__(self) -> str:
        return f"FiniteGraph({self.name or '?'}, n={self.n}, m={self.m})"


@dataclass(frozen=True, eq=False)
class VertexSubset:
    host: FiniteGraph
    members: np.ndarray

    def __post_init__(self) -> None:
        if self.members.dtype != bool or self.members.shape != (self.host.n,):
            raise GraphError("members must be a boolean mask over the host vertices")

    @classmethod
    def from_indices(cls, host: FiniteGraph, idx: Iterable[int]) -> "VertexSubset":
        mask = np.zeros(host.n, dtype=bool)
        arr = idx if isinstance(idx, np.ndarray) else np.fromiter(idx, dtype=np.int64)
        mask[arr] = True
        return cls(host, mask)

    @classmethod
    def full(cls, host: FiniteGraph) -> "VertexSubset":
        return cls(host, np.ones(host.n, dtype=bool))

    @cached_property
    def indices(self) -> np.ndarray:
        return np.flatnonzero(self.members)

    def __len__(self) -> int:
        return int(self.members.sum())

    def complement(self) -> "VertexSubset":
        return VertexSubset(self.host, ~self.members)


@dataclass(frozen=True, eq=False)
class EdgeSet:
    host: FiniteGraph
    edges: np.ndarray

    def __len__(self) -> int:
        return int(self.edges.shape[0])


def edge_boundary(F: VertexSubset) -> EdgeSet:
    """Unordered edges with exactly one endpoint in ``F``."""
    e = F.host.edges
    cut = F.members[e[:, 0]] != F.members[e[:, 1]]
    return EdgeSet(F.host, e[cut])


def boundary_size(F: VertexSubset) -> int:
    e = F.host.edges
    return int(np.count_nonzero(F.members[e[:, 0]] != F.members[e[:, 1]]))


def induced_subgraph(F: VertexSubset) -> tuple[FiniteGraph, np.ndarray]:
    """Graph induced on ``F`` plus the map from new to host indices."""
    idx = F.indices
    if idx.size == 0:
        raise GraphError("cannot induce on an empty set")
    a = F.host.adjacency()[idx][:, idx].tocsr()
    a.sort_indices()
    g = FiniteGraph(a.indptr.astype(np.int64), a.indices.astype(F.host.indices.dtype),
                    f"{F.host.name}[induced {idx.size}]")
    return g, idx


def bfs_distances(g: FiniteGraph, sources: Iterable[int] | np.ndarray,
                  allowed: np.ndarray | None = None, max_depth: int | None = None) -> np.ndarray:
    """Multi-source BFS distances (-1 for unreached), optionally restricted to ``allowed``."""
    dist = np.full(g.n, -1, dtype=np.int64)
    frontier = np.unique(np.asarray(list(sources) if not isinstance(sources, np.ndarray) else sources,
                                    dtype=np.int64))
    dist[frontier] = 0
    depth = 0
    while frontier.size and (max_depth is None or depth < max_depth):
        nb, _ = g.gather_neighbors(frontier)
        nb = nb[dist[nb] < 0]
        if allowed is not None:
            nb = nb[allowed[nb]]
        frontier = np.unique(nb)
        depth += 1
        dist[frontier] = depth
    return dist


# ---------------------------------------------------------------- families

def cycle(n: int) -> FiniteGraph:
    if n < 3:
        raise GraphError("cycle needs n >= 3")
    v = np.arange(n)
    return FiniteGraph.from_edges(n, np.stack([v, (v + 1) % n], 1), f"cycle:{n}")


def path(n: int) -> FiniteGraph:
    if n < 1:
        raise GraphError("path needs n >= 1")
    v = np.arange(n - 1)
    return FiniteGraph.from_edges(n, np.stack([v, v + 1], 1), f"path:{n}")


def complete(n: int) -> FiniteGraph:
    if n < 2:
        raise GraphError("complete graph needs n >= 2")
    iu = np.triu_indices(n, 1)
    return FiniteGraph.from_edges(n, np.stack(iu, 1), f"complete:{n}")


def hypercube(k: int) -> FiniteGraph:
    if k < 1:
        raise GraphError("hypercube needs k >= 1")
    v = np.arange(1 << k)
    edges = [np.stack([v[(v >> b) & 1 == 0], v[(v >> b) & 1 == 0] | (1 << b)], 1) for b in range(k)]
    return FiniteGraph.from_edges(1 << k, np.concatenate(edges), f"hypercube:{k}")


def grid(*sides: int, torus: bool = False) -> FiniteGraph:
    """Box of Z^d (or the discrete torus) with the given side lengths."""
    if not sides or min(sides) < 1:
        raise GraphError("grid sides must be positive")
    shape = tuple(sides)
    n = int(np.prod(shape))
    ids = np.arange(n).reshape(shape)
    edges = []
    for ax, L in enumerate(shape):
        if torus:
            if L < 3:
                raise GraphError("torus sides must be >= 3")
            edges.append(np.stack([ids.ravel(), np.roll(ids, -1, axis=ax).ravel()], 1))
        else:
            a = np.take(ids, range(L - 1), axis=ax).ravel()
            b = np.take(ids, range(1, L), axis=ax).ravel()
            edges.append(np.stack([a, b], 1))
    kind = "torus" if torus else "grid"
    return FiniteGraph.from_edges(n, np.concatenate(edges) if edges else np.empty((0, 2)),
                                  f"{kind}:{','.join(map(str, shape))}")


def petersen() -> FiniteGraph:
    outer = [(i, (i + 1) % 5) for i in range(5)]
    spokes = [(i, i + 5) for i in range(5)]
    inner = [(5 + i, 5 + (i + 2) % 5) for i in range(5)]
    return FiniteGraph.from_edges(10, outer + spokes + inner, "petersen")


def random_regular(n: int, d: int, seed: int) -> FiniteGraph:
    """Connected random d-regular graph; deterministic in (n, d, seed)."""
    import networkx as nx

    if n * d % 2 or d >= n or d < 1:
        raise GraphError(f"no simple {d}-regular graph on {n} vertices")
    for attempt in range(1000):
        h = nx.random_regular_graph(d, n, seed=seed + 7919 * attempt)
        if nx.is_connected(h):
            return FiniteGraph.from_edges(n, np.array(h.edges(), dtype=np.int64).reshape(-1, 2),
                                          f"random-regular:n={n},d={d},seed={seed}")
    raise GraphError("could not sample a connected regular graph")


def tree_ray_graph(depth: int, ray_length: int | None = None,
                   regularized: bool = False) -> tuple[FiniteGraph, dict[int, VertexSubset]]:
    """Complete binary tree of the given depth whose root hangs off a ray 0..L-1.

    Returns the graph and, for each m <= depth, a subtree set ``T_m`` with
    ``2**m - 1`` vertices and a single boundary edge.  Vertices are the tree in
    heap order followed by the ray.  With ``regularized`` three copies of the
    tree-with-ray are glued along their leaves (one concrete choice of gluing;
    ray vertices keep degree 2).
    """
    if depth < 1:
        raise GraphError("depth must be >= 1")
    L = (1 << depth) if ray_length is None else ray_length
    if L < 1:
        raise GraphError("ray_length must be >= 1")
    t = (1 << depth) - 1
    first_leaf = (1 << (depth - 1)) - 1
    copies = 3 if regularized else 1
    internal = first_leaf
    # vertex layout per copy: internal nodes, then ray; leaves shared once at the end
    per_copy = internal + L
    leaf_base = copies * per_copy

    def node(c: int, i: int) -> int:
        if i >= first_leaf:
            return (leaf_base + (i - first_leaf)) if regularized else i
        return c * per_copy + i if regularized else i

    def ray(c: int, k: int) -> int:
        return c * per_copy + internal + k if regularized else t + k

    edges = []
    for c in range(copies):
        for i in range(first_leaf):
            edges.append((node(c, i), node(c, 2 * i + 1)))
            edges.append((node(c, i), node(c, 2 * i + 2)))
        edges.append((node(c, 0), ray(c, 0)))
        for k in range(L - 1):
            edges.append((ray(c, k), ray(c, k + 1)))
    n = leaf_base + (t - first_leaf) if regularized else t + L
    g = FiniteGraph.from_edges(n, edges, f"tree-ray:{depth},{L}{',reg' if regularized else ''}")
    sets = {}
    for m in range(1, depth + 1):
        root = (1 << (depth - m)) - 1
        members, stack = [], [root]
        while stack:
            i = stack.pop()
            members.append(node(0, i))
            if 2 * i + 1 < t:
                stack += [2 * i + 1, 2 * i + 2]
        sets[m] = VertexSubset.from_indices(g, members)
    return g, sets


_FAMILY_RE = re.compile(r"^([a-z0-9\-]+)(?::(.*))?$")


def _kv(arg: str) -> dict[str, int]:
    out = {}
    for part in arg.split(","):
        k, _, v = part.partition("=")
        out[k.strip()] = int(v)
    return out


def generate_family(spec: str) -> FiniteGraph:
    """Build a graph from a descriptor such as ``cycle:12`` or ``random-regular:n=50,d=4,seed=7``."""
    m = _FAMILY_RE.match(spec.strip())
    if not m:
        raise GraphError(f"bad family descriptor {spec!r}")
    kind, arg = m.group(1), m.group(2) or ""
    try:
        if kind == "cycle":
            return cycle(int(arg))
        if kind == "path":
            return path(int(arg))
        if kind == "complete":
            return complete(int(arg))
        if kind == "hypercube":
            return hypercube(int(arg))
        if kind in ("grid", "torus"):
            return grid(*(int(s) for s in arg.split(",")), torus=kind == "torus")
        if kind == "petersen":
            return petersen()
        if kind == "random-regular":
            kv = _kv(arg)
            if "seed" not in kv:
                raise GraphError("random-regular requires a seed")
            return random_regular(kv["n"], kv["d"], kv["seed"])
        if kind == "tree-ray":
            parts = [int(s) for s in arg.split(",")]
            return tree_ray_graph(*parts)[0]
        if kind == "lamplighter-window":
            from .lamplighter import lamplighter_window
            return lamplighter_window(int(arg)).graph
    except (KeyError, ValueError) as exc:
        raise GraphError(f"bad parameters in {spec!r}: {exc}") from exc
    raise GraphError(f"unknown family {kind!r}")


def connected_graph_from_family(spec: str) -> FiniteGraph:
    g = generate_family(spec)
    if not g.is_connected():
        raise GraphError(f"{spec} is not connected")
    return g


# ---------------------------------------------------------------- text format

def dumps_graph(g: FiniteGraph) -> str:
    e = g.edges
    lines = [f"{g.n} {e.shape[0]}"] + [f"{u} {v}" for u, v in e]
    return "\n".join(lines) + "\n"


def loads_graph(text: str, name: str = "") -> FiniteGraph:
    rows = [ln.split() for ln in text.strip().splitlines() if ln.strip()]
    try:
        n, m = int(rows[0][0]), int(rows[0][1])
        edges = [(int(a), int(b)) for a, b in rows[1:]]
    except (IndexError, ValueError) as exc:
        raise GraphError("malformed graph text") from exc
    if len(edges) != m:
        raise GraphError(f"header announces {m} edges, found {len(edges)}")
    if any(u >= v for u, v in edges):
        raise GraphError("edges must be listed with u < v")
    return FiniteGraph.from_edges(n, edges, name)


# ---------------------------------------------------------------- lazy graphs

class LazyGraph:
    """Infinite (or implicit) bounded-degree graph given by a neighbour rule."""

    name = "lazy"
    degree_bound = 0
    transitive = False

    def neighbors(self, x: Hashable) -> list:
        raise NotImplementedError

    def encode(self, x: Hashable) -> bytes:
        raise NotImplementedError

    def decode(self, b: bytes) -> Hashable:
        raise NotImplementedError

    def origin(self) -> Hashable:
        raise NotImplementedError


class IntegerLattice(LazyGraph):
    """Standard Cayley graph of Z^dim; labels are integer tuples."""

    transitive = True

    def __init__(self, dim: int = 1):
        self.dim = dim
        self.degree_bound = 2 * dim
        self.name = f"Z^{dim}"

    def neighbors(self, x):
        out = []
        for i in range(self.dim):
            for s in (1, -1):
                y = list(x)
                y[i] += s
                out.append(tuple(y))
        return out

    def encode(self, x) -> bytes:
        return struct.pack(f"<{self.dim}q", *x)

    def decode(self, b: bytes):
        return tuple(struct.unpack(f"<{self.dim}q", b))

    def origin(self):
        return (0,) * self.dim


class CycleLazy(LazyGraph):
    """A finite cycle wrapped as a lazy graph (useful for sanity checks)."""

    transitive = True
    degree_bound = 2

    def __init__(self, n: int):
        self.n = n
        self.name = f"lazy-cycle:{n}"

    def neighbors(self, x):
        return [(x + 1) % self.n, (x - 1) % self.n]

    def encode(self, x) -> bytes:
        return struct.pack("<q", x)

    def decode(self, b: bytes):
        return struct.unpack("<q", b)[0]

    def origin(self):
        return 0


@dataclass(eq=False)
class Window:
    """A finite piece of a lazy graph: the core set plus a fully expanded collar."""

    graph: FiniteGraph
    labels: Sequence[Any]
    core: VertexSubset
    margin: int
    index: Callable[[Any], int] | None = None
    layers: list[np.ndarray] = field(default_factory=list)
    lazy: LazyGraph | None = None

    def index_of(self, label) -> int:
        if self.index is None:
            raise KeyError(label)
        return self.index(label)

    def subset(self, labels: Iterable[Any]) -> VertexSubset:
        return VertexSubset.from_indices(self.graph, [self.index_of(x) for x in labels])


def materialize(g: LazyGraph, core_labels: Iterable[Hashable], margin: int = 1,
                budget: int = DEFAULT_BUDGET_VERTICES) -> Window:
    """Materialise ``core_labels`` plus every vertex within ``margin`` of them.

    Layer 0 is the core; layer i holds the vertices at distance i from it.
    """
    if margin < 1:
        raise GraphError("windows need margin >= 1")
    labels: list = []
    index: dict = {}
    for x in core_labels:
        if x not in index:
            index[x] = len(labels)
            labels.append(x)
    ncore = len(labels)
    layers = [np.arange(ncore)]
    frontier = list(labels)
    for _ in range(margin):
        nxt = []
        for x in frontier:
            for y in g.neighbors(x):
                if y not in index:
                    index[y] = len(labels)
                    labels.append(y)
                    nxt.append(y)
                    if len(labels) > budget:
                        raise ResourceError(f"materialisation exceeds budget of {budget} vertices")
        layers.append(np.array([index[y] for y in nxt], dtype=np.int64))
        frontier = nxt
    edges = []
    for i, x in enumerate(labels):
        for y in g.neighbors(x):
            j = index.get(y)
            if j is not None and i < j:
                edges.append((i, j))
    fg = FiniteGraph.from_edges(len(labels), edges, f"{g.name}[window {ncore}+{margin}]")
    core = VertexSubset.from_indices(fg, range(ncore))
    return Window(fg, labels, core, margin, index.__getitem__, layers, g)


def ball_labels(g: LazyGraph, center: Hashable, radius: int,
                budget: int = DEFAULT_BUDGET_VERTICES) -> list[list]:
    """BFS layers of the ball of ``radius`` around ``center``."""
    if radius < 0:
        raise GraphError("radius must be >= 0")
    seen = {center}
    layers = [[center]]
    for _ in range(radius):
        nxt = []
        for x in layers[-1]:
            for y in g.neighbors(x):
                if y not in seen:
                    seen.add(y)
                    nxt.append(y)
        if len(seen) > budget:
            raise ResourceError(f"ball exceeds budget of {budget} vertices")
        layers.append(nxt)
    return layers


def materialize_ball(g: LazyGraph, center: Hashable, radius: int, margin: int = 1,
                     budget: int = DEFAULT_BUDGET_VERTICES) -> Window:
    """Window whose core is the ball B_center(radius); ``layers`` holds all BFS layers."""
    layers = ball_labels(g, center, radius, budget)
    w = materialize(g, [x for layer in layers for x in layer], margin, budget)
    sizes = np.cumsum([0] + [len(layer) for layer in layers])
    w.layers = [np.arange(sizes[i], sizes[i + 1]) for i in range(len(layers))] + w.layers[1:]
    return w
