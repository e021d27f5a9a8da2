"""Exhaustive subset enumeration with boundary counts (bitmask based)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph_core import FiniteGraph, GraphError

EXHAUSTIVE_LIMIT = 20
HARD_LIMIT = 26
_CHUNK = 1 << 20


@dataclass
class SizeTable:
    """Per-size minimum boundary and the lexicographically smallest minimiser."""

    n: int
    min_boundary: dict[int, int]
    witness: dict[int, tuple[int, ...]]


def _reverse_bits(masks: np.ndarray, n: int) -> np.ndarray:
    out = np.zeros_like(masks)
    for b in range(n):
        out |= ((masks >> b) & 1) << (n - 1 - b)
    return out


def minimum_boundaries(g: FiniteGraph, max_size: int | None = None,
                       limit: int = EXHAUSTIVE_LIMIT) -> SizeTable:
    """Exact F(x) = min |boundary F| over |F| = x for 1 <= x <= max_size.

    Ties between minimisers are broken by the lexicographically smallest
    sorted member tuple.
    """
    n = g.n
    if n > min(limit, HARD_LIMIT):
        raise GraphError(f"exhaustive enumeration limited to {min(limit, HARD_LIMIT)} vertices, got {n}")
    top = n // 2 if max_size is None else min(max_size, n)
    edges = g.edges.astype(np.int64)
    best: dict[int, int] = {}
    best_key: dict[int, int] = {}  # bit-reversed mask; larger = lexicographically smaller tuple
    total = 1 << n
    for start in range(1, total, _CHUNK):
        masks = np.arange(start, min(start + _CHUNK, total), dtype=np.int64)
        pop = np.bitwise_count(masks).astype(np.int64)
        keep = pop <= top
        masks, pop = masks[keep], pop[keep]
        if masks.size == 0:
            continue
        bits = [((masks >> v) & 1).astype(np.int8) for v in range(n)]
        bnd = np.zeros(masks.size, dtype=np.int64)
        for u, v in edges:
            bnd += bits[u] ^ bits[v]
        for x in np.unique(pop):
            sel = pop == x
            b = bnd[sel]
            lo = int(b.min())
            cand = _reverse_bits(masks[sel][b == lo], n)
            key = int(cand.max())
            x = int(x)
            if x not in best or lo < best[x] or (lo == best[x] and key > best_key[x]):
                best[x], best_key[x] = lo, key
    witness = {}
    for x, key in best_key.items():
        mask = int(_reverse_bits(np.array([key], dtype=np.int64), n)[0])
        witness[x] = tuple(v for v in range(n) if mask >> v & 1)
    return SizeTable(n, dict(sorted(best.items())), dict(sorted(witness.items())))


def connected_subsets(g: FiniteGraph, max_size: int):
    """Yield every connected vertex subset with at most ``max_size`` vertices (as sorted tuples)."""
    nbrs = [set(map(int, g.neighbors(v))) for v in range(g.n)]

    def extend(sub, ext, v):
        yield tuple(sorted(sub))
        if len(sub) == max_size:
            return
        ext = set(ext)
        while ext:
            w = ext.pop()
            excl = set().union(*(nbrs[u] for u in sub)) | sub
            new_ext = ext | {u for u in nbrs[w] if u > v and u not in excl}
            yield from extend(sub | {w}, new_ext, v)

    for v in range(g.n):
        yield from extend({v}, {u for u in nbrs[v] if u > v}, v)


def random_connected_subsets(g: FiniteGraph, count: int, seed: int, max_size: int | None = None,
                             tries: int = 50) -> list[np.ndarray]:
    """Up to ``count`` distinct connected proper subsets grown from random seeds.

    Fewer are returned when the graph has fewer (small cycles, say).
    """
    rng = np.random.default_rng(seed)
    top = min(g.n - 1 if max_size is None else max_size, g.n - 1)
    if top < 1:
        return []
    seen: set[bytes] = set()
    out = []
    for _ in range(count * tries):
        if len(out) == count:
            break
        size = int(rng.integers(1, top + 1))
        members = np.zeros(g.n, dtype=bool)
        members[int(rng.integers(g.n))] = True
        for _ in range(size - 1):
            nb, _ = g.gather_neighbors(np.flatnonzero(members))
            front = np.unique(nb[~members[nb]])
            members[int(rng.choice(front))] = True
        key = np.packbits(members).tobytes()
        if key not in seen:
            seen.add(key)
            out.append(np.flatnonzero(members))
    return out
