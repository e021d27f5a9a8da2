"""The lamplighter group C2 wr Z with the switch-or-walk generators.

Vertices are pairs ``(lamps, z)`` where ``lamps`` is a frozenset of integer
positions whose lamps are on and ``z`` is the lamplighter position.  Each
vertex has three neighbours: toggle the lamp at ``z``, or step to ``z +- 1``.
"""
from __future__ import annotations

import struct
from collections.abc import Sequence

import numpy as np

from .graph_core import (DEFAULT_BUDGET_VERTICES, FiniteGraph, GraphError, LazyGraph,
                         ResourceError, VertexSubset, Window)

DEGREE = 3


class Lamplighter(LazyGraph):
    name = "lamplighter"
    degree_bound = DEGREE
    transitive = True

    def neighbors(self, x):
        lamps, z = x
        return [(lamps ^ {z}, z), (lamps, z + 1), (lamps, z - 1)]

    def encode(self, x) -> bytes:
        lamps, z = x
        pos = sorted(lamps)
        return struct.pack(f"<qq{len(pos)}q", z, len(pos), *pos)

    def decode(self, b: bytes):
        z, k = struct.unpack_from("<qq", b)
        pos = struct.unpack_from(f"<{k}q", b, 16)
        return frozenset(pos), z

    def origin(self):
        return frozenset(), 0


def lamplighter_lazy() -> Lamplighter:
    return Lamplighter()


class LampBox:
    """Index arithmetic for the box {z in [0, n+1], lamps within [1, n]}.

    The vertex ``(mask, z)`` has index ``z * 2**n + mask`` where bit ``i - 1``
    of ``mask`` is the lamp at position ``i``.  The rows z = 0 and z = n+1 form
    the collar around F_n = {1 <= z <= n}.
    """

    def __init__(self, n: int):
        if n < 1:
            raise GraphError("n must be >= 1")
        self.n = n
        self.width = 1 << n
        self.size = (n + 2) * self.width

    def index(self, mask, z):
        return z * self.width + mask

    def split(self, idx):
        return idx & (self.width - 1), idx >> self.n

    def to_label(self, idx: int):
        mask, z = self.split(int(idx))
        return frozenset(i + 1 for i in range(self.n) if mask >> i & 1), z

    def from_label(self, label) -> int:
        lamps, z = label
        if not 0 <= z <= self.n + 1 or any(not 1 <= p <= self.n for p in lamps):
            raise KeyError(label)
        return self.index(sum(1 << (p - 1) for p in lamps), z)


class _BoxLabels(Sequence):
    def __init__(self, box: LampBox):
        self.box = box

    def __len__(self):
        return self.box.size

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self.box.to_label(j) for j in range(*i.indices(len(self)))]
        if not -len(self) <= i < len(self):
            raise IndexError(i)
        return self.box.to_label(i % len(self))


def lamplighter_window(n: int, budget: int = DEFAULT_BUDGET_VERTICES) -> Window:
    """Window around F_n = {(f, z) : z in [1, n], supp f in [1, n]} with a one-row collar."""
    box = LampBox(n)
    if box.size > budget:
        raise ResourceError(f"lamplighter window n={n} needs {box.size} vertices (budget {budget})")
    W = box.width
    masks = np.arange(W, dtype=np.int64)
    walk = [np.stack([box.index(masks, z), box.index(masks, z + 1)], 1) for z in range(n + 1)]
    switch = []
    for z in range(1, n + 1):
        lo = masks[(masks >> (z - 1)) & 1 == 0]
        switch.append(np.stack([box.index(lo, z), box.index(lo | (1 << (z - 1)), z)], 1))
    e = np.concatenate(walk + switch)
    rows = np.concatenate([e[:, 0], e[:, 1]])
    cols = np.concatenate([e[:, 1], e[:, 0]])
    g = FiniteGraph._from_coo(box.size, rows, cols, f"lamplighter-window:{n}")
    core = np.zeros(box.size, dtype=bool)
    core[W:(n + 1) * W] = True
    return Window(g, _BoxLabels(box), VertexSubset(g, core), 1, box.from_label,
                  [np.flatnonzero(core), np.flatnonzero(~core)], Lamplighter())


def lamplighter_core_counts(n: int) -> tuple[int, int]:
    """|F_n| and |boundary F_n| counted on the materialised window."""
    from .graph_core import boundary_size
    w = lamplighter_window(n)
    return len(w.core), boundary_size(w.core)
