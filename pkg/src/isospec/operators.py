"""Gradient, divergence, random walk and Laplacians on a :class:`FiniteGraph`.

Vertex functions are length-``n`` arrays.  Edge functions are length-``m``
arrays indexed like ``g.edges``; the stored value is the value on the
orientation (lower index -> higher index) and the reverse orientation carries
its negative.  Norms and pairings over edges count each unordered edge once,
which makes ``divergence(gradient(f)) == d * (f - P f)`` hold exactly on
d-regular graphs.
"""
from __future__ import annotations

import enum
import io
import math
from dataclasses import dataclass

import numpy as np

from .graph_core import FiniteGraph


class Convention(enum.Enum):
    WALK = "walk"  # I - P
    DIVERGENCE = "divergence"  # grad^* grad


def conjugate(p: float) -> float:
    """Hölder conjugate exponent."""
    if p == 1:
        return math.inf
    if math.isinf(p):
        return 1.0
    if p < 1:
        raise ValueError("p must be >= 1")
    return p / (p - 1)


def gradient(g: FiniteGraph, f: np.ndarray) -> np.ndarray:
    e = g.edges
    f = np.asarray(f, dtype=float)
    return f[e[:, 1]] - f[e[:, 0]]


def divergence(g: FiniteGraph, t: np.ndarray) -> np.ndarray:
    """(div t)(x) = sum over neighbours y of t(y, x)."""
    e = g.edges
    t = np.asarray(t, dtype=float)
    return (np.bincount(e[:, 1], weights=t, minlength=g.n)
            - np.bincount(e[:, 0], weights=t, minlength=g.n))


def plus_gradient(g: FiniteGraph, phi: np.ndarray) -> np.ndarray:
    """Symmetric edge values phi(x) + phi(y)."""
    e = g.edges
    phi = np.asarray(phi, dtype=float)
    return phi[e[:, 0]] + phi[e[:, 1]]


def walk_apply(g: FiniteGraph, f: np.ndarray) -> np.ndarray:
    """(Pf)(x): average of f over the neighbours of x."""
    deg = g.degree
    if np.any(deg == 0):
        raise ValueError("random walk undefined at isolated vertices")
    return (g.adjacency() @ np.asarray(f, dtype=float)) / deg


def walk_push(g: FiniteGraph, mu: np.ndarray) -> np.ndarray:
    """One step of the walk acting on a measure (transpose of P)."""
    return g.adjacency() @ (np.asarray(mu, dtype=float) / g.degree)


def laplacian_apply(g: FiniteGraph, f: np.ndarray, convention: Convention = Convention.WALK) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if convention is Convention.WALK:
        return f - walk_apply(g, f)
    return divergence(g, gradient(g, f))


def lp_norm(x: np.ndarray, p: float) -> float:
    if p < 1:
        raise ValueError("p must be >= 1")
    a = np.abs(np.asarray(x, dtype=float))
    if a.size == 0:
        return 0.0
    top = a.max()
    if math.isinf(p) or top == 0.0:
        return float(top)
    return float(top * math.fsum((a / top) ** p) ** (1.0 / p))


def pairing(a: np.ndarray, b: np.ndarray) -> float:
    """Compensated sum of a * b."""
    return math.fsum(np.asarray(a, dtype=float) * np.asarray(b, dtype=float))


def gradient_norm_bound(g: FiniteGraph, p: float) -> float:
    """Bound on the lp -> lp operator norm of the gradient: 2^(1-1/p) * maxdeg^(1/p)."""
    if math.isinf(p):
        return 2.0
    return 2 ** (1 - 1 / p) * g.max_degree ** (1 / p)


@dataclass(frozen=True, eq=False)
class VertexFunction:
    host: FiniteGraph
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (self.host.n,) or not np.all(np.isfinite(self.values)):
            raise ValueError("vertex function must hold one finite value per vertex")

    def norm(self, p: float) -> float:
        return lp_norm(self.values, p)

    def to_csv(self) -> str:
        return _csv(self.values)


@dataclass(frozen=True, eq=False)
class EdgeFunction:
    host: FiniteGraph
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (self.host.m,) or not np.all(np.isfinite(self.values)):
            raise ValueError("edge function must hold one finite value per edge")

    def norm(self, p: float) -> float:
        return lp_norm(self.values, p)

    def value(self, x: int, y: int) -> float:
        e = self.host.edges
        lo, hi = min(x, y), max(x, y)
        k = np.flatnonzero((e[:, 0] == lo) & (e[:, 1] == hi))
        if k.size == 0:
            raise KeyError((x, y))
        v = float(self.values[k[0]])
        return v if x < y else -v

    def to_csv(self) -> str:
        return _csv(self.values)


def _csv(values: np.ndarray) -> str:
    buf = io.StringIO()
    buf.write("index,value\n")
    for i, v in enumerate(values):
        buf.write(f"{i},{float(v)!r}\n")
    return buf.getvalue()
