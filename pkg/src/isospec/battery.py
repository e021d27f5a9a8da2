"""The acceptance battery behind ``isospec suite``.

Each criterion returns a :class:`Criterion` with a verdict and enough detail
to see what was measured.  ``quick`` keeps everything to graphs with at most
ten vertices (plus the smallest lamplighter windows) so it runs in seconds.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import graph_core as gc
from ._subsets import minimum_boundaries, random_connected_subsets
from .counterexample import counterexample_report
from .graph_core import FiniteGraph, VertexSubset, bfs_distances, boundary_size
from .lamplighter import LampBox, lamplighter_core_counts, lamplighter_lazy, lamplighter_window
from .operators import EdgeFunction, divergence
from .spectral import cheeger_inequality, verify_chain
from .transport import (Measure, TransportPattern, folner_profile, harmonic_difference_pipeline,
                        pairing_bound, potential_pattern)
from .walks import fit_gamma, lamplighter_return_probabilities, witness_c0, witness_l1

CHAIN_ITEMS = ("1", "2", "3", "4-lemma", "5", "6a", "6b")
P_VALUES = (1.5, 2.0, 3.0, 5.0)
FOLNER_EPS = (Fraction(1, 10), Fraction(1, 4), Fraction(1, 2), Fraction(3, 4))


@dataclass
class Criterion:
    number: int
    name: str
    passed: bool
    seconds: float = 0.0
    detail: dict = field(default_factory=dict)

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] criterion {self.number}: {self.name} ({self.seconds:.1f}s)"

    def to_dict(self) -> dict:
        return {"number": self.number, "name": self.name, "pass": self.passed,
                "seconds": self.seconds, "detail": self.detail}


def suite_graphs(seed: int = 0) -> list[FiniteGraph]:
    """The regular test graphs, all with at most ten vertices."""
    rr = [(6, 3), (8, 3), (10, 3), (8, 5), (10, 4)]
    return [gc.cycle(4), gc.cycle(6), gc.cycle(8), gc.complete(4), gc.complete(5), gc.hypercube(3),
            gc.petersen()] + [gc.random_regular(n, d, seed + i + 1) for i, (n, d) in enumerate(rr)]


def _timed(number, name, fn, *args):
    t = time.perf_counter()
    passed, detail = fn(*args)
    return Criterion(number, name, bool(passed), time.perf_counter() - t, detail)


def chain(graphs, seed: int = 0) -> Criterion:
    def run():
        failures = []
        for g in graphs:
            for p in P_VALUES:
                rep = verify_chain(g, p, seed=seed)
                for c in rep.chain:
                    if c.item in CHAIN_ITEMS and not c.passed:
                        failures.append([g.name, p, c.item, c.slack])
        k2 = []
        for p in P_VALUES:
            rep = verify_chain(gc.complete(2), p, seed=seed)
            table = next(c for c in rep.chain if c.item == "4-table")
            expected = 2 ** (1 - 1 / p)
            k2.append(bool(not table.passed and abs(table.lhs - expected) < 1e-6 and abs(table.rhs - 2) < 1e-9))
        return not failures and all(k2), {"failures": failures, "k2_table_violation": k2}
    return _timed(1, "inequality chain", run)


def cheeger(graphs) -> Criterion:
    def run():
        bad = [g.name for g in graphs if not cheeger_inequality(g).passed]
        return not bad, {"failures": bad, "graphs": len(graphs)}
    return _timed(2, "Cheeger inequality", run)


def lamplighter_counts(n_max: int) -> Criterion:
    def run():
        rows = {}
        for n in range(1, n_max + 1):
            size, bnd = lamplighter_core_counts(n)
            rows[n] = [size, bnd, size == n << n and bnd == 1 << (n + 1)]
        return all(r[2] for r in rows.values()), {"counts": rows}
    return _timed(3, "lamplighter counts", run)


def counterexample(pairs, trend: bool = True) -> Criterion:
    def run():
        reps = [counterexample_report(n, j) for n, j in pairs]
        ok = all(r.all_pass for r in reps)
        ratios = [r.ratio for r in reps]
        decreasing = all(a > b for a, b in zip(ratios, ratios[1:]))
        detail = {"checks": {f"{r.n},{r.j}": r.checks for r in reps}, "ratios": ratios,
                  "ratio_decreasing": decreasing if trend else None}
        return ok and (decreasing or not trend), detail
    return _timed(4, "lamplighter counterexample", run)


def folner(graphs, per_graph: int = 50, seed: int = 0) -> Criterion:
    def run():
        checked = vacuous = 0
        failures = []
        for gi, g in enumerate(graphs):
            for idx in random_connected_subsets(g, per_graph, seed + gi):
                F = VertexSubset.from_indices(g, idx)
                for eps in FOLNER_EPS:
                    prof = folner_profile(g, F, eps_min=eps)
                    r = prof.radius(eps)
                    if r is None:
                        vacuous += 1
                        continue
                    checked += 1
                    if Fraction(r) < prof.lemma_bound(eps):
                        failures.append([g.name, idx.tolist(), str(eps), r])
        return not failures, {"checked": checked, "never_reached": vacuous, "failures": failures}
    return _timed(5, "Følner lemma", run)


def transport(graphs, instances: int = 1000, seed: int = 0) -> Criterion:
    def run():
        rng = np.random.default_rng(seed)
        worst_identity = worst_residual = 0.0
        for i in range(instances):
            g = graphs[i % len(graphs)]
            p = float(rng.choice(P_VALUES))
            scale = 10.0 ** rng.uniform(-3, 3)
            tau = rng.normal(size=g.m) * scale
            div = divergence(g, tau)
            pat = TransportPattern(EdgeFunction(g, tau), Measure(g, np.maximum(-div, 0.0)),
                                   Measure(g, np.maximum(div, 0.0)))
            f = rng.normal(size=g.n) * 10.0 ** rng.uniform(-3, 3)
            res = pairing_bound(f, pat, p)
            s = max(1.0, float(np.abs(f).max()) * (float(np.abs(tau).sum()) + 1.0))
            worst_identity = max(worst_identity, res.identity_error / s)
            idx = random_connected_subsets(g, 1, seed + i)[0] if i % 2 else np.arange(g.n)
            F = VertexSubset.from_indices(g, idx)
            gv = rng.normal(size=idx.size)
            gv -= gv.mean()
            sol = potential_pattern(g, F, gv)
            worst_residual = max(worst_residual, sol.pattern.residual)
        ok = worst_identity <= 1e-9 and worst_residual < 1e-10
        return ok, {"instances": instances, "worst_identity_error": worst_identity,
                    "worst_divergence_residual": worst_residual}
    return _timed(6, "transport identities", run)


def central_pair(w, F) -> tuple[int, int]:
    """Deepest vertex of F and a neighbour of maximal depth (ties to the smallest index)."""
    g = w.graph if hasattr(w, "graph") else w
    dist = bfs_distances(g, np.flatnonzero(~F.members))
    v = int(np.argmax(np.where(F.members, dist, -1)))
    nb = g.neighbors(v)
    u = int(nb[np.argmax(dist[nb])])
    return v, u


def lamplighter_pair(n: int) -> tuple[int, int]:
    """Deepest vertex of F_n and its lamp-switch neighbour."""
    w = lamplighter_window(n)
    dist = bfs_distances(w.graph, np.flatnonzero(~w.core.members))
    v = int(np.argmax(np.where(w.core.members, dist, -1)))
    box = LampBox(n)
    mask, z = box.split(v)
    return v, int(box.index(mask ^ (1 << (int(z) - 1)), z))


def tau_decay(ns) -> Criterion:
    def run():
        rows = []
        for n in ns:
            w = lamplighter_window(n)
            v, u = lamplighter_pair(n)
            rep = harmonic_difference_pipeline(w, w.core, v, u, 2.0)
            rows.append({"n": n, "r": rep.r, "norm": rep.norm_total, "certified_bound": rep.certified_bound,
                         "lambda2": rep.lambda2, "residual": rep.residual})
        norms = [r["norm"] for r in rows]
        decreasing = all(a > b for a, b in zip(norms, norms[1:]))
        bounded = all(r["norm"] <= r["certified_bound"] for r in rows)
        return decreasing and bounded, {"rows": rows, "decreasing": decreasing, "bounded": bounded}
    return _timed(7, "tau-norm decay", run)


def witnesses(c0_max: int, l1_max: int) -> Criterion:
    def run():
        g = lamplighter_lazy()
        x = g.origin()
        c0 = {n: witness_c0(g, x, n).passes for n in range(c0_max + 1)}
        rho = lamplighter_return_probabilities(l1_max + 1).rho
        l1 = {}
        for n in range(l1_max + 1):
            wl = witness_l1(g, x, n, rho=rho)
            l1[n] = [wl.laplacian_l1, wl.bound, wl.method, wl.passes]
        ok = all(c0.values()) and all(r[3] for r in l1.values())
        return ok, {"c0": c0, "l1": l1}
    return _timed(8, "c0 and l1 witnesses", run)


def tree_ray(m_max: int, exhaustive_max: int = 3) -> Criterion:
    def run():
        g, sets = gc.tree_ray_graph(m_max)
        witness = {}
        for m, T in sets.items():
            ratio = Fraction(boundary_size(T), len(T))
            witness[m] = ratio == Fraction(1, 2 ** m - 1)
        optimal = {}
        for m in range(1, exhaustive_max + 1):
            h, _ = gc.tree_ray_graph(m)
            table = minimum_boundaries(h, max_size=2 ** m - 1)
            x = 2 ** m - 1
            optimal[m] = Fraction(table.min_boundary[x], x) == Fraction(1, x)
        return all(witness.values()) and all(optimal.values()), {"witness": witness, "exhaustive": optimal}
    return _timed(9, "tree-ray profile", run)


def gamma_fit(k_max: int, k_min: int = 100) -> Criterion:
    def run():
        ks = np.arange(1, 2001)
        synthetic = {}
        for gamma in (0.25, 1 / 3, 0.5, 0.75):
            rho = 0.7 * np.exp(-1.3 * ks ** gamma)
            synthetic[round(gamma, 4)] = fit_gamma(rho, 100, 2000, ks).gamma
        syn_ok = all(abs(v - k) <= 0.02 for k, v in synthetic.items())
        series = lamplighter_return_probabilities(k_max)
        fit = fit_gamma(series.rho, k_min, k_max)
        loss = float(series.loss[k_min:].max())
        ok = syn_ok and 0.2 <= fit.gamma <= 0.5 and loss < 1e-6
        return ok, {"synthetic": synthetic, "lamplighter": fit.to_dict(), "loss": loss}
    return _timed(10, "decay exponent fit", run)


def run_battery(quick: bool = False, seed: int = 0, only=None) -> list[Criterion]:
    graphs = suite_graphs(seed)
    plan = {
        1: lambda: chain(graphs, seed),
        2: lambda: cheeger(graphs),
        3: lambda: lamplighter_counts(8 if quick else 12),
        4: lambda: counterexample([(10, 5)], trend=False) if quick
        else counterexample([(10, 5), (15, 5), (20, 5)]),
        5: lambda: folner(graphs, 10 if quick else 50, seed),
        6: lambda: transport(graphs, 100 if quick else 1000, seed),
        7: lambda: tau_decay([6, 8] if quick else [6, 8, 10, 12]),
        8: lambda: witnesses(6 if quick else 8, 20 if quick else 50),
        9: lambda: tree_ray(6 if quick else 10),
        10: lambda: gamma_fit(400 if quick else 2000),
    }
    return [plan[i]() for i in sorted(plan) if only is None or i in only]
