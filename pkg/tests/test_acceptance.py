"""Acceptance criteria 1 to 10, at full size and the stated tolerances.

Each test records one PASS/FAIL line before asserting, so the lines appear
in the terminal summary whatever the outcome.  Run alone with

    pytest tests/test_acceptance.py -v
"""
import itertools
import time
from fractions import Fraction

import numpy as np
import pytest

from isospec import graph_core as gc
from isospec._subsets import minimum_boundaries, random_connected_subsets
from isospec.battery import P_VALUES, lamplighter_pair, suite_graphs
from isospec.counterexample import counterexample_report
from isospec.graph_core import VertexSubset, boundary_size
from isospec.lamplighter import lamplighter_core_counts, lamplighter_lazy, lamplighter_window
from isospec.operators import EdgeFunction, divergence
from isospec.spectral import cheeger_exact, lambda2_exact, verify_chain
from isospec.transport import (Measure, TransportPattern, folner_profile, harmonic_difference_pipeline,
                               pairing_bound, potential_pattern)
from isospec.walks import fit_gamma, lamplighter_return_probabilities, witness_c0, witness_l1

GRAPHS = suite_graphs(0)
CHAIN_SLACK_ITEMS = ("1", "3", "4-lemma", "5", "6a", "6b")


def test_suite_composition():
    names = [g.name for g in GRAPHS]
    assert len(GRAPHS) == 12 and all(g.n <= 10 and g.is_regular for g in GRAPHS)
    assert sum(n.startswith("random") for n in names) == 5


# 1 ------------------------------------------------------------------------

def test_criterion_1_chain(record_criterion):
    t = time.perf_counter()
    bad = []
    for g in GRAPHS:
        for p in P_VALUES:
            rep = verify_chain(g, p)
            items = {c.item: c for c in rep.chain}
            bad += [(g.name, p, i, items[i].slack) for i in CHAIN_SLACK_ITEMS if items[i].slack < -1e-6]
            target = rep.d * rep.lambda2
            if abs(rep.kappa2 ** 2 - target) >= 1e-5 * target:
                bad.append((g.name, p, "2", rep.kappa2 ** 2 - target))
    k2_ok = True
    for p in P_VALUES:
        table = next(c for c in verify_chain(gc.complete(2), p).chain if c.item == "4-table")
        k2_ok &= (not table.passed) and table.lhs == pytest.approx(2 ** (1 - 1 / p), abs=1e-9) and table.rhs == 2
    seconds = time.perf_counter() - t
    ok = not bad and k2_ok and seconds < 300
    record_criterion(1, "inequality chain", ok, seconds)
    assert not bad
    assert k2_ok
    assert seconds < 300


# 2 ------------------------------------------------------------------------

def _brute_kappa1(g) -> Fraction:
    adj = [list(g.neighbors(v)) for v in range(g.n)]
    best = None
    for size in range(1, g.n // 2 + 1):
        for S in itertools.combinations(range(g.n), size):
            s = set(S)
            b = sum(1 for v in S for u in adj[v] if u not in s)
            r = Fraction(b, size)
            best = r if best is None or r < best else best
    return best


def test_criterion_2_cheeger(record_criterion):
    t = time.perf_counter()
    bad = []
    for g in GRAPHS:
        k1 = cheeger_exact(g).ratio
        assert k1 == _brute_kappa1(g), g.name
        d = g.d
        A = np.zeros((g.n, g.n))
        for v in range(g.n):
            A[v, list(g.neighbors(v))] = 1
        lam_oracle = np.sort(np.linalg.eigvalsh(np.eye(g.n) - A / d))[1]
        lam = lambda2_exact(g)
        assert lam == pytest.approx(lam_oracle, abs=1e-12)
        if not (float(k1 ** 2 / (2 * d * d)) <= lam + 1e-9 and lam <= float(2 * k1 / d) + 1e-9):
            bad.append(g.name)
    record_criterion(2, "Cheeger inequality", not bad, time.perf_counter() - t)
    assert not bad


# 3 ------------------------------------------------------------------------

def test_criterion_3_lamplighter_counts(record_criterion):
    t = time.perf_counter()
    bad = []
    for n in range(1, 13):
        size, bnd = lamplighter_core_counts(n)
        if (size, bnd) != (n * 2 ** n, 2 ** (n + 1)):
            bad.append((n, size, bnd))
    seconds = time.perf_counter() - t
    record_criterion(3, "lamplighter counts", not bad and seconds < 60, seconds)
    assert not bad
    assert seconds < 60


# 4 ------------------------------------------------------------------------

PAIRS = [(10, 5), (15, 5), (20, 5)]


@pytest.fixture(scope="module")
def counterexample_reports():
    t = time.perf_counter()
    reps = [counterexample_report(n, j) for n, j in PAIRS]
    return reps, time.perf_counter() - t


def test_criterion_4_counts(counterexample_reports):
    reps, seconds = counterexample_reports
    for r in reps:
        n, j = r.n, r.j
        assert r.translate_count == (n // j) * 2 ** (n - j)
        assert r.size >= n * 2 ** n * (1 - 9 * Fraction(1, 2 ** j))
        assert r.boundary <= 2 ** n * (2 + 27 * n * Fraction(1, 2 ** j))
        assert r.inradius <= 4 * j
    assert seconds < 1800


@pytest.mark.xfail(strict=True, reason="radial ratios at K=k=1 are not monotone in n; see the ledger")
def test_criterion_4_trend(counterexample_reports, record_criterion):
    reps, seconds = counterexample_reports
    ratios = [r.ratio for r in reps]
    decreasing = all(a > b for a, b in zip(ratios, ratios[1:]))
    counts = all(r.all_pass for r in reps)
    note = "ratios " + ", ".join(f"{x:.4f}" for x in ratios)
    record_criterion(4, "lamplighter counterexample", counts and decreasing, seconds, note)
    assert decreasing


# 5 ------------------------------------------------------------------------

def test_criterion_5_folner(record_criterion):
    t = time.perf_counter()
    eps_values = [Fraction(1, 10), Fraction(1, 4), Fraction(1, 2), Fraction(3, 4)]
    failures, checked, unreached = [], 0, 0
    for gi, g in enumerate(GRAPHS):
        family = random_connected_subsets(g, 50, gi)
        assert len(family) == min(50, len(family)) and len(family) > 0
        for idx in family:
            F = VertexSubset.from_indices(g, idx)
            bound_unit = Fraction(g.d, 2) * Fraction(len(F), boundary_size(F))
            prof = folner_profile(g, F, eps_min=eps_values[0])
            for eps in eps_values:
                r = prof.radius(eps)
                if r is None:  # P^r 1_F never drops to 1 - eps: the radius is infinite
                    unreached += 1
                    continue
                checked += 1
                if Fraction(r) < eps * bound_unit:
                    failures.append((g.name, idx.tolist(), eps, r))
    record_criterion(5, "Følner lemma", not failures, time.perf_counter() - t,
                     f"{checked} finite radii, {unreached} unreached")
    assert not failures


# 6 ------------------------------------------------------------------------

def test_criterion_6_transport(record_criterion):
    t = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst_id = worst_holder = worst_res = 0.0
    for i in range(1000):
        g = GRAPHS[i % len(GRAPHS)]
        p = float(rng.choice(P_VALUES))
        tau = rng.normal(size=g.m) * 10.0 ** rng.uniform(-3, 3)
        div = divergence(g, tau)
        pat = TransportPattern(EdgeFunction(g, tau), Measure(g, np.maximum(-div, 0.0)),
                               Measure(g, np.maximum(div, 0.0)))
        f = rng.normal(size=g.n) * 10.0 ** rng.uniform(-3, 3)
        res = pairing_bound(f, pat, p, tol=np.inf)  # judged here, not inside
        scale = max(1.0, np.abs(f).max() * (np.abs(tau).sum() + 1.0))
        worst_id = max(worst_id, res.identity_error / scale)
        worst_holder = max(worst_holder, (res.exact_diff - res.bound) / scale)
        idx = random_connected_subsets(g, 1, i)[0] if i % 2 else np.arange(g.n)
        F = VertexSubset.from_indices(g, idx)
        gv = rng.normal(size=idx.size)
        gv -= gv.mean()
        worst_res = max(worst_res, potential_pattern(g, F, gv).pattern.residual)
    ok = worst_id <= 1e-9 and worst_holder <= 1e-9 and worst_res < 1e-10
    record_criterion(6, "transport identities", ok, time.perf_counter() - t)
    assert worst_id <= 1e-9
    assert worst_holder <= 1e-9
    assert worst_res < 1e-10


# 7 ------------------------------------------------------------------------

def test_criterion_7_tau_decay(record_criterion):
    t = time.perf_counter()
    norms, bounded = [], True
    for n in (6, 8, 10, 12):
        w = lamplighter_window(n)
        v, u = lamplighter_pair(n)
        rep = harmonic_difference_pipeline(w, w.core, v, u, 2.0)
        assert rep.residual < 1e-10
        norms.append(rep.norm_total)
        bounded &= rep.norm_total <= rep.certified_bound
    decreasing = all(a > b for a, b in zip(norms, norms[1:]))
    seconds = time.perf_counter() - t
    record_criterion(7, "tau-norm decay", decreasing and bounded and seconds < 600, seconds,
                     "norms " + ", ".join(f"{x:.4f}" for x in norms))
    assert decreasing and bounded
    assert seconds < 600


# 8 ------------------------------------------------------------------------

def test_criterion_8_witnesses(record_criterion):
    t = time.perf_counter()
    g = lamplighter_lazy()
    x = g.origin()
    bad = []
    for n in range(9):
        w = witness_c0(g, x, n)
        if w.sup_gradient > (1 / (n + 1)) * (1 + 1e-15):
            bad.append(("c0", n, w.sup_gradient))
    rho = lamplighter_return_probabilities(51).rho
    for n in range(51):
        w = witness_l1(g, x, n, rho=rho)
        if w.laplacian_l1 > (2 / (n + 1)) * (1 + 1e-12):
            bad.append(("l1", n, w.laplacian_l1))
    record_criterion(8, "c0 and l1 witnesses", not bad, time.perf_counter() - t)
    assert not bad


# 9 ------------------------------------------------------------------------

def test_criterion_9_tree_ray(record_criterion):
    t = time.perf_counter()
    g, sets = gc.tree_ray_graph(10)
    witness = all(len(T) == 2 ** m - 1 and Fraction(boundary_size(T), len(T)) == Fraction(1, 2 ** m - 1)
                  for m, T in sets.items())
    assert sorted(sets) == list(range(1, 11))
    optimal = True
    for m in (1, 2, 3):
        h, _ = gc.tree_ray_graph(m)
        x = 2 ** m - 1
        table = minimum_boundaries(h, max_size=x)
        optimal &= Fraction(table.min_boundary[x], x) == Fraction(1, x)
    record_criterion(9, "tree-ray profile", witness and optimal, time.perf_counter() - t)
    assert witness and optimal


# 10 -----------------------------------------------------------------------

def test_criterion_10_gamma_fit(record_criterion):
    t = time.perf_counter()
    ks = np.arange(1, 2001)
    synthetic = {}
    for gamma, K1, K2 in ((0.25, 0.5, 2.0), (1 / 3, 0.9, 1.0), (0.5, 1.0, 0.7), (0.75, 0.3, 0.2)):
        synthetic[gamma] = fit_gamma(K1 * np.exp(-K2 * ks ** gamma), 100, 2000, ks).gamma
    syn_ok = all(abs(v - k) <= 0.02 for k, v in synthetic.items())
    series = lamplighter_return_probabilities(2000)
    fit = fit_gamma(series.rho, 100, 2000)
    loss = float(series.loss[100:].max())
    seconds = time.perf_counter() - t
    ok = syn_ok and 0.2 <= fit.gamma <= 0.5 and loss < 1e-6 and seconds < 600
    record_criterion(10, "decay exponent fit", ok, seconds, f"gamma {fit.gamma:.4f}")
    assert syn_ok, synthetic
    assert 0.2 <= fit.gamma <= 0.5
    assert loss < 1e-6
    assert seconds < 600
