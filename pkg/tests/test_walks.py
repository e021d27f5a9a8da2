import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from isospec import graph_core as gc
from isospec.graph_core import IntegerLattice
from isospec.lamplighter import lamplighter_lazy
from isospec.walks import (cycle_lazy, fit_gamma, lamplighter_return_enumerated, lamplighter_return_probabilities,
                           return_probability, walk_distribution, witness_c0, witness_l1)

# rho_k on the lamplighter from the identity, k = 0..14, by an exact Fraction walk over
# (frozenset, z) labels written independently of the package
LAMP_RHO = [Fraction(1), 0, Fraction(1, 3), 0, Fraction(5, 27), 0, Fraction(29, 243), 0, Fraction(547, 6561), 0,
            Fraction(3623, 59049), 0, Fraction(2765, 59049), 0, Fraction(175591, 4782969)]


def test_walk_distribution_examples():
    g = lamplighter_lazy()
    o = g.origin()
    d0 = walk_distribution(g, o, 0)
    assert d0.probs == {o: 1.0}
    d1 = walk_distribution(g, o, 1)
    assert len(d1) == 3 and all(v == pytest.approx(1 / 3) for v in d1.probs.values())
    c = walk_distribution(cycle_lazy(4), 0, 2)
    assert c.probs == {0: 0.5, 2: 0.5}
    with pytest.raises(ValueError):
        walk_distribution(g, o, -1)


@given(st.integers(0, 9), st.integers(5, 400))
def test_mass_conservation(k, budget):
    d = walk_distribution(lamplighter_lazy(), lamplighter_lazy().origin(), k, budget=budget)
    assert abs(d.total + d.loss - 1) < 1e-12
    assert d.degraded == (d.loss > 0)


def test_return_probability_small_graphs():
    s = return_probability(gc.cycle(4), 0, 5)
    assert list(s.rho) == [1, 0, 0.5, 0, 0.5, 0] and s.bipartite
    assert not return_probability(gc.cycle(5), 0, 4).bipartite
    assert return_probability(gc.petersen(), 3, 0).rho[0] == 1


def test_lamplighter_return_matches_oracle():
    exact = np.array([float(x) for x in LAMP_RHO])
    assert np.allclose(lamplighter_return_enumerated(14), exact, rtol=1e-14, atol=0)
    s = lamplighter_return_probabilities(14)
    assert np.allclose(s.rho, exact, rtol=1e-13, atol=0)
    assert s.bipartite and not s.rho[1::2].any()


def test_transfer_matches_enumeration_further_out():
    enum = lamplighter_return_enumerated(22)
    s = lamplighter_return_probabilities(22)
    assert np.max(np.abs(s.rho - enum)[enum > 0] / enum[enum > 0]) < 1e-13


def test_lazy_iteration_agrees_with_transfer():
    g = lamplighter_lazy()
    s = return_probability(g, g.origin(), 12)
    assert s.method == "transfer"
    d = walk_distribution(g, g.origin(), 12)
    assert d[g.origin()] == pytest.approx(s.rho[12], rel=1e-13)


@pytest.mark.parametrize("graph,root", [(lamplighter_lazy(), (frozenset(), 0)), (IntegerLattice(2), (0, 0)),
                                        (cycle_lazy(7), 0)])
def test_even_time_positivity(graph, root):
    rho = return_probability(graph, root, 24).rho
    assert np.all(rho <= 1)
    for k in range(13):
        assert rho[2 * k] >= rho[k] ** 2 - 1e-15


def test_fit_gamma_synthetic():
    ks = np.arange(1, 3001)
    assert fit_gamma(np.exp(-ks ** 0.5), 50, 3000, ks).gamma == pytest.approx(0.5, abs=0.01)
    assert fit_gamma(0.9 * np.exp(-2 * ks ** (1 / 3)), 50, 3000, ks).gamma == pytest.approx(1 / 3, abs=0.02)
    with pytest.raises(ValueError):
        fit_gamma(np.ones(10), 0, 1)


@given(st.floats(1e-6, 1e6))
def test_fit_gamma_scale_equivariance(c):
    ks = np.arange(1, 601)
    rho = 0.8 * np.exp(-1.1 * ks ** 0.4)
    a = fit_gamma(rho, 20, 600, ks).gamma
    b = fit_gamma(c * rho, 20, 600, ks).gamma
    assert abs(a - b) < 1e-6


def test_lamplighter_gamma_band_short_range():
    s = lamplighter_return_probabilities(600)
    fit = fit_gamma(s.rho, 100, 600)
    assert 0.2 <= fit.gamma <= 0.5
    assert s.max_relative_loss < 1e-6
    assert s.to_csv().splitlines()[0] == "k,rho,loss"


@pytest.mark.parametrize("n", [0, 1, 5, 7])
def test_witness_c0(n):
    w = witness_c0(lamplighter_lazy(), lamplighter_lazy().origin(), n)
    assert w.passes and w.root_value == 1.0
    assert w.sup_gradient == pytest.approx(1 / (n + 1)) and w.sup_gradient_scaled == 1
    with pytest.raises(ValueError):
        witness_c0(lamplighter_lazy(), lamplighter_lazy().origin(), -1)


def test_witness_l1_examples():
    g = lamplighter_lazy()
    o = g.origin()
    w0 = witness_l1(g, o, 0)
    assert w0.laplacian_l1 == pytest.approx(2.0) and w0.passes
    w20 = witness_l1(g, o, 20)
    assert w20.method == "direct" and w20.mass == pytest.approx(1.0)
    assert w20.laplacian_l1 <= 2 / 21 * (1 + 1e-12)
    # telescoping identity: ||(I - P) f_n||_1 = 2 (1 - rho_{n+1}) / (n + 1)
    rho = lamplighter_return_probabilities(21).rho
    assert w20.laplacian_l1 == pytest.approx(2 * (1 - rho[21]) / 21, rel=1e-12)
    w40 = witness_l1(g, o, 40, budget=1000)
    assert w40.method == "identity" and w40.passes


@given(st.integers(0, 12))
def test_witness_l1_mass_and_bound(n):
    w = witness_l1(IntegerLattice(2), (0, 0), n)
    assert w.mass == pytest.approx(1.0, abs=1e-12) and w.passes
