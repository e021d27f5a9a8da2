import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from isospec import graph_core as gc
from isospec.graph_core import FiniteGraph, GraphError, boundary_size
from isospec.lamplighter import lamplighter_window
from isospec.spectral import (cheeger_exact, cheeger_heuristic, cheeger_inequality, grid_oracle,
                              kappa_p_estimate, lambda2_exact, lambda_p_estimate, lambda_p_lower, p_bar,
                              verify_chain, walk_laplacian_matrix)

SMALL = [gc.cycle(4), gc.cycle(6), gc.cycle(8), gc.complete(4), gc.complete(5), gc.hypercube(3), gc.petersen(),
         gc.random_regular(8, 3, 2), gc.random_regular(10, 4, 5)]
P_VALUES = [1.5, 2.0, 3.0, 5.0]


@pytest.mark.parametrize("g,value", [(gc.cycle(4), 1.0), (gc.complete(4), 4 / 3), (gc.hypercube(3), 2 / 3),
                                     (gc.cycle(6), 0.5)])
def test_lambda2_examples(g, value):
    assert lambda2_exact(g) == pytest.approx(value, abs=1e-12)


def test_lambda2_sparse_path_agrees_with_dense():
    g = gc.random_regular(3200, 3, 0)
    lam = lambda2_exact(g)
    small = gc.cycle(3200)
    assert lambda2_exact(small) == pytest.approx(1 - math.cos(2 * math.pi / 3200), rel=1e-6)
    assert 0 < lam < 1


def test_p_bar():
    assert p_bar(2) == 2 and p_bar(1.5) == 3 and p_bar(4) == 4


@pytest.mark.parametrize("g,value,size", [(gc.cycle(4), Fraction(1), 2), (gc.cycle(6), Fraction(2, 3), 3),
                                          (gc.complete(4), Fraction(2), 2)])
def test_cheeger_examples(g, value, size):
    res = cheeger_exact(g)
    assert res.ratio == value and res.exact
    W = res.witness
    assert len(W) == size and Fraction(boundary_size(W), len(W)) == value
    sub, _ = gc.induced_subgraph(W)
    assert sub.is_connected()


def test_cheeger_exact_threshold():
    with pytest.raises(GraphError):
        cheeger_exact(gc.cycle(30))


def test_cheeger_heuristic():
    assert cheeger_heuristic(gc.cycle(6)).ratio == Fraction(2, 3)
    # regression baseline pinned on first run: half the window, cut across the lamps
    assert cheeger_heuristic(lamplighter_window(6).graph).ratio == Fraction(1, 8)


@pytest.mark.parametrize("g", SMALL + [gc.path(7), gc.tree_ray_graph(3)[0]], ids=lambda g: g.name)
def test_heuristic_never_below_exact(g):
    assert cheeger_heuristic(g).ratio >= cheeger_exact(g).ratio


@pytest.mark.parametrize("p", P_VALUES)
def test_k2_analytic(p):
    k2 = gc.complete(2)
    q = p / (p - 1)
    assert kappa_p_estimate(k2, p).value == pytest.approx(2 ** (1 / q), rel=1e-9)
    assert lambda_p_estimate(k2, p).upper == pytest.approx(2.0, rel=1e-9)


def test_kappa2_examples():
    assert kappa_p_estimate(gc.cycle(4), 2).value ** 2 == pytest.approx(2.0, rel=1e-6)
    assert kappa_p_estimate(gc.cycle(6), 2).value ** 2 == pytest.approx(1.0, rel=1e-6)


def test_lambda_p_examples():
    c4 = gc.cycle(4)
    assert lambda_p_estimate(c4, 2).upper == pytest.approx(1.0, abs=1e-6)
    assert lambda_p_estimate(c4, 4).upper >= 0.5


def test_lambda_p_lower_formula():
    assert lambda_p_lower(0.5, 2.0, rho=0.5) == pytest.approx(0.5)
    # bipartite: the interpolation term vanishes and only 2 lambda2 / pbar is left
    assert lambda_p_lower(0.5, 3.0, rho=1.0) == pytest.approx(1 / 3)
    assert lambda_p_lower(0.9, 2.0, rho=0.1) == pytest.approx(0.9)


def test_grid_oracle_examples():
    orc = grid_oracle(gc.complete(2), 3)
    assert orc.kappa_p.contains(2 ** (2 / 3)) and orc.lambda_p.contains(2.0)
    p3 = gc.path(3)
    orc = grid_oracle(p3, 2)
    assert orc.kappa_p.contains(1.0)  # sqrt of the smallest nonzero eigenvalue of D - A
    lam = np.linalg.eigvalsh(walk_laplacian_matrix(p3))[1]
    assert orc.lambda_p.contains(lam)


@pytest.mark.parametrize("g", [gc.cycle(4), gc.complete(4), gc.path(4), gc.complete(3), gc.path(3)],
                         ids=lambda g: g.name)
@pytest.mark.parametrize("p", P_VALUES)
def test_grid_brackets_contain_optimizer(g, p):
    orc = grid_oracle(g, p)
    assert orc.kappa_p.contains(kappa_p_estimate(g, p).value, tol=1e-7)
    assert orc.lambda_p.contains(lambda_p_estimate(g, p).upper, tol=1e-7)


@pytest.mark.parametrize("g", SMALL, ids=lambda g: g.name)
@pytest.mark.parametrize("p", P_VALUES)
def test_lambda_sandwich(g, p):
    lp = lambda_p_estimate(g, p)
    assert lp.upper >= lp.lower - 1e-12
    assert lp.lower >= 0


@pytest.mark.parametrize("g", SMALL, ids=lambda g: g.name)
def test_kappa2_squared_is_d_lambda2(g):
    k2 = kappa_p_estimate(g, 2.0).value
    assert k2 ** 2 == pytest.approx(g.d * lambda2_exact(g), rel=1e-6)


def test_verify_chain_k2_documented_violation():
    rep = verify_chain(gc.complete(2), 3.0)
    items = {c.item: c for c in rep.chain}
    assert items["4-lemma"].passed
    assert items["4-lemma"].lhs == pytest.approx(2 ** (2 / 3)) and items["4-lemma"].rhs == pytest.approx(1.0)
    assert not items["4-table"].passed and items["4-table"].rhs == pytest.approx(2.0)
    assert rep.all_pass  # the table form is reported, not counted


def test_verify_chain_c6_item6():
    rep = verify_chain(gc.cycle(6), 2.0)
    items = {c.item: c for c in rep.chain}
    assert items["6a"].lhs == pytest.approx(16 / 3) and items["6a"].rhs == pytest.approx(4.0)
    assert items["6b"].lhs == pytest.approx(4.0) and items["6b"].rhs == pytest.approx(4 / 9)
    assert rep.all_pass
    assert abs(verify_chain(gc.cycle(4), 2.0).kappa2 ** 2 - 2) < 1e-6


def test_verify_chain_non_regular_only_cheeger_items():
    rep = verify_chain(gc.path(5), 2.0)
    assert [c.item for c in rep.chain] == ["6a", "6b"] and rep.all_pass
    with pytest.raises(GraphError):
        verify_chain(FiniteGraph.from_edges(4, [(0, 1), (2, 3)]), 2.0)


@pytest.mark.parametrize("g", SMALL, ids=lambda g: g.name)
def test_cheeger_inequality(g):
    assert cheeger_inequality(g).passed


@st.composite
def graph_and_missing_edge(draw):
    n = draw(st.integers(3, 8))
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True, min_size=n - 1, max_size=len(pairs) - 1))
    missing = [e for e in pairs if e not in chosen]
    extra = draw(st.sampled_from(missing))
    return n, chosen, extra


@given(graph_and_missing_edge())
def test_adding_an_edge_never_decreases_kappa1(case):
    n, edges, extra = case
    g = FiniteGraph.from_edges(n, edges)
    h = FiniteGraph.from_edges(n, edges + [extra])
    assert cheeger_exact(h).ratio >= cheeger_exact(g).ratio
