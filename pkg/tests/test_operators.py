import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from isospec import graph_core as gc
from isospec.graph_core import VertexSubset
from isospec.operators import (Convention, EdgeFunction, VertexFunction, conjugate, divergence, gradient,
                               gradient_norm_bound, laplacian_apply, lp_norm, pairing, plus_gradient,
                               walk_apply, walk_push)

SUITE = [gc.cycle(4), gc.cycle(6), gc.complete(4), gc.hypercube(3), gc.petersen(), gc.path(5),
         gc.tree_ray_graph(3)[0]]
floats = st.floats(-1e3, 1e3, allow_nan=False)


def test_conjugate():
    assert conjugate(2) == 2
    assert conjugate(1) == math.inf and conjugate(math.inf) == 1
    assert conjugate(3) == pytest.approx(1.5)
    with pytest.raises(ValueError):
        conjugate(0.5)


def test_gradient_examples():
    g = gc.cycle(4)
    assert not gradient(g, np.full(4, 3.0)).any()
    t = EdgeFunction(g, gradient(g, [0, 1, 2, 1]))
    assert [t.value(0, 1), t.value(1, 2), t.value(2, 3), t.value(3, 0)] == [1, 1, -1, -1]
    F = VertexSubset.from_indices(g, [0, 1])
    gi = gradient(g, F.members.astype(float))
    crossing = F.members[g.edges[:, 0]] != F.members[g.edges[:, 1]]
    assert np.all(np.abs(gi[crossing]) == 1) and not gi[~crossing].any()


def test_plus_gradient_examples():
    g = gc.cycle(6)
    assert not plus_gradient(g, np.zeros(6)).any()
    assert np.all(plus_gradient(g, np.ones(6)) == 2)
    rng = np.random.default_rng(1)
    p = 3.0
    for _ in range(20):
        f = rng.normal(size=6)
        lhs = lp_norm(plus_gradient(g, np.abs(f) ** (p - 1)), conjugate(p))
        rhs = 2 ** (1 / p) * 2 ** (1 / conjugate(p)) * lp_norm(f, p) ** (p - 1)
        assert lhs <= rhs * (1 + 1e-12)


def test_walk_examples():
    g = gc.cycle(4)
    assert np.allclose(walk_apply(g, np.full(4, 2.5)), 2.5)
    d0 = np.array([1.0, 0, 0, 0])
    assert list(walk_push(g, d0)) == [0, 0.5, 0, 0.5]
    assert list(walk_push(g, walk_push(g, d0))) == [0.5, 0, 0.5, 0]


def test_laplacian_examples():
    k4 = gc.complete(4)
    assert np.allclose(laplacian_apply(k4, np.full(4, 7.0)), 0)
    out = laplacian_apply(k4, [1.0, 0, 0, 0], Convention.WALK)
    assert np.allclose(out, [1, -1 / 3, -1 / 3, -1 / 3])
    # divergence form is d times the walk form on regular graphs
    f = np.arange(4.0)
    assert np.allclose(laplacian_apply(k4, f, Convention.DIVERGENCE), 3 * laplacian_apply(k4, f))


def test_lp_norm_examples():
    assert lp_norm(np.eye(5)[2], 3.7) == 1
    assert lp_norm(np.ones(4), 2) == 2
    assert lp_norm(np.array([3.0, -4.0]), math.inf) == 4
    assert lp_norm(np.array([1e-200, 1e-200]), 2) == pytest.approx(math.sqrt(2) * 1e-200)
    with pytest.raises(ValueError):
        lp_norm(np.ones(2), 0.5)


def test_holder_random_pairs():
    rng = np.random.default_rng(0)
    for _ in range(100):
        p = float(rng.uniform(1, 6))
        a, b = rng.normal(size=30), rng.normal(size=30)
        assert abs(pairing(a, b)) <= lp_norm(a, p) * lp_norm(b, conjugate(p)) * (1 + 1e-12)


def test_containers_validate_shapes():
    g = gc.cycle(4)
    with pytest.raises(ValueError):
        VertexFunction(g, np.zeros(3))
    with pytest.raises(ValueError):
        EdgeFunction(g, np.array([0, 0, 0, np.nan]))
    with pytest.raises(KeyError):
        EdgeFunction(g, np.zeros(4)).value(0, 2)
    assert VertexFunction(g, np.ones(4)).norm(2) == 2
    assert EdgeFunction(g, np.ones(4)).to_csv().startswith("index,value\n0,1.0")


@pytest.mark.parametrize("g", SUITE, ids=lambda g: g.name)
@given(data=st.data())
def test_adjointness_and_conservation(g, data):
    f = data.draw(arrays(float, g.n, elements=floats))
    t = data.draw(arrays(float, g.m, elements=floats))
    scale = max(1.0, float(np.abs(f).max()) * float(np.abs(t).sum()))
    assert abs(pairing(gradient(g, f), t) - pairing(f, divergence(g, t))) < 1e-12 * scale
    assert abs(math.fsum(divergence(g, t))) < 1e-12 * max(1.0, float(np.abs(t).sum()))


@pytest.mark.parametrize("g", SUITE, ids=lambda g: g.name)
@given(data=st.data())
def test_mean_value_property(g, data):
    f = data.draw(arrays(float, g.n, elements=st.integers(-5, 5).map(float)))
    lap = laplacian_apply(g, f)
    avg = np.array([f[g.neighbors(x)].mean() for x in range(g.n)])
    assert np.array_equal(np.isclose(lap, 0, atol=1e-12), np.isclose(f, avg, atol=1e-12))


@pytest.mark.parametrize("g", SUITE, ids=lambda g: g.name)
@given(data=st.data(), p=st.sampled_from([1.0, 1.5, 2.0, 3.0, 5.0, math.inf]))
def test_gradient_operator_norm(g, data, p):
    f = data.draw(arrays(float, g.n, elements=floats))
    assert lp_norm(gradient(g, f), p) <= gradient_norm_bound(g, p) * lp_norm(f, p) * (1 + 1e-12) + 1e-300


@pytest.mark.parametrize("g", SUITE, ids=lambda g: g.name)
def test_divergence_of_gradient_is_d_minus_a(g):
    f = np.random.default_rng(3).normal(size=g.n)
    assert np.allclose(divergence(g, gradient(g, f)), g.laplacian() @ f)
