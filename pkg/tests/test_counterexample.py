import numpy as np
import pytest
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from isospec.counterexample import (box_boundary, box_inradius, complement_connected, counterexample_build,
                                    counterexample_report, translate_tree)
from isospec.graph_core import GraphError, ResourceError, VertexSubset, boundary_size
from isospec.isoperimetry import inradius
from isospec.lamplighter import LampBox, lamplighter_window


@pytest.fixture(scope="module")
def built10():
    return counterexample_build(10, 5)


def test_paper_counts_n10(built10):
    rep = counterexample_report(10, 5, built=built10)
    assert rep.translate_count == 64 == rep.translate_count_expected
    assert rep.size_F_n == 10240 and rep.boundary_F_n == 2048
    assert rep.size >= 7360
    assert rep.inradius <= 20
    assert rep.all_pass
    # the bound as printed does not survive contact with the construction; the corrected one does
    assert rep.boundary > rep.boundary_bound_as_printed
    assert rep.boundary <= rep.boundary_bound_corrected


def test_box_quantities_agree_with_generic_graph_code(built10):
    w = lamplighter_window(10)
    F = VertexSubset(w.graph, built10.members)
    assert box_boundary(built10.box, built10.members) == boundary_size(F)
    assert box_inradius(built10.box, built10.members) == inradius(w, F)
    assert box_boundary(built10.box, built10.core) == boundary_size(w.core)


def test_paths_are_walks_inside_fn(built10):
    w = lamplighter_window(10)
    A = w.graph.adjacency().tocsr()
    for row, steps in zip(built10.paths, built10.path_steps):
        verts = row[row >= 0]
        assert verts.size == steps + 1 or verts.size == steps  # the outside endpoint is not stored
        assert all(A[a, b] for a, b in zip(verts[:-1], verts[1:]))
        assert built10.core[verts].all()
    assert built10.path_steps.max() <= 8 * 5 + 1


def test_complement_connected_independently(built10):
    # window vertices outside F_{n;j}, with the collar glued into one component
    w = lamplighter_window(10)
    g = w.graph
    out = ~built10.members
    e = g.edges
    keep = out[e[:, 0]] & out[e[:, 1]]
    collar = np.flatnonzero(~built10.core)
    star = np.stack([np.full(collar.size - 1, collar[0]), collar[1:]], 1)
    ee = np.concatenate([e[keep], star])
    M = sp.coo_matrix((np.ones(len(ee)), (ee[:, 0], ee[:, 1])), shape=(g.n, g.n))
    _, lab = connected_components(M, directed=False)
    assert np.unique(lab[out]).size == 1
    assert complement_connected(built10.box, built10.removed)


def test_complement_check_detects_an_enclosed_pocket():
    box = LampBox(5)
    hole = np.zeros(box.size, dtype=bool)
    hole[box.index(0, 3)] = True  # no removed neighbour, so cut off from the outside
    assert not complement_connected(box, hole)
    edge = np.zeros(box.size, dtype=bool)
    edge[box.index(0, 1)] = True  # one step from the collar row z = 0
    assert complement_connected(box, edge)
    edge[box.index(0, 2)] = True
    assert complement_connected(box, edge)


def test_translate_tree_shape():
    t = translate_tree(10, 5)
    assert t.child.size == 64 and np.unique(t.child).size == 64
    assert np.all(t.parent != t.child)


@pytest.mark.parametrize("n,j", [(10, 3), (9, 3), (7, 5)])
def test_build_rejects_bad_parameters(n, j):
    with pytest.raises(GraphError):
        counterexample_build(n, j)


def test_build_respects_budget():
    with pytest.raises(ResourceError):
        counterexample_build(15, 5, budget=10_000)


def test_n15_checks():
    rep = counterexample_report(15, 5)
    assert rep.translate_count == 3 * 2 ** 10
    assert rep.all_pass
    assert rep.ratio < rep.ratio_F_n * 2
