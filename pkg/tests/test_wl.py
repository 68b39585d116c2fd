import numpy as np
from hypothesis import given, strategies as st

from helpers import graphs
from graphsim.ged import DataConfig, build_eval_sets
from graphsim.graph import Graph
from graphsim.wl import (LabelDictionary, best_by_pair_auc, wl_evaluate, wl_feature_histogram,
                         wl_iterate_labels, wl_kernel_similarity)

PATH3 = Graph(3, ((0, 1), (1, 2)))
TRIANGLE = Graph(3, ((0, 1), (0, 2), (1, 2)))


def cycle(n):
    return Graph(n, tuple(sorted((min(i, (i + 1) % n), max(i, (i + 1) % n)) for i in range(n))))


def test_regular_graph_single_label():
    for labels in wl_iterate_labels(cycle(6), 4):
        assert len(set(labels)) == 1


def test_path_center_differs_at_t1():
    labels = wl_iterate_labels(PATH3, 1)[1]
    assert labels[0] == labels[2] != labels[1]


def test_degree_labels_at_t0():
    assert wl_iterate_labels(PATH3, 0) == [[1, 2, 1]]


def test_single_node_histogram():
    hist = wl_feature_histogram(wl_iterate_labels(Graph(1, ()), 2))
    assert sum(hist.values()) == 3 and all(c == 1 for c in hist.values())
    assert hist[(0, 0)] == 1


def test_disjoint_union_doubles_counts():
    union = Graph(6, ((0, 1), (1, 2), (3, 4), (4, 5)))
    d = LabelDictionary()
    single = wl_feature_histogram(wl_iterate_labels(PATH3, 3, d))
    double = wl_feature_histogram(wl_iterate_labels(union, 3, d))
    assert double == {k: 2 * v for k, v in single.items()}


def test_path_triangle_disjoint_at_t1():
    d = LabelDictionary()
    a = wl_iterate_labels(PATH3, 1, d)[1]
    b = wl_iterate_labels(TRIANGLE, 1, d)[1]
    assert not set(a) & set(b)


def test_similarity_examples():
    assert wl_kernel_similarity(PATH3, PATH3, 3) == 1.0
    edge = Graph(2, ((0, 1),))
    assert wl_kernel_similarity(edge, TRIANGLE, 2) == 0.0


@given(graphs(min_nodes=1, max_nodes=9), st.integers(0, 4), st.integers(0, 2**32 - 1))
def test_isomorphism_invariance(g, T, seed):
    gp = g.permute(np.random.default_rng(seed).permutation(g.num_nodes))
    d = LabelDictionary()
    assert wl_feature_histogram(wl_iterate_labels(g, T, d)) == \
        wl_feature_histogram(wl_iterate_labels(gp, T, d))
    assert wl_kernel_similarity(g, gp, T) == 1.0


@given(graphs(min_nodes=1, max_nodes=8), graphs(min_nodes=1, max_nodes=8), st.integers(0, 4))
def test_similarity_symmetric_bounded(g1, g2, T):
    s = wl_kernel_similarity(g1, g2, T)
    assert 0.0 <= s <= 1.0 and s == wl_kernel_similarity(g2, g1, T)


def test_relabeling_injective():
    d = LabelDictionary()
    assert d.compress((1, 2, (1, 1))) == d.compress((1, 2, (1, 1)))
    assert d.compress((1, 2, (1, 1))) != d.compress((1, 2, (1, 2)))


def test_evaluate_picks_best_T():
    pairs, triplets = build_eval_sets(DataConfig(seed=11), 40)
    rows = wl_evaluate(pairs, triplets, 3)
    assert [r["T"] for r in rows] == [1, 2, 3]
    best = best_by_pair_auc(rows)
    assert best["pair_auc"] == max(r["pair_auc"] for r in rows)
    assert len(best["scores"]) == 40
