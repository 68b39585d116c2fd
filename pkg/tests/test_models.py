import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from helpers import random_graph
from graphsim.autodiff import Tensor, finite_diff_gradcheck, mul, reduce_sum
from graphsim.batch import build_batch
from graphsim.embedding import GraphEmbeddingNet, ModelConfig
from graphsim.graph import Graph
from graphsim.losses import LossConfig, batch_pair_loss
from graphsim.matching import (EmptyGraphError, GraphMatchingNet, PairLayout, attention_stats,
                               batched_cross_attention, cross_attention)

SMALL = ModelConfig(node_state_dim=4, graph_vector_dim=6, num_propagation_steps=2)


def states(model, g):
    return model.node_states(model.batch([g]))


# --- config -----------------------------------------------------------------------

@pytest.mark.parametrize("kwargs", [dict(node_state_dim=0), dict(graph_vector_dim=0),
                                    dict(num_propagation_steps=-1), dict(node_update="lstm"),
                                    dict(attention_similarity="cosine")])
def test_model_config_invariants(kwargs):
    with pytest.raises(ValueError):
        ModelConfig(**kwargs)


def test_parameter_layout():
    model = GraphEmbeddingNet(ModelConfig(node_state_dim=3, graph_vector_dim=5,
                                          num_propagation_steps=2))
    p = model.params
    assert p["encoder/node/w"].shape == (1, 3)
    assert p["prop/0/msg/l0/w"].shape == (7, 6) and p["prop/0/msg/l1/w"].shape == (6, 6)
    assert p["prop/1/gru/w_gates"].shape == (3 + 6, 6)
    assert p["agg/gate/w"].shape == (3, 5) and p["agg/out/l0/w"].shape == (5, 5)
    shared = GraphEmbeddingNet(ModelConfig(num_propagation_steps=3, share_propagation_params=True))
    assert [n for n in shared.params.names() if n.startswith("prop/")][0].startswith("prop/shared/")


def test_message_init_scale():
    model = GraphEmbeddingNet(ModelConfig())
    w = model.params["prop/0/msg/l0/w"].value
    assert np.abs(w).max() <= 0.1 * np.sqrt(6 / sum(w.shape))
    assert np.abs(model.params["agg/gate/w"].value).max() > 0.1 * np.sqrt(6 / (32 + 128))


# --- encoder / propagation / aggregation --------------------------------------------

def test_zero_encoder_gives_zero_states():
    model = GraphEmbeddingNet(SMALL)
    model.params["encoder/node/w"].value[:] = 0.0
    assert np.array_equal(states(model, Graph(3, ((0, 1),)))[0].value, np.zeros((3, 4)))


def test_all_ones_features_encode_identically():
    model = GraphEmbeddingNet(SMALL)
    model.params["encoder/node/b"].value[:] = [0.5, -1.0, 0.0, 2.0]
    h0 = states(model, Graph(3, ((0, 1), (1, 2))))[0].value
    w, b = model.params["encoder/node/w"].value, model.params["encoder/node/b"].value
    assert np.allclose(h0, np.tile(w.sum(axis=0) + b, (3, 1)), atol=1e-15)


def test_encoder_width_mismatch():
    model = GraphEmbeddingNet(SMALL)
    g = Graph(2, ((0, 1),), node_features=np.ones((2, 3)))
    with pytest.raises(ValueError, match="width"):
        model.embed_batch(build_batch([g], node_feature_dim=3))


def test_encoder_gradcheck():
    model = GraphEmbeddingNet(SMALL)
    g = Graph(3, ((0, 1), (1, 2)), node_features=np.array([[1.0], [2.0], [-1.0]]))
    batch = model.batch([g])
    target = np.random.default_rng(0).normal(size=(3, 4))
    err = finite_diff_gradcheck(lambda: reduce_sum(mul(model.encode(batch), target)),
                                [model.params["encoder/node/w"], model.params["encoder/node/b"]])
    assert err < 1e-6


def test_no_edges_means_zero_messages():
    model = GraphEmbeddingNet(SMALL, seed=1)
    g = Graph(3, ())
    batch = model.batch([g])
    h = Tensor(np.random.default_rng(0).normal(size=(3, 4)))
    assert np.array_equal(model.messages(0, h, batch).value, np.zeros((3, 8)))
    expect = model.update(0, h, Tensor(np.zeros((3, 8)))).value
    assert np.array_equal(model.propagate_step(0, h, batch).value, expect)


@given(st.integers(0, 2**32 - 1), st.integers(1, 20))
@settings(max_examples=25)
def test_fast_messages_match_reference(seed, n):
    rng = np.random.default_rng(seed)
    model = GraphEmbeddingNet(SMALL, seed=seed)
    for t in model.params.tensors():
        t.value[:] = rng.normal(size=t.shape)
    batch = model.batch([random_graph(rng, n, 0.4), random_graph(rng, 3, 0.7)])
    h = Tensor(rng.normal(size=(batch.num_nodes, 4)))
    assert np.allclose(model.messages(1, h, batch).value,
                       model.messages_reference(1, h, batch).value, atol=1e-12, rtol=1e-12)


@given(st.integers(0, 2**32 - 1), st.integers(1, 20))
@settings(max_examples=25)
def test_propagation_is_permutation_equivariant(seed, n):
    rng = np.random.default_rng(seed)
    model = GraphEmbeddingNet(SMALL, seed=seed)
    g = random_graph(rng, n, 0.3)
    perm = rng.permutation(n)
    h = rng.normal(size=(n, 4))
    gp = g.permute(perm)
    hp = np.empty_like(h)
    hp[perm] = h  # node v of g is node perm[v] of gp
    out = model.propagate_step(0, Tensor(h), model.batch([g])).value
    out_p = model.propagate_step(0, Tensor(hp), model.batch([gp])).value
    assert np.max(np.abs(out_p[perm] - out)) < 1e-10


def test_missing_step_params():
    model = GraphEmbeddingNet(ModelConfig(num_propagation_steps=1))
    with pytest.raises(KeyError, match="step 3"):
        model.propagate_step(3, Tensor(np.zeros((2, 32))), model.batch([Graph(2, ((0, 1),))]))


def test_aggregate_zero_transform_gives_mlp_of_zero():
    model = GraphEmbeddingNet(SMALL)
    for name in ("agg/node/w", "agg/node/b"):
        model.params[name].value[:] = 0.0
    batch = model.batch([Graph(1, ())])
    out = model.aggregate(Tensor(np.ones((1, 4))), batch).value
    zero = model.aggregate(Tensor(np.zeros((1, 4))), batch).value
    p = model.params
    expect = np.maximum(p["agg/out/l0/b"].value, 0) @ p["agg/out/l1/w"].value + p["agg/out/l1/b"].value
    assert np.allclose(out, expect) and np.allclose(zero, expect)


def test_closed_gates_zero_the_sum():
    model = GraphEmbeddingNet(SMALL)
    model.params["agg/gate/w"].value[:] = 0.0
    model.params["agg/gate/b"].value[:] = -50.0
    g = Graph(4, ((0, 1), (2, 3)))
    batch = model.batch([g])
    from graphsim.autodiff import add, matmul, segment_sum, sigmoid
    h = Tensor(np.random.default_rng(0).normal(size=(4, 4)))
    p = model.params
    gates = sigmoid(add(matmul(h, p["agg/gate/w"]), p["agg/gate/b"]))
    pooled = segment_sum(mul(gates, add(matmul(h, p["agg/node/w"]), p["agg/node/b"])),
                         batch.graph_index)
    assert np.max(np.abs(pooled.value)) < 1e-10


@given(st.integers(0, 2**32 - 1), st.integers(1, 20))
@settings(max_examples=20)
def test_embedding_permutation_invariant(seed, n):
    rng = np.random.default_rng(seed)
    model = GraphEmbeddingNet(ModelConfig(node_state_dim=8, graph_vector_dim=8), seed=seed)
    g = random_graph(rng, n, 0.3)
    gp = g.permute(rng.permutation(n))
    assert np.max(np.abs(model.embed_graph(g) - model.embed_graph(gp))) < 1e-10


def test_readout_permutation_invariant_exactly():
    model = GraphEmbeddingNet(SMALL)
    rng = np.random.default_rng(0)
    h = rng.normal(size=(6, 4))
    batch = model.batch([Graph(6, ())])
    perm = rng.permutation(6)
    a = model.aggregate(Tensor(h), batch).value
    b = model.aggregate(Tensor(h[perm]), batch).value
    assert np.max(np.abs(a - b)) < 1e-12


def test_deep_set_case_ignores_edges():
    model = GraphEmbeddingNet(ModelConfig(num_propagation_steps=0))
    assert not any(n.startswith("prop/") for n in model.params.names())
    path = Graph(4, ((0, 1), (1, 2), (2, 3)))
    star = Graph(4, ((0, 1), (0, 2), (0, 3)))
    empty = Graph(4, ())
    e = model.embed_graph(path)
    assert np.array_equal(e, model.embed_graph(star)) and np.array_equal(e, model.embed_graph(empty))


def test_embedding_deterministic():
    g = Graph(5, ((0, 1), (1, 2), (3, 4)))
    a = GraphEmbeddingNet(ModelConfig(), seed=3).embed_graph(g)
    b = GraphEmbeddingNet(ModelConfig(), seed=3).embed_graph(g)
    assert a.tobytes() == b.tobytes()


def test_mlp_node_update_and_shared_params_run():
    for cfg in (ModelConfig(node_update="mlp", num_propagation_steps=2),
                ModelConfig(share_propagation_params=True, num_propagation_steps=3)):
        v = GraphEmbeddingNet(cfg).embed_graph(Graph(3, ((0, 1), (1, 2))))
        assert v.shape == (128,) and np.all(np.isfinite(v))


def test_batched_embedding_matches_single():
    rng = np.random.default_rng(0)
    model = GraphEmbeddingNet(ModelConfig(), seed=1)
    gs = [random_graph(rng, n) for n in (3, 7, 1, 12)]
    batched = model.embed_batch(model.batch(gs)).value
    for k, g in enumerate(gs):
        assert np.allclose(batched[k], model.embed_graph(g), atol=1e-13)


@pytest.mark.parametrize("cls", [GraphEmbeddingNet, GraphMatchingNet])
def test_end_to_end_pair_margin_gradcheck(cls):
    rng = np.random.default_rng(2)
    model = cls(SMALL, seed=5)
    pairs = [(random_graph(rng, 4, 0.6), random_graph(rng, 3, 0.6)),
             (random_graph(rng, 5, 0.5), random_graph(rng, 4, 0.5))]
    loss = LossConfig(margin=2.0)

    def fn():
        u, v = model.pair_vectors(pairs)
        return batch_pair_loss(loss, u, v, np.array([1.0, -1.0]))
    assert finite_diff_gradcheck(fn, model.params.tensors()) < 1e-4


# --- cross attention ------------------------------------------------------------------

def test_single_node_attention():
    h = np.array([[0.3, -1.2]])
    mu1, mu2, rec = cross_attention(h, h.copy())
    assert rec["1->2"][0, 0] == 1.0
    assert np.array_equal(mu1.value, np.zeros((1, 2))) and np.array_equal(mu2.value, np.zeros((1, 2)))


def test_hand_evaluated_attention():
    mu1, mu2, rec = cross_attention(np.array([[1.0, 0.0]]), np.array([[1.0, 0.0], [0.0, 1.0]]))
    a = np.exp(1) / (np.exp(1) + 1)
    assert np.allclose(rec["1->2"], [[0.7311, 0.2689]], atol=1e-4)
    assert np.allclose(mu1.value, [[1 - a, -(1 - a)]], atol=1e-15)
    # each node of graph 2 attends over the single node of graph 1
    assert np.array_equal(rec["2->1"], [[1.0], [1.0]])
    assert np.allclose(mu2.value, [[0.0, 0.0], [-1.0, 1.0]])


def test_empty_graph_rejected():
    with pytest.raises(EmptyGraphError):
        cross_attention(np.zeros((0, 2)), np.ones((2, 2)))
    model = GraphMatchingNet(SMALL)
    with pytest.raises(EmptyGraphError):
        model.match_graph_pair(Graph(0, ()), Graph(2, ((0, 1),)))


@given(st.integers(0, 2**32 - 1), st.integers(1, 9))
@settings(max_examples=30)
def test_forced_permutation_zero_message(seed, n):
    rng = np.random.default_rng(seed)
    h1 = rng.normal(size=(n, 5)) * 10
    perm = rng.permutation(n)
    h2 = h1[perm]  # node k of graph 2 is node perm[k] of graph 1
    p12 = np.zeros((n, n))
    p12[perm, np.arange(n)] = 1.0
    mu1, mu2, _ = cross_attention(h1, h2, forced=(p12, p12.T))
    assert np.max(np.abs(mu1.value)) < 1e-12 and np.max(np.abs(mu2.value)) < 1e-12


@given(st.integers(0, 2**32 - 1), st.sampled_from(["dot", "euclidean"]))
@settings(max_examples=25)
def test_batched_attention_matches_reference(seed, similarity):
    rng = np.random.default_rng(seed)
    gs = [random_graph(rng, int(rng.integers(1, 9))) for _ in range(6)]
    batch = build_batch(gs)
    h = rng.normal(size=(batch.num_nodes, 3))
    layout = PairLayout.from_batch(batch)
    record: list = []
    fast = batched_cross_attention(Tensor(h), layout, similarity, record).value
    for p in range(3):
        s1, s2 = batch.offsets[2 * p], batch.offsets[2 * p + 1]
        e2 = batch.offsets[2 * p + 2]
        mu1, mu2, rec = cross_attention(h[s1:s2], h[s2:e2], similarity)
        assert np.allclose(fast[s1:s2], mu1.value, atol=1e-12)
        assert np.allclose(fast[s2:e2], mu2.value, atol=1e-12)
        n1, n2 = s2 - s1, e2 - s2
        assert np.allclose(record[0][0][p, :n1, :n2], rec["1->2"], atol=1e-14)
        assert np.allclose(record[0][1][p, :n2, :n1], rec["2->1"], atol=1e-14)


def test_attention_cost_scales_with_product():
    model = GraphMatchingNet(SMALL)
    counts = {}
    for n1, n2 in ((3, 4), (6, 4), (6, 8), (12, 8)):
        attention_stats.reset()
        model.match_graph_pair(Graph(n1, ()), Graph(n2, ()))
        counts[(n1, n2)] = attention_stats.pair_evaluations
    for (n1, n2), c in counts.items():
        assert c == SMALL.num_propagation_steps * n1 * n2
    assert counts[(6, 4)] == 2 * counts[(3, 4)] and counts[(12, 8)] == 4 * counts[(6, 4)]


def test_matching_pair_path_matches_batched_path():
    rng = np.random.default_rng(4)
    model = GraphMatchingNet(SMALL, seed=2)
    g1, g2 = random_graph(rng, 5, 0.5), random_graph(rng, 4, 0.5)
    batch = model.batch([g1, g2])
    h = model.encode(batch)
    fast = model.match_propagate_step(0, h, batch, PairLayout.from_batch(batch)).value
    a, b = model.match_propagate_pair(0, h.value[:5], h.value[5:], g1, g2)
    assert np.allclose(fast, np.vstack([a.value, b.value]), atol=1e-12)


# --- matching model -----------------------------------------------------------------

@pytest.fixture(scope="module")
def gmn():
    return GraphMatchingNet(ModelConfig(), seed=7)


def test_identity_pair_distance_zero(gmn):
    g = random_graph(np.random.default_rng(1), 10)
    r = gmn.match_graph_pair(g, g)
    assert abs(1.0 - r.score) < 1e-9 and np.max(np.abs(r.h_g1 - r.h_g2)) < 1e-9


def test_identical_graphs_keep_identical_states(gmn):
    g = random_graph(np.random.default_rng(2), 12)
    batch = gmn.batch([g, g])
    for h in gmn.node_states(batch):
        assert np.max(np.abs(h.value[:12] - h.value[12:])) < 1e-9


def test_score_symmetric(gmn):
    rng = np.random.default_rng(3)
    g1, g2 = random_graph(rng, 8), random_graph(rng, 11)
    for family in ("margin", "hamming"):
        a = gmn.match_graph_pair(g1, g2, family=family).score
        b = gmn.match_graph_pair(g2, g1, family=family).score
        assert abs(a - b) < 1e-9


def test_attention_rows_normalised(gmn):
    rng = np.random.default_rng(4)
    r = gmn.match_graph_pair(random_graph(rng, 7), random_graph(rng, 9), record_attention=True)
    assert len(r.attention) == 5
    for step in r.attention:
        assert step["1->2"].shape == (7, 9) and step["2->1"].shape == (9, 7)
        for m in step.values():
            assert np.all(m >= 0) and np.allclose(m.sum(axis=1), 1.0, atol=1e-9, rtol=0)


def test_joint_permutation_invariance(gmn):
    rng = np.random.default_rng(5)
    g1, g2 = random_graph(rng, 9), random_graph(rng, 6)
    a = gmn.match_graph_pair(g1, g2).score
    b = gmn.match_graph_pair(g1.permute(rng.permutation(9)), g2.permute(rng.permutation(6))).score
    assert abs(a - b) < 1e-10


def test_joint_permutation_equivariance_of_step():
    rng = np.random.default_rng(6)
    model = GraphMatchingNet(SMALL, seed=1)
    g1, g2 = random_graph(rng, 5, 0.5), random_graph(rng, 4, 0.5)
    p1, p2 = rng.permutation(5), rng.permutation(4)
    h1, h2 = rng.normal(size=(5, 4)), rng.normal(size=(4, 4))
    h1p, h2p = np.empty_like(h1), np.empty_like(h2)
    h1p[p1], h2p[p2] = h1, h2
    a1, a2 = model.match_propagate_pair(0, h1, h2, g1, g2)
    b1, b2 = model.match_propagate_pair(0, h1p, h2p, g1.permute(p1), g2.permute(p2))
    assert np.allclose(b1.value[p1], a1.value, atol=1e-12)
    assert np.allclose(b2.value[p2], a2.value, atol=1e-12)


def test_matching_step_gradcheck():
    rng = np.random.default_rng(7)
    model = GraphMatchingNet(SMALL, seed=3)
    g1, g2 = random_graph(rng, 3, 0.7), random_graph(rng, 3, 0.7)
    h1 = Tensor(rng.normal(size=(3, 4)), requires_grad=True, name="h1")
    h2 = Tensor(rng.normal(size=(3, 4)), requires_grad=True, name="h2")
    w = rng.normal(size=(3, 4))

    def fn():
        a, b = model.match_propagate_pair(0, h1, h2, g1, g2)
        return reduce_sum(mul(a, w)) + reduce_sum(mul(b, b))
    step_params = [model.params[n] for n in model.params.names() if n.startswith("prop/0/")]
    assert finite_diff_gradcheck(fn, step_params + [h1, h2]) < 1e-4


def test_matching_model_has_no_single_graph_embedding(gmn):
    with pytest.raises(TypeError):
        gmn.embed_graph(Graph(2, ((0, 1),)))

