"""Graph embedding network: encoder, message-passing propagation, gated readout."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .autodiff import (
    MLPSpec,
    ParamStore,
    Tensor,
    add,
    concat,
    gather_rows,
    glorot_scaled_init,
    gru_cell,
    init_gru,
    init_mlp,
    matmul,
    mlp_apply,
    mul,
    relu,
    segment_sum,
    sigmoid,
    take,
)
from .batch import GraphBatch, build_batch
from .graph import Graph

NODE_UPDATES = ("gru", "mlp")
ATTENTION_SIMILARITIES = ("dot", "euclidean")


@dataclass(frozen=True)
class ModelConfig:
    node_state_dim: int = 32
    graph_vector_dim: int = 128
    num_propagation_steps: int = 5
    share_propagation_params: bool = False
    node_update: str = "gru"
    attention_similarity: str = "dot"
    node_feature_dim: int = 1
    edge_feature_dim: int = 1
    message_init_scale: float = 0.1

    def __post_init__(self):
        if self.node_state_dim < 1 or self.graph_vector_dim < 1:
            raise ValueError("node_state_dim and graph_vector_dim must be >= 1")
        if self.num_propagation_steps < 0:
            raise ValueError("num_propagation_steps must be >= 0")
        if self.node_update not in NODE_UPDATES:
            raise ValueError(f"node_update must be one of {NODE_UPDATES}")
        if self.attention_similarity not in ATTENTION_SIMILARITIES:
            raise ValueError(f"attention_similarity must be one of {ATTENTION_SIMILARITIES}")
        if self.node_feature_dim < 1 or self.edge_feature_dim < 1:
            raise ValueError("feature dims must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)


class GraphEmbeddingNet:
    """Maps each graph independently to a ``graph_vector_dim`` vector.

    Parameters live in ``self.params`` (a :class:`ParamStore`); every method is
    a pure function of those parameters and its inputs.
    """

    kind = "embedding"

    def __init__(self, config: ModelConfig, seed=0, params: ParamStore | None = None):
        self.config = config
        self.params = params if params is not None else self.init_params(np.random.default_rng(seed))

    # -- parameters -----------------------------------------------------------

    def node_input_dim(self) -> int:
        return 2 * self.config.node_state_dim

    def message_spec(self) -> MLPSpec:
        d = self.config.node_state_dim
        return MLPSpec((2 * d + self.config.edge_feature_dim, 2 * d, 2 * d))

    def node_mlp_spec(self) -> MLPSpec:
        d = self.config.node_state_dim
        return MLPSpec((d + self.node_input_dim(), 2 * d, d))

    def layer_prefix(self, t: int) -> str:
        return "prop/shared" if self.config.share_propagation_params else f"prop/{t}"

    def layer_prefixes(self) -> list[str]:
        T = self.config.num_propagation_steps
        if T == 0:
            return []
        return ["prop/shared"] if self.config.share_propagation_params else [f"prop/{t}" for t in range(T)]

    def init_params(self, rng: np.random.Generator) -> ParamStore:
        cfg = self.config
        d, h = cfg.node_state_dim, cfg.graph_vector_dim
        store = ParamStore()
        store.add("encoder/node/w", glorot_scaled_init((cfg.node_feature_dim, d), 1.0, rng))
        store.add("encoder/node/b", np.zeros(d))
        for prefix in self.layer_prefixes():
            init_mlp(store, f"{prefix}/msg", self.message_spec(), rng, scale=cfg.message_init_scale)
            if cfg.node_update == "gru":
                init_gru(store, f"{prefix}/gru", d, self.node_input_dim(), rng)
            else:
                init_mlp(store, f"{prefix}/node", self.node_mlp_spec(), rng)
        store.add("agg/gate/w", glorot_scaled_init((d, h), 1.0, rng))
        store.add("agg/gate/b", np.zeros(h))
        store.add("agg/node/w", glorot_scaled_init((d, h), 1.0, rng))
        store.add("agg/node/b", np.zeros(h))
        init_mlp(store, "agg/out", MLPSpec((h, h, h)), rng)
        return store

    # -- forward pieces -------------------------------------------------------

    def batch(self, graphs) -> GraphBatch:
        return build_batch(graphs, self.config.node_feature_dim, self.config.edge_feature_dim)

    def encode(self, batch: GraphBatch) -> Tensor:
        """Initial node states ``[N, D]``; edges are encoded by the identity."""
        p = self.params
        w = p["encoder/node/w"]
        if batch.node_features.shape[1] != w.shape[0]:
            raise ValueError(f"node features have width {batch.node_features.shape[1]}, "
                             f"encoder expects {w.shape[0]}")
        return add(matmul(batch.node_features, w), p["encoder/node/b"])

    def messages(self, t: int, h: Tensor, batch: GraphBatch) -> Tensor:
        """Per-node sum of incoming messages ``f_msg(h_i, h_j, e_ij)``, shape ``[N, 2D]``.

        Computed in a rearranged but equivalent order: the first layer's weight
        is applied blockwise so node-state products are formed per node, and
        the linear output layer is applied after summing hidden activations per
        receiver (its bias then counts once per incoming edge).
        """
        p = self.params
        prefix = f"{self.layer_prefix(t)}/msg"
        d = self.config.node_state_dim
        w0 = p[f"{prefix}/l0/w"]
        if w0.shape[0] != 2 * d + batch.edge_features.shape[1]:
            raise ValueError(f"edge features have width {batch.edge_features.shape[1]}, "
                             f"message layer expects {w0.shape[0] - 2 * d}")
        to_receiver = matmul(h, take(w0, 0, d, axis=0))
        to_sender = matmul(h, take(w0, d, 2 * d, axis=0))
        edge_term = add(matmul(batch.edge_features, take(w0, 2 * d, w0.shape[0], axis=0)),
                        p[f"{prefix}/l0/b"])
        hidden = relu(add(add(gather_rows(to_receiver, batch.receiver_index),
                              gather_rows(to_sender, batch.sender_index)), edge_term))
        summed = segment_sum(hidden, batch.receiver_index)
        return add(matmul(summed, p[f"{prefix}/l1/w"]),
                   mul(batch.in_degree[:, None], p[f"{prefix}/l1/b"]))

    def messages_reference(self, t: int, h: Tensor, batch: GraphBatch) -> Tensor:
        """Same as :meth:`messages`, evaluating the MLP on explicit per-edge concatenations."""
        inputs = concat([gather_rows(h, batch.receivers), gather_rows(h, batch.senders),
                         batch.edge_features])
        msg = mlp_apply(self.params, f"{self.layer_prefix(t)}/msg", inputs, self.message_spec())
        return segment_sum(msg, batch.receivers, h.shape[0])

    def update(self, t: int, h: Tensor, node_input: Tensor) -> Tensor:
        prefix = self.layer_prefix(t)
        if self.config.node_update == "gru":
            return gru_cell(self.params, f"{prefix}/gru", h, node_input)
        return mlp_apply(self.params, f"{prefix}/node", concat([h, node_input]), self.node_mlp_spec())

    def propagate_step(self, t: int, h: Tensor, batch: GraphBatch) -> Tensor:
        if self.config.share_propagation_params:
            if "prop/shared/msg/l0/w" not in self.params:
                raise KeyError("missing shared propagation parameters")
        elif f"prop/{t}/msg/l0/w" not in self.params:
            raise KeyError(f"missing parameters for propagation step {t}")
        return self.update(t, h, self.messages(t, h, batch))

    def aggregate(self, h: Tensor, batch: GraphBatch) -> Tensor:
        """Gated sum readout followed by a one-hidden-layer MLP; ``[G, H]``."""
        p = self.params
        gates = sigmoid(add(matmul(h, p["agg/gate/w"]), p["agg/gate/b"]))
        values = add(matmul(h, p["agg/node/w"]), p["agg/node/b"])
        pooled = segment_sum(mul(gates, values), batch.graph_index)
        h_dim = self.config.graph_vector_dim
        return mlp_apply(p, "agg/out", pooled, MLPSpec((h_dim, h_dim, h_dim)))

    def node_states(self, batch: GraphBatch) -> list[Tensor]:
        """States for ``t = 0..T``."""
        states = [self.encode(batch)]
        for t in range(self.config.num_propagation_steps):
            states.append(self.propagate_step(t, states[-1], batch))
        return states

    def embed_batch(self, batch: GraphBatch) -> Tensor:
        return self.aggregate(self.node_states(batch)[-1], batch)

    def embed_graph(self, g: Graph) -> np.ndarray:
        return self.embed_batch(self.batch([g])).value[0]

    def pair_vectors(self, pairs: list[tuple[Graph, Graph]]) -> tuple[Tensor, Tensor]:
        """Graph vectors for the left and right member of each pair, each ``[P, H]``."""
        graphs = [g for pair in pairs for g in pair]
        vecs = self.embed_batch(self.batch(graphs))
        n = len(pairs)
        return gather_rows(vecs, np.arange(0, 2 * n, 2)), gather_rows(vecs, np.arange(1, 2 * n, 2))
