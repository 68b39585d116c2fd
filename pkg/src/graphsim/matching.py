"""Graph matching network: joint propagation with cross-graph attention."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .autodiff import (
    SegmentIndex,
    Tensor,
    add,
    as_tensor,
    concat,
    gather_rows,
    matmul,
    mul,
    reduce_sum,
    reshape,
    scale,
    segment_softmax,
    segment_sum,
    softmax,
    sub,
    swap_last,
)
from .batch import GraphBatch
from .embedding import GraphEmbeddingNet
from .graph import Graph
from .losses import hamming_similarity_approx, euclidean_sq_distance


class EmptyGraphError(ValueError):
    pass


@dataclass
class AttentionStats:
    """Counts similarity evaluations between cross-graph node pairs."""

    pair_evaluations: int = 0

    def reset(self) -> None:
        self.pair_evaluations = 0


attention_stats = AttentionStats()


@dataclass
class MatchResult:
    h_g1: np.ndarray
    h_g2: np.ndarray
    score: float
    # per step: {"1->2": [n1, n2] weights of g1 nodes over g2, "2->1": [n2, n1]}
    attention: list[dict[str, np.ndarray]] | None = None


def _similarity_logits(x_query: Tensor, x_key: Tensor, kind: str) -> Tensor:
    """Row-wise ``s_h(query_k, key_k)`` for aligned 2-d row sets."""
    if kind == "dot":
        return reduce_sum(mul(x_query, x_key), axis=-1)
    diff = sub(x_query, x_key)
    return scale(reduce_sum(mul(diff, diff), axis=-1), -1.0)


def cross_attention(states1, states2, similarity: str = "dot",
                    forced: tuple[np.ndarray, np.ndarray] | None = None):
    """Cross-graph matching vectors for one pair of graphs.

    Every cross pair ``(i, j)`` is materialised: ``a_{j->i}`` is a softmax of
    ``s_h(h_i, h_j)`` over ``j`` in the other graph and the returned sums are
    ``sum_j a_{j->i} (h_i - h_j)`` for each node of each graph.

    ``forced`` replaces the computed weights with given ``([n1, n2], [n2, n1])``
    matrices.  Returns ``(mu1 [n1, D], mu2 [n2, D], {"1->2": ..., "2->1": ...})``.
    """
    h1, h2 = as_tensor(states1), as_tensor(states2)
    n1, n2 = h1.shape[0], h2.shape[0]
    if n1 == 0 or n2 == 0:
        raise EmptyGraphError("cross-graph attention is undefined for an empty graph")
    attention_stats.pair_evaluations += n1 * n2
    # row k of the cross product: node qi[k] of g1 with node qj[k] of g2
    qi = np.repeat(np.arange(n1), n2)
    qj = np.tile(np.arange(n2), n1)
    x1 = gather_rows(h1, qi)
    x2 = gather_rows(h2, qj)
    if forced is None:
        logits = _similarity_logits(x1, x2, similarity)
        a12 = segment_softmax(logits, qi, n1)  # g1 node attends over g2
        a21 = segment_softmax(logits, qj, n2)  # g2 node attends over g1
    else:
        a12 = as_tensor(np.asarray(forced[0], dtype=np.float64).reshape(-1))
        a21 = as_tensor(np.asarray(forced[1], dtype=np.float64).T.reshape(-1))
    diff = sub(x1, x2)
    mu1 = segment_sum(mul(reshape(a12, (-1, 1)), diff), qi, n1)
    mu2 = segment_sum(mul(reshape(a21, (-1, 1)), scale(diff, -1.0)), qj, n2)
    record = {"1->2": a12.value.reshape(n1, n2).copy(),
              "2->1": a21.value.reshape(n1, n2).T.copy()}
    return mu1, mu2, record


@dataclass
class PairLayout:
    """Padded index tables for dense per-pair attention over a batch.

    Graphs ``2p`` and ``2p+1`` of the batch form pair ``p``.
    """

    idx1: np.ndarray  # [P, L1] node ids (padding points at node 0)
    idx2: np.ndarray  # [P, L2]
    mask: np.ndarray  # [P, L1, L2] True where both positions are real nodes
    back: np.ndarray  # [N] row of each node in the stacked [P*L1 + P*L2, D] result
    sizes1: np.ndarray
    sizes2: np.ndarray
    gather1: SegmentIndex = field(init=False, repr=False)
    gather2: SegmentIndex = field(init=False, repr=False)
    gather_back: SegmentIndex = field(init=False, repr=False)

    def __post_init__(self):
        n = self.back.size
        self.gather1 = SegmentIndex(self.idx1.reshape(-1), n)
        self.gather2 = SegmentIndex(self.idx2.reshape(-1), n)
        self.gather_back = SegmentIndex(self.back, self.idx1.size + self.idx2.size)

    @classmethod
    def from_batch(cls, batch: GraphBatch) -> "PairLayout":
        if batch.num_graphs % 2:
            raise ValueError("matching batches must hold an even number of graphs")
        sizes = np.diff(batch.offsets)
        if np.any(sizes == 0):
            raise EmptyGraphError("cross-graph attention is undefined for an empty graph")
        starts = batch.offsets[:-1]
        s1, s2 = sizes[0::2], sizes[1::2]
        l1, l2 = int(s1.max(initial=0)), int(s2.max(initial=0))
        pos1 = np.arange(l1)
        pos2 = np.arange(l2)
        valid1 = pos1[None, :] < s1[:, None]
        valid2 = pos2[None, :] < s2[:, None]
        idx1 = np.where(valid1, starts[0::2, None] + pos1[None, :], 0)
        idx2 = np.where(valid2, starts[1::2, None] + pos2[None, :], 0)
        n_pairs = len(s1)
        back = np.empty(batch.num_nodes, dtype=np.intp)
        back[idx1[valid1]] = (np.arange(n_pairs)[:, None] * l1 + pos1[None, :])[valid1]
        back[idx2[valid2]] = n_pairs * l1 + (np.arange(n_pairs)[:, None] * l2 + pos2[None, :])[valid2]
        return cls(idx1, idx2, valid1[:, :, None] & valid2[:, None, :], back, s1, s2)


def batched_cross_attention(h: Tensor, layout: PairLayout, similarity: str = "dot",
                            record: list | None = None) -> Tensor:
    """``sum_j mu_{j->i}`` for every node of a pair batch, as one ``[N, D]`` tensor."""
    n_pairs, l1 = layout.idx1.shape
    l2 = layout.idx2.shape[1]
    d = h.shape[1]
    attention_stats.pair_evaluations += int(np.dot(layout.sizes1, layout.sizes2))
    x1 = reshape(gather_rows(h, layout.gather1), (n_pairs, l1, d))
    x2 = reshape(gather_rows(h, layout.gather2), (n_pairs, l2, d))
    scores = matmul(x1, swap_last(x2))
    if similarity == "euclidean":
        sq1 = reshape(reduce_sum(mul(x1, x1), axis=-1), (n_pairs, l1, 1))
        sq2 = reshape(reduce_sum(mul(x2, x2), axis=-1), (n_pairs, 1, l2))
        scores = sub(sub(scale(scores, 2.0), sq1), sq2)
    a12 = softmax(scores, axis=-1, mask=layout.mask)
    a21 = softmax(swap_last(scores), axis=-1, mask=np.swapaxes(layout.mask, 1, 2))
    if record is not None:
        record.append((a12.value, a21.value))
    z1 = reshape(matmul(a12, x2), (n_pairs * l1, d))
    z2 = reshape(matmul(a21, x1), (n_pairs * l2, d))
    return sub(h, gather_rows(concat([z1, z2], axis=0), layout.gather_back))


def _split_record(raw: list, layout: PairLayout, pair: int) -> list[dict[str, np.ndarray]]:
    n1, n2 = int(layout.sizes1[pair]), int(layout.sizes2[pair])
    return [{"1->2": a12[pair, :n1, :n2].copy(), "2->1": a21[pair, :n2, :n1].copy()}
            for a12, a21 in raw]


class GraphMatchingNet(GraphEmbeddingNet):
    """Scores pairs of graphs by propagating both jointly with cross-graph attention.

    Message, update and readout parameters are shared between the two graphs.
    """

    kind = "matching"

    def node_input_dim(self) -> int:
        # [sum of messages (2D), sum of cross-graph matching vectors (D)]
        return 3 * self.config.node_state_dim

    def match_propagate_step(self, t: int, h: Tensor, batch: GraphBatch, layout: PairLayout,
                             record: list | None = None) -> Tensor:
        msg = self.messages(t, h, batch)
        mu = batched_cross_attention(h, layout, self.config.attention_similarity, record)
        return self.update(t, h, concat([msg, mu]))

    def match_propagate_pair(self, t: int, h1, h2, g1: Graph, g2: Graph) -> tuple[Tensor, Tensor]:
        """One step for a single pair via the per-node-pair attention path."""
        h1, h2 = as_tensor(h1), as_tensor(h2)
        batch = self.batch([g1, g2])
        h = concat([h1, h2], axis=0)
        msg = self.messages(t, h, batch)
        mu1, mu2, _ = cross_attention(h1, h2, self.config.attention_similarity)
        new = self.update(t, h, concat([msg, concat([mu1, mu2], axis=0)]))
        n1 = g1.num_nodes
        return (gather_rows(new, np.arange(n1)),
                gather_rows(new, np.arange(n1, n1 + g2.num_nodes)))

    def node_states(self, batch: GraphBatch, record: list | None = None) -> list[Tensor]:
        layout = PairLayout.from_batch(batch)
        states = [self.encode(batch)]
        for t in range(self.config.num_propagation_steps):
            states.append(self.match_propagate_step(t, states[-1], batch, layout, record))
        return states

    def pair_vectors(self, pairs: list[tuple[Graph, Graph]]) -> tuple[Tensor, Tensor]:
        graphs = [g for pair in pairs for g in pair]
        batch = self.batch(graphs)
        vecs = self.embed_batch(batch)
        n = len(pairs)
        return gather_rows(vecs, np.arange(0, 2 * n, 2)), gather_rows(vecs, np.arange(1, 2 * n, 2))

    def embed_graph(self, g: Graph) -> np.ndarray:
        raise TypeError("a matching model only produces graph vectors for pairs; use match_graph_pair")

    def match_graph_pair(self, g1: Graph, g2: Graph, record_attention: bool = False,
                         family: str = "margin") -> MatchResult:
        batch = self.batch([g1, g2])
        raw: list | None = [] if record_attention else None
        states = self.node_states(batch, raw)
        vecs = self.aggregate(states[-1], batch).value
        u, v = vecs[0], vecs[1]
        if family == "margin":
            score = 1.0 - float(euclidean_sq_distance(u, v).value)
        else:
            score = float(hamming_similarity_approx(u, v).value)
        attention = None
        if raw is not None:
            attention = _split_record(raw, PairLayout.from_batch(batch), 0)
        return MatchResult(u.copy(), v.copy(), score, attention)
