"""Pack many graphs into one disjoint union for vectorised propagation."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .autodiff import SegmentIndex
from .graph import Graph, check_graph


@dataclass
class GraphBatch:
    graphs: Sequence[Graph]
    node_features: np.ndarray  # [N, d_x]
    edge_features: np.ndarray  # [M, d_e], one row per directed message
    senders: np.ndarray  # [M]
    receivers: np.ndarray  # [M]
    node_graph: np.ndarray  # [N] graph index of each node
    offsets: np.ndarray  # [G + 1]
    receiver_index: SegmentIndex = field(init=False, repr=False)
    sender_index: SegmentIndex = field(init=False, repr=False)
    graph_index: SegmentIndex = field(init=False, repr=False)
    in_degree: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        n = int(self.offsets[-1])
        self.receiver_index = SegmentIndex(self.receivers, n)
        self.sender_index = SegmentIndex(self.senders, n)
        self.graph_index = SegmentIndex(self.node_graph, len(self.graphs))
        self.in_degree = np.bincount(self.receivers, minlength=n).astype(np.float64)

    @property
    def num_graphs(self) -> int:
        return len(self.graphs)

    @property
    def num_nodes(self) -> int:
        return int(self.offsets[-1])


def _features(given: np.ndarray | None, rows: int, dim: int, what: str) -> np.ndarray:
    if given is None:
        return np.ones((rows, dim))
    if given.shape[1] != dim:
        raise ValueError(f"{what} width {given.shape[1]} does not match encoder input width {dim}")
    return given


def build_batch(graphs: Sequence[Graph], node_feature_dim: int = 1,
                edge_feature_dim: int = 1, validate: bool = True) -> GraphBatch:
    """Concatenate graphs; missing features become all-ones vectors.

    Each undirected edge ``(i, j)`` yields messages ``i -> j`` and ``j -> i``,
    both carrying that edge's feature row.
    """
    sizes = np.array([g.num_nodes for g in graphs], dtype=np.intp)
    offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(np.intp)
    node_feats, edge_feats, send, recv = [], [], [], []
    for k, g in enumerate(graphs):
        if validate:
            check_graph(g)
        node_feats.append(_features(g.node_features, g.num_nodes, node_feature_dim, "node_features"))
        e = np.asarray(g.edges, dtype=np.intp).reshape(-1, 2) + offsets[k]
        send.append(e[:, 0])
        recv.append(e[:, 1])
        send.append(e[:, 1])
        recv.append(e[:, 0])
        ef = _features(g.edge_features, g.num_edges, edge_feature_dim, "edge_features")
        edge_feats.append(ef)
        edge_feats.append(ef)
    return GraphBatch(
        graphs=graphs,
        node_features=np.concatenate(node_feats) if graphs else np.zeros((0, node_feature_dim)),
        edge_features=(np.concatenate(edge_feats) if edge_feats
                       else np.zeros((0, edge_feature_dim))),
        senders=np.concatenate(send) if send else np.zeros(0, dtype=np.intp),
        receivers=np.concatenate(recv) if recv else np.zeros(0, dtype=np.intp),
        node_graph=np.repeat(np.arange(len(graphs), dtype=np.intp), sizes),
        offsets=offsets,
    )
