"""Finite-difference checks of every model parameter under every loss."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import finite_diff_gradcheck, gather_rows
from .embedding import GraphEmbeddingNet, ModelConfig
from .ged import sample_er_graph
from .graph import Graph
from .losses import LossConfig, batch_pair_loss, batch_triplet_loss
from .matching import GraphMatchingNet

LOSSES = (("margin", "pair"), ("margin", "triplet"), ("hamming", "pair"), ("hamming", "triplet"))
SMALL_MODEL = ModelConfig(node_state_dim=4, graph_vector_dim=6, num_propagation_steps=2)
TOLERANCE = 1e-4


@dataclass(frozen=True)
class GradcheckResult:
    model_kind: str
    family: str
    mode: str
    max_rel_error: float

    @property
    def passed(self) -> bool:
        return self.max_rel_error < TOLERANCE


def small_graphs(count: int, rng: np.random.Generator, n_range=(3, 5), p: float = 0.5) -> list[Graph]:
    """Random graphs of 3 to 5 nodes with at least one edge."""
    out = []
    while len(out) < count:
        g = sample_er_graph(int(rng.integers(n_range[0], n_range[1] + 1)), p, rng)
        if g.num_edges:
            out.append(g)
    return out


def make_loss_fn(model: GraphEmbeddingNet, loss: LossConfig, graphs: list[Graph]):
    """Closure rebuilding the batch loss from the model's current parameter values."""
    if loss.mode == "pair":
        pairs = [(graphs[0], graphs[1]), (graphs[2], graphs[3])]
        labels = np.array([1.0, -1.0])

        def fn():
            u, v = model.pair_vectors(pairs)
            return batch_pair_loss(loss, u, v, labels)
    else:
        pairs = [(graphs[0], graphs[1]), (graphs[0], graphs[2])]

        def fn():
            u, v = model.pair_vectors(pairs)
            return batch_triplet_loss(loss, gather_rows(u, [0]), gather_rows(v, [0]),
                                      gather_rows(u, [1]), gather_rows(v, [1]))
    return fn


def run_gradchecks(config: ModelConfig = SMALL_MODEL, seed: int = 0,
                   h: float = 1e-5) -> list[GradcheckResult]:
    """Both model kinds against all four losses; one result per combination.

    The margin is chosen large enough that the hinge stays active, so the
    check exercises the gradient path rather than a flat zero region.
    """
    rng = np.random.default_rng(seed)
    results = []
    for kind, cls in (("embedding", GraphEmbeddingNet), ("matching", GraphMatchingNet)):
        for family, mode in LOSSES:
            model = cls(config, seed=[seed, len(results)])
            graphs = small_graphs(4, rng)
            loss = LossConfig(family=family, mode=mode, margin=2.0)
            err = finite_diff_gradcheck(make_loss_fn(model, loss, graphs),
                                        model.params.tensors(), h)
            results.append(GradcheckResult(kind, family, mode, err))
    return results
