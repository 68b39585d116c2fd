"""Graph similarity learning: embedding and matching networks on a tape-based autodiff core."""

from .embedding import GraphEmbeddingNet, ModelConfig
from .graph import Graph, LabeledPair, Triplet, make_graph
from .losses import LossConfig
from .matching import GraphMatchingNet

__version__ = "0.1.0"

__all__ = ["Graph", "GraphEmbeddingNet", "GraphMatchingNet", "LabeledPair", "LossConfig",
           "ModelConfig", "Triplet", "make_graph"]
