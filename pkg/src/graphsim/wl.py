"""Weisfeiler-Lehman subtree kernel baseline.

Nodes start labelled by degree; each iteration relabels a node by the pair
(own label, sorted multiset of neighbour labels), compressed to a small
integer through a dictionary shared by the graphs being compared.
"""

from __future__ import annotations

import math
from collections import Counter
from typing import Sequence

import numpy as np

from .graph import Graph, LabeledPair, Triplet


class LabelDictionary:
    """Injective map from ``(label, neighbour labels)`` signatures to compact ids."""

    def __init__(self):
        self._ids: dict[tuple, int] = {}

    def __len__(self) -> int:
        return len(self._ids)

    def compress(self, signature: tuple) -> int:
        return self._ids.setdefault(signature, len(self._ids))


def wl_iterate_labels(g: Graph, T: int, dictionary: LabelDictionary | None = None) -> list[list[int]]:
    """Node labels for iterations ``0..T``.

    Iteration-0 labels are the node degrees themselves; later labels are ids
    from ``dictionary`` (a fresh one if not given), which must be shared
    between graphs whose labels are to be compared.
    """
    if T < 0:
        raise ValueError("T must be non-negative")
    if dictionary is None:
        dictionary = LabelDictionary()
    nbrs = g.neighbors()
    labels = [int(d) for d in g.degrees()]
    out = [labels]
    for t in range(1, T + 1):
        labels = [dictionary.compress((t, labels[v], tuple(sorted(labels[u] for u in nbrs[v]))))
                  for v in range(g.num_nodes)]
        out.append(labels)
    return out


def wl_feature_histogram(label_sequences: Sequence[Sequence[int]]) -> Counter:
    """Counts keyed by ``(iteration, label)`` over every iteration."""
    hist: Counter = Counter()
    for t, labels in enumerate(label_sequences):
        hist.update((t, lab) for lab in labels)
    return hist


def _dot(a: Counter, b: Counter) -> int:
    if len(a) > len(b):
        a, b = b, a
    return sum(c * b[k] for k, c in a.items() if k in b)


def wl_kernel_similarity(g1: Graph, g2: Graph, T: int) -> float:
    """Cosine-normalised WL subtree kernel in ``[0, 1]``."""
    dictionary = LabelDictionary()
    h1 = wl_feature_histogram(wl_iterate_labels(g1, T, dictionary))
    h2 = wl_feature_histogram(wl_iterate_labels(g2, T, dictionary))
    norm = math.sqrt(_dot(h1, h1) * _dot(h2, h2))
    if norm == 0:
        return 0.0
    return min(1.0, _dot(h1, h2) / norm)


def wl_pair_scores(pairs: Sequence[tuple[Graph, Graph]], T: int) -> np.ndarray:
    return np.array([wl_kernel_similarity(a, b, T) for a, b in pairs])


def wl_evaluate(pairs: Sequence[LabeledPair], triplets: Sequence[Triplet],
                max_T: int = 5) -> list[dict]:
    """Pair AUC and triplet accuracy for every ``T`` in ``1..max_T``."""
    from .metrics import pair_auc, triplet_accuracy

    rows = []
    labels = [p.label for p in pairs]
    for T in range(1, max_T + 1):
        scores = wl_pair_scores([(p.g1, p.g2) for p in pairs], T)
        pos = wl_pair_scores([(t.g1, t.g2) for t in triplets], T)
        neg = wl_pair_scores([(t.g1, t.g3) for t in triplets], T)
        rows.append({"T": T, "pair_auc": pair_auc(scores, labels),
                     "triplet_acc": triplet_accuracy(pos, neg), "scores": scores})
    return rows


def best_by_pair_auc(rows: list[dict]) -> dict:
    """The row with the highest pair AUC (earliest ``T`` on ties)."""
    return max(rows, key=lambda r: (r["pair_auc"], -r["T"]))
