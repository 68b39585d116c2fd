"""Synthetic graph-edit-distance data and an exact edit-distance oracle."""

from __future__ import annotations

import itertools
import json
import os
from dataclasses import asdict, dataclass
from typing import Union

import numpy as np

from .graph import (
    Graph,
    LabeledPair,
    Triplet,
    serialize_pair,
    serialize_triplet,
    write_jsonl,
)

Range = Union[int, float, tuple, list]


class SubstitutionError(ValueError):
    pass


@dataclass(frozen=True)
class DataConfig:
    """Graph distribution.  ``n`` and ``p`` are scalars or inclusive ``[lo, hi]`` ranges."""

    n: Range = 20
    p: Range = 0.2
    k_pos: int = 1
    k_neg: int = 2
    seed: int = 0

    def __post_init__(self):
        n_lo, n_hi = self.n_range
        p_lo, p_hi = self.p_range
        if n_lo < 2 or n_hi < n_lo:
            raise ValueError(f"invalid node count {self.n!r} (need 2 <= lo <= hi)")
        if not (0.0 <= p_lo <= p_hi <= 1.0):
            raise ValueError(f"invalid edge probability {self.p!r}")
        if not (1 <= self.k_pos < self.k_neg):
            raise ValueError(f"need 1 <= k_pos < k_neg, got {self.k_pos}, {self.k_neg}")

    @property
    def n_range(self) -> tuple[int, int]:
        if isinstance(self.n, (list, tuple)):
            return int(self.n[0]), int(self.n[1])
        return int(self.n), int(self.n)

    @property
    def p_range(self) -> tuple[float, float]:
        if isinstance(self.p, (list, tuple)):
            return float(self.p[0]), float(self.p[1])
        return float(self.p), float(self.p)

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("n", "p"):
            if isinstance(d[key], tuple):
                d[key] = list(d[key])
        return d


def sample_er_graph(n: int, p: float, rng: np.random.Generator) -> Graph:
    """Binomial random graph: each of the n(n-1)/2 node pairs is an edge with probability p."""
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(iu.size) < p
    return Graph(n, tuple(zip(iu[keep].tolist(), ju[keep].tolist())))


def substitute_edges(g: Graph, k: int, rng: np.random.Generator) -> Graph:
    """Remove ``k`` random edges and add ``k`` random previously absent edges."""
    n = g.num_nodes
    present = g.adjacency().astype(bool)
    iu, ju = np.triu_indices(n, k=1)
    absent = np.flatnonzero(~present[iu, ju])
    if g.num_edges < k or absent.size < k:
        raise SubstitutionError(f"cannot substitute {k} edges in a graph with {g.num_edges} edges "
                                f"and {absent.size} absent pairs")
    drop = set(rng.choice(g.num_edges, size=k, replace=False).tolist())
    add = rng.choice(absent, size=k, replace=False)
    kept = [e for idx, e in enumerate(g.edges) if idx not in drop]
    new = kept + [(int(iu[a]), int(ju[a])) for a in add]
    return Graph(n, tuple(sorted(new)))


def _sample_graph(cfg: DataConfig, rng: np.random.Generator) -> Graph:
    n_lo, n_hi = cfg.n_range
    p_lo, p_hi = cfg.p_range
    n = int(rng.integers(n_lo, n_hi + 1)) if n_hi > n_lo else n_lo
    p = float(rng.uniform(p_lo, p_hi)) if p_hi > p_lo else p_lo
    return sample_er_graph(n, p, rng)


MAX_RETRIES = 100


def _sample_with_partners(cfg: DataConfig, rng: np.random.Generator, ks) -> tuple[Graph, ...]:
    for _ in range(MAX_RETRIES):
        g = _sample_graph(cfg, rng)
        try:
            return (g,) + tuple(substitute_edges(g, k, rng) for k in ks)
        except SubstitutionError:
            continue
    raise SubstitutionError(f"no graph admitting {max(ks)} substitutions after {MAX_RETRIES} "
                            f"samples from n={cfg.n}, p={cfg.p}")


def make_training_pair(cfg: DataConfig, rng: np.random.Generator,
                       label: int | None = None) -> LabeledPair:
    """Positive pairs use ``k_pos`` substitutions, negative ones ``k_neg``.

    The label is drawn with equal probability unless given.
    """
    if label is None:
        label = 1 if rng.random() < 0.5 else -1
    g1, g2 = _sample_with_partners(cfg, rng, (cfg.k_pos if label == 1 else cfg.k_neg,))
    return LabeledPair(g1, g2, label)


def make_training_triplet(cfg: DataConfig, rng: np.random.Generator) -> Triplet:
    return Triplet(*_sample_with_partners(cfg, rng, (cfg.k_pos, cfg.k_neg)))


def record_rng(seed: int, stream: int, index: int) -> np.random.Generator:
    """Independent generator for one record, so output does not depend on generation order."""
    return np.random.default_rng([seed, stream, index])


PAIR_STREAM, TRIPLET_STREAM = 1, 2


def build_eval_sets(cfg: DataConfig, size: int = 1000) -> tuple[list[LabeledPair], list[Triplet]]:
    """Fixed evaluation pairs (exactly half positive, alternating) and triplets."""
    pairs = [make_training_pair(cfg, record_rng(cfg.seed, PAIR_STREAM, k),
                                label=1 if k % 2 == 0 else -1) for k in range(size)]
    triplets = [make_training_triplet(cfg, record_rng(cfg.seed, TRIPLET_STREAM, k))
                for k in range(size)]
    return pairs, triplets


def write_eval_sets(cfg: DataConfig, out_dir: str | os.PathLike, size: int = 1000) -> dict:
    """Write ``pairs.jsonl``, ``triplets.jsonl`` and ``manifest.json`` into ``out_dir``."""
    os.makedirs(out_dir, exist_ok=True)
    pairs, triplets = build_eval_sets(cfg, size)
    write_jsonl(os.path.join(out_dir, "pairs.jsonl"), pairs, serialize_pair)
    write_jsonl(os.path.join(out_dir, "triplets.jsonl"), triplets, serialize_triplet)
    manifest = {"data": cfg.to_dict(), "size": size,
                "files": {"pairs": "pairs.jsonl", "triplets": "triplets.jsonl"}}
    with open(os.path.join(out_dir, "manifest.json"), "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")
    return manifest


# --- exact edit distance ------------------------------------------------------

MAX_ORACLE_NODES = 8
_PERMS: dict[int, np.ndarray] = {}


def _permutations(n: int) -> np.ndarray:
    if n not in _PERMS:
        _PERMS[n] = np.array(list(itertools.permutations(range(n))), dtype=np.intp).reshape(-1, n)
    return _PERMS[n]


def exact_edit_distance_oracle(g1: Graph, g2: Graph, max_cost: int | None = None) -> int | None:
    """Exact graph edit distance by enumerating every node correspondence.

    The smaller graph is padded with isolated nodes; each node insertion or
    deletion and each edge insertion or deletion costs 1.  Returns ``None``
    when the distance exceeds ``max_cost``.
    """
    n = max(g1.num_nodes, g2.num_nodes)
    if n > MAX_ORACLE_NODES:
        raise ValueError(f"oracle is limited to graphs of at most {MAX_ORACLE_NODES} nodes")
    a = np.zeros((n, n), dtype=np.int8)
    b = np.zeros((n, n), dtype=np.int8)
    a[:g1.num_nodes, :g1.num_nodes] = g1.adjacency()
    b[:g2.num_nodes, :g2.num_nodes] = g2.adjacency()
    node_cost = abs(g1.num_nodes - g2.num_nodes)
    best = node_cost
    if n > 0:
        perms = _permutations(n)
        # b permuted by each candidate mapping: node v of g1 -> node perm[v] of g2
        bp = b[perms[:, :, None], perms[:, None, :]]
        mismatched = np.abs(bp - a[None]).sum(axis=(1, 2)) // 2
        best = node_cost + int(mismatched.min())
    if max_cost is not None and best > max_cost:
        return None
    return best
