"""Undirected graphs with optional features, and their JSON-lines encoding."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np


class GraphFormatError(ValueError):
    pass


class InvalidGraph(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Graph:
    """Graph over dense node ids ``0..num_nodes-1`` with undirected edges ``(i, j)``, ``i < j``."""

    num_nodes: int
    edges: tuple[tuple[int, int], ...] = ()
    node_features: np.ndarray | None = None
    edge_features: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple((int(i), int(j)) for i, j in self.edges))
        for name in ("node_features", "edge_features"):
            value = getattr(self, name)
            if value is not None:
                arr = np.array(value, dtype=np.float64)
                arr.setflags(write=False)
                object.__setattr__(self, name, arr)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return (self.num_nodes == other.num_nodes and self.edges == other.edges
                and _same_array(self.node_features, other.node_features)
                and _same_array(self.edge_features, other.edge_features))

    def __hash__(self) -> int:
        return hash((self.num_nodes, self.edges))

    def edge_set(self) -> frozenset[tuple[int, int]]:
        return frozenset(self.edges)

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.num_nodes, dtype=np.int64)
        for i, j in self.edges:
            deg[i] += 1
            deg[j] += 1
        return deg

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.num_nodes, self.num_nodes), dtype=np.int8)
        for i, j in self.edges:
            a[i, j] = a[j, i] = 1
        return a

    def neighbors(self) -> list[list[int]]:
        nbrs: list[list[int]] = [[] for _ in range(self.num_nodes)]
        for i, j in self.edges:
            nbrs[i].append(j)
            nbrs[j].append(i)
        return nbrs

    def permute(self, perm) -> "Graph":
        """Relabel node ``v`` as ``perm[v]``; features move with their node/edge."""
        perm = np.asarray(perm)
        new_edges = [tuple(sorted((int(perm[i]), int(perm[j])))) for i, j in self.edges]
        order = sorted(range(len(new_edges)), key=lambda k: new_edges[k])
        nf = None
        if self.node_features is not None:
            nf = np.empty_like(self.node_features)
            nf[perm] = self.node_features
        ef = None if self.edge_features is None else self.edge_features[order]
        return Graph(self.num_nodes, tuple(new_edges[k] for k in order), nf, ef)


def _same_array(a, b) -> bool:
    if a is None or b is None:
        return a is None and b is None
    return a.shape == b.shape and bool(np.array_equal(a, b))


def make_graph(num_nodes: int, edges: Iterable, node_features=None, edge_features=None) -> Graph:
    """Build a graph, normalising each edge to ``(min, max)`` and sorting the edge list.

    Edge features follow their edge through the sort.
    """
    norm = [(min(int(i), int(j)), max(int(i), int(j))) for i, j in edges]
    order = sorted(range(len(norm)), key=lambda k: norm[k])
    ef = None if edge_features is None else np.asarray(edge_features, dtype=np.float64)[order]
    return Graph(num_nodes, tuple(norm[k] for k in order), node_features, ef)


@dataclass(frozen=True)
class LabeledPair:
    g1: Graph
    g2: Graph
    label: int

    def __post_init__(self):
        if self.label not in (-1, 1):
            raise ValueError(f"pair label must be -1 or +1, got {self.label}")


@dataclass(frozen=True)
class Triplet:
    g1: Graph
    g2: Graph  # positive
    g3: Graph  # negative


def validate_graph(g: Graph) -> str | None:
    """``None`` if ``g`` is well formed, else a description of the first violation."""
    if g.num_nodes < 0:
        return "negative node count"
    seen = set()
    for i, j in g.edges:
        if not (0 <= i < g.num_nodes and 0 <= j < g.num_nodes):
            return f"edge index out of range: ({i}, {j})"
        if i == j:
            return f"self-loop at node {i}"
        if i > j:
            return f"edge not ordered (i<j): ({i}, {j})"
        if (i, j) in seen:
            return f"duplicate edge ({i}, {j})"
        seen.add((i, j))
    if g.node_features is not None:
        if g.node_features.ndim != 2 or g.node_features.shape[0] != g.num_nodes:
            return f"node_features shape {g.node_features.shape} does not match {g.num_nodes} nodes"
    if g.edge_features is not None:
        if g.edge_features.ndim != 2 or g.edge_features.shape[0] != g.num_edges:
            return f"edge_features shape {g.edge_features.shape} does not match {g.num_edges} edges"
    return None


def check_graph(g: Graph) -> Graph:
    problem = validate_graph(g)
    if problem is not None:
        raise InvalidGraph(problem)
    return g


def to_directed_pairs(g: Graph) -> list[tuple[int, int]]:
    """Both orientations of every edge, sorted."""
    check_graph(g)
    return sorted([(i, j) for i, j in g.edges] + [(j, i) for i, j in g.edges])


# --- JSON-lines records -------------------------------------------------------

def graph_to_obj(g: Graph) -> dict:
    obj: dict = {"n": g.num_nodes, "edges": [[i, j] for i, j in g.edges]}
    if g.node_features is not None:
        obj["node_features"] = g.node_features.tolist()
    if g.edge_features is not None:
        obj["edge_features"] = g.edge_features.tolist()
    return obj


def _field(obj: dict, key: str, where: str):
    if key not in obj:
        raise GraphFormatError(f"{where}: missing field {key!r}")
    return obj[key]


def graph_from_obj(obj, where: str = "record") -> Graph:
    if not isinstance(obj, dict):
        raise GraphFormatError(f"{where}: expected an object, got {type(obj).__name__}")
    n = _field(obj, "n", where)
    if not isinstance(n, int) or isinstance(n, bool) or n < 0:
        raise GraphFormatError(f"{where}: field 'n' must be a non-negative integer, got {n!r}")
    raw_edges = _field(obj, "edges", where)
    if not isinstance(raw_edges, list):
        raise GraphFormatError(f"{where}: field 'edges' must be an array")
    edges = []
    for k, e in enumerate(raw_edges):
        if (not isinstance(e, list) or len(e) != 2
                or not all(isinstance(v, int) and not isinstance(v, bool) for v in e)):
            raise GraphFormatError(f"{where}: field 'edges[{k}]' must be a pair of integers, got {e!r}")
        edges.append((e[0], e[1]))
    feats = {}
    for key in ("node_features", "edge_features"):
        if key in obj:
            try:
                arr = np.array(obj[key], dtype=np.float64)
            except (TypeError, ValueError) as exc:
                raise GraphFormatError(f"{where}: field {key!r}: {exc}") from None
            if arr.size == 0 and arr.ndim == 1:
                # an empty matrix carries no width through JSON
                arr = arr.reshape(0, 0)
            if arr.ndim != 2:
                raise GraphFormatError(f"{where}: field {key!r} must be a 2-d array")
            feats[key] = arr
    g = Graph(n, tuple(edges), feats.get("node_features"), feats.get("edge_features"))
    problem = validate_graph(g)
    if problem is not None:
        field = next((k for k in ("node_features", "edge_features") if problem.startswith(k)),
                     "edges")
        raise GraphFormatError(f"{where}: field {field!r}: invalid graph: {problem}")
    return g


def _loads(text: str, where: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphFormatError(f"{where}: malformed JSON ({exc.msg} at column {exc.colno})") from None


def serialize_graph(g: Graph) -> str:
    # float repr is the shortest string that round-trips a 64-bit value exactly
    return json.dumps(graph_to_obj(check_graph(g)), separators=(",", ":"))


def parse_graph(text: str, line: int | None = None) -> Graph:
    where = "record" if line is None else f"line {line}"
    return graph_from_obj(_loads(text, where), where)


def serialize_pair(p: LabeledPair) -> str:
    return json.dumps({"g1": graph_to_obj(p.g1), "g2": graph_to_obj(p.g2), "label": p.label},
                      separators=(",", ":"))


def serialize_triplet(t: Triplet) -> str:
    return json.dumps({"g1": graph_to_obj(t.g1), "g2": graph_to_obj(t.g2),
                       "g3": graph_to_obj(t.g3)}, separators=(",", ":"))


def parse_pair(text: str, line: int | None = None) -> LabeledPair:
    where = "record" if line is None else f"line {line}"
    obj = _loads(text, where)
    if not isinstance(obj, dict):
        raise GraphFormatError(f"{where}: expected an object")
    label = _field(obj, "label", where)
    if label not in (-1, 1) or isinstance(label, bool):
        raise GraphFormatError(f"{where}: field 'label' must be -1 or 1, got {label!r}")
    return LabeledPair(graph_from_obj(_field(obj, "g1", where), f"{where} g1"),
                       graph_from_obj(_field(obj, "g2", where), f"{where} g2"), label)


def parse_triplet(text: str, line: int | None = None) -> Triplet:
    where = "record" if line is None else f"line {line}"
    obj = _loads(text, where)
    if not isinstance(obj, dict):
        raise GraphFormatError(f"{where}: expected an object")
    return Triplet(*(graph_from_obj(_field(obj, k, where), f"{where} {k}")
                     for k in ("g1", "g2", "g3")))


def write_jsonl(path: str | os.PathLike, records: Iterable, serializer) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for r in records:
            f.write(serializer(r))
            f.write("\n")


def read_jsonl(path: str | os.PathLike, parser) -> list:
    out = []
    with open(path, encoding="utf-8") as f:
        for k, line in enumerate(f, start=1):
            if line.strip():
                out.append(parser(line, line=k))
    return out


def iter_graphs(path: str | os.PathLike) -> Iterator[Graph]:
    with open(path, encoding="utf-8") as f:
        for k, line in enumerate(f, start=1):
            if line.strip():
                yield parse_graph(line, line=k)
