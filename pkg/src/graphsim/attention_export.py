"""Export cross-graph attention as JSON matrices and Graphviz DOT drawings."""

from __future__ import annotations

import json
import os

import numpy as np

from .graph import Graph

DIRECTIONS = ("1->2", "2->1")


def attention_json(step: int, direction: str, matrix: np.ndarray) -> dict:
    return {"step": step, "direction": direction, "matrix": np.asarray(matrix).tolist()}


def _alpha_hex(weight: float) -> str:
    return format(int(round(255 * min(max(weight, 0.0), 1.0))), "02x")


def attention_dot(g1: Graph, g2: Graph, matrix: np.ndarray, direction: str,
                  min_weight: float = 0.0, name: str = "attention") -> str:
    """Both graphs side by side, plus green cross edges whose opacity is the weight.

    For direction ``"1->2"`` row ``i`` of ``matrix`` holds the weights node
    ``i`` of the first graph puts on nodes of the second; ``"2->1"`` is the
    transpose arrangement.
    """
    if direction not in DIRECTIONS:
        raise ValueError(f"direction must be one of {DIRECTIONS}")
    src, dst = ("a", "b") if direction == "1->2" else ("b", "a")
    lines = [f"digraph {name} {{", "  rankdir=LR;", "  node [shape=circle, fontsize=10];"]
    for tag, g, label in (("a", g1, "G1"), ("b", g2, "G2")):
        lines.append(f"  subgraph cluster_{tag} {{")
        lines.append(f'    label="{label}";')
        for v in range(g.num_nodes):
            lines.append(f'    {tag}{v} [label="{v}"];')
        for i, j in g.edges:
            lines.append(f"    {tag}{i} -> {tag}{j} [dir=none];")
        lines.append("  }")
    m = np.asarray(matrix)
    for i in range(m.shape[0]):
        for j in range(m.shape[1]):
            w = float(m[i, j])
            if w <= min_weight:
                continue
            lines.append(f'  {src}{i} -> {dst}{j} [color="#00a000{_alpha_hex(w)}", '
                         f'constraint=false, penwidth=1.5, tooltip="{w:.4f}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def write_attention(g1: Graph, g2: Graph, attention: list[dict[str, np.ndarray]],
                    out_dir: str | os.PathLike) -> list[str]:
    """One JSON and one DOT file per propagation step and direction.

    Step numbers start at 1 (the attention consumed by the first propagation layer).
    """
    os.makedirs(out_dir, exist_ok=True)
    written = []
    for t, record in enumerate(attention, start=1):
        for direction in DIRECTIONS:
            tag = "1to2" if direction == "1->2" else "2to1"
            base = os.path.join(out_dir, f"attention_step{t}_{tag}")
            with open(base + ".json", "w") as f:
                json.dump(attention_json(t, direction, record[direction]), f)
                f.write("\n")
            with open(base + ".dot", "w") as f:
                f.write(attention_dot(g1, g2, record[direction], direction))
            written += [base + ".json", base + ".dot"]
    return written
