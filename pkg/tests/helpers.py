import numpy as np
from hypothesis import strategies as st

from graphsim.graph import Graph


@st.composite
def graphs(draw, min_nodes=0, max_nodes=8, with_features=False):
    n = draw(st.integers(min_nodes, max_nodes))
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    edges = draw(st.lists(st.sampled_from(pairs), unique=True)) if pairs else []
    node_features = edge_features = None
    if with_features and n > 0:
        floats = st.floats(allow_nan=False, allow_infinity=False, width=64)
        d = draw(st.integers(1, 3))
        node_features = np.array(draw(st.lists(st.lists(floats, min_size=d, max_size=d),
                                               min_size=n, max_size=n))).reshape(n, d)
        if edges and draw(st.booleans()):
            edge_features = np.array(draw(st.lists(st.lists(floats, min_size=2, max_size=2),
                                                   min_size=len(edges), max_size=len(edges))))
    return Graph(n, tuple(sorted(edges)), node_features, edge_features)


def random_graph(rng, n, p=0.3):
    from graphsim.ged import sample_er_graph
    return sample_er_graph(n, p, rng)


# PASS/FAIL lines from the acceptance suite, printed in the terminal summary
ACCEPTANCE_LINES: list[str] = []
