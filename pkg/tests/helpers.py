"""Random instance generators for the test suite."""

import numpy as np

from pcrit.graph import SubsetSpec, WeightedGraph


def random_graph(rng, n, extra=None, m_range=(0.5, 2.0), b_range=(0.2, 2.0), c=None):
    """Connected graph: a random spanning tree plus ``extra`` random chords."""
    perm = rng.permutation(n)
    edges = {tuple(sorted((int(perm[i]), int(perm[rng.integers(0, i)])))) for i in range(1, n)}
    extra = n // 2 if extra is None else extra
    for _ in range(extra):
        a, b = rng.choice(n, 2, replace=False)
        edges.add(tuple(sorted((int(a), int(b)))))
    edges = sorted(edges)
    w = rng.uniform(*b_range, len(edges))
    m = rng.uniform(*m_range, n)
    if c is None:
        c = np.zeros(n)
    elif np.isscalar(c):
        c = np.full(n, float(c))
    return WeightedGraph(n, edges, w, m, c)


def random_connected_subset(rng, g, size, start=None, within=None):
    """Random connected interior of ``size`` vertices grown from ``start``.

    ``within`` restricts the growth to a given vertex set.
    """
    allowed = set(range(g.n)) if within is None else {int(x) for x in within}
    start = int(rng.choice(sorted(allowed))) if start is None else start
    K = {start}
    frontier = set(int(y) for y in g.neighbors(start)) & allowed
    while len(K) < size and frontier:
        y = int(rng.choice(sorted(frontier)))
        K.add(y)
        frontier |= {int(z) for z in g.neighbors(y)} & allowed
        frontier -= K
    return SubsetSpec(g, sorted(K))
