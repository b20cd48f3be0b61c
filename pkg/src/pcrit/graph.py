"""Weighted graphs, finite subsets with vertex boundary, and exhaustion families.

Infinite graphs are only ever represented through finite truncations. A
truncation at radius ``r`` is the host graph spanned by the ball of radius
``r + 1`` around the root; the interior is the ball of radius ``r`` and the
boundary is whatever the edges reach from there. Vertex ids are dense
integers assigned in a canonical order (distance from the root first), so the
ball of a smaller radius keeps the same ids in every larger truncation.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Sequence

import numpy as np
from scipy import sparse

from .exceptions import GraphValidationError

__all__ = [
    "WeightedGraph",
    "SubsetSpec",
    "ExhaustionSpec",
    "FAMILIES",
    "build_family",
    "vertex_boundary",
    "connected_components",
    "validate",
]

FAMILIES = ("z", "cycle", "star", "tree", "lattice")

_FAMILY_ALIASES = {
    "path-segment-of-z": "z",
    "path": "z",
    "d-regular-tree-ball": "tree",
    "z^d-box": "lattice",
    "zd": "lattice",
}


def _readonly(a, dtype):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


class WeightedGraph:
    """Finite graph ``(X, b, m, c)`` with symmetric edge weights.

    Each undirected edge is stored once as ``(u, v, b)`` with ``u < v``.
    Instances are immutable; use :meth:`with_potential` to get a copy with a
    different potential ``c``.

    Parameters
    ----------
    n : int
        Number of vertices; ids are ``0..n-1``.
    edges : array_like, shape (k, 2)
        Undirected edges, any orientation.
    weights : array_like, shape (k,)
        Strictly positive edge weights.
    m : array_like or float
        Vertex measure, strictly positive.
    c : array_like or float, optional
        Potential, signed. Defaults to 0.
    coords : sequence, optional
        Side table of family coordinates, one per vertex.
    """

    def __init__(self, n, edges, weights, m=1.0, c=0.0, coords=None):
        n = int(n)
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        weights = np.asarray(weights, dtype=float).reshape(-1)
        if len(weights) != len(edges):
            raise ValueError("edges and weights differ in length")
        lo = np.minimum(edges[:, 0], edges[:, 1])
        hi = np.maximum(edges[:, 0], edges[:, 1])
        order = np.lexsort((hi, lo))
        self.n = n
        self.eu = _readonly(lo[order], np.int64)
        self.ev = _readonly(hi[order], np.int64)
        self.eb = _readonly(weights[order], float)
        self.m = _readonly(np.broadcast_to(np.asarray(m, dtype=float), (n,)), float)
        self.c = _readonly(np.broadcast_to(np.asarray(c, dtype=float), (n,)), float)
        self.coords = None if coords is None else list(coords)
        violations = _structural_violations(self)
        if violations:
            raise GraphValidationError(violations)

    @classmethod
    def from_matrix(cls, b, m=1.0, c=0.0, coords=None):
        """Build from a symmetric (dense or sparse) weight matrix.

        Raises :class:`GraphValidationError` carrying the full violation list
        when ``b`` is not a valid symmetric zero-diagonal weight matrix.
        """
        violations = validate(b, m, c, require_connected=False)
        if violations:
            raise GraphValidationError(violations)
        B = sparse.triu(sparse.csr_matrix(b), k=1).tocoo()
        n = B.shape[0]
        return cls(n, np.column_stack([B.row, B.col]), B.data, m, c, coords)

    @property
    def num_edges(self):
        return len(self.eb)

    @cached_property
    def adjacency(self):
        """Symmetric CSR matrix of the edge weights."""
        B = sparse.coo_matrix((self.eb, (self.eu, self.ev)), shape=(self.n, self.n))
        return (B + B.T).tocsr()

    @cached_property
    def deg(self):
        d = np.zeros(self.n)
        np.add.at(d, self.eu, self.eb)
        np.add.at(d, self.ev, self.eb)
        d.setflags(write=False)
        return d

    def neighbors(self, x):
        A = self.adjacency
        return A.indices[A.indptr[x]:A.indptr[x + 1]]

    def weight(self, x, y):
        return float(self.adjacency[x, y])

    def with_potential(self, c):
        """Copy of the graph with potential ``c`` (arrays are shared)."""
        g = object.__new__(WeightedGraph)
        g.__dict__.update({k: v for k, v in self.__dict__.items() if k != "c"})
        g.c = _readonly(np.broadcast_to(np.asarray(c, dtype=float), (self.n,)), float)
        return g

    def __repr__(self):
        return f"WeightedGraph(n={self.n}, edges={self.num_edges})"


def _structural_violations(g):
    out = []
    if len(g.eb):
        if g.eu.min() < 0 or g.ev.max() >= g.n:
            out.append({"kind": "unknown vertex", "detail": "edge endpoint outside 0..n-1"})
            return out
    for i in np.flatnonzero(g.eu == g.ev):
        out.append({"kind": "diagonal entry", "u": int(g.eu[i]), "v": int(g.ev[i])})
    dup = np.flatnonzero((np.diff(g.eu) == 0) & (np.diff(g.ev) == 0))
    for i in dup:
        out.append({"kind": "duplicate edge", "u": int(g.eu[i]), "v": int(g.ev[i])})
    for i in np.flatnonzero(~(g.eb > 0) | ~np.isfinite(g.eb)):
        out.append({"kind": "nonpositive weight", "u": int(g.eu[i]), "v": int(g.ev[i]),
                    "b": float(g.eb[i])})
    for x in np.flatnonzero(~(g.m > 0) | ~np.isfinite(g.m)):
        out.append({"kind": "nonpositive measure", "vertex": int(x), "m": float(g.m[x])})
    for x in np.flatnonzero(~np.isfinite(g.c)):
        out.append({"kind": "non-finite potential", "vertex": int(x)})
    return out


def validate(g, m=None, c=None, require_connected=True):
    """Return the list of every violation of the weighted-graph axioms.

    ``g`` is either a :class:`WeightedGraph` or a raw (possibly asymmetric)
    weight matrix, dense or sparse, in which case ``m`` and ``c`` supply the
    vertex data. Never raises on bad data; an empty list means valid.
    """
    if isinstance(g, WeightedGraph):
        out = _structural_violations(g)
        B = g.adjacency
        m_arr, n = g.m, g.n
    else:
        B = sparse.csr_matrix(g, dtype=float)
        n = B.shape[0]
        out = []
        if B.shape[0] != B.shape[1]:
            return [{"kind": "non-square weight matrix", "shape": list(B.shape)}]
        m_arr = np.broadcast_to(np.asarray(1.0 if m is None else m, dtype=float), (n,))
        c_arr = np.broadcast_to(np.asarray(0.0 if c is None else c, dtype=float), (n,))
        diag = B.diagonal()
        for x in np.flatnonzero(diag != 0):
            out.append({"kind": "diagonal entry", "u": int(x), "v": int(x), "b": float(diag[x])})
        Bc = B.tocoo()
        for x, y, w in zip(Bc.row, Bc.col, Bc.data):
            if x != y and (w < 0 or not np.isfinite(w)):
                out.append({"kind": "nonpositive weight", "u": int(x), "v": int(y), "b": float(w)})
        D = (B - B.T).tocoo()
        for x, y, w in zip(D.row, D.col, D.data):
            if x < y and w != 0:
                out.append({"kind": "asymmetric edge", "u": int(x), "v": int(y),
                            "b_uv": float(B[x, y]), "b_vu": float(B[y, x])})
        for x in np.flatnonzero(~(m_arr > 0) | ~np.isfinite(m_arr)):
            out.append({"kind": "nonpositive measure", "vertex": int(x), "m": float(m_arr[x])})
        for x in np.flatnonzero(~np.isfinite(c_arr)):
            out.append({"kind": "non-finite potential", "vertex": int(x)})
        B = sparse.csr_matrix(B.maximum(B.T))
        B.setdiag(0)
        B.eliminate_zeros()
    if require_connected and n > 1:
        deg = np.asarray((B > 0).sum(axis=1)).ravel()
        for x in np.flatnonzero(deg == 0):
            out.append({"kind": "isolated vertex", "vertex": int(x)})
        ncomp, _ = sparse.csgraph.connected_components(B > 0, directed=False)
        if ncomp > 1:
            out.append({"kind": "disconnected host", "components": int(ncomp)})
    return out


def vertex_boundary(g: WeightedGraph, K) -> np.ndarray:
    """Vertices outside ``K`` joined by an edge to some vertex of ``K``."""
    K = np.unique(np.asarray(K, dtype=np.int64))
    if K.size == 0:
        return K
    inK = np.zeros(g.n, bool)
    inK[K] = True
    hit = np.zeros(g.n, bool)
    hit[g.ev[inK[g.eu]]] = True
    hit[g.eu[inK[g.ev]]] = True
    return np.flatnonzero(hit & ~inK)


def connected_components(g: WeightedGraph, K) -> list[np.ndarray]:
    """Partition ``K`` into components of the graph induced on ``K``.

    Blocks are sorted arrays, ordered by their smallest vertex.
    """
    K = np.unique(np.asarray(K, dtype=np.int64))
    if K.size == 0:
        return []
    sub = g.adjacency[K][:, K]
    _, labels = sparse.csgraph.connected_components(sub, directed=False)
    blocks = [K[labels == i] for i in np.unique(labels)]
    return sorted(blocks, key=lambda blk: blk[0])


@dataclass(frozen=True, eq=False)
class SubsetSpec:
    """Finite interior ``K`` of a host graph with its derived boundary."""

    graph: WeightedGraph
    interior: np.ndarray
    boundary: np.ndarray = field(init=False)
    components: list = field(init=False)

    def __post_init__(self):
        K = np.unique(np.asarray(self.interior, dtype=np.int64))
        if K.size and (K[0] < 0 or K[-1] >= self.graph.n):
            raise ValueError("interior contains vertices outside the host graph")
        K.setflags(write=False)
        object.__setattr__(self, "interior", K)
        object.__setattr__(self, "boundary", vertex_boundary(self.graph, K))
        object.__setattr__(self, "components", connected_components(self.graph, K))

    @property
    def mask(self):
        out = np.zeros(self.graph.n, bool)
        out[self.interior] = True
        return out

    @property
    def is_connected(self):
        return len(self.components) == 1

    def __len__(self):
        return len(self.interior)

    def __contains__(self, x):
        return bool(np.isin(x, self.interior))

    def restrict(self, vertices):
        """Subset of the same host with a new interior."""
        return SubsetSpec(self.graph, vertices)


Rule = Any  # float or callable


@dataclass(frozen=True)
class ExhaustionSpec:
    """Increasing sequence of finite truncations of an infinite graph family.

    Parameters
    ----------
    family : str
        One of ``z`` (path segments of Z), ``cycle``, ``star``, ``tree``
        (d-regular tree balls) or ``lattice`` (boxes in Z^d).
    radii : sequence of int
        Strictly increasing truncation radii. For ``lattice`` the radius is
        the sup-norm radius of the box; for ``star`` it is the number of
        interior leaves.
    params : dict
        ``degree`` for trees, ``dim`` for lattices, ``length`` for cycles.
    potential : float or callable
        Constant potential, or a function of the graph distance to the root.
    measure : float or callable
        Vertex measure, same conventions as ``potential``.
    edge_weight : float or callable
        Constant weight or ``f(coord_u, coord_v)``.
    """

    family: str
    radii: Sequence[int]
    params: dict = field(default_factory=dict)
    potential: Rule = 0.0
    measure: Rule = 1.0
    edge_weight: Rule = 1.0

    def __post_init__(self):
        fam = _FAMILY_ALIASES.get(self.family.lower(), self.family.lower())
        if fam not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        object.__setattr__(self, "family", fam)
        radii = tuple(int(r) for r in self.radii)
        if not radii:
            raise ValueError("radius schedule is empty")
        if radii[0] < 0 or any(b <= a for a, b in zip(radii, radii[1:])):
            raise ValueError(f"radius schedule must be strictly increasing and >= 0, got {radii}")
        object.__setattr__(self, "radii", radii)
        object.__setattr__(self, "params", dict(self.params))

    root = 0

    def __len__(self):
        return len(self.radii)

    def with_radii(self, radii):
        return ExhaustionSpec(self.family, radii, self.params, self.potential,
                              self.measure, self.edge_weight)

    def with_potential(self, potential):
        return ExhaustionSpec(self.family, self.radii, self.params, potential,
                              self.measure, self.edge_weight)

    def truncations(self):
        for n in range(len(self.radii)):
            yield build_family(self, n)


def _rule(rule, arg):
    return float(rule(arg)) if callable(rule) else float(rule)


def _z_coords(R):
    out = [0]
    for k in range(1, R + 1):
        out += [-k, k]
    return out


def _cycle_coords(R, N):
    seen, out = set(), []
    for k in _z_coords(R):
        r = k % N
        if r not in seen:
            seen.add(r)
            out.append(r)
    return out


def _tree_coords(R, d):
    out = [()]
    level = [()]
    for depth in range(1, R + 1):
        nxt = []
        for node in level:
            k = d if depth == 1 else d - 1
            nxt.extend(node + (i,) for i in range(k))
        out.extend(nxt)
        level = nxt
    return out


def _lattice_coords(R, dim):
    pts = list(itertools.product(range(-R, R + 1), repeat=dim))
    pts.sort(key=lambda x: (max(abs(t) for t in x), x))
    return pts


def _family_layout(spec: ExhaustionSpec, R: int):
    """Coordinates, graph distance to the root and edges of the radius-R ball."""
    fam, prm = spec.family, spec.params
    if fam == "z":
        coords = _z_coords(R)
        index = {x: i for i, x in enumerate(coords)}
        dist = [abs(x) for x in coords]
        pairs = [(x, x + 1) for x in range(-R, R)]
    elif fam == "cycle":
        N = int(prm.get("length", 0))
        if N < 3:
            raise ValueError("cycle family needs params['length'] >= 3")
        coords = _cycle_coords(R, N)
        index = {x: i for i, x in enumerate(coords)}
        dist = [min(x, N - x) for x in coords]
        pairs = {tuple(sorted((x, (x + 1) % N))) for x in coords if (x + 1) % N in index}
        pairs = sorted(pairs)
    elif fam == "star":
        coords = list(range(R + 1))
        index = {x: i for i, x in enumerate(coords)}
        dist = [0] + [1] * R
        pairs = [(0, k) for k in range(1, R + 1)]
    elif fam == "tree":
        d = int(prm.get("degree", 3))
        if d < 2:
            raise ValueError("tree family needs params['degree'] >= 2")
        coords = _tree_coords(R, d)
        index = {x: i for i, x in enumerate(coords)}
        dist = [len(x) for x in coords]
        pairs = [(x[:-1], x) for x in coords[1:]]
    else:
        dim = int(prm.get("dim", 2))
        if dim < 1:
            raise ValueError("lattice family needs params['dim'] >= 1")
        coords = _lattice_coords(R, dim)
        index = {x: i for i, x in enumerate(coords)}
        dist = [sum(abs(t) for t in x) for x in coords]
        pairs = []
        for x in coords:
            for a in range(dim):
                y = x[:a] + (x[a] + 1,) + x[a + 1:]
                if y in index:
                    pairs.append((x, y))
    return coords, index, dist, pairs


def build_family(spec: ExhaustionSpec, n: int):
    """Return the ``n``-th truncation ``(graph, subset)`` of an exhaustion.

    The host is the ball of radius ``radii[n] + 1`` and the subset interior is
    the ball of radius ``radii[n]``; the root is vertex 0.

    Examples
    --------
    >>> g, K = build_family(ExhaustionSpec("z", [1]), 0)
    >>> K.interior.tolist(), K.boundary.tolist(), g.num_edges
    ([0, 1, 2], [3, 4], 4)
    """
    if not 0 <= n < len(spec.radii):
        raise IndexError(f"truncation index {n} outside schedule of length {len(spec.radii)}")
    r = spec.radii[n]
    coords, index, dist, pairs = _family_layout(spec, r + 1)
    edges = np.array([(index[a], index[b]) for a, b in pairs], dtype=np.int64).reshape(-1, 2)
    if callable(spec.edge_weight):
        w = [float(spec.edge_weight(a, b)) for a, b in pairs]
    else:
        w = np.full(len(pairs), float(spec.edge_weight))
    m = [_rule(spec.measure, d) for d in dist]
    c = [_rule(spec.potential, d) for d in dist]
    g = WeightedGraph(len(coords), edges, w, m, c, coords)
    if spec.family == "lattice":
        interior = [i for i, x in enumerate(coords) if max((abs(t) for t in x), default=0) <= r]
    elif spec.family == "star":
        interior = list(range(r + 1))
    else:
        interior = [i for i, d in enumerate(dist) if d <= r]
    return g, SubsetSpec(g, interior)


def bfs_distance(g: WeightedGraph, source=0) -> np.ndarray:
    """Graph distance (in edges) from ``source``; ``-1`` if unreachable."""
    dist = np.full(g.n, -1, dtype=np.int64)
    dist[source] = 0
    q = deque([source])
    while q:
        x = q.popleft()
        for y in g.neighbors(x):
            if dist[y] < 0:
                dist[y] = dist[x] + 1
                q.append(y)
    return dist


def farthest_vertex(g: WeightedGraph, K: SubsetSpec, source=0) -> int:
    """Interior vertex farthest from ``source``; ties go to the smallest id."""
    dist = bfs_distance(g, source)
    d = dist[K.interior]
    return int(K.interior[np.flatnonzero(d == d.max())[0]])
