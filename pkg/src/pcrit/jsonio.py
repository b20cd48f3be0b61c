"""JSON formats for graphs, vertex functions, subsets and Dirichlet problems.

Graph files have the shape::

    {"vertices": [{"id": 0, "m": 1.0, "c": 0.0}, ...],
     "edges": [{"u": 0, "v": 1, "b": 1.0}, ...]}

with every undirected edge stored once as ``u < v``. On input an edge may
also be listed in both orientations, in which case the two weights must
agree; any disagreement is reported as an asymmetric edge. Writing uses
sorted keys and Python's shortest round-trip float repr, so load followed by
save reproduces a canonical file byte for byte.
"""

from __future__ import annotations

import json
import math

import numpy as np
from scipy import sparse

from .dirichlet import DirichletProblem
from .exceptions import GraphValidationError, PreconditionError
from .graph import SubsetSpec, WeightedGraph, validate
from .reports import to_jsonable

__all__ = [
    "graph_to_dict",
    "graph_from_dict",
    "dumps",
    "load_graph",
    "save_graph",
    "vertex_function_to_dict",
    "vertex_function_from_dict",
    "subset_from_json",
    "problem_from_dict",
]


def dumps(obj) -> str:
    """Canonical JSON text: sorted keys, two-space indent, trailing newline."""
    return json.dumps(to_jsonable(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def graph_to_dict(g: WeightedGraph) -> dict:
    """Plain-data form of ``g`` with one entry per undirected edge."""
    return {
        "vertices": [{"id": i, "m": float(g.m[i]), "c": float(g.c[i])} for i in range(g.n)],
        "edges": [{"u": int(u), "v": int(v), "b": float(b)} for u, v, b in zip(g.eu, g.ev, g.eb)],
    }


def _number(x, where, violations):
    if isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x):
        violations.append({"kind": "bad number", "where": where, "value": repr(x)})
        return None
    return float(x)


def graph_from_dict(data) -> WeightedGraph:
    """Build and validate a graph from its plain-data form.

    Raises
    ------
    GraphValidationError
        With every violation found: malformed entries, non-dense vertex ids,
        unknown endpoints, asymmetric or duplicate edges, nonpositive
        weights or measures, isolated vertices and disconnected hosts.
    """
    if not isinstance(data, dict) or "vertices" not in data or "edges" not in data:
        raise GraphValidationError([{"kind": "malformed graph", "detail": "need 'vertices' and 'edges'"}])
    violations = []
    verts = data["vertices"]
    n = len(verts)
    m, c = np.ones(n), np.zeros(n)
    seen = set()
    for k, vx in enumerate(verts):
        if not isinstance(vx, dict) or not isinstance(vx.get("id"), int) or isinstance(vx.get("id"), bool):
            violations.append({"kind": "malformed vertex", "index": k})
            continue
        i = vx["id"]
        if not 0 <= i < n or i in seen:
            violations.append({"kind": "non-dense vertex id", "id": i})
            continue
        seen.add(i)
        mi = _number(vx.get("m", 1.0), f"m[{i}]", violations)
        ci = _number(vx.get("c", 0.0), f"c[{i}]", violations)
        m[i] = 1.0 if mi is None else mi
        c[i] = 0.0 if ci is None else ci
    entries = {}
    for k, e in enumerate(data["edges"]):
        if not isinstance(e, dict) or not all(isinstance(e.get(key), int) for key in ("u", "v")):
            violations.append({"kind": "malformed edge", "index": k})
            continue
        u, v = e["u"], e["v"]
        b = _number(e.get("b"), f"b[{u},{v}]", violations)
        if b is None:
            continue
        if not (0 <= u < n and 0 <= v < n):
            violations.append({"kind": "unknown vertex", "u": u, "v": v})
            continue
        if (u, v) in entries:
            violations.append({"kind": "duplicate edge", "u": u, "v": v})
            continue
        entries[(u, v)] = b
    if violations:
        raise GraphValidationError(violations)
    rows = [u for u, _ in entries] + [v for (u, v) in entries if (v, u) not in entries]
    cols = [v for _, v in entries] + [u for (u, v) in entries if (v, u) not in entries]
    vals = list(entries.values()) + [b for (u, v), b in entries.items() if (v, u) not in entries]
    B = sparse.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    violations = validate(B, m, c, require_connected=True)
    if violations:
        raise GraphValidationError(violations)
    return WeightedGraph.from_matrix(B, m, c)


def load_graph(path) -> WeightedGraph:
    """Read a graph file; JSON syntax errors surface as :class:`GraphValidationError`."""
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise GraphValidationError([{"kind": "malformed JSON", "detail": str(exc)}]) from None
    return graph_from_dict(data)


def save_graph(g: WeightedGraph, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(graph_to_dict(g)))


def vertex_function_to_dict(values) -> dict:
    return {"values": [float(x) for x in np.asarray(values, float)]}


def vertex_function_from_dict(data, n=None) -> np.ndarray:
    vals = np.asarray(data["values"], float)
    if n is not None and vals.shape != (n,):
        raise PreconditionError(f"vertex function has {vals.size} values, graph has {n} vertices")
    return vals


def _vertex_ids(ids, n, name):
    out = []
    for x in ids:
        if isinstance(x, bool) or not isinstance(x, int):
            raise PreconditionError(f"{name} contains non-integer vertex {x!r}")
        if not 0 <= x < n:
            raise PreconditionError(f"{name} refers to unknown vertex {x}")
        out.append(x)
    return out


def subset_from_json(g: WeightedGraph, data) -> SubsetSpec:
    """Subset from a list of ids or a mapping with key ``K``."""
    ids = data["K"] if isinstance(data, dict) else data
    return SubsetSpec(g, _vertex_ids(ids, g.n, "K"))


def _sparse_function(data, n, name):
    out = np.zeros(n)
    for k, v in (data or {}).items():
        try:
            x = int(k)
        except ValueError:
            raise PreconditionError(f"{name} has non-integer key {k!r}") from None
        _vertex_ids([x], n, name)
        out[x] = float(v)
    return out


def problem_from_dict(g: WeightedGraph, data) -> DirichletProblem:
    """Dirichlet problem from ``{"K": [ids], "g": {id: val}, "f": {id: val}}``."""
    K = subset_from_json(g, data)
    return DirichletProblem(K, _sparse_function(data.get("g"), g.n, "g"),
                            _sparse_function(data.get("f"), g.n, "f"))
