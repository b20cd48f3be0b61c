"""
The p-Schrödinger operator on a weighted graph
==============================================

Builds a small random graph, applies ``H = L + (c/m) phi_p`` and checks the
identities that tie the operator to its energy: Green's formula, the
Gâteaux derivative and the pointwise Picone inequality.
"""

import numpy as np

from pcrit import OperatorParams, SubsetSpec, WeightedGraph, apply_H, energy, greens_formula_residual
from pcrit import gateaux_residual, phi_p, picone_gap

rng = np.random.default_rng(0)
n = 8
edges = [(i, i + 1) for i in range(n - 1)] + [(0, 4), (2, 6)]
g = WeightedGraph(n, edges, rng.uniform(0.5, 2.0, len(edges)), rng.uniform(0.5, 2.0, n), rng.normal(0, 0.3, n))
print(g)

# phi_p is odd and (p-1)-homogeneous
p = 3.0
print("phi_p(-2, 3) =", phi_p(-2.0, p))

# the energy of f pairs with Hf when f has finite support
P = OperatorParams(g, p)
f = rng.normal(size=n)
print("h(f) =", energy(P, f), "  <Hf, f> =", float(np.sum(apply_H(P, f) * f * g.m)))

# Green's formula on a subset, and the derivative of h along a direction
K = SubsetSpec(g, [0, 1, 2, 3])
res, scale = greens_formula_residual(P, K, rng.normal(size=n), rng.normal(size=n), return_scale=True)
print(f"Green's formula residual {res:.2e} (scale {scale:.2e})")
print(f"Gâteaux relative residual {gateaux_residual(P, f, rng.normal(size=n), relative=True):.2e}")

# Picone: nonnegative for u >= 0, v > 0 and zero exactly when u is a multiple of v
V = SubsetSpec(g, range(n))
v = rng.uniform(0.5, 2.0, n)
print("Picone gap, random u:", picone_gap(P, rng.uniform(0, 2, n), v, V).gap)
print("Picone gap, u = 3v:  ", picone_gap(P, 3 * v, v, V).gap)
