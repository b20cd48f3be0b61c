"""
Principal eigenvalues and the Barta bracket
===========================================

Computes ``lambda0(K)`` for nested segments of Z at several ``p``, shows
strict domain monotonicity, and brackets the eigenvalue between the Barta
bounds of an arbitrary positive test function.
"""

import numpy as np

from pcrit import (ExhaustionSpec, OperatorParams, SubsetSpec, barta_bounds, build_family,
                   check_domain_monotonicity, principal_eigenvalue)

g, _ = build_family(ExhaustionSpec("z", [8]), 0)
sites = {s: i for i, s in enumerate(g.coords)}

for p in (1.5, 2.0, 3.0):
    P = OperatorParams(g, p)
    lams = []
    for r in (0, 1, 2, 4, 8):
        K = SubsetSpec(g, [sites[s] for s in range(-r, r + 1)])
        lams.append(principal_eigenvalue(P, K).lambda0)
    print(f"p={p}: lambda0 on [-r, r] for r = 0,1,2,4,8:", np.round(lams, 6))

P = OperatorParams(g, 2.0)
small = SubsetSpec(g, [sites[0]])
big = SubsetSpec(g, [sites[-1], sites[0], sites[1]])
cert = check_domain_monotonicity(P, small, big)
print("monotone:", cert.passed, "  2 vs 2 - sqrt(2):", cert.details["lambda0_K"], cert.details["lambda0_K_tilde"])

K = SubsetSpec(g, [sites[s] for s in range(-3, 4)])
lam = principal_eigenvalue(P, K).lambda0
lo, hi = barta_bounds(P, np.linspace(1, 2, g.n), K)
print(f"Barta bracket {lo:.4f} <= {lam:.4f} <= {hi:.4f}")
