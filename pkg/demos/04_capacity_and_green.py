"""
Capacities and Green's functions along an exhaustion
====================================================

On Z the capacity of the origin decays like ``R^(1-p)``, so no Green's
function exists and the construction refuses. On the 3-regular tree the
capacity flattens at a positive limit and the normalised Green's function
matches the radial formula.
"""

import numpy as np

from pcrit import ExhaustionSpec, PotentialConfig, Refusal, build_family, capacity_sequence, green_function

cfg = PotentialConfig(cross_check=False)
z = ExhaustionSpec("z", [1, 3, 7, 15, 31])
for p in (1.5, 2.0, 3.0):
    rep = capacity_sequence(p, z, cfg=cfg)
    print(f"Z, p={p}: capacities {np.round(rep.values, 5)}, fitted exponent {rep.fit_exponent:.3f}")

try:
    green_function(2.0, z, cfg=cfg)
except Refusal as err:
    print("Z refused:", err)

tree = ExhaustionSpec("tree", [6, 8, 10, 12, 14], {"degree": 3})
rep = green_function(2.0, tree, cfg=cfg)
G0, _ = build_family(tree, 0)
depth = np.array([len(c) for c in G0.coords])
print("tree capacity limit:", rep.capacity.limit_estimate)
print("Green's function by depth:", [float(rep.green_limit[depth == d][0]) for d in range(4)])
print("radial formula (2/3) 2^-depth:", [(2 / 3) * 0.5 ** d for d in range(4)])
