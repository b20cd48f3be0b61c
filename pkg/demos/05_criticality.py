"""
Criticality on the evidence, ground states and Hardy weights
============================================================

Classifies a few energies, extracts the ground state of the critical one
and turns a positive supersolution into a Hardy weight.
"""

import numpy as np

from pcrit import (ExhaustionSpec, OperatorParams, PotentialConfig, SubsetSpec, build_family, classify,
                   ground_state, hardy_weight, superharmonic_witness)

cfg = PotentialConfig(cross_check=False)
cases = {
    "Z, c = 0": ExhaustionSpec("z", [1, 3, 7, 15, 31]),
    "tree, c = 0": ExhaustionSpec("tree", [6, 8, 10, 12, 14], {"degree": 3}),
    "Z, deep well at 0": ExhaustionSpec("z", [1, 2, 3], potential=lambda d: -3.0 if d == 0 else 0.0),
}
for name, spec in cases.items():
    print(f"{name}: {classify(2.0, spec, cfg=cfg).classification}")

# the ground state of Z is constant; its Hardy weight vanishes
spec = ExhaustionSpec("z", [1, 3, 7, 15, 31])
gs = ground_state(2.0, spec, cfg=cfg)
G0, K0 = build_family(spec, 0)
print("ground state on the accepted window:", gs.ground_state[gs.window].round(8))
w = hardy_weight(OperatorParams(G0, 2.0), gs.ground_state[: G0.n], SubsetSpec(G0, gs.window), tol=1e-7)
print("Hardy weight sup:", float(np.abs(w).max()))

# a small negative potential on the tree still admits a positive supersolution
wit = superharmonic_witness(2.0, ExhaustionSpec("tree", [1, 2, 3], {"degree": 3}, potential=-0.05), cfg=cfg)
print("witness found:", wit.success, " C_n:", np.round(wit.C, 6))
