"""Computing l_p -> l_q operator norms and knowing how much to trust them."""
from __future__ import annotations

import numpy as np

from normlab import brute_force_oracle, op_norm
from normlab.exponents import INF

rng = np.random.default_rng(0)
B = rng.standard_normal((4, 3))
print("B =\n", np.round(B, 3))

# Closed forms come back tagged Exact, with a witness vector attaining the value.
for p, q in [(1, 2), (2, 2), (2, INF), (INF, 1)]:
    res = op_norm(B, p, q)
    print(f"||B: l_{p} -> l_{q}|| = {res.value:.6f}  [{res.kind}, {res.strategy}]")

# Off the closed-form pairs the engine still returns something, but says what it is.
res = op_norm(B, 3, 1.5, restarts=16, seed=1)
print(f"\n||B: l_3 -> l_1.5|| ~ {res.value:.6f}  [{res.kind}], certified window [{res.lower:.4f}, {res.upper:.4f}]")

# Small matrices can be checked against a grid search that shares no code with the engine.
print("grid-search oracle   :", round(brute_force_oracle(B, 3, 1.5), 6))

# Duality: ||B: p -> q|| = ||B^T: q* -> p*||.
print("\n(1 -> 1.5) vs transpose (3 -> inf):", op_norm(B, 1, 1.5).value, op_norm(B.T, 3, INF).value)

# Quasi-norm exponents down to 1/2 are allowed; the source side below 1 is a column formula.
print("||B: l_0.5 -> l_2|| =", op_norm(B, 0.5, 2).value, "= largest column l_2 norm", np.linalg.norm(B, axis=0).max())
