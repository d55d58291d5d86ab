"""Two examples showing where a simpler rate is too small.

First, block-diagonal all-ones matrices at p = q < 2: a lower expression
outgrows a candidate upper expression as the blocks grow. The comparison
is done symbolically, since the matrices would need about e^(e^k) rows.

Second, for q < p the expected row and column maxima alone underestimate
E||A o G||, already for the identity.
"""
from __future__ import annotations

import numpy as np

from normlab import counterexample_growth, mc_norm_estimate, rowcol_max_rate

for q in (1.0, 1.5, 1.9):
    rows = counterexample_growth(q, [1e2, 1e3, 1e4, 1e6])
    print(f"q={q}: " + "  ".join(f"k={row['k']:.0e} ratio={row['ratio']:.3f}" for row in rows))

print("\nidentity, p = 2, q = 1.5")
for n in (8, 64, 512):
    A = np.eye(n)
    est = mc_norm_estimate(A, "gaussian", 2, 1.5, trials=100, seed=13)
    rate = rowcol_max_rate(A, "gaussian", 2, 1.5, trials=100, seed=13)
    print(f"  n={n:4d}  E||A o G|| = {est.mean:7.3f}   row/col maxima = {rate:6.3f}   ratio = {est.mean / rate:.3f}")
