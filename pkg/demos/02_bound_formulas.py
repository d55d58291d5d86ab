"""Upper and lower bounds for E||A o G|| next to a Monte Carlo estimate.

A o G multiplies a fixed coefficient matrix A entrywise by independent
standard Gaussians. The bounds depend on A only through a handful of
mixed norms (d1, d2) and logarithmic factors.
"""
from __future__ import annotations

import numpy as np

from normlab import bounds, mc_norm_estimate
from normlab.exponents import INF

A = np.random.default_rng(3).random((10, 8))
print("A: 10 x 8, Uniform[0, 1] entries\n")

print(f"{'p':>4} {'q':>4} {'certified lower':>16} {'MC mean':>10} {'conjectured':>12} {'upper':>10}")
for p, q in [(1, 2), (2, 2), (2, INF), (1, 1), (INF, 1)]:
    low = bounds.lower_bound_gaussian(A, p, q)
    est = mc_norm_estimate(A, "gaussian", p, q, trials=300, seed=1)
    rate = bounds.conjectured_rate(A, p, q)
    up = bounds.upper_main_gaussian(A, p, q)
    print(f"{p:>4} {q:>4} {low.certified_lower:16.4f} {est.mean:10.4f} {rate:12.4f} {up:10.2f}")

# The explicit upper bound carries large constants. In the regime p <= 2 <= q
# a sharper variant is available, and it refuses to run outside that regime.
print("\nsharper p <= 2 <= q bound at (1.5, 3):", round(bounds.upper_gauss_p_le2(A, 1.5, 3), 3))
try:
    bounds.upper_gauss_p_le2(A, 3, 1.5)
except bounds.RegimeError as exc:
    print("outside its regime:", exc)

# For comparison, the classical spectral-norm rate for this shape.
print("\nLatala rate at p = q = 2:", round(bounds.classical_rates("latala", 2, 2, A=A), 3))
