"""Gaussian concentration of the norm, and heavier-tailed psi_r entries."""
from __future__ import annotations

import numpy as np

from normlab import tail_experiment
from normlab.sampling import EntryModel, coupled_psi_pair, coupling_violations, sample_matrix

# The norm of A o G concentrates around its median at scale d1.
A = np.ones((20, 20)) / 20
table = tail_experiment(A, "gaussian", 2, 2, 2000, [1.0, 1.1, 1.25, 1.5, 2.0], seed=5, reference="median")
print(f"median level {table.level:.4f}")
for row in table.rows:
    print(f"  P(norm >= {row['t']:.2f} x median) = {row['probability']:.4f} +/- {row['half_width']:.4f}")

# Symmetric Weibull entries: P(|Z| >= t) = exp(-t^r).
for r in (0.5, 1.0, 2.0):
    Z = sample_matrix(EntryModel("weibull", r=r), 500, 500, 6)
    print(f"r={r}: E|Z| sample {np.abs(Z).mean():.4f}, exact {EntryModel('weibull', r=r).mean_abs():.4f}")

# A psi_r variable U can be built from the same uniform as |g| * Y, so that U is
# dominated pointwise by an affine function of it. Count failures of that domination.
U, V = coupled_psi_pair(1.0, np.e, 1.0, seed=7, size=100_000)
print("\ncoupled draws: 100000, domination failures:", coupling_violations(U, V, 1.0, np.e, 1.0))
