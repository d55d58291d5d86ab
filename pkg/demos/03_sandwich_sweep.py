"""Checking certified lower <= E||A o G|| <= upper over a grid of exponents."""
from __future__ import annotations

from normlab import pq_grid, sandwich_sweep, scenario_matrix

scenarios = [
    ("identity_8", scenario_matrix({"kind": "identity", "n": 8})),
    ("blocks_3x3", scenario_matrix({"kind": "block_ones", "k": 3, "N": 3})),
    ("uniform_6x5", scenario_matrix({"kind": "seeded_random", "m": 6, "n": 5, "law": "uniform01", "seed": 2})),
]
result = sandwich_sweep(scenarios, "gaussian", pq_grid(["1", "2", "inf"]), trials=200, seed=4)

print(f"{'scenario':>12} {'p':>4} {'q':>4} {'lower':>8} {'mean':>8} {'upper':>9}  mean/lower")
for row in result.rows:
    print(
        f"{row['scenario']:>12} {row['p']:>4} {row['q']:>4} {row['lower']:8.3f} {row['mc_mean']:8.3f}"
        f" {row['upper']:9.2f}  {row['mean_over_lower']:.2f}"
    )
print("\nsummary:", {k: round(v, 2) if isinstance(v, float) else v for k, v in result.summary.items()})
