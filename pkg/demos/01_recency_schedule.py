"""
How the recency window shrinks inside one update phase
======================================================

Emphasizing recent experience replaces one fixed sampling window with a
sequence of windows, one per mini-batch, that shrinks geometrically.
This script prints the window sizes and the resulting expected number of
times each transition is drawn, for a few decay rates and floors.
"""

import numpy as np

from ere_sac import EreConfig, expected_sample_counts, range_schedule

N = 10**6   # buffer capacity (and fill)
K = 1000    # updates in the phase
BATCH = 256

# %%
# Window sizes c_k for three decay rates. The last window never depends on K.
cfg = EreConfig(capacity=N, c_min=5000)
for eta in (0.994, 0.996, 0.999):
    sched = range_schedule(cfg, eta, K, N)
    picks = [1, 250, 500, 750, 1000]
    print(f"eta={eta}: " + "  ".join(f"c_{k}={sched[k - 1]}" for k in picks))

# %%
# Expected draws per transition, newest first.
counts = expected_sample_counts(cfg, 0.996, K, BATCH, N)
reached = np.flatnonzero(counts > 0)[-1]
print(f"\nnewest transition: {counts[0]:.3f} expected draws")
print(f"oldest transition reached (rank {reached + 1}): {counts[reached]:.2e}")
print(f"newest/oldest ratio: {counts[0] / counts[reached]:.3g}")
print(f"total draws conserved: {counts.sum():.1f} == {K * BATCH}")

# %%
# Raising the floor c_min moves probability mass back onto old data;
# c_min = N gives plain uniform replay.
for c_min in (5000, 100_000, N):
    c = expected_sample_counts(EreConfig(capacity=N, c_min=c_min), 0.996, K, BATCH, N)
    print(f"c_min={c_min:>7}: rank 1 -> {c[0]:.3f}, rank 500000 -> {c[499_999]:.2e}")
