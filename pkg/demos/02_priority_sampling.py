"""
Proportional sampling from a window of recent transitions
=========================================================

A sum tree stores each transition's priority raised to beta1. Drawing
from only the newest c slots needs at most two prefix-sum queries, since
the window may wrap around the end of the ring buffer.
"""

import numpy as np

from ere_sac import PriorityTree, ReplayBuffer, normalized_is_weights, sample_proportional_range

rng = np.random.default_rng(0)

# %%
# A ring of 8 slots after 11 pushes: the newest four occupy slots 7, 0, 1, 2.
buf = ReplayBuffer(8, obs_dim=1, act_dim=1)
tree = PriorityTree(8, beta1=1.0)
for i in range(11):
    slot = buf.add([float(i)], [0.0], 0.0, [0.0], False)
    tree.set_priority(slot, float(i + 1))
print("window intervals:", buf.recent_intervals(4))

# %%
# Empirical frequencies against the exact normalized priorities.
slots, probs = sample_proportional_range(tree, buf, 4, 100_000, rng)
window = [buf.slot_for_rank(r) for r in range(1, 5)]
masses = tree.leaf_masses()[window]
for s, m in zip(window, masses):
    print(f"slot {s}: expected {m / masses.sum():.4f}, observed {np.mean(slots == s):.4f}")

# %%
# Importance weights correct for the non-uniform draw, normalized by the batch maximum.
batch, p = sample_proportional_range(tree, buf, 4, 6, rng)
print("\nslots  ", batch)
print("weights", np.round(normalized_is_weights(p, 4, beta2=0.6), 3))
