"""Proportional prioritized sampling over (a window of) the replay ring."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .replay import ReplayBuffer


@dataclass(frozen=True)
class PerConfig:
    beta1: float = 0.6
    beta2: float = 0.6
    epsilon: float = 1e-4

    def __post_init__(self):
        if self.beta1 < 0 or self.beta2 < 0:
            raise ValueError("beta1 and beta2 must be non-negative")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")


class PriorityTree:
    """Binary sum tree over ``capacity`` leaves, stored heap-style in one array.

    Node 1 is the root, node ``i`` has children ``2i`` and ``2i+1``, and leaf
    ``j`` lives at ``capacity + j``. Leaves hold ``priority ** beta1`` so that
    proportional sampling is a plain prefix-sum descent.

    Parameters
    ----------
    capacity : int
        Minimum number of leaves; rounded up to a power of two.
    beta1 : float
        Priority exponent baked into the stored masses.
    """

    def __init__(self, capacity: int, beta1: float = 0.6):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        if beta1 < 0:
            raise ValueError("beta1 must be non-negative")
        self.n_slots = int(capacity)
        self.capacity = 1 << max(0, (capacity - 1).bit_length())
        self.depth = self.capacity.bit_length() - 1
        self.beta1 = float(beta1)
        self.nodes = np.zeros(2 * self.capacity)
        self.max_priority = 1.0

    @property
    def total(self) -> float:
        return float(self.nodes[1])

    def leaf_masses(self) -> np.ndarray:
        return self.nodes[self.capacity:]

    def mass(self, slots):
        return self.nodes[self.capacity + np.asarray(slots)]

    def set_priority(self, slot: int, p: float) -> None:
        """Set one slot's priority; ancestors are refreshed in ``depth`` steps."""
        self.set_priorities(np.array([slot]), np.array([p], dtype=float))

    def set_priorities(self, slots, priorities) -> None:
        slots = np.asarray(slots, dtype=np.int64).reshape(-1)
        priorities = np.asarray(priorities, dtype=float).reshape(-1)
        if slots.shape != priorities.shape:
            raise ValueError("slots and priorities differ in length")
        if slots.size == 0:
            return
        if slots.min() < 0 or slots.max() >= self.n_slots:
            raise IndexError("slot out of range")
        if not np.all(np.isfinite(priorities)) or priorities.min() < 0:
            raise ValueError("priorities must be finite and non-negative")
        # last write wins for repeated slots
        _, last = np.unique(slots[::-1], return_index=True)
        keep = slots.size - 1 - last
        slots, priorities = slots[keep], priorities[keep]
        self.max_priority = max(self.max_priority, float(priorities.max()))
        idx = slots + self.capacity
        self.nodes[idx] = priorities ** self.beta1
        for _ in range(self.depth):
            idx = np.unique(idx >> 1)
            self.nodes[idx] = self.nodes[2 * idx] + self.nodes[2 * idx + 1]

    def set_mass_for_new(self, slot: int) -> None:
        """Give a freshly written slot the largest priority seen so far."""
        self.set_priority(slot, self.max_priority)

    def prefix_sum(self, end):
        """Sum of leaf masses over slots ``[0, end)``, vectorized over ``end``."""
        end = np.asarray(end, dtype=np.int64)
        if np.any(end < 0) or np.any(end > self.capacity):
            raise IndexError("prefix end out of range")
        node = np.minimum(end, self.capacity - 1) + self.capacity
        acc = np.zeros(end.shape)
        for _ in range(self.depth):
            odd = (node & 1) == 1
            acc += np.where(odd, self.nodes[node - 1], 0.0)
            node = node >> 1
        acc = np.where(end >= self.capacity, self.nodes[1], acc)
        return acc

    def range_sum(self, lo: int, hi: int) -> float:
        return float(self.prefix_sum(hi) - self.prefix_sum(lo))

    def find_prefix(self, values) -> np.ndarray:
        """Leaf index whose cumulative mass interval contains each value."""
        values = np.array(values, dtype=float)
        idx = np.ones(values.shape, dtype=np.int64)
        for _ in range(self.depth):
            left = self.nodes[2 * idx]
            right = values >= left
            values = values - np.where(right, left, 0.0)
            idx = 2 * idx + right
        return idx - self.capacity


def compute_td_priority(r, gamma, v_target_next, q1, q2, done, cfg: PerConfig):
    """Average absolute TD error of the two Q estimates, plus the priority floor."""
    args = [np.asarray(x, dtype=float) for x in (r, v_target_next, q1, q2)]
    if not all(np.all(np.isfinite(a)) for a in args) or not np.isfinite(gamma):
        raise ValueError("non-finite input to TD priority")
    if not 0.0 <= gamma <= 1.0:
        raise ValueError("gamma must lie in [0, 1]")
    r, v_next, q1, q2 = args
    target = r + gamma * v_next * (1.0 - np.asarray(done, dtype=float))
    p = 0.5 * (np.abs(target - q1) + np.abs(target - q2)) + cfg.epsilon
    return float(p) if p.ndim == 0 else p


def sample_intervals(tree: PriorityTree, intervals, batch: int, rng: np.random.Generator):
    """Proportional draws restricted to a union of half-open slot intervals.

    Returns the drawn slots and each one's probability within the union.
    """
    los = np.array([lo for lo, _ in intervals], dtype=np.int64)
    his = np.array([hi for _, hi in intervals], dtype=np.int64)
    starts = tree.prefix_sum(los)
    masses = tree.prefix_sum(his) - starts
    range_mass = float(masses.sum())
    if not range_mass > 0:
        raise ValueError("sampling range has zero priority mass")
    u = rng.random(batch) * range_mass
    bounds = np.cumsum(masses)
    part = np.minimum(np.searchsorted(bounds, u, side="right"), len(intervals) - 1)
    offset = u - (bounds[part] - masses[part])
    slots = tree.find_prefix(starts[part] + offset)
    # rounding at interval edges can step one leaf outside; pull it back in
    slots = np.clip(slots, los[part], his[part] - 1)
    probs = tree.mass(slots) / range_mass
    return slots, probs


def sample_proportional_range(tree: PriorityTree, buffer: ReplayBuffer, c: int, batch: int,
                              rng: np.random.Generator):
    """Proportional sampling among the ``c`` most recent transitions of ``buffer``.

    ``c = len(buffer)`` gives ordinary prioritized replay over the whole buffer.
    """
    if batch < 1:
        raise ValueError("batch must be positive")
    return sample_intervals(tree, buffer.recent_intervals(c), batch, rng)


def is_weight(p_i, n_range: int, beta2: float):
    """Importance-sampling correction ``(1 / (n_range * P(i))) ** beta2`` (unnormalized)."""
    p_i = np.asarray(p_i, dtype=float)
    if np.any(p_i <= 0):
        raise ValueError("sampling probability must be positive")
    w = (1.0 / (n_range * p_i)) ** beta2
    return float(w) if w.ndim == 0 else w


def normalized_is_weights(probs, n_range: int, beta2: float) -> np.ndarray:
    """IS weights divided by their mini-batch maximum."""
    w = is_weight(np.asarray(probs, dtype=float), n_range, beta2)
    return w / w.max()
