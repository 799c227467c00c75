"""Fixed-capacity ring buffer of transitions with recency-ordered sampling."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class EmptyBufferError(ValueError):
    pass


@dataclass
class Transition:
    state: np.ndarray
    action: np.ndarray
    reward: float
    next_state: np.ndarray
    done: bool
    insert_seq: int = -1


class ReplayBuffer:
    """Ring buffer holding the most recent ``capacity`` transitions.

    Slots are written through a modular cursor, so the recency rank of a
    slot (1 = newest, ``size`` = oldest) is recovered arithmetically from
    the cursor instead of being stored.

    Parameters
    ----------
    capacity : int
        Maximum number of transitions kept; the oldest is overwritten once full.
    obs_dim, act_dim : int
        Dimensions of the state and action vectors.
    """

    def __init__(self, capacity: int, obs_dim: int, act_dim: int):
        if capacity < 1:
            raise ValueError(f"capacity must be positive, got {capacity}")
        self.capacity = int(capacity)
        self.obs_dim = int(obs_dim)
        self.act_dim = int(act_dim)
        self.states = np.zeros((capacity, obs_dim))
        self.actions = np.zeros((capacity, act_dim))
        self.rewards = np.zeros(capacity)
        self.next_states = np.zeros((capacity, obs_dim))
        self.dones = np.zeros(capacity)
        self.insert_seq = np.full(capacity, -1, dtype=np.int64)
        self.write_cursor = 0
        self.size = 0
        self.pushes = 0

    def __len__(self):
        return self.size

    def push(self, t: Transition) -> int:
        """Store ``t`` and return the slot it was written to."""
        return self.add(t.state, t.action, t.reward, t.next_state, t.done)

    def add(self, state, action, reward, next_state, done) -> int:
        state = np.asarray(state, dtype=float).reshape(-1)
        next_state = np.asarray(next_state, dtype=float).reshape(-1)
        action = np.asarray(action, dtype=float).reshape(-1)
        if state.shape[0] != self.obs_dim or next_state.shape[0] != self.obs_dim:
            raise ValueError("state dimension does not match buffer")
        if action.shape[0] != self.act_dim:
            raise ValueError("action dimension does not match buffer")
        slot = self.write_cursor
        self.states[slot] = state
        self.actions[slot] = action
        self.rewards[slot] = reward
        self.next_states[slot] = next_state
        self.dones[slot] = float(bool(done))
        self.insert_seq[slot] = self.pushes
        self.pushes += 1
        self.write_cursor = (slot + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)
        return slot

    def slot_for_rank(self, rank):
        """Slot index (or array of indices) holding the given recency rank."""
        rank = np.asarray(rank)
        if np.any(rank < 1) or np.any(rank > self.size):
            raise IndexError(f"recency rank outside 1..{self.size}")
        out = (self.write_cursor - rank) % self.capacity
        return int(out) if out.ndim == 0 else out

    def recency_rank(self, slot: int) -> int:
        if not 0 <= slot < self.capacity or self.insert_seq[slot] < 0:
            raise IndexError(f"slot {slot} holds no transition")
        return (self.write_cursor - slot - 1) % self.capacity + 1

    def recent_intervals(self, c: int) -> list[tuple[int, int]]:
        """Half-open slot intervals covering the ``c`` most recent transitions.

        A window that wraps around the end of the ring comes back as two
        intervals, older part first.
        """
        self._check_range(c)
        start = self.write_cursor - c
        if start >= 0:
            return [(start, self.write_cursor)]
        out = [(self.capacity + start, self.capacity)]
        if self.write_cursor > 0:
            out.append((0, self.write_cursor))
        return out

    def _check_range(self, c):
        if self.size == 0:
            raise EmptyBufferError("cannot sample from an empty buffer")
        if not 1 <= c <= self.size:
            raise ValueError(f"sampling range {c} outside 1..{self.size}")

    def sample_recent_range(self, c: int, batch: int, rng: np.random.Generator) -> np.ndarray:
        """Slots drawn uniformly, with replacement, from the ``c`` newest transitions."""
        self._check_range(c)
        if batch < 1:
            raise ValueError("batch must be positive")
        ranks = rng.integers(1, c + 1, size=batch)
        return (self.write_cursor - ranks) % self.capacity

    def sample_uniform(self, batch: int, rng: np.random.Generator) -> np.ndarray:
        if self.size == 0:
            raise EmptyBufferError("cannot sample from an empty buffer")
        return self.sample_recent_range(self.size, batch, rng)

    def get(self, slots) -> dict[str, np.ndarray]:
        slots = np.asarray(slots)
        return {
            "state": self.states[slots],
            "action": self.actions[slots],
            "reward": self.rewards[slots],
            "next_state": self.next_states[slots],
            "done": self.dones[slots],
        }

    def transition(self, slot: int) -> Transition:
        self.recency_rank(slot)
        return Transition(
            self.states[slot].copy(),
            self.actions[slot].copy(),
            float(self.rewards[slot]),
            self.next_states[slot].copy(),
            bool(self.dones[slot]),
            int(self.insert_seq[slot]),
        )
