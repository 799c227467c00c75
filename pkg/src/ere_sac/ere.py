"""Recency-emphasizing sampling ranges and their expected-sample-count analytics.

Within an update phase of ``K`` mini-batches, mini-batch ``k`` draws
uniformly from the ``c_k`` most recent transitions, where

    c_k = clamp(floor(N * eta ** (k * scale / K)), c_min, fill)

so the window shrinks geometrically from (almost) the whole buffer to
``N * eta ** scale`` regardless of how long the phase is.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class EreConfig:
    capacity: int = 1_000_000
    eta0: float = 0.996
    etaT: float = 1.0
    c_min: int = 5000
    exponent_scale: int = 1000
    # widen the first window of a multi-update phase to the whole buffer
    uniform_first_update: bool = False

    def __post_init__(self):
        if self.capacity < 1:
            raise ValueError("capacity must be positive")
        for name in ("eta0", "etaT"):
            v = getattr(self, name)
            if not 0.0 < v <= 1.0:
                raise ValueError(f"{name} must lie in (0, 1], got {v}")
        if not 1 <= self.c_min <= self.capacity:
            raise ValueError(f"c_min must lie in 1..capacity, got {self.c_min}")
        if self.exponent_scale < 1:
            raise ValueError("exponent_scale must be >= 1")


def _check_eta(eta):
    if not 0.0 < eta <= 1.0:
        raise ValueError(f"eta must lie in (0, 1], got {eta}")


def sampling_range(cfg: EreConfig, eta: float, k: int, K: int, current_fill: int) -> int:
    """Number of most-recent transitions eligible for mini-batch ``k`` of ``K``."""
    if K < 1 or not 1 <= k <= K:
        raise ValueError(f"update index k={k} outside 1..{K}")
    if current_fill < 1:
        raise ValueError("current_fill must be >= 1")
    _check_eta(eta)
    if cfg.uniform_first_update and k == 1 and K > 1:
        return current_fill
    # k * scale is an exact integer, so the last update's exponent is exactly `scale`
    c = math.floor(cfg.capacity * eta ** ((k * cfg.exponent_scale) / K))
    return min(max(c, cfg.c_min), current_fill)


def anneal_eta(eta0: float, etaT: float, t: int, T: int) -> float:
    """Linear interpolation from ``eta0`` at t=0 to ``etaT`` at t=T; clamped past T."""
    if T < 1:
        raise ValueError("T must be >= 1")
    if t < 0:
        raise ValueError("t must be >= 0")
    if t >= T:
        return etaT
    return eta0 + (etaT - eta0) * t / T


def range_schedule(cfg: EreConfig, eta: float, K: int, fill: int) -> np.ndarray:
    if K < 1:
        raise ValueError("K must be >= 1")
    return np.array([sampling_range(cfg, eta, k, K, fill) for k in range(1, K + 1)], dtype=np.int64)


def expected_sample_counts(cfg: EreConfig, eta: float, K: int, batch: int, fill: int) -> np.ndarray:
    """Expected number of draws of each transition over one update phase.

    Entry ``r - 1`` belongs to recency rank ``r`` (newest first). Rank ``r``
    receives ``batch / c_k`` from every mini-batch whose window covers it.
    """
    schedule = range_schedule(cfg, eta, K, fill)
    mass_at = np.zeros(fill + 1)
    np.add.at(mass_at, schedule, batch / schedule)
    # suffix sums of positive terms only; no cancellation in the old-data tail
    return np.cumsum(mass_at[::-1])[::-1][1:]
