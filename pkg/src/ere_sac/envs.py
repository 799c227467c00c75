"""Small deterministic continuous-control tasks with a reset/step interface."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class EpisodeFinishedError(RuntimeError):
    pass


@dataclass(frozen=True)
class EnvSpec:
    obs_dim: int
    act_dim: int
    action_limit: float
    max_episode_steps: int


def wrap_angle(theta):
    """Map an angle to (-pi, pi]."""
    out = np.pi - np.mod(np.pi - theta, 2.0 * np.pi)
    return out


class _Env:
    spec: EnvSpec

    def __init__(self):
        self.steps = 0
        self._live = False

    def _begin_step(self, action):
        if not self._live:
            raise EpisodeFinishedError("call reset() before stepping")
        a = np.asarray(action, dtype=float).reshape(self.spec.act_dim)
        return np.clip(a, -self.spec.action_limit, self.spec.action_limit)

    def _end_step(self):
        self.steps += 1
        truncated = self.steps >= self.spec.max_episode_steps
        if truncated:
            self._live = False
        return truncated


class Pendulum(_Env):
    """Torque-limited pendulum swing-up; ``theta = 0`` is upright.

    Observation is ``(cos theta, sin theta, theta_dot)``. The reward charges
    angle, speed and torque at the state the action was applied in.
    """

    spec = EnvSpec(obs_dim=3, act_dim=1, action_limit=2.0, max_episode_steps=200)
    max_speed = 8.0
    dt = 0.05
    g = 10.0
    m = 1.0
    length = 1.0

    def __init__(self):
        super().__init__()
        self.theta = 0.0
        self.theta_dot = 0.0

    def reset(self, seed=None):
        rng = np.random.default_rng(seed)
        self.theta = rng.uniform(-np.pi, np.pi)
        self.theta_dot = rng.uniform(-1.0, 1.0)
        self.steps = 0
        self._live = True
        return self.observation()

    def set_state(self, theta, theta_dot):
        self.theta, self.theta_dot = float(theta), float(theta_dot)
        self.steps = 0
        self._live = True
        return self.observation()

    def observation(self):
        return np.array([np.cos(self.theta), np.sin(self.theta), self.theta_dot])

    def step(self, action):
        u = float(self._begin_step(action)[0])
        th, thdot = self.theta, self.theta_dot
        reward = -(wrap_angle(th) ** 2 + 0.1 * thdot ** 2 + 0.001 * u ** 2)
        accel = 3.0 * self.g / (2.0 * self.length) * np.sin(th) + 3.0 / (self.m * self.length ** 2) * u
        thdot = float(np.clip(thdot + accel * self.dt, -self.max_speed, self.max_speed))
        self.theta = th + thdot * self.dt
        self.theta_dot = thdot
        return self.observation(), float(reward), False, self._end_step()


class PointMass(_Env):
    """Planar point mass pushed toward the origin; observation is ``(x, y, vx, vy)``."""

    spec = EnvSpec(obs_dim=4, act_dim=2, action_limit=1.0, max_episode_steps=200)
    dt = 0.05
    max_speed = 2.0
    bound = 2.0

    def __init__(self):
        super().__init__()
        self.position = np.zeros(2)
        self.velocity = np.zeros(2)

    def reset(self, seed=None):
        rng = np.random.default_rng(seed)
        self.position = rng.uniform(-1.0, 1.0, 2)
        self.velocity = np.zeros(2)
        self.steps = 0
        self._live = True
        return self.observation()

    def set_state(self, position, velocity):
        self.position = np.array(position, dtype=float)
        self.velocity = np.array(velocity, dtype=float)
        self.steps = 0
        self._live = True
        return self.observation()

    def observation(self):
        return np.concatenate([self.position, self.velocity])

    def step(self, action):
        a = self._begin_step(action)
        self.velocity = np.clip(self.velocity + a * self.dt, -self.max_speed, self.max_speed)
        self.position = np.clip(self.position + self.velocity * self.dt, -self.bound, self.bound)
        reward = -float(self.position @ self.position) - 0.01 * float(a @ a)
        return self.observation(), reward, False, self._end_step()


ENVS = {"pendulum": Pendulum, "point_mass": PointMass}


def make_env(name: str):
    try:
        return ENVS[name]()
    except KeyError:
        raise ValueError(f"unknown environment {name!r}; choose from {sorted(ENVS)}") from None
