"""Soft Actor-Critic with a separate state-value network and its slow-moving target."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .nn import Adam, DenseNet, PolicyHead


class TrainingDiverged(FloatingPointError):
    pass


@dataclass(frozen=True)
class SacConfig:
    hidden: tuple = (256, 256)
    lr: float = 3e-4
    gamma: float = 0.99
    tau: float = 0.005
    alpha: float = 0.2
    # False restricts importance weights to the Q losses
    weight_all_losses: bool = True

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must lie in [0, 1]")
        if not 0.0 < self.tau <= 1.0:
            raise ValueError("tau must lie in (0, 1]")
        if self.alpha < 0:
            raise ValueError("alpha must be non-negative")
        if self.lr <= 0:
            raise ValueError("lr must be positive")


@dataclass
class UpdateResult:
    v_loss: float
    q1_loss: float
    q2_loss: float
    pi_loss: float
    abs_td: np.ndarray


class SacAgent:
    def __init__(self, obs_dim: int, act_dim: int, action_limit: float, cfg: SacConfig = SacConfig(),
                 rng: np.random.Generator | None = None):
        rng = rng if rng is not None else np.random.default_rng(0)
        self.cfg = cfg
        self.obs_dim, self.act_dim = obs_dim, act_dim
        self.policy = PolicyHead(obs_dim, act_dim, cfg.hidden, action_limit, rng=rng)
        self.q1 = DenseNet((obs_dim + act_dim, *cfg.hidden, 1), rng)
        self.q2 = DenseNet((obs_dim + act_dim, *cfg.hidden, 1), rng)
        self.value = DenseNet((obs_dim, *cfg.hidden, 1), rng)
        self.target_value = self.value.copy()
        self.optimizers = {
            "policy": Adam(self.policy.net, cfg.lr),
            "q1": Adam(self.q1, cfg.lr),
            "q2": Adam(self.q2, cfg.lr),
            "value": Adam(self.value, cfg.lr),
        }

    @property
    def action_limit(self):
        return self.policy.action_limit

    def act(self, state, deterministic: bool = False, rng: np.random.Generator | None = None):
        state = np.asarray(state, dtype=float)
        if deterministic:
            return self.policy.deterministic_action(state)
        if rng is None:
            raise ValueError("stochastic actions need an rng")
        noise = rng.standard_normal(self.act_dim)
        action, _, _ = self.policy.sample_action(state, noise)
        return action

    def losses_and_grads(self, batch, weights, noise):
        """All four losses and their parameter gradients at the current parameters.

        ``noise`` is the standard-normal draw used for the fresh actions in
        the value target and policy loss, one row per transition.
        """
        cfg = self.cfg
        s, a = batch["state"], batch["action"]
        r, s2, d = batch["reward"], batch["next_state"], batch["done"]
        n = len(r)
        w_q = np.asarray(weights, dtype=float)
        w_rest = w_q if cfg.weight_all_losses else np.ones(n)

        y = r + cfg.gamma * (1.0 - d) * self.target_value(s2)[:, 0]
        sa = np.concatenate([s, a], axis=1)
        q1, c1 = self.q1.forward(sa)
        q2, c2 = self.q2.forward(sa)
        q1, q2 = q1[:, 0], q2[:, 0]
        q1_loss = np.sum(w_q * 0.5 * (q1 - y) ** 2) / n
        q2_loss = np.sum(w_q * 0.5 * (q2 - y) ** 2) / n
        g_q1, _ = self.q1.backward(c1, (w_q * (q1 - y) / n)[:, None])
        g_q2, _ = self.q2.backward(c2, (w_q * (q2 - y) / n)[:, None])
        abs_td = 0.5 * (np.abs(y - q1) + np.abs(y - q2))

        new_a, logp, pc = self.policy.sample_action(s, noise)
        sa_new = np.concatenate([s, new_a], axis=1)
        qn1, cn1 = self.q1.forward(sa_new)
        qn2, cn2 = self.q2.forward(sa_new)
        qn1, qn2 = qn1[:, 0], qn2[:, 0]
        use_first = qn1 <= qn2
        q_min = np.where(use_first, qn1, qn2)

        v, cv = self.value.forward(s)
        v = v[:, 0]
        v_target = q_min - cfg.alpha * logp
        v_loss = np.sum(w_rest * 0.5 * (v - v_target) ** 2) / n
        g_v, _ = self.value.backward(cv, (w_rest * (v - v_target) / n)[:, None])

        pi_loss = np.sum(w_rest * (cfg.alpha * logp - q_min)) / n
        g_qmin = -w_rest / n
        _, gin1 = self.q1.backward(cn1, (g_qmin * use_first)[:, None])
        _, gin2 = self.q2.backward(cn2, (g_qmin * ~use_first)[:, None])
        g_action = (gin1 + gin2)[:, self.obs_dim:]
        g_pi = self.policy.backward(pc, g_action, cfg.alpha * w_rest / n)

        losses = {"v": v_loss, "q1": q1_loss, "q2": q2_loss, "pi": pi_loss}
        grads = {"value": g_v, "q1": g_q1, "q2": g_q2, "policy": g_pi}
        return losses, grads, abs_td

    def update(self, batch, weights=None, rng: np.random.Generator | None = None) -> UpdateResult:
        """One gradient step on every trained network, then a soft target update."""
        n = len(batch["reward"])
        if n == 0:
            raise ValueError("empty batch")
        weights = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
        if weights.shape != (n,) or np.any(weights < 0):
            raise ValueError("weights must be non-negative, one per transition")
        if rng is None:
            raise ValueError("update needs an rng for the policy noise")
        noise = rng.standard_normal((n, self.act_dim))
        losses, grads, abs_td = self.losses_and_grads(batch, weights, noise)
        bad = {k: v for k, v in losses.items() if not np.isfinite(v)}
        if bad or not np.all(np.isfinite(abs_td)):
            raise TrainingDiverged(f"non-finite loss: {bad or 'abs_td'}; losses={losses}")
        for name, opt in self.optimizers.items():
            opt.step(grads[name])
        self.soft_update_target()
        return UpdateResult(losses["v"], losses["q1"], losses["q2"], losses["pi"], abs_td)

    def soft_update_target(self, tau: float | None = None) -> None:
        tau = self.cfg.tau if tau is None else tau
        for pt, p in zip(self.target_value.params, self.value.params):
            pt *= 1.0 - tau
            pt += tau * p
        self.target_value.version += 1

    def save(self, path) -> None:
        with open(path, "wb") as fh:
            for net in (self.policy.net, self.q1, self.q2, self.value, self.target_value):
                net.save(fh)
            for opt in self.optimizers.values():
                opt.save(fh)

    def load(self, path) -> None:
        with open(path, "rb") as fh:
            self.policy.net = DenseNet.load(fh)
            self.q1 = DenseNet.load(fh)
            self.q2 = DenseNet.load(fh)
            self.value = DenseNet.load(fh)
            self.target_value = DenseNet.load(fh)
            nets = {"policy": self.policy.net, "q1": self.q1, "q2": self.q2, "value": self.value}
            for name, opt in self.optimizers.items():
                opt.net = nets[name]
                opt.load(fh)
