import hashlib

import numpy as np
import pytest

from conftest import finite_difference, flatten, max_relative_error
from ere_sac.agent import SacAgent, SacConfig, TrainingDiverged


def small_agent(seed=0, **kw):
    cfg = SacConfig(hidden=(8, 8), **kw)
    return SacAgent(3, 2, 1.5, cfg, np.random.default_rng(seed))


def random_batch(rng, n=2, obs_dim=3, act_dim=2, limit=1.5):
    return {
        "state": rng.normal(size=(n, obs_dim)),
        "action": rng.uniform(-limit, limit, (n, act_dim)),
        "reward": rng.normal(size=n),
        "next_state": rng.normal(size=(n, obs_dim)),
        "done": (rng.random(n) < 0.3).astype(float),
    }


def digest(net):
    return hashlib.sha256(net.flat().tobytes()).hexdigest()


def gradient_errors(agent, batch, weights, noise):
    _, grads, _ = agent.losses_and_grads(batch, weights, noise)
    nets = {"value": (agent.value, "v"), "q1": (agent.q1, "q1"), "q2": (agent.q2, "q2"),
            "policy": (agent.policy.net, "pi")}
    errors = {}
    for name, (net, key) in nets.items():
        numeric = finite_difference(lambda: agent.losses_and_grads(batch, weights, noise)[0][key], net)
        errors[name] = max_relative_error(flatten(grads[name]), numeric)
    return errors


@pytest.mark.parametrize("seed", range(3))
def test_gradients_match_finite_differences(seed):
    rng = np.random.default_rng(100 + seed)
    agent = small_agent(seed)
    batch = random_batch(rng)
    errors = gradient_errors(agent, batch, rng.uniform(0.2, 1.0, 2), rng.normal(size=(2, 2)))
    assert max(errors.values()) < 1e-4, errors


def test_gradients_with_q_only_weighting():
    rng = np.random.default_rng(7)
    agent = small_agent(3, weight_all_losses=False)
    errors = gradient_errors(agent, random_batch(rng), rng.uniform(0.2, 1.0, 2), rng.normal(size=(2, 2)))
    assert max(errors.values()) < 1e-4, errors


def test_act_modes(rng):
    agent = small_agent()
    s = rng.normal(size=3)
    np.testing.assert_array_equal(agent.act(s, deterministic=True), agent.act(s, deterministic=True))
    a1 = agent.act(s, rng=np.random.default_rng(5))
    a2 = agent.act(s, rng=np.random.default_rng(5))
    np.testing.assert_array_equal(a1, a2)
    for _ in range(100):
        assert np.all(np.abs(agent.act(s * 20, rng=rng)) <= 1.5)
    with pytest.raises(ValueError):
        agent.act(s)


def test_alpha_zero_removes_entropy_terms(rng):
    agent = small_agent(alpha=0.0)
    batch = random_batch(rng, n=4)
    noise = rng.normal(size=(4, 2))
    losses, _, _ = agent.losses_and_grads(batch, np.ones(4), noise)
    a, _, _ = agent.policy.sample_action(batch["state"], noise)
    sa = np.concatenate([batch["state"], a], axis=1)
    q_min = np.minimum(agent.q1(sa), agent.q2(sa))[:, 0]
    assert losses["pi"] == pytest.approx(-q_min.mean(), rel=1e-12)
    v = agent.value(batch["state"])[:, 0]
    assert losses["v"] == pytest.approx(np.mean(0.5 * (v - q_min) ** 2), rel=1e-12)


def test_unit_weights_equal_unweighted_update(rng):
    batch = random_batch(rng, n=8)
    a, b = small_agent(4), small_agent(4)
    ra = a.update(batch, None, np.random.default_rng(1))
    rb = b.update(batch, np.ones(8), np.random.default_rng(1))
    assert (ra.v_loss, ra.q1_loss, ra.pi_loss) == (rb.v_loss, rb.q1_loss, rb.pi_loss)
    for na, nb in [(a.q1, b.q1), (a.value, b.value), (a.policy.net, b.policy.net), (a.target_value, b.target_value)]:
        np.testing.assert_array_equal(na.flat(), nb.flat())


def test_q_targets_mask_terminal(rng):
    agent = small_agent()
    batch = random_batch(rng, n=4)
    batch["done"] = np.array([1.0, 0.0, 1.0, 0.0])
    _, _, abs_td = agent.losses_and_grads(batch, np.ones(4), rng.normal(size=(4, 2)))
    sa = np.concatenate([batch["state"], batch["action"]], axis=1)
    y = batch["reward"] + 0.99 * (1 - batch["done"]) * agent.target_value(batch["next_state"])[:, 0]
    expected = 0.5 * (np.abs(y - agent.q1(sa)[:, 0]) + np.abs(y - agent.q2(sa)[:, 0]))
    np.testing.assert_allclose(abs_td, expected, rtol=1e-12)


def test_target_network_only_moves_by_soft_update(rng):
    agent = small_agent(tau=0.005)
    target_before = agent.target_value.flat()
    value_before = agent.value.flat()
    agent.update(random_batch(rng, n=8), None, rng)
    expected = 0.995 * target_before + 0.005 * agent.value.flat()
    np.testing.assert_allclose(agent.target_value.flat(), expected, rtol=1e-12, atol=1e-15)
    assert not np.array_equal(agent.value.flat(), value_before)
    # gradient step alone never touches it
    h = digest(agent.target_value)
    _, grads, _ = agent.losses_and_grads(random_batch(rng, 8), np.ones(8), rng.normal(size=(8, 2)))
    for name, opt in agent.optimizers.items():
        opt.step(grads[name])
    assert digest(agent.target_value) == h


def test_soft_update_extremes(rng):
    agent = small_agent()
    for p in agent.value.params:
        p += 1.0
    before = agent.target_value.flat()
    agent.soft_update_target(tau=0.0)
    np.testing.assert_array_equal(agent.target_value.flat(), before)
    agent.soft_update_target(tau=1.0)
    np.testing.assert_array_equal(agent.target_value.flat(), agent.value.flat())


def test_soft_update_geometric_convergence():
    agent = small_agent()
    tau = 0.1
    for p in agent.value.params:
        p += 2.0
    gap0 = np.linalg.norm(agent.target_value.flat() - agent.value.flat())
    for k in range(1, 30):
        agent.soft_update_target(tau=tau)
        gap = np.linalg.norm(agent.target_value.flat() - agent.value.flat())
        assert gap == pytest.approx((1 - tau) ** k * gap0, rel=1e-9)


def test_q_gradient_linear_in_weights(rng):
    agent = small_agent()
    batch = random_batch(rng, n=6)
    noise = rng.normal(size=(6, 2))
    w = rng.uniform(0.1, 1, 6)
    _, g1, _ = agent.losses_and_grads(batch, w, noise)
    _, g3, _ = agent.losses_and_grads(batch, 3.0 * w, noise)
    for name in ("q1", "q2"):
        np.testing.assert_allclose(flatten(g3[name]), 3.0 * flatten(g1[name]), rtol=1e-12, atol=1e-15)


def test_entropy_term_monotone_in_alpha(rng):
    batch = random_batch(rng, n=16)
    noise = rng.normal(size=(16, 2))
    agent = small_agent()
    alphas = [0.0, 0.05, 0.2, 1.0]
    pi_losses = []
    for alpha in alphas:
        agent.cfg = SacConfig(hidden=(8, 8), alpha=alpha)
        pi_losses.append(agent.losses_and_grads(batch, np.ones(16), noise)[0]["pi"])
    # the entropy part of the policy loss is alpha * mean(log pi): linear in alpha,
    # so its magnitude shrinks whenever alpha does
    entropy_part = np.array(pi_losses) - pi_losses[0]
    _, logp, _ = agent.policy.sample_action(batch["state"], noise)
    np.testing.assert_allclose(entropy_part, np.array(alphas) * logp.mean(), rtol=1e-10, atol=1e-14)
    assert np.all(np.diff(np.abs(entropy_part)) >= 0)


def test_identical_seeds_identical_trajectories():
    def run():
        agent = small_agent(11)
        rng = np.random.default_rng(5)
        for _ in range(5):
            agent.update(random_batch(rng, n=8), rng.uniform(0.5, 1, 8), rng)
        return [net.flat() for net in (agent.q1, agent.q2, agent.value, agent.policy.net, agent.target_value)]

    for a, b in zip(run(), run()):
        np.testing.assert_array_equal(a, b)


def test_diverged_update_raises(rng):
    agent = small_agent()
    batch = random_batch(rng, n=4)
    batch["reward"][0] = np.nan
    with pytest.raises(TrainingDiverged):
        agent.update(batch, None, rng)


def test_update_validation(rng):
    agent = small_agent()
    batch = random_batch(rng, n=4)
    with pytest.raises(ValueError):
        agent.update(batch, np.ones(3), rng)
    with pytest.raises(ValueError):
        agent.update(batch, -np.ones(4), rng)


def test_checkpoint_round_trip(tmp_path, rng):
    agent = small_agent(2)
    agent.update(random_batch(rng, n=8), None, rng)
    path = tmp_path / "ckpt.bin"
    agent.save(path)
    other = small_agent(99)
    other.load(path)
    for a, b in [(agent.q1, other.q1), (agent.q2, other.q2), (agent.value, other.value),
                 (agent.target_value, other.target_value), (agent.policy.net, other.policy.net)]:
        np.testing.assert_array_equal(a.flat(), b.flat())
    for name in agent.optimizers:
        assert agent.optimizers[name].t == other.optimizers[name].t == 1
        for m1, m2 in zip(agent.optimizers[name].m, other.optimizers[name].m):
            np.testing.assert_array_equal(m1, m2)
    # continuing from the checkpoint matches continuing in memory
    batch = random_batch(rng, n=8)
    agent.update(batch, None, np.random.default_rng(3))
    other.update(batch, None, np.random.default_rng(3))
    np.testing.assert_array_equal(agent.policy.net.flat(), other.policy.net.flat())
