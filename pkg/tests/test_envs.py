import numpy as np
import pytest

from ere_sac.envs import EpisodeFinishedError, Pendulum, PointMass, make_env, wrap_angle


def test_reset_reproducible():
    for name in ("pendulum", "point_mass"):
        a, b = make_env(name), make_env(name)
        np.testing.assert_array_equal(a.reset(seed=3), b.reset(seed=3))
        assert not np.array_equal(a.reset(seed=3), a.reset(seed=4))


def test_pendulum_observation_on_unit_circle():
    env = Pendulum()
    for seed in range(20):
        obs = env.reset(seed=seed)
        assert obs[0] ** 2 + obs[1] ** 2 == pytest.approx(1.0, abs=1e-15)
        assert -1.0 <= obs[2] <= 1.0


def test_point_mass_reset_ranges():
    env = PointMass()
    for seed in range(20):
        obs = env.reset(seed=seed)
        assert np.all(np.abs(obs[:2]) <= 1.0) and np.all(obs[2:] == 0.0)


def test_pendulum_upright_equilibrium():
    env = Pendulum()
    env.set_state(0.0, 0.0)
    obs, r, done, truncated = env.step([0.0])
    assert r == 0.0 and env.theta == 0.0 and env.theta_dot == 0.0 and not done
    np.testing.assert_array_equal(obs, [1.0, 0.0, 0.0])


def test_point_mass_rest():
    env = PointMass()
    env.set_state([0.0, 0.0], [0.0, 0.0])
    obs, r, done, _ = env.step([0.0, 0.0])
    assert r == 0.0 and not done
    np.testing.assert_array_equal(obs, np.zeros(4))


def test_pendulum_one_step_from_horizontal():
    env = Pendulum()
    env.set_state(np.pi / 2, 0.0)
    env.step([0.0])
    assert env.theta_dot == pytest.approx(0.75, abs=1e-12)
    assert env.theta == pytest.approx(np.pi / 2 + 0.0375, abs=1e-12)


def test_pendulum_speed_and_action_clamps():
    env = Pendulum()
    env.set_state(np.pi / 2, 7.9)
    env.step([100.0])
    assert env.theta_dot == 8.0
    env.set_state(0.0, 0.0)
    _, r, _, _ = env.step([-5.0])
    assert r == pytest.approx(-0.001 * 4.0)


def test_point_mass_clamps():
    env = PointMass()
    env.set_state([1.99, 0.0], [2.0, 0.0])
    env.step([1.0, 0.0])
    assert env.velocity[0] == 2.0 and env.position[0] == 2.0


def test_truncation_and_finished_episode():
    for name in ("pendulum", "point_mass"):
        env = make_env(name)
        env.reset(seed=0)
        flags = [env.step(np.zeros(env.spec.act_dim))[2:] for _ in range(env.spec.max_episode_steps)]
        assert all(not d for d, _ in flags)
        assert [t for _, t in flags] == [False] * (env.spec.max_episode_steps - 1) + [True]
        with pytest.raises(EpisodeFinishedError):
            env.step(np.zeros(env.spec.act_dim))


def test_rewards_bounded_and_deterministic():
    rng = np.random.default_rng(0)
    actions = rng.uniform(-2, 2, (200, 1))
    lower = -(np.pi**2 + 0.1 * 64 + 0.001 * 4)
    runs = []
    for _ in range(2):
        env = Pendulum()
        env.reset(seed=5)
        runs.append([env.step(a)[:2] for a in actions])
    for (o1, r1), (o2, r2) in zip(*runs):
        np.testing.assert_array_equal(o1, o2)
        assert r1 == r2 and lower <= r1 <= 0.0
    env = PointMass()
    env.reset(seed=1)
    for a in rng.uniform(-1, 1, (200, 2)):
        assert env.step(a)[1] <= 0.0


def test_wrap_angle():
    x = np.array([-np.pi, np.pi, 3 * np.pi, 0.1, -7.0])
    w = wrap_angle(x)
    assert np.all((w > -np.pi) & (w <= np.pi))
    np.testing.assert_allclose(np.cos(w), np.cos(x), atol=1e-12)
    assert w[0] == pytest.approx(np.pi)


def test_unknown_env():
    with pytest.raises(ValueError):
        make_env("humanoid")
