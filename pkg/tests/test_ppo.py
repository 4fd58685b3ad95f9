import math

import numpy as np
import pytest

from railmimo.config import ScenarioConfig, dbm_to_watts
from railmimo.model import build_channels, build_geometry, sinr_and_se
from railmimo.neural import SgdSchedule, forward, init_mlp
from railmimo.optimizers import SumSeObjective, exhaustive_search
from railmimo.ppo import (ExperiencePool, InsufficientPoolError, MdpState,
                          PlacementEnv, PpoConfig, Transition, advantage,
                          attach_nstep_chains, clipped_objective, policy_heads,
                          sample_action, target_value, train, update)

from conftest import assert_rel_close


def constant_critic(state_dim, value):
    """Zero-weight net whose output is a constant bias."""
    net = init_mlp([state_dim, 4, 1], rng_seed=0)
    for w in net.weights:
        w[:] = 0.0
    net.biases[-1][:] = value
    return net


def synthetic_episode(rewards, state_dim=5, seed=0):
    rng = np.random.default_rng(seed)
    states = [MdpState(action=np.array([1, 2]), reward=float(rng.normal()),
                       ta_se=rng.uniform(0, 3, size=state_dim - 3))
              for _ in range(len(rewards) + 1)]
    return [Transition(state=states[t], action=np.array([1, 2]), reward=float(r),
                       next_state=states[t + 1], joint_log_prob=-1.0,
                       value_estimate=0.0)
            for t, r in enumerate(rewards)]


class TestEnv:
    def test_reset_single_link(self, single_link_config):
        env = PlacementEnv(single_link_config)
        state = env.reset()
        assert_rel_close(state.reward, 10.972321334652388, 1e-10, "reset reward")
        np.testing.assert_array_equal(state.action, [1])
        assert state.ta_se.shape == (1,)
        assert state.ta_se[0] == state.reward  # K=1: u[0] equals r

    def test_reset_deterministic(self, tiny_config):
        env = PlacementEnv(tiny_config)
        s1, s2 = env.reset(), env.reset()
        assert s1.reward == s2.reward
        np.testing.assert_array_equal(s1.ta_se, s2.ta_se)

    def test_step_static_environment(self, tiny_config):
        env = PlacementEnv(tiny_config)
        state = env.reset()
        _, r1 = env.step(state, [2, 1, 2])
        later, r2 = env.step(env.reset(), [2, 1, 2])
        assert r1 == r2
        np.testing.assert_array_equal(later.action, [2, 1, 2])

    def test_step_matches_oracle_optimum(self):
        cfg = ScenarioConfig(num_aps=2, num_tas=2, num_positions=3,
                             railway_length=500.0, train_length=150.0,
                             train_offset=175.0)
        best = exhaustive_search(SumSeObjective(cfg), 2, 3)
        env = PlacementEnv(cfg)
        _, reward = env.step(env.reset(), best.best_placement)
        assert reward == best.best_value

    def test_zero_power_zero_reward(self, tiny_config):
        cfg = tiny_config.with_overrides(uplink_powers=[0.0, 0.0])
        env = PlacementEnv(cfg)
        _, reward = env.step(env.reset(), [2, 2, 1])
        assert reward == 0.0

    def test_out_of_range_action(self, tiny_config):
        env = PlacementEnv(tiny_config)
        with pytest.raises(ValueError):
            env.step(env.reset(), [0, 1, 1])
        with pytest.raises(ValueError):
            env.step(env.reset(), [1, 1, 3])

    def test_state_dimension(self, tiny_config):
        env = PlacementEnv(tiny_config)
        state = env.reset()
        assert state.flatten().shape == (tiny_config.num_aps + 1 + tiny_config.num_tas,)


class TestSampling:
    def test_degenerate_single_position(self):
        heads = policy_heads(np.zeros(3), num_aps=3, num_positions=1)
        rng = np.random.default_rng(0)
        action, logp = sample_action(heads, rng)
        np.testing.assert_array_equal(action, [1, 1, 1])
        assert logp == 0.0

    def test_uniform_logits_log_prob(self):
        heads = policy_heads(np.zeros(8), num_aps=2, num_positions=4)
        rng = np.random.default_rng(1)
        _, logp = sample_action(heads, rng)
        assert logp == pytest.approx(2.0 * math.log(0.25), rel=1e-12)

    def test_simplex_properties(self):
        rng = np.random.default_rng(3)
        heads = policy_heads(rng.normal(size=12) * 5.0, num_aps=3, num_positions=4)
        np.testing.assert_allclose(heads.probs.sum(axis=1), 1.0, atol=1e-9)
        assert np.all(heads.probs > 0)

    def test_empirical_frequencies(self):
        logits = np.array([0.3, -0.2, 1.0, 0.0])
        heads = policy_heads(logits, num_aps=1, num_positions=4)
        rng = np.random.default_rng(7)
        n = 100_000
        counts = np.zeros(4)
        for _ in range(n):
            a, _ = sample_action(heads, rng)
            counts[a[0] - 1] += 1
        p = heads.probs[0]
        sigma = np.sqrt(n * p * (1 - p))
        assert np.all(np.abs(counts - n * p) <= 3.0 * sigma)


class TestReturns:
    def test_gamma_zero_reduction(self):
        episode = synthetic_episode([1.5, -0.3, 2.0, 0.7])
        critic = init_mlp([5, 8, 1], rng_seed=5)
        adv = advantage(episode, critic, gamma=0.0, n_step=1)
        tar = target_value(episode, critic, gamma=0.0, n_step=1)
        states = np.stack([t.state.flatten() for t in episode])
        values, _ = forward(critic, states)
        rewards = np.array([t.reward for t in episode])
        np.testing.assert_array_equal(adv, rewards - values[:, 0])
        np.testing.assert_array_equal(tar, rewards)

    def test_zero_critic(self):
        episode = synthetic_episode([0.5, 1.5])
        critic = constant_critic(5, 0.0)
        adv = advantage(episode, critic, gamma=0.0, n_step=1)
        np.testing.assert_array_equal(adv, [0.5, 1.5])

    def test_three_step_hand_case(self):
        episode = synthetic_episode([1.0, 2.0, 3.0])
        critic = constant_critic(5, 0.5)
        adv = advantage(episode, critic, gamma=0.9, n_step=1)
        tar = target_value(episode, critic, gamma=0.9, n_step=1)
        # A0 = 1 + 0.9*2 + 0.81*0.5 - 0.5; A1 = 2 + 0.9*3 - 0.5; A2 = 3 - 0.5
        np.testing.assert_allclose(adv, [2.705, 4.2, 2.5], rtol=1e-12)
        np.testing.assert_allclose(tar, [3.205, 4.7, 3.0], rtol=1e-12)

    def test_length_one_episode_truncates(self):
        episode = synthetic_episode([4.0])
        critic = constant_critic(5, 1.0)
        tar = target_value(episode, critic, gamma=0.5, n_step=1)
        np.testing.assert_array_equal(tar, [4.0])  # no successor, reward only

    def test_empty_episode_rejected(self):
        critic = constant_critic(5, 0.0)
        with pytest.raises(ValueError):
            advantage([], critic, gamma=0.0, n_step=1)
        with pytest.raises(ValueError):
            target_value([], critic, gamma=0.0, n_step=1)


class TestClippedObjective:
    def test_ratio_one_at_sync(self):
        rng = np.random.default_rng(0)
        logp = rng.normal(size=32)
        adv = rng.normal(size=32)
        j, grad = clipped_objective(logp, logp.copy(), adv, clip_eps=0.2)
        assert j == pytest.approx(adv.mean(), abs=1e-12)
        np.testing.assert_allclose(grad, adv / 32.0, rtol=1e-12)

    def test_clip_arithmetic(self):
        # ratio 1.5, positive advantage: clipped branch binds at 1.2
        j, grad = clipped_objective(np.array([math.log(1.5)]), np.array([0.0]),
                                    np.array([2.0]), clip_eps=0.2)
        assert j == pytest.approx(1.2 * 2.0, rel=1e-12)
        assert grad[0] == 0.0  # gradient of the active clip is zero

    def test_elementwise_oracle(self):
        rng = np.random.default_rng(9)
        new = rng.normal(size=200)
        old = rng.normal(size=200)
        adv = rng.normal(size=200)
        eps = 0.2
        j, grad = clipped_objective(new, old, adv, eps)
        # brute-force per-element re-computation
        terms, grads_ref = [], []
        for n, o, a in zip(new, old, adv):
            rho = math.exp(n - o)
            clipped = min(max(rho, 1 - eps), 1 + eps)
            t_un, t_cl = rho * a, clipped * a
            terms.append(min(t_un, t_cl))
            grads_ref.append(a * rho / 200.0 if t_un <= t_cl else 0.0)
        assert j == pytest.approx(np.mean(terms), rel=1e-12)
        np.testing.assert_allclose(grad, grads_ref, rtol=1e-12)
        assert j <= np.mean([math.exp(n - o) * a for n, o, a in zip(new, old, adv)]) + 1e-12

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            clipped_objective(np.zeros(3), np.zeros(2), np.zeros(3), 0.2)


class TestExperiencePool:
    def test_fifo_eviction(self):
        pool = ExperiencePool(capacity=40960)
        episode = synthetic_episode([0.0])
        first = episode[0]
        pool.add(first)
        filler = synthetic_episode([1.0])[0]
        for _ in range(40960):
            pool.add(filler)
        assert len(pool) == 40960
        assert all(pool[i] is not first for i in (0, 1, len(pool) - 1))
        assert pool[0] is filler

    def test_sample_requires_enough(self):
        pool = ExperiencePool(capacity=8)
        for t in synthetic_episode([1.0, 2.0]):
            pool.add(t)
        with pytest.raises(InsufficientPoolError):
            pool.sample(np.random.default_rng(0), 5)
        batch = pool.sample(np.random.default_rng(0), 2)
        assert len(batch) == 2


def build_pool_from_env(cfg, n_transitions, seed=0, reward_override=None):
    env = PlacementEnv(cfg)
    rng = np.random.default_rng(seed)
    pool = ExperiencePool()
    state = env.reset()
    episode = []
    for _ in range(n_transitions):
        action = rng.integers(1, cfg.num_positions + 1, size=cfg.num_aps)
        next_state, reward = env.step(state, action)
        if reward_override is not None:
            reward = reward_override
            next_state = MdpState(action=next_state.action, reward=reward,
                                  ta_se=next_state.ta_se)
        episode.append(Transition(state=state, action=np.asarray(action),
                                  reward=reward, next_state=next_state,
                                  joint_log_prob=-1.0, value_estimate=0.0))
        state = next_state
    attach_nstep_chains(episode, n_step=1)
    for t in episode:
        pool.add(t)
    return pool


class TestUpdate:
    def setup_method(self):
        self.cfg = ScenarioConfig(num_aps=2, num_tas=2, num_positions=3,
                                  railway_length=500.0, train_length=150.0,
                                  train_offset=175.0)
        self.state_dim = 2 + 1 + 2

    def test_zero_advantage_leaves_actor_unchanged(self):
        pool = build_pool_from_env(self.cfg, 16, reward_override=2.5)
        actor = init_mlp([self.state_dim, 8, 6], rng_seed=0)
        critic = constant_critic(self.state_dim, 2.5)  # V == r -> A == 0
        before = [w.copy() for w in actor.weights]
        ppo = PpoConfig(entropy_coef=0.0, epochs_per_update=3,
                        schedule=SgdSchedule(batch_size=8))
        update(actor, critic, pool, ppo, num_aps=2, num_positions=3,
               lr=0.05, rng=np.random.default_rng(1))
        for b, w in zip(before, actor.weights):
            assert np.max(np.abs(b - w)) <= 1e-15

    def test_exact_critic_stays_fixed(self):
        pool = build_pool_from_env(self.cfg, 16, reward_override=1.25)
        actor = init_mlp([self.state_dim, 8, 6], rng_seed=0)
        critic = constant_critic(self.state_dim, 1.25)
        before = [w.copy() for w in critic.weights] + [b.copy() for b in critic.biases]
        ppo = PpoConfig(entropy_coef=0.01, epochs_per_update=1,
                        schedule=SgdSchedule(batch_size=8))
        diag = update(actor, critic, pool, ppo, num_aps=2, num_positions=3,
                      lr=0.05, rng=np.random.default_rng(1))
        assert diag.critic_loss == 0.0
        after = [w for w in critic.weights] + [b for b in critic.biases]
        for b, a in zip(before, after):
            np.testing.assert_array_equal(b, a)

    def test_insufficient_pool(self):
        pool = build_pool_from_env(self.cfg, 4)
        actor = init_mlp([self.state_dim, 8, 6], rng_seed=0)
        critic = init_mlp([self.state_dim, 8, 1], rng_seed=1)
        ppo = PpoConfig(schedule=SgdSchedule(batch_size=64))
        with pytest.raises(InsufficientPoolError):
            update(actor, critic, pool, ppo, 2, 3, lr=0.01,
                   rng=np.random.default_rng(0))

    def test_single_transition_matches_finite_differences(self):
        """One-epoch update delta equals lr * gradient of the surrogate
        (plus entropy bonus), certified against central differences."""
        pool = build_pool_from_env(self.cfg, 1, seed=3)
        tr = pool[0]
        actor = init_mlp([self.state_dim, 6, 6], rng_seed=2)
        critic = constant_critic(self.state_dim, 0.0)
        entropy_coef = 0.01
        ppo = PpoConfig(entropy_coef=entropy_coef, epochs_per_update=1,
                        schedule=SgdSchedule(batch_size=1))
        lr = 1e-3
        theta_before = [w.copy() for w in actor.weights] + [b.copy() for b in actor.biases]
        frozen = actor.copy()

        # objective at theta, with old log prob fixed at collection snapshot
        feats = tr.state.flatten()
        logits_old, _ = forward(frozen, feats)
        z = logits_old.reshape(2, 3)
        z = z - z.max(axis=1, keepdims=True)
        old_logp = float((z - np.log(np.exp(z).sum(axis=1, keepdims=True)))
                         [np.arange(2), tr.action - 1].sum())
        adv = tr.reward  # critic is 0

        def objective(net):
            logits, _ = forward(net, feats)
            zz = logits.reshape(2, 3)
            zz = zz - zz.max(axis=1, keepdims=True)
            logp_mat = zz - np.log(np.exp(zz).sum(axis=1, keepdims=True))
            logp = float(logp_mat[np.arange(2), tr.action - 1].sum())
            rho = math.exp(logp - old_logp)
            clipped = min(max(rho, 0.8), 1.2)
            probs = np.exp(logp_mat)
            entropy = float(-(probs * logp_mat).sum())
            return min(rho * adv, clipped * adv) + entropy_coef * entropy

        update(actor, critic, pool, ppo, num_aps=2, num_positions=3, lr=lr,
               rng=np.random.default_rng(0))
        theta_after = [w for w in actor.weights] + [b for b in actor.biases]

        # finite differences on a spread of coordinates
        rng = np.random.default_rng(5)
        params = [w for w in frozen.weights] + [b for b in frozen.biases]
        for arr_i in range(len(params)):
            flat_frozen = params[arr_i].ravel()
            delta = (theta_after[arr_i] - theta_before[arr_i]).ravel()
            for idx in rng.choice(flat_frozen.size, size=min(6, flat_frozen.size),
                                  replace=False):
                orig = flat_frozen[idx]
                h = 1e-6
                flat_frozen[idx] = orig + h
                up = objective(frozen)
                flat_frozen[idx] = orig - h
                down = objective(frozen)
                flat_frozen[idx] = orig
                fd = (up - down) / (2 * h)
                implied = delta[idx] / lr
                assert abs(implied - fd) <= 1e-4 * max(abs(fd), 1e-4), \
                    f"param {arr_i} coord {idx}: {implied} vs {fd}"


class TestTrain:
    def make_cfg(self):
        return ScenarioConfig(num_aps=2, num_tas=2, num_positions=3,
                              railway_length=500.0, train_length=150.0,
                              train_offset=175.0)

    def make_ppo(self, **kw):
        defaults = dict(max_episodes=30, steps_per_episode=10,
                        schedule=SgdSchedule(batch_size=32, initial_lr=1e-3),
                        epochs_per_update=2, rng_seed=11)
        defaults.update(kw)
        return PpoConfig(**defaults)

    def test_zero_episodes(self):
        log = train(self.make_cfg(), self.make_ppo(max_episodes=0))
        assert len(log.episodes) == 0
        assert log.best_placement is None or log.best_value > 0

    def test_seed_reproducibility(self):
        cfg, ppo = self.make_cfg(), self.make_ppo()
        log1 = train(cfg, ppo)
        log2 = train(cfg, self.make_ppo())
        np.testing.assert_array_equal(log1.reward_raw, log2.reward_raw)
        np.testing.assert_array_equal(log1.reward_smoothed, log2.reward_smoothed)
        np.testing.assert_array_equal(log1.lr, log2.lr)
        np.testing.assert_array_equal(log1.best_reward, log2.best_reward)
        assert log1.best_value == log2.best_value
        np.testing.assert_array_equal(log1.best_placement, log2.best_placement)

    def test_best_reward_non_decreasing(self):
        log = train(self.make_cfg(), self.make_ppo())
        assert np.all(np.diff(log.best_reward) >= 0)

    def test_logged_rewards_are_fresh(self):
        cfg = self.make_cfg()
        log = train(cfg, self.make_ppo(max_episodes=12))
        geom = build_geometry(cfg)
        ch = build_channels(cfg, geom)
        for action, reward in zip(log.episode_actions, log.reward_raw):
            assert sinr_and_se(cfg, geom, ch, action).sum_se == reward
        assert sinr_and_se(cfg, geom, ch, log.best_placement).sum_se == log.best_value

    def test_lr_follows_schedule(self):
        sched = SgdSchedule(batch_size=32, initial_lr=2e-3, decay_rate=0.5,
                            decay_steps=10)
        log = train(self.make_cfg(), self.make_ppo(schedule=sched, max_episodes=11))
        assert log.lr[0] == 2e-3
        assert log.lr[10] == pytest.approx(1e-3, rel=1e-12)

    def test_reaches_optimum_on_small_fixture(self):
        cfg = self.make_cfg()
        opt = exhaustive_search(SumSeObjective(cfg), 2, 3)
        ppo = self.make_ppo(max_episodes=120, stop_at_reward=0.95 * opt.best_value)
        log = train(cfg, ppo)
        assert log.best_value >= 0.95 * opt.best_value

    def test_smoothing_partial_windows(self):
        log = train(self.make_cfg(), self.make_ppo(max_episodes=5))
        assert log.reward_smoothed[0] == log.reward_raw[0]
        np.testing.assert_allclose(log.reward_smoothed[2], log.reward_raw[:3].mean(),
                                   rtol=1e-12)

    def test_continuous_mode_runs(self):
        ppo = self.make_ppo(max_episodes=8, continuous=True)
        log = train(self.make_cfg(), ppo)
        assert len(log.episodes) == 8
        assert np.all(np.isfinite(log.reward_raw))
        assert log.best_value > 0


def test_heads_stay_simplex_across_updates():
    from railmimo.ppo import policy_heads
    cfg = ScenarioConfig(num_aps=2, num_tas=2, num_positions=3,
                         railway_length=500.0, train_length=150.0,
                         train_offset=175.0)
    pool = build_pool_from_env(cfg, 64, seed=9)
    actor = init_mlp([5, 16, 6], rng_seed=0)
    critic = init_mlp([5, 16, 1], rng_seed=1)
    ppo = PpoConfig(schedule=SgdSchedule(batch_size=32, initial_lr=1e-2),
                    epochs_per_update=2, advantage_norm=True)
    rng = np.random.default_rng(2)
    probe_states = np.stack([pool[i].state.flatten() for i in range(8)])
    for _ in range(6):
        update(actor, critic, pool, ppo, num_aps=2, num_positions=3,
               lr=1e-2, rng=rng)
        logits, _ = forward(actor, probe_states)
        for row in logits:
            heads = policy_heads(row, 2, 3)
            np.testing.assert_allclose(heads.probs.sum(axis=1), 1.0, atol=1e-9)
            assert np.all(heads.probs > 0)
