"""Placement selection as an MDP plus a clipped-surrogate policy-gradient
trainer built on the hand-rolled MLP.

The environment is static: the reward of an action (a placement vector) is
its sum SE and never depends on the state, making the process a contextual
bandit once the discount is 0.  The state still carries the previous
action, its reward, and the per-TA SE vector, so the networks see a
(L + 1 + K)-dimensional input.

The actor outputs L independent categorical heads of N logits (a joint
softmax over N^L placements is intractable at L=30); the joint log
probability is the sum of head log probabilities.  Updates ascend the
clipped surrogate

    ratio_t = pi(a_t|s_t; theta) / pi(a_t|s_t; theta_old)
    J_clip  = mean_t min(ratio_t A_t, clip(ratio_t, 1-eps, 1+eps) A_t)

with theta_old snapshotted before the first epoch of each update, and the
critic descends the mean squared error against n-step targets.
"""

import math
from collections import deque
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .config import ScenarioConfig
from .model import build_channels, build_geometry, report_for_offsets, sinr_and_se
from .neural import Mlp, SgdSchedule, backward, forward, init_mlp, sgd_step

DEFAULT_POOL_CAPACITY = 40960


class InsufficientPoolError(RuntimeError):
    """Experience pool smaller than the requested mini-batch."""


@dataclass
class MdpState:
    """Previous action, its reward, and the per-TA SE vector (length L+1+K)."""

    action: np.ndarray   # (L,) positions in {1..N}
    reward: float        # bit/s/Hz
    ta_se: np.ndarray    # (K,) bit/s/Hz

    def flatten(self) -> np.ndarray:
        return np.concatenate([self.action.astype(float), [self.reward], self.ta_se])


@dataclass
class Transition:
    state: MdpState
    action: np.ndarray
    reward: float
    next_state: MdpState
    joint_log_prob: float     # behavior-policy log prob at collection time
    value_estimate: float     # critic value at collection time
    # Environment facts attached at episode end so n-step quantities can be
    # re-evaluated under the critic snapshot current at update time.
    future_rewards: Tuple[float, ...] = ()      # r_t .. r_{t+m}, m <= n_step
    bootstrap_state: Optional[MdpState] = None  # s_{t+n+1} when inside the episode


class ExperiencePool:
    """FIFO ring of transitions; oldest entries are evicted first."""

    def __init__(self, capacity: int = DEFAULT_POOL_CAPACITY):
        self.capacity = capacity
        self._items = deque(maxlen=capacity)

    def add(self, transition: Transition) -> None:
        self._items.append(transition)

    def __len__(self) -> int:
        return len(self._items)

    def __getitem__(self, i: int) -> Transition:
        return self._items[i]

    def sample(self, rng: np.random.Generator, batch_size: int) -> List[Transition]:
        if len(self._items) < batch_size:
            raise InsufficientPoolError(
                f"pool holds {len(self._items)} transitions, need {batch_size}")
        idx = rng.choice(len(self._items), size=batch_size, replace=False)
        return [self._items[i] for i in idx]


@dataclass
class PpoConfig:
    discount: float = 0.0
    clip_eps: float = 0.2
    n_step: int = 1
    steps_per_episode: int = 10
    max_episodes: int = 5000
    epochs_per_update: int = 4
    entropy_coef: float = 0.01
    schedule: SgdSchedule = field(default_factory=SgdSchedule)
    rng_seed: int = 0
    hidden_sizes: Tuple[int, ...] = (256, 256)
    pool_capacity: int = DEFAULT_POOL_CAPACITY
    advantage_norm: bool = False
    smoothing_window: int = 100
    stop_at_reward: Optional[float] = None  # early exit once best reward reaches this
    continuous: bool = False                # Gaussian policy over rail offsets

    def validate(self) -> None:
        if not 0.0 <= self.discount < 1.0:
            raise ValueError("discount must lie in [0, 1)")
        if self.clip_eps <= 0:
            raise ValueError("clip_eps must be > 0")
        if self.steps_per_episode < 1:
            raise ValueError("steps_per_episode must be >= 1")
        if self.n_step < 0:
            raise ValueError("n_step must be >= 0")


@dataclass
class PolicyHeads:
    """Per-AP categorical distributions over the N rail positions."""

    probs: np.ndarray      # (L, N), rows on the simplex
    log_probs: np.ndarray  # (L, N)


def policy_heads(logits: np.ndarray, num_aps: int, num_positions: int) -> PolicyHeads:
    z = np.asarray(logits, dtype=float).reshape(num_aps, num_positions)
    z = z - z.max(axis=1, keepdims=True)  # stable softmax
    expz = np.exp(z)
    denom = expz.sum(axis=1, keepdims=True)
    return PolicyHeads(probs=expz / denom, log_probs=z - np.log(denom))


def sample_action(heads: PolicyHeads, rng: np.random.Generator):
    """Sample each head independently; returns (positions, joint log prob)."""
    num_aps, num_positions = heads.probs.shape
    u = rng.random(num_aps)
    cdf = np.cumsum(heads.probs, axis=1)
    idx = (u[:, None] > cdf).sum(axis=1)
    idx = np.minimum(idx, num_positions - 1)
    logp = float(heads.log_probs[np.arange(num_aps), idx].sum())
    return idx + 1, logp


def action_log_probs(heads_batch: np.ndarray, actions: np.ndarray,
                     num_aps: int, num_positions: int) -> np.ndarray:
    """Joint log prob of each row's action under batched head logits."""
    batch = heads_batch.shape[0]
    z = heads_batch.reshape(batch, num_aps, num_positions)
    z = z - z.max(axis=2, keepdims=True)
    log_probs = z - np.log(np.exp(z).sum(axis=2, keepdims=True))
    cols = actions - 1
    rows = np.arange(batch)[:, None]
    heads_idx = np.arange(num_aps)[None, :]
    return log_probs[rows, heads_idx, cols].sum(axis=1)


class PlacementEnv:
    """Static environment: reward = sum SE of the chosen placement."""

    def __init__(self, config: ScenarioConfig):
        config.validate()
        self.config = config
        self.geom = build_geometry(config)
        self.channels = build_channels(config, self.geom)
        self.evaluations = 0

    def _evaluate(self, placement):
        self.evaluations += 1
        rep = sinr_and_se(self.config, self.geom, self.channels, placement)
        return rep.sum_se, rep.se

    def reset(self) -> MdpState:
        ones = np.ones(self.config.num_aps, dtype=np.int64)
        sum_se, se = self._evaluate(ones)
        return MdpState(action=ones, reward=sum_se, ta_se=se)

    def step(self, state: MdpState, action) -> Tuple[MdpState, float]:
        act = np.asarray(action, dtype=np.int64)
        sum_se, se = self._evaluate(act)
        return MdpState(action=act, reward=sum_se, ta_se=se), sum_se


class ContinuousPlacementEnv(PlacementEnv):
    """Variant taking raw rail offsets in metres instead of slot indices."""

    def _evaluate(self, offsets):
        self.evaluations += 1
        rep = report_for_offsets(self.config, self.geom, self.channels,
                                 np.asarray(offsets, dtype=float))
        return rep.sum_se, rep.se

    def reset(self) -> MdpState:
        start = np.full(self.config.num_aps, self.config.position_step)
        sum_se, se = self._evaluate(start)
        return MdpState(action=start, reward=sum_se, ta_se=se)

    def step(self, state: MdpState, offsets) -> Tuple[MdpState, float]:
        off = np.asarray(offsets, dtype=float)
        sum_se, se = self._evaluate(off)
        return MdpState(action=off, reward=sum_se, ta_se=se), sum_se


def _nstep_terms(rewards: Sequence[float], gamma: float):
    """sum_i gamma^i r_i for the available reward window (gamma^0 = 1)."""
    return sum(gamma ** i * r for i, r in enumerate(rewards))


def advantage(transitions: Sequence[Transition], critic: Mlp, gamma: float,
              n_step: int) -> np.ndarray:
    """n-step advantages for one ordered episode.

    A_t = r_t + ... + gamma^n r_{t+n} + gamma^(n+1) V(s_{t+n+1}) - V(s_t),
    with reward terms and the bootstrap dropped where the episode ends.
    With gamma = 0 this is exactly r_t - V(s_t).
    """
    if not transitions:
        raise ValueError("advantage of an empty episode")
    targets = target_value(transitions, critic, gamma, n_step)
    states = np.stack([t.state.flatten() for t in transitions])
    values, _ = forward(critic, states)
    return targets - values[:, 0]


def target_value(transitions: Sequence[Transition], critic: Mlp, gamma: float,
                 n_step: int) -> np.ndarray:
    """n-step value targets: V_tar(s_t) = r_t + ... + gamma^(n+1) V(s_{t+n+1}).

    The bootstrap uses s_{t+n+1} only when transition t+n+1 exists inside the
    episode; with gamma = 0, V_tar = r_t exactly.
    """
    if not transitions:
        raise ValueError("target_value of an empty episode")
    horizon = len(transitions)
    out = np.empty(horizon)
    for t in range(horizon):
        rewards = [transitions[i].reward for i in range(t, min(t + n_step + 1, horizon))]
        out[t] = _nstep_terms(rewards, gamma)
        if t + n_step + 1 < horizon:
            v, _ = forward(critic, transitions[t + n_step + 1].state.flatten())
            out[t] += gamma ** (n_step + 1) * float(v[0])
    return out


def attach_nstep_chains(episode: List[Transition], n_step: int) -> None:
    """Record each transition's reward window and bootstrap state in place."""
    horizon = len(episode)
    for t, tr in enumerate(episode):
        tr.future_rewards = tuple(episode[i].reward
                                  for i in range(t, min(t + n_step + 1, horizon)))
        tr.bootstrap_state = (episode[t + n_step + 1].state
                              if t + n_step + 1 < horizon else None)


def clipped_objective(new_log_probs: np.ndarray, old_log_probs: np.ndarray,
                      advantages: np.ndarray, clip_eps: float):
    """Clipped surrogate value and its gradient wrt the new log probs.

    Returns (J, dJ/d new_log_probs).  The gradient of the clipped branch is
    zero wherever the clip is active; ties prefer the unclipped branch.
    """
    new_lp = np.asarray(new_log_probs, dtype=float)
    old_lp = np.asarray(old_log_probs, dtype=float)
    adv = np.asarray(advantages, dtype=float)
    if not (new_lp.shape == old_lp.shape == adv.shape):
        raise ValueError("log-prob and advantage batches must share a shape")
    ratio = np.exp(new_lp - old_lp)
    clipped = np.clip(ratio, 1.0 - clip_eps, 1.0 + clip_eps)
    unclipped_term = ratio * adv
    clipped_term = clipped * adv
    objective = float(np.minimum(unclipped_term, clipped_term).mean())
    use_unclipped = unclipped_term <= clipped_term
    grad = np.where(use_unclipped, adv * ratio, 0.0) / new_lp.size
    return objective, grad


def _entropy_and_grad(probs: np.ndarray, log_probs: np.ndarray):
    """Mean summed-head entropy of a batch and its gradient wrt logits."""
    batch = probs.shape[0]
    ent_per_head = -(probs * log_probs).sum(axis=2)            # (B, L)
    mean_entropy = float(ent_per_head.sum(axis=1).mean())
    grad = -probs * (log_probs + ent_per_head[:, :, None]) / batch
    return mean_entropy, grad


@dataclass
class UpdateDiagnostics:
    surrogate: float
    critic_loss: float
    entropy: float
    mean_ratio: float


def update(actor: Mlp, critic: Mlp, pool: ExperiencePool, config: PpoConfig,
           num_aps: int, num_positions: int, lr: float,
           rng: np.random.Generator,
           feature_fn=None) -> UpdateDiagnostics:
    """One PPO update: snapshot old nets, then epochs of actor ascent on the
    clipped surrogate (plus entropy bonus) and critic descent on MSE.

    Advantages and value targets are evaluated under the pre-update critic;
    old log probs are evaluated under the pre-update actor, so the first
    epoch starts at ratio 1 for every sampled transition.
    """
    batch = pool.sample(rng, config.schedule.batch_size)
    actor_old = actor.copy()
    critic_old = critic.copy()

    if feature_fn is None:
        feature_fn = lambda s: s.flatten()
    states = np.stack([feature_fn(t.state) for t in batch])
    actions = np.stack([t.action for t in batch]).astype(np.int64)

    logits_old, _ = forward(actor_old, states)
    old_log_probs = action_log_probs(logits_old, actions, num_aps, num_positions)

    values_old, _ = forward(critic_old, states)
    values_old = values_old[:, 0]
    returns = np.empty(len(batch))
    for i, tr in enumerate(batch):
        rewards = tr.future_rewards if tr.future_rewards else (tr.reward,)
        ret = _nstep_terms(rewards, config.discount)
        if tr.bootstrap_state is not None:
            v, _ = forward(critic_old, feature_fn(tr.bootstrap_state))
            ret += config.discount ** (config.n_step + 1) * float(v[0])
        returns[i] = ret
    advantages = returns - values_old
    if config.advantage_norm:
        advantages = (advantages - advantages.mean()) / (advantages.std() + 1e-8)
    v_target = returns

    diag = UpdateDiagnostics(0.0, 0.0, 0.0, 1.0)
    batch_size = len(batch)
    for _ in range(config.epochs_per_update):
        # actor epoch
        logits, cache = forward(actor, states)
        z = logits.reshape(batch_size, num_aps, num_positions)
        z = z - z.max(axis=2, keepdims=True)
        log_probs = z - np.log(np.exp(z).sum(axis=2, keepdims=True))
        probs = np.exp(log_probs)
        cols = actions - 1
        rows = np.arange(batch_size)[:, None]
        heads_idx = np.arange(num_aps)[None, :]
        new_log_probs = log_probs[rows, heads_idx, cols].sum(axis=1)

        j_clip, d_logp = clipped_objective(new_log_probs, old_log_probs,
                                           advantages, config.clip_eps)
        onehot = np.zeros_like(probs)
        onehot[rows, heads_idx, cols] = 1.0
        grad_logits = d_logp[:, None, None] * (onehot - probs)
        entropy = 0.0
        if config.entropy_coef != 0.0:
            entropy, d_entropy = _entropy_and_grad(probs, log_probs)
            grad_logits = grad_logits + config.entropy_coef * d_entropy
        grads = backward(actor, cache, grad_logits.reshape(batch_size, -1))
        sgd_step(actor, grads, lr, direction="ascend")

        # critic epoch
        values, v_cache = forward(critic, states)
        err = values[:, 0] - v_target
        critic_loss = float((err ** 2).mean())
        grads_c = backward(critic, v_cache, (2.0 * err / batch_size)[:, None])
        sgd_step(critic, grads_c, lr, direction="descend")

        diag = UpdateDiagnostics(surrogate=j_clip, critic_loss=critic_loss,
                                 entropy=entropy,
                                 mean_ratio=float(np.exp(new_log_probs - old_log_probs).mean()))
    return diag


@dataclass
class TrainingLog:
    episodes: np.ndarray          # episode index
    reward_raw: np.ndarray        # final-step reward per episode
    reward_smoothed: np.ndarray   # trailing-window mean of reward_raw
    lr: np.ndarray                # learning rate in force per episode
    best_reward: np.ndarray       # best reward over all evaluations so far
    episode_actions: List[np.ndarray]  # final-step action per episode
    best_placement: Optional[np.ndarray]
    best_value: float
    evaluations: int


def _smooth(values: List[float], window: int) -> np.ndarray:
    out = np.empty(len(values))
    for i in range(len(values)):
        lo = max(0, i - window + 1)
        out[i] = float(np.mean(values[lo:i + 1]))
    return out


class _StateScaler:
    """Maps raw states onto O(1) features so tanh layers do not saturate.

    Positions are divided by N; reward and per-TA SE are divided by the
    deterministic all-ones baseline reward of the scenario (or 1 if that
    baseline is 0).
    """

    def __init__(self, num_positions: int, baseline_reward: float, rail_span: float,
                 continuous: bool):
        self.num_positions = num_positions
        self.reward_scale = baseline_reward if baseline_reward > 0 else 1.0
        self.rail_span = rail_span
        self.continuous = continuous

    def __call__(self, state: MdpState) -> np.ndarray:
        if self.continuous:
            act = state.action / self.rail_span
        else:
            act = state.action / self.num_positions
        return np.concatenate([act, [state.reward / self.reward_scale],
                               state.ta_se * (len(state.ta_se) / self.reward_scale)])


def train(scenario: ScenarioConfig, config: PpoConfig) -> TrainingLog:
    """Run episodic training and return the full log; reproducible from seed."""
    scenario.validate()
    config.validate()
    if config.continuous:
        return _train_continuous(scenario, config)

    seeds = np.random.SeedSequence(config.rng_seed).spawn(3)
    actor_seed, critic_seed = seeds[0].generate_state(1)[0], seeds[1].generate_state(1)[0]
    rng = np.random.default_rng(seeds[2])

    L, K, N = scenario.num_aps, scenario.num_tas, scenario.num_positions
    state_dim = L + 1 + K
    actor = init_mlp([state_dim, *config.hidden_sizes, L * N], actor_seed)
    critic = init_mlp([state_dim, *config.hidden_sizes, 1], critic_seed)
    env = PlacementEnv(scenario)
    pool = ExperiencePool(config.pool_capacity)

    probe = env.reset()
    scaler = _StateScaler(N, probe.reward, scenario.rail_span, continuous=False)

    best_value = -math.inf
    best_placement = None
    raw, lrs, bests, actions_log = [], [], [], []

    for episode in range(config.max_episodes):
        lr = config.schedule.lr(episode)
        state = env.reset()
        if state.reward > best_value:
            best_value, best_placement = state.reward, state.action.copy()
        episode_transitions: List[Transition] = []
        for _ in range(config.steps_per_episode):
            logits, _ = forward(actor, scaler(state))
            heads = policy_heads(logits, L, N)
            action, logp = sample_action(heads, rng)
            value, _ = forward(critic, scaler(state))
            next_state, reward = env.step(state, action)
            episode_transitions.append(Transition(
                state=state, action=np.asarray(action, dtype=np.int64),
                reward=reward, next_state=next_state,
                joint_log_prob=logp, value_estimate=float(value[0])))
            if reward > best_value:
                best_value, best_placement = reward, np.asarray(action, dtype=np.int64)
            state = next_state
        attach_nstep_chains(episode_transitions, config.n_step)
        for tr in episode_transitions:
            pool.add(tr)

        if len(pool) >= config.schedule.batch_size:
            update(actor, critic, pool, config, L, N, lr, rng, feature_fn=scaler)

        raw.append(episode_transitions[-1].reward)
        actions_log.append(episode_transitions[-1].action.copy())
        lrs.append(lr)
        bests.append(best_value)
        if config.stop_at_reward is not None and best_value >= config.stop_at_reward:
            break

    n = len(raw)
    return TrainingLog(
        episodes=np.arange(n), reward_raw=np.asarray(raw),
        reward_smoothed=_smooth(raw, config.smoothing_window),
        lr=np.asarray(lrs), best_reward=np.asarray(bests),
        episode_actions=actions_log,
        best_placement=best_placement, best_value=best_value,
        evaluations=env.evaluations)


def _train_continuous(scenario: ScenarioConfig, config: PpoConfig) -> TrainingLog:
    """Gaussian-policy variant over continuous rail offsets in (0, d_ap].

    The actor outputs a mean per AP (squashed to the rail span by a sigmoid)
    and learns a global log-std; sampled offsets are clipped to the rail.
    Informational mode: convergence curves only, no per-TA SE in the state.
    """
    seeds = np.random.SeedSequence(config.rng_seed).spawn(3)
    actor_seed, critic_seed = seeds[0].generate_state(1)[0], seeds[1].generate_state(1)[0]
    rng = np.random.default_rng(seeds[2])

    L, K = scenario.num_aps, scenario.num_tas
    span = scenario.rail_span
    state_dim = L + 1 + K
    actor = init_mlp([state_dim, *config.hidden_sizes, L], actor_seed)
    critic = init_mlp([state_dim, *config.hidden_sizes, 1], critic_seed)
    log_std = math.log(0.25)  # exploration scale on the squashed mean, in spans
    env = ContinuousPlacementEnv(scenario)

    probe = env.reset()
    scaler = _StateScaler(scenario.num_positions, probe.reward, span, continuous=True)

    best_value = -math.inf
    best_placement = None
    raw, lrs, bests, actions_log = [], [], [], []

    for episode in range(config.max_episodes):
        lr = config.schedule.lr(episode)
        state = env.reset()
        if state.reward > best_value:
            best_value, best_placement = state.reward, state.action.copy()
        ep_states, ep_actions_u, ep_rewards = [], [], []
        for _ in range(config.steps_per_episode):
            feats = scaler(state)
            mean_raw, _ = forward(actor, feats)
            mean = 1.0 / (1.0 + np.exp(-mean_raw))  # in (0,1) spans
            u = mean + math.exp(log_std) * rng.standard_normal(L)
            offsets = np.clip(u, 1e-9, 1.0) * span
            next_state, reward = env.step(state, offsets)
            ep_states.append(feats)
            ep_actions_u.append(u)
            ep_rewards.append(reward)
            if reward > best_value:
                best_value, best_placement = reward, offsets.copy()
            state = next_state

        # REINFORCE-style ascent with critic baseline (discount 0 semantics)
        states_arr = np.stack(ep_states)
        values, v_cache = forward(critic, states_arr)
        rewards_arr = np.asarray(ep_rewards)
        adv = rewards_arr - values[:, 0]
        mean_raw, cache = forward(actor, states_arr)
        mean = 1.0 / (1.0 + np.exp(-mean_raw))
        u_arr = np.stack(ep_actions_u)
        sigma = math.exp(log_std)
        # d logN(u; mean, sigma)/d mean, chained through the sigmoid
        d_mean = (u_arr - mean) / sigma ** 2
        grad_out = adv[:, None] * d_mean * mean * (1.0 - mean) / len(ep_rewards)
        grads = backward(actor, cache, grad_out)
        sgd_step(actor, grads, lr, direction="ascend")
        err = values[:, 0] - rewards_arr
        grads_c = backward(critic, v_cache, (2.0 * err / len(ep_rewards))[:, None])
        sgd_step(critic, grads_c, lr, direction="descend")

        raw.append(ep_rewards[-1])
        actions_log.append(np.asarray(ep_actions_u[-1]))
        lrs.append(lr)
        bests.append(best_value)
        if config.stop_at_reward is not None and best_value >= config.stop_at_reward:
            break

    n = len(raw)
    return TrainingLog(
        episodes=np.arange(n), reward_raw=np.asarray(raw),
        reward_smoothed=_smooth(raw, config.smoothing_window),
        lr=np.asarray(lrs), best_reward=np.asarray(bests),
        episode_actions=actions_log,
        best_placement=best_placement, best_value=best_value,
        evaluations=env.evaluations)
