"""Double-DQN training of the fused decision network against the simulator.

The online network picks the bootstrap action, the target network evaluates
it, and both read the fused action distribution (policy blended with the
frozen expert). Exploration is linear-decay epsilon-greedy on top of a pure
random warmup phase; optimizer steps start only once the warmup has filled
the replay buffer, so the first minibatches already mix random and greedy
transitions instead of regressing the fused head toward the uniform play
of the warmup alone. Updates are plain gradient steps: the fused Q values
live on the probability simplex and cannot reach bootstrap targets for
every action at once, so the residual regression pressure never vanishes;
residual-scaled steps keep the blend near its fixed point where
sign-normalized ones would saturate the fusion weight.
"""

from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import dataclass, field

import numpy as np

from .expert import episode_seed
from .graph import GraphScales, HeteroGraphState, build_graph, to_batch
from .nn import ACTION_COUNT, NetConfig, ParamStore, Sgd, fused_forward
from .nn.checkpoint import atomic_write_text, load_checkpoint, save_checkpoint
from .nn.tensor import Tensor, no_grad
from .nn import tensor as T
from .vehicle import EgoAction
from .world import ScenarioConfig, spawn_scenario


@dataclass(frozen=True)
class DrlConfig:
    episodes: int = 150  # M
    test_episodes: int = 50  # N_test
    max_steps: int = 300  # T_M
    warmup_steps: int = 9000  # T_r, pure random phase
    explore_steps: int = 10000  # T_e, epsilon reaches its floor here
    epsilon_initial: float = 0.5
    epsilon_final: float = 0.01
    buffer_capacity: int = 1_000_000  # N_D
    batch_size: int = 64  # B
    learning_rate: float = 5e-4  # alpha
    update_interval: int = 50  # T_c, env steps between optimizer steps
    target_sync_interval: int = 5000  # T_t
    gamma: float = 0.99
    seed: int = 0
    checkpoint_every: int = 25  # episodes
    beta_override: float | None = None  # 1.0 disables the expert branch


@dataclass
class Transition:
    s: HeteroGraphState
    a: int
    r: float
    s_next: HeteroGraphState
    done: bool


class ReplayBuffer:
    """Fixed-capacity ring; uniform sampling with replacement."""

    def __init__(self, capacity: int):
        self.capacity = int(capacity)
        self._items: list = []
        self._next = 0

    def __len__(self) -> int:
        return len(self._items)

    def push(self, item: Transition) -> None:
        if len(self._items) < self.capacity:
            self._items.append(item)
        else:
            self._items[self._next] = item
        self._next = (self._next + 1) % self.capacity

    def sample(self, rng: np.random.Generator, n: int) -> list:
        idx = rng.integers(0, len(self._items), size=n)
        return [self._items[i] for i in idx]


def epsilon(t: int, config: DrlConfig = DrlConfig()) -> float:
    e = -(config.epsilon_initial - config.epsilon_final) * t / config.explore_steps + config.epsilon_initial
    return max(e, config.epsilon_final)


def greedy_action(params: ParamStore, expert_params: ParamStore, graph: HeteroGraphState,
                  scales: GraphScales, beta_override: float | None = None) -> int:
    with no_grad():
        _, _, q_fin = fused_forward(params, expert_params, to_batch([graph], scales), beta_override)
    return int(np.argmax(q_fin.data[0]))


def select_action(graph: HeteroGraphState, t: int, params: ParamStore, expert_params: ParamStore,
                  rng: np.random.Generator, config: DrlConfig, scales: GraphScales) -> int:
    if t < config.warmup_steps or rng.uniform() < epsilon(t, config):
        return int(rng.integers(0, ACTION_COUNT))
    return greedy_action(params, expert_params, graph, scales, config.beta_override)


def ddqn_loss(batch: list, params: ParamStore, target_params: ParamStore, expert_params: ParamStore,
              gamma: float, scales: GraphScales, beta_override: float | None = None):
    """Mean squared Bellman error; gradients flow only through Q(s, a)."""
    states = to_batch([tr.s for tr in batch], scales)
    next_states = to_batch([tr.s_next for tr in batch], scales)
    actions = np.array([[tr.a] for tr in batch], dtype=np.int64)
    rewards = np.array([tr.r for tr in batch])
    live = np.array([0.0 if tr.done else 1.0 for tr in batch])

    with no_grad():
        _, _, q_online_next = fused_forward(params, expert_params, next_states, beta_override)
        best_next = np.argmax(q_online_next.data, axis=1)[:, None]
        _, _, q_target_next = fused_forward(target_params, expert_params, next_states, beta_override)
        bootstrap = np.take_along_axis(q_target_next.data, best_next, axis=1)[:, 0]
    targets = rewards + gamma * bootstrap * live

    _, _, q_fin = fused_forward(params, expert_params, states, beta_override)
    chosen = T.gather(q_fin, actions).reshape(len(batch))
    err = chosen - Tensor(targets)
    return T.tmean(T.square(err))


@dataclass
class EpisodeStats:
    episode: int
    seed: int
    reward: float
    collisions: int
    avg_speed_mps: float
    travel_time_s: float
    steps: int
    epsilon: float


METRICS_FIELDS = ["episode", "seed", "reward", "collisions", "avg_speed_mps", "travel_time_s", "steps", "epsilon"]


def metrics_csv(rows: list) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(METRICS_FIELDS)
    for r in rows:
        writer.writerow([
            r.episode, r.seed, repr(r.reward), r.collisions,
            repr(r.avg_speed_mps), repr(r.travel_time_s), r.steps, repr(r.epsilon),
        ])
    return buf.getvalue()


@dataclass
class RunResult:
    stats: list = field(default_factory=list)
    wall_ms_per_step: float = 0.0
    goals: int = 0
    collisions: int = 0
    timeouts: int = 0

    @property
    def success_rate(self) -> float:
        return self.goals / max(len(self.stats), 1)

    @property
    def collision_rate(self) -> float:
        return self.collisions / max(len(self.stats), 1)

    def summary(self) -> dict:
        return {
            "episodes": len(self.stats),
            "success_rate": self.success_rate,
            "collision_rate": self.collision_rate,
            "timeouts": self.timeouts,
            "mean_reward": float(np.mean([s.reward for s in self.stats])) if self.stats else 0.0,
            "mean_travel_time_s": float(np.mean([s.travel_time_s for s in self.stats])) if self.stats else 0.0,
            "mean_avg_speed_mps": float(np.mean([s.avg_speed_mps for s in self.stats])) if self.stats else 0.0,
            "wall_ms_per_step": self.wall_ms_per_step,
        }


def _episode_stats(ep: int, seed_val: int, total_reward: float, collided: bool,
                   speeds: list, steps: int, eps: float, dt: float) -> EpisodeStats:
    travel = steps * dt
    avg_speed = float(np.sum(speeds) * dt / travel) if steps else 0.0
    return EpisodeStats(
        episode=ep,
        seed=seed_val,
        reward=total_reward,
        collisions=int(collided),
        avg_speed_mps=avg_speed,
        travel_time_s=travel,
        steps=steps,
        epsilon=eps,
    )


def train(
    expert_checkpoint: str,
    config: DrlConfig = DrlConfig(),
    scenario: ScenarioConfig = ScenarioConfig(),
    net: NetConfig = NetConfig(),
    scales: GraphScales = GraphScales(),
    checkpoint_dir: str | None = None,
    log=None,
) -> tuple:
    """Full training run; returns (params, RunResult). Bit-reproducible."""
    expert_params, _ = load_checkpoint(expert_checkpoint)
    expert_params.freeze()

    params = ParamStore(net, seed=config.seed, with_fusion=True)
    target_params = params.clone()
    opt = Sgd(params, lr=config.learning_rate)
    buffer = ReplayBuffer(config.buffer_capacity)
    rng = np.random.default_rng(config.seed)

    result = RunResult()
    t_global = 0
    wall = 0.0
    wall_steps = 0
    for ep in range(config.episodes):
        seed_val = int(rng.integers(0, 2**31 - 1))
        world = spawn_scenario(episode_seed(seed_val, 0), scenario)
        graph = build_graph(world)
        total_reward = 0.0
        speeds = []
        eps_start = epsilon(t_global, config)
        while True:
            t0 = time.perf_counter()
            action = select_action(graph, t_global, params, expert_params, rng, config, scales)
            outcome = world.step(EgoAction(action))
            next_graph = build_graph(world)
            wall += time.perf_counter() - t0
            wall_steps += 1
            buffer.push(Transition(graph, action, outcome.reward, next_graph, outcome.done))
            graph = next_graph
            total_reward += outcome.reward
            speeds.append(world.ego.speed)
            t_global += 1
            if (t_global >= config.warmup_steps and t_global % config.update_interval == 0
                    and len(buffer) >= config.batch_size):
                batch = buffer.sample(rng, config.batch_size)
                params.zero_grad()
                loss = ddqn_loss(batch, params, target_params, expert_params, config.gamma, scales, config.beta_override)
                loss.backward()
                opt.step()
            if t_global % config.target_sync_interval == 0:
                target_params.load_from(params)
            if outcome.done:
                collided = outcome.collided
                if outcome.goal_reached:
                    result.goals += 1
                elif outcome.collided:
                    result.collisions += 1
                else:
                    result.timeouts += 1
                break
        stats = _episode_stats(ep, seed_val, total_reward, collided, speeds, world.step_count, eps_start, world.dt)
        result.stats.append(stats)
        if log is not None:
            log(f"episode {ep + 1}/{config.episodes} reward {stats.reward:.2f} steps {stats.steps} eps {stats.epsilon:.3f}")
        if checkpoint_dir is not None and ((ep + 1) % config.checkpoint_every == 0 or ep + 1 == config.episodes):
            save_checkpoint(f"{checkpoint_dir}/policy_ep{ep + 1:04d}.json", params, train_steps=t_global,
                            extra={"episodes": ep + 1})
    result.wall_ms_per_step = wall / max(wall_steps, 1) * 1000.0
    return params, result


def evaluate(
    params: ParamStore,
    expert_params: ParamStore,
    n_episodes: int,
    seed: int,
    scenario: ScenarioConfig = ScenarioConfig(),
    scales: GraphScales = GraphScales(),
    beta_override: float | None = None,
    trajectory_sink=None,
) -> RunResult:
    """Greedy rollouts; wall-clock timing kept out of the deterministic stats."""
    result = RunResult()
    wall = 0.0
    wall_steps = 0
    for ep in range(n_episodes):
        world = spawn_scenario(episode_seed(seed, ep), scenario)
        total_reward = 0.0
        speeds = []
        step = 0
        if trajectory_sink is not None:
            trajectory_sink.record(ep, step, world)
        while True:
            t0 = time.perf_counter()
            graph = build_graph(world)
            action = greedy_action(params, expert_params, graph, scales, beta_override)
            wall += time.perf_counter() - t0
            wall_steps += 1
            outcome = world.step(EgoAction(action))
            step += 1
            total_reward += outcome.reward
            speeds.append(world.ego.speed)
            if trajectory_sink is not None:
                trajectory_sink.record(ep, step, world)
            if outcome.done:
                if outcome.goal_reached:
                    result.goals += 1
                elif outcome.collided:
                    result.collisions += 1
                else:
                    result.timeouts += 1
                result.stats.append(
                    _episode_stats(ep, seed, total_reward, outcome.collided, speeds, step, 0.0, world.dt)
                )
                break
    result.wall_ms_per_step = wall / max(wall_steps, 1) * 1000.0
    return result


def write_metrics(path: str, rows: list) -> None:
    atomic_write_text(path, metrics_csv(rows))


def write_summary(path: str, summary: dict) -> None:
    atomic_write_text(path, json.dumps(summary, indent=2, sort_keys=True) + "\n")
