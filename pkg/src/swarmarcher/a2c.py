"""Per-agent advantage actor-critic on the swarm environment.

Every agent owns two small tanh networks over the flattened position state:
an actor producing a Gaussian policy (3 means plus 3 state-independent
learnable log-stds) and a scalar critic. Gradients are hand-derived numpy
backprop, validated against central finite differences in the test suite.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import accel
from .errors import TrainingDiverged, WeightsLayoutError
from .swarm_env import Env, EnvConfig

WEIGHTS_FORMAT_VERSION = 1
LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass
class NetLayout:
    input_dim: int
    hidden: tuple = (64, 64)
    output_dim: int = 1
    has_logstd: bool = False

    def describe(self) -> dict:
        return {
            "input_dim": self.input_dim,
            "hidden": list(self.hidden),
            "output_dim": self.output_dim,
            "has_logstd": self.has_logstd,
        }


@dataclass
class NetworkParams:
    """Two-hidden-layer tanh network; weights use the (out, in) convention."""

    layout: NetLayout
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    w3: np.ndarray
    b3: np.ndarray
    logstd: np.ndarray | None = None

    def tensors(self) -> dict:
        out = {"w1": self.w1, "b1": self.b1, "w2": self.w2, "b2": self.b2,
               "w3": self.w3, "b3": self.b3}
        if self.logstd is not None:
            out["logstd"] = self.logstd
        return out

    def copy(self) -> "NetworkParams":
        return NetworkParams(
            layout=self.layout,
            **{k: v.copy() for k, v in self.tensors().items()},
        )


@dataclass
class PolicyOutput:
    mu: np.ndarray
    sigma: np.ndarray


@dataclass
class AgentNets:
    actor: NetworkParams
    critic: NetworkParams


@dataclass
class TrainConfig:
    learning_rate: float = 0.001
    batch_size: int = 10000  # states per epoch
    gamma_discount: float = 0.5
    beta: float = 0.001
    epochs: int = 1000
    seed: int = 0
    hidden: tuple = (64, 64)
    logstd_init: float = -1.0
    optimizer: str = "sgd"  # sgd | adam
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    normalize_advantage: bool = False
    # stop once the rolling mean episode duration stays at the ceiling
    early_stop_duration: float = 49.9
    early_stop_patience: int = 15

    def validate(self):
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be >= 0")
        if not 0 <= self.gamma_discount <= 1:
            raise ValueError("gamma_discount must be in [0, 1]")
        if self.beta < 0:
            raise ValueError("beta must be >= 0")
        if self.batch_size < 1 or self.epochs < 1:
            raise ValueError("batch_size and epochs must be >= 1")
        if self.optimizer not in ("sgd", "adam"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")


@dataclass
class TransitionBatch:
    """One agent's slice of an epoch of rollouts."""

    states: np.ndarray       # (B, state_dim)
    actions: np.ndarray      # (B, 3)
    rewards: np.ndarray      # (B,)
    next_states: np.ndarray  # (B, state_dim)
    dones: np.ndarray        # (B,) float 0/1


def init_network(layout: NetLayout, rng, logstd_init: float = -1.0,
                 head_scale: float = 1.0) -> NetworkParams:
    """Xavier-uniform initialization; the output layer can be shrunk via
    head_scale so early policies stay near zero velocity."""

    def xavier(n_out, n_in):
        s = np.sqrt(6.0 / (n_in + n_out))
        return rng.uniform(-s, s, size=(n_out, n_in))

    h1, h2 = layout.hidden
    params = NetworkParams(
        layout=layout,
        w1=xavier(h1, layout.input_dim),
        b1=np.zeros(h1),
        w2=xavier(h2, h1),
        b2=np.zeros(h2),
        w3=xavier(layout.output_dim, h2) * head_scale,
        b3=np.zeros(layout.output_dim),
        logstd=np.full(layout.output_dim, float(logstd_init))
        if layout.has_logstd
        else None,
    )
    return params


def make_agent_nets(state_dim: int, cfg: TrainConfig, rng) -> AgentNets:
    actor_layout = NetLayout(state_dim, cfg.hidden, 3, has_logstd=True)
    critic_layout = NetLayout(state_dim, cfg.hidden, 1, has_logstd=False)
    return AgentNets(
        actor=init_network(actor_layout, rng, cfg.logstd_init, head_scale=0.01),
        critic=init_network(critic_layout, rng),
    )


def forward_batch(net: NetworkParams, x: np.ndarray):
    """Batched forward pass; returns (out, cache) with cache for backprop."""
    h1 = np.tanh(x @ net.w1.T + net.b1)
    h2 = np.tanh(h1 @ net.w2.T + net.b2)
    out = h2 @ net.w3.T + net.b3
    return out, (x, h1, h2)


def backward_batch(net: NetworkParams, cache, dout: np.ndarray) -> dict:
    """Gradients of a scalar loss wrt all affine parameters, given the loss
    gradient on the network output."""
    x, h1, h2 = cache
    dw3 = dout.T @ h2
    db3 = dout.sum(axis=0)
    dh2 = (dout @ net.w3) * (1.0 - h2 * h2)
    dw2 = dh2.T @ h1
    db2 = dh2.sum(axis=0)
    dh1 = (dh2 @ net.w2) * (1.0 - h1 * h1)
    dw1 = dh1.T @ x
    db1 = dh1.sum(axis=0)
    return {"w1": dw1, "b1": db1, "w2": dw2, "b2": db2, "w3": dw3, "b3": db3}


def policy_forward(actor: NetworkParams, state: np.ndarray) -> PolicyOutput:
    """Deterministic policy head: mean from the network, std from the
    learnable log-std mapped through exp."""
    state = np.asarray(state, dtype=np.float64)
    if state.shape != (actor.layout.input_dim,):
        raise ValueError(
            f"state shape {state.shape}, expected ({actor.layout.input_dim},)"
        )
    mu = accel.mlp2_forward(
        state, actor.w1, actor.b1, actor.w2, actor.b2, actor.w3, actor.b3
    )
    return PolicyOutput(mu=mu, sigma=np.exp(actor.logstd))


def sample_action(out: PolicyOutput, rng) -> np.ndarray:
    """Draw a ~ N(mu, diag(sigma^2)); the environment applies the speed clip."""
    return out.mu + out.sigma * rng.standard_normal(out.mu.shape[0])


def log_prob_and_entropy(action: np.ndarray, out: PolicyOutput):
    """Diagonal-Gaussian log density at `action` and policy entropy, both
    summed over action dimensions."""
    sigma = np.asarray(out.sigma, dtype=np.float64)
    if np.any(sigma <= 0):
        raise ValueError("sigma must be strictly positive")
    mu = np.asarray(out.mu, dtype=np.float64)
    a = np.asarray(action, dtype=np.float64)
    var = sigma * sigma
    logp = float(np.sum(-((a - mu) ** 2) / (2.0 * var) - np.log(np.sqrt(2.0 * np.pi * var))))
    entropy = float(np.sum((np.log(2.0 * np.pi * var) + 1.0) / 2.0))
    return logp, entropy


def td_target(reward, v_next, done, gamma_discount):
    """Bellman target r + gamma * V(next) zeroed past terminal states."""
    reward = np.asarray(reward, dtype=np.float64)
    v_next = np.asarray(v_next, dtype=np.float64)
    done_f = np.asarray(done, dtype=np.float64)
    return reward + gamma_discount * v_next * (1.0 - done_f)


def critic_loss(v_star, v_pi) -> float:
    v_star = np.asarray(v_star, dtype=np.float64)
    v_pi = np.asarray(v_pi, dtype=np.float64)
    if v_star.size == 0:
        raise ValueError("empty batch")
    return float(np.mean((v_star - v_pi) ** 2))


def actor_loss(logp, advantages, entropies, beta) -> float:
    logp = np.asarray(logp, dtype=np.float64)
    advantages = np.asarray(advantages, dtype=np.float64)
    entropies = np.asarray(entropies, dtype=np.float64)
    if logp.size == 0:
        raise ValueError("empty batch")
    return float(-np.mean(logp * advantages) - beta * np.mean(entropies))


def batch_log_probs(actor: NetworkParams, states, actions):
    """Vectorized log density and entropy for a whole batch; also returns
    mu and the forward cache for the gradient pass."""
    mu, cache = forward_batch(actor, states)
    sigma = np.exp(actor.logstd)
    var = sigma * sigma
    diff = actions - mu
    logp = np.sum(-(diff ** 2) / (2.0 * var) - np.log(np.sqrt(2.0 * np.pi * var)), axis=1)
    entropy = float(np.sum((np.log(2.0 * np.pi * var) + 1.0) / 2.0))
    return logp, entropy, mu, cache


def critic_values(critic: NetworkParams, states) -> np.ndarray:
    v, _ = forward_batch(critic, states)
    return v[:, 0]


def critic_grads(critic: NetworkParams, states, v_star):
    """Analytic gradient of critic_loss wrt critic parameters; targets are
    constants."""
    v, cache = forward_batch(critic, states)
    v = v[:, 0]
    n = v.shape[0]
    loss = float(np.mean((v_star - v) ** 2))
    dv = (2.0 / n) * (v - v_star)
    grads = backward_batch(critic, cache, dv[:, None])
    return loss, grads


def actor_grads(actor: NetworkParams, states, actions, advantages, beta):
    """Analytic gradient of actor_loss wrt actor parameters; advantages are
    constants (no gradient flows into the critic)."""
    logp, entropy, mu, cache = batch_log_probs(actor, states, actions)
    n = states.shape[0]
    loss = float(-np.mean(logp * advantages) - beta * entropy)
    sigma = np.exp(actor.logstd)
    var = sigma * sigma
    diff = actions - mu
    # d(-mean(logp*A))/dmu = -(A/n) * (a - mu) / var
    dmu = -(advantages[:, None] / n) * diff / var
    grads = backward_batch(actor, cache, dmu)
    # d logp / d logstd_k = diff_k^2 / var_k - 1 ; d entropy / d logstd_k = 1
    dlogstd = -np.sum(advantages[:, None] * (diff ** 2 / var - 1.0), axis=0) / n
    dlogstd -= beta
    grads["logstd"] = dlogstd
    return loss, grads


class Optimizer:
    """SGD with an optional adaptive-moment mode, acting on named tensors."""

    def __init__(self, cfg: TrainConfig):
        self.cfg = cfg
        self.m = {}
        self.v = {}
        self.t = 0

    def step(self, nets: list, grads: list):
        cfg = self.cfg
        self.t += 1
        for idx, (net, g) in enumerate(zip(nets, grads)):
            for name, grad in g.items():
                tensor = getattr(net, name)
                key = (idx, name)
                if cfg.optimizer == "sgd":
                    tensor -= cfg.learning_rate * grad
                else:
                    m = self.m.setdefault(key, np.zeros_like(tensor))
                    v = self.v.setdefault(key, np.zeros_like(tensor))
                    m += (1 - cfg.adam_beta1) * (grad - m)
                    v += (1 - cfg.adam_beta2) * (grad * grad - v)
                    mhat = m / (1 - cfg.adam_beta1 ** self.t)
                    vhat = v / (1 - cfg.adam_beta2 ** self.t)
                    tensor -= cfg.learning_rate * mhat / (np.sqrt(vhat) + cfg.adam_eps)


@dataclass
class EpochMetrics:
    epoch: int
    mean_duration: float
    actor_loss: float
    critic_loss: float


@dataclass
class TrainResult:
    agents: list
    metrics: list  # of EpochMetrics
    epochs_run: int
    stopped_early: bool


def collect_batch(env: Env, agents: list, rng, batch_size: int):
    """Roll episodes until at least batch_size environment states are
    gathered; returns per-agent TransitionBatch plus episode durations."""
    cfg = env.config
    n = cfg.n_agents
    states = [[] for _ in range(n)]
    actions = [[] for _ in range(n)]
    rewards = [[] for _ in range(n)]
    next_states = [[] for _ in range(n)]
    dones = [[] for _ in range(n)]
    durations = []
    collected = 0
    while collected < batch_size:
        state = env.reset()
        steps = 0
        while not state.done:
            obs = state.vector()
            acts = np.empty((n, 3))
            for i in range(n):
                actor = agents[i].actor
                mu = accel.mlp2_forward(
                    obs, actor.w1, actor.b1, actor.w2, actor.b2, actor.w3, actor.b3
                )
                acts[i] = mu + np.exp(actor.logstd) * rng.standard_normal(3)
            res = env.step(acts)
            nxt = res.state.vector()
            for i in range(n):
                states[i].append(obs)
                actions[i].append(acts[i])
                rewards[i].append(res.rewards[i])
                next_states[i].append(nxt)
                dones[i].append(1.0 if res.done else 0.0)
            state = res.state
            steps += 1
            collected += 1
        durations.append(steps)
    batches = [
        TransitionBatch(
            states=np.asarray(states[i]),
            actions=np.asarray(actions[i]),
            rewards=np.asarray(rewards[i]),
            next_states=np.asarray(next_states[i]),
            dones=np.asarray(dones[i]),
        )
        for i in range(n)
    ]
    return batches, durations


def train(env_config: EnvConfig, cfg: TrainConfig, progress=None) -> TrainResult:
    """Full training loop: one full-batch gradient step per network per
    epoch. Deterministic for a fixed config and seed."""
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    env = Env(env_config, seed=cfg.seed)
    agents = [
        make_agent_nets(env_config.state_dim, cfg, rng)
        for _ in range(env_config.n_agents)
    ]
    opt = Optimizer(cfg)
    metrics = []
    plateau = 0
    stopped_early = False
    for epoch in range(cfg.epochs):
        batches, durations = collect_batch(env, agents, rng, cfg.batch_size)
        a_losses = []
        c_losses = []
        nets = []
        grads = []
        for i, (agent, batch) in enumerate(zip(agents, batches)):
            v = critic_values(agent.critic, batch.states)
            v_next = critic_values(agent.critic, batch.next_states)
            v_star = td_target(batch.rewards, v_next, batch.dones, cfg.gamma_discount)
            adv = v_star - v
            if cfg.normalize_advantage:
                adv = (adv - adv.mean()) / (adv.std() + 1e-8)
            c_loss, c_grad = critic_grads(agent.critic, batch.states, v_star)
            a_loss, a_grad = actor_grads(
                agent.actor, batch.states, batch.actions, adv, cfg.beta
            )
            if not (np.isfinite(c_loss) and np.isfinite(a_loss)):
                raise TrainingDiverged(
                    f"non-finite loss at epoch {epoch} agent {i}: "
                    f"actor={a_loss}, critic={c_loss}"
                )
            a_losses.append(a_loss)
            c_losses.append(c_loss)
            nets += [agent.critic, agent.actor]
            grads += [c_grad, a_grad]
        opt.step(nets, grads)
        row = EpochMetrics(
            epoch=epoch,
            mean_duration=float(np.mean(durations)),
            actor_loss=float(np.mean(a_losses)),
            critic_loss=float(np.mean(c_losses)),
        )
        metrics.append(row)
        if progress is not None:
            progress(row)
        if row.mean_duration >= cfg.early_stop_duration:
            plateau += 1
            if plateau >= cfg.early_stop_patience:
                stopped_early = True
                break
        else:
            plateau = 0
    return TrainResult(
        agents=agents,
        metrics=metrics,
        epochs_run=len(metrics),
        stopped_early=stopped_early,
    )


class DrlPolicy:
    """Trained-network policy exposed through the common interface."""

    name = "drl"

    def __init__(self, agents: list):
        self.agents = agents

    def action(self, env_state, agent_id: int, rng) -> np.ndarray:
        actor = self.agents[agent_id].actor
        obs = env_state.vector()
        mu = accel.mlp2_forward(
            obs, actor.w1, actor.b1, actor.w2, actor.b2, actor.w3, actor.b3
        )
        return mu + np.exp(actor.logstd) * rng.standard_normal(3)


class RandomPolicy:
    """Uniform random velocities in [-0.5, 0.5] per component."""

    name = "random"

    def action(self, env_state, agent_id: int, rng) -> np.ndarray:
        return rng.uniform(-0.5, 0.5, size=3)


class ZeroPolicy:
    """Hold position; useful as a latency floor and smoke baseline."""

    name = "zero"

    def action(self, env_state, agent_id: int, rng) -> np.ndarray:
        return np.zeros(3)


@dataclass
class EvalReport:
    policy: str
    n_episodes: int
    successes: int
    success_rate: float
    mean_duration: float
    durations: list
    latency_ms_mean: float | None = None
    latency_ms_std: float | None = None


def evaluate(
    policy,
    env_config: EnvConfig,
    n_episodes: int = 300,
    seed: int = 0,
    measure_latency: bool = True,
) -> EvalReport:
    """Run n_episodes and report the success rate (full-length episodes) and
    per-agent decision latency. The report body is deterministic per seed;
    latency fields are wall-clock and excluded when measure_latency=False."""
    env = Env(env_config, seed=seed)
    rng = np.random.default_rng(seed + 1)
    n = env_config.n_agents
    durations = []
    successes = 0
    times = [] if measure_latency else None
    for _ in range(n_episodes):
        state = env.reset()
        steps = 0
        while not state.done:
            acts = np.empty((n, 3))
            for i in range(n):
                if times is not None:
                    t0 = time.perf_counter()
                    acts[i] = policy.action(state, i, rng)
                    times.append(time.perf_counter() - t0)
                else:
                    acts[i] = policy.action(state, i, rng)
            res = env.step(acts)
            state = res.state
            steps += 1
        durations.append(steps)
        if steps >= env_config.max_steps and state.done_reason == "max_steps":
            successes += 1
    report = EvalReport(
        policy=getattr(policy, "name", policy.__class__.__name__),
        n_episodes=n_episodes,
        successes=successes,
        success_rate=100.0 * successes / n_episodes,
        mean_duration=float(np.mean(durations)),
        durations=durations,
    )
    if times is not None:
        arr = np.asarray(times[n * 2 :])  # drop warm-up decisions
        report.latency_ms_mean = float(arr.mean() * 1e3)
        report.latency_ms_std = float(arr.std() * 1e3)
    return report


def metrics_to_csv(metrics: list) -> str:
    lines = ["epoch,mean_episode_duration,actor_loss,critic_loss"]
    for m in metrics:
        lines.append(
            f"{m.epoch},{m.mean_duration!r},{m.actor_loss!r},{m.critic_loss!r}"
        )
    return "\n".join(lines) + "\n"


def save_agents(path, agents: list, extra_meta: dict | None = None):
    """Versioned npz archive: a json layout descriptor plus row-major
    parameter arrays named <role>_<agent>_<tensor>."""
    if not agents:
        raise ValueError("no agents to save")
    meta = {
        "version": WEIGHTS_FORMAT_VERSION,
        "n_agents": len(agents),
        "actor_layout": agents[0].actor.layout.describe(),
        "critic_layout": agents[0].critic.layout.describe(),
    }
    if extra_meta:
        meta["extra"] = extra_meta
    arrays = {"meta": np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8)}
    for i, agent in enumerate(agents):
        for role, net in (("actor", agent.actor), ("critic", agent.critic)):
            for name, tensor in net.tensors().items():
                arrays[f"{role}_{i}_{name}"] = tensor
    np.savez(path, **arrays)


def _layout_from_dict(d: dict) -> NetLayout:
    return NetLayout(
        input_dim=int(d["input_dim"]),
        hidden=tuple(d["hidden"]),
        output_dim=int(d["output_dim"]),
        has_logstd=bool(d["has_logstd"]),
    )


def load_agents(path, expect_state_dim: int | None = None) -> list:
    """Load a weights archive; raises WeightsLayoutError on version or shape
    mismatch."""
    try:
        data = np.load(path)
    except FileNotFoundError:
        raise
    except Exception as exc:
        raise WeightsLayoutError(f"unreadable weights file: {exc}") from exc
    if "meta" not in data:
        raise WeightsLayoutError("weights file lacks a layout descriptor")
    meta = json.loads(bytes(data["meta"]).decode())
    if meta.get("version") != WEIGHTS_FORMAT_VERSION:
        raise WeightsLayoutError(
            f"weights format version {meta.get('version')}, "
            f"expected {WEIGHTS_FORMAT_VERSION}"
        )
    actor_layout = _layout_from_dict(meta["actor_layout"])
    critic_layout = _layout_from_dict(meta["critic_layout"])
    if expect_state_dim is not None and actor_layout.input_dim != expect_state_dim:
        raise WeightsLayoutError(
            f"weights built for state dim {actor_layout.input_dim}, "
            f"environment needs {expect_state_dim}"
        )
    agents = []
    for i in range(meta["n_agents"]):
        nets = {}
        for role, layout in (("actor", actor_layout), ("critic", critic_layout)):
            names = ["w1", "b1", "w2", "b2", "w3", "b3"]
            if layout.has_logstd:
                names.append("logstd")
            tensors = {}
            for name in names:
                key = f"{role}_{i}_{name}"
                if key not in data:
                    raise WeightsLayoutError(f"missing tensor {key}")
                tensors[name] = data[key]
            h1, h2 = layout.hidden
            expected = {
                "w1": (h1, layout.input_dim), "b1": (h1,),
                "w2": (h2, h1), "b2": (h2,),
                "w3": (layout.output_dim, h2), "b3": (layout.output_dim,),
            }
            if layout.has_logstd:
                expected["logstd"] = (layout.output_dim,)
            for name, shape in expected.items():
                if tensors[name].shape != shape:
                    raise WeightsLayoutError(
                        f"tensor {role}_{i}_{name} has shape "
                        f"{tensors[name].shape}, expected {shape}"
                    )
            nets[role] = NetworkParams(layout=layout, **tensors)
        agents.append(AgentNets(actor=nets["actor"], critic=nets["critic"]))
    return agents
