"""Artificial-potential-fields baseline policy and the latency benchmark.

Velocity is the negative gradient of an attractive quadratic well at the
agent's formation slot plus inverse repulsion from every object closer than
the influence radius, clipped to the common speed limit. It plugs into the
same policy interface as the learned actor.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import accel
from .errors import ConfigError
from .swarm_env import Env, EnvConfig, EnvState, V_MAX


@dataclass
class ApfParams:
    k_att: float = 1.0
    k_rep: float = 0.1
    rho0: float = 0.6
    v_max: float = V_MAX
    use_borders: bool = True
    rep_cap_factor: float = 10.0  # repulsion magnitude cap, in units of v_max

    def __post_init__(self):
        if self.k_att <= 0 or self.k_rep < 0:
            raise ConfigError("k_att must be > 0 and k_rep >= 0")
        if self.rho0 <= 0:
            raise ConfigError(f"rho0 must be positive, got {self.rho0}")
        if self.v_max <= 0:
            raise ConfigError(f"v_max must be positive, got {self.v_max}")

    @property
    def rep_cap(self) -> float:
        return self.rep_cap_factor * self.v_max


def apf_velocity(
    state: EnvState, agent_id: int, params: ApfParams, config: EnvConfig
) -> np.ndarray:
    """Potential-field action for one agent: pull toward its slot, push away
    from other drones, the active arrow, and (optionally) the arena faces."""
    others = [state.agent_pos[j] for j in range(len(state.agent_pos)) if j != agent_id]
    if state.arrow_active:
        others.append(state.arrow_pos)
    obstacles = (
        np.asarray(others, dtype=np.float64) if others else np.empty((0, 3))
    )
    return accel.apf_velocity_kernel(
        state.agent_pos[agent_id],
        config.formation_targets[agent_id],
        obstacles,
        config.arena_lo,
        config.arena_hi,
        params.k_att,
        params.k_rep,
        params.rho0,
        params.v_max,
        params.rep_cap,
        params.use_borders,
    )


class ApfPolicy:
    """Policy-interface wrapper so the harness can swap APF for the actor."""

    name = "apf"

    def __init__(self, config: EnvConfig, params: ApfParams | None = None):
        self.config = config
        self.params = params if params is not None else ApfParams()

    def action(self, env_state: EnvState, agent_id: int, rng) -> np.ndarray:
        return apf_velocity(env_state, agent_id, self.params, self.config)


def bench_policy_latency(
    policy, env_config: EnvConfig, n_steps: int = 2000, seed: int = 0, warmup: int = 50
):
    """Wall-clock per-agent decision time over live rollouts.

    Returns (mean_ms, std_ms) over at least n_steps single-agent decisions,
    with the first `warmup` decisions discarded.
    """
    if n_steps < 1000:
        raise ValueError(f"n_steps must be >= 1000, got {n_steps}")
    env = Env(env_config, seed=seed)
    rng = np.random.default_rng(seed)
    n = env_config.n_agents
    times = []
    state = env.reset()
    while len(times) < n_steps + warmup:
        if state.done:
            state = env.reset()
        acts = np.empty((n, 3))
        for i in range(n):
            t0 = time.perf_counter()
            acts[i] = policy.action(state, i, rng)
            times.append(time.perf_counter() - t0)
        state = env.step(acts).state
    arr = np.asarray(times[warmup:]) * 1e3
    return float(arr.mean()), float(arr.std())
