"""Discrete-time swarm-versus-arrow simulation.

N target drones hold a line formation inside a box arena while a ballistic
arrow drone is lobbed at them. Agents move by explicit Euler under a hard
speed clip; the arrow follows its closed-form trajectory exactly, so the one
body with an analytic path accrues no integration error. Rewards decompose
into a collision penalty and a formation term; episodes end on a hit, on an
arrow pass-through (optional), or after max_steps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import accel
from .ballistics import TrajectoryParams, params_from_launch, vec3
from .errors import ConfigError

V_MAX = 0.5  # m/s, hard per-agent speed limit


@dataclass
class ArrowConfig:
    """Launch distribution for the arrow drone.

    Each launch picks an origin uniformly in a box, a flight time T, solves
    the exact ballistic velocity that lands on the aim point after T, then
    perturbs the direction inside a uniform cone and scales the speed.
    """

    origin_lo: np.ndarray = field(default_factory=lambda: vec3([-0.25, -1.0, 1.3]))
    origin_hi: np.ndarray = field(default_factory=lambda: vec3([0.25, -0.6, 1.7]))
    t_flight: tuple = (0.25, 0.35)
    # the opening shot of an episode is a slower lob so a freshly reset
    # swarm has time to scatter; None reuses t_flight
    first_t_flight: tuple | None = (0.45, 0.55)
    cone_half_angle_deg: float = 10.0
    speed_jitter: float = 0.2
    aim_offset: np.ndarray = field(default_factory=lambda: vec3([0.0, 0.0, 0.0]))
    mode: str = "relaunch"  # single | relaunch | terminate
    relaunch_cooldown_steps: int = 2
    park_pos: np.ndarray = field(default_factory=lambda: vec3([0.0, 0.0, -1.0]))

    def __post_init__(self):
        self.origin_lo = vec3(self.origin_lo)
        self.origin_hi = vec3(self.origin_hi)
        self.aim_offset = vec3(self.aim_offset)
        self.park_pos = vec3(self.park_pos)
        if self.mode not in ("single", "relaunch", "terminate"):
            raise ConfigError(f"unknown arrow mode {self.mode!r}")
        if not (0 < self.t_flight[0] <= self.t_flight[1]):
            raise ConfigError(f"bad flight-time range {self.t_flight}")
        if self.first_t_flight is not None and not (
            0 < self.first_t_flight[0] <= self.first_t_flight[1]
        ):
            raise ConfigError(f"bad opening flight-time range {self.first_t_flight}")
        if not 0 <= self.speed_jitter < 1:
            raise ConfigError(f"speed_jitter must be in [0,1), got {self.speed_jitter}")


def _default_formation() -> np.ndarray:
    return np.array(
        [[-0.8, 0.4, 1.5], [0.0, 0.4, 1.5], [0.8, 0.4, 1.5]], dtype=np.float64
    )


@dataclass
class EnvConfig:
    n_agents: int = 3
    dt: float = 0.1
    max_steps: int = 50
    arena_lo: np.ndarray = field(default_factory=lambda: vec3([-2.0, -2.0, 0.0]))
    arena_hi: np.ndarray = field(default_factory=lambda: vec3([2.0, 2.0, 3.0]))
    r_collide: float = 0.1
    r_emergency: float = 0.3
    r_formation: float = 0.1
    formation_targets: np.ndarray = field(default_factory=_default_formation)
    formation_reward_inverted: bool = False
    arrow: ArrowConfig = field(default_factory=ArrowConfig)

    def __post_init__(self):
        self.arena_lo = vec3(self.arena_lo)
        self.arena_hi = vec3(self.arena_hi)
        self.formation_targets = np.asarray(self.formation_targets, dtype=np.float64)
        self.validate()

    def validate(self):
        if self.n_agents < 1:
            raise ConfigError(f"n_agents must be >= 1, got {self.n_agents}")
        if self.dt <= 0:
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if self.max_steps < 1:
            raise ConfigError(f"max_steps must be >= 1, got {self.max_steps}")
        if not 0 < self.r_collide < self.r_emergency:
            raise ConfigError(
                f"need 0 < r_collide < r_emergency, got "
                f"{self.r_collide} vs {self.r_emergency}"
            )
        if self.r_formation <= 0:
            raise ConfigError(f"r_formation must be positive, got {self.r_formation}")
        if np.any(self.arena_lo >= self.arena_hi):
            raise ConfigError("arena_lo must be strictly below arena_hi per axis")
        if self.formation_targets.shape != (self.n_agents, 3):
            raise ConfigError(
                f"formation_targets shape {self.formation_targets.shape} "
                f"does not match {self.n_agents} agents"
            )
        inside = np.all(self.formation_targets >= self.arena_lo) and np.all(
            self.formation_targets <= self.arena_hi
        )
        if not inside:
            raise ConfigError("formation targets lie outside the arena")
        for p in (self.arrow.origin_lo, self.arrow.origin_hi):
            if np.any(p < self.arena_lo) or np.any(p > self.arena_hi):
                raise ConfigError("arrow launch box lies outside the arena")

    @property
    def state_dim(self) -> int:
        return 3 * (self.n_agents + 1)


@dataclass
class EnvState:
    agent_pos: np.ndarray  # (N, 3)
    arrow_pos: np.ndarray  # (3,)
    arrow_active: bool
    t_step: int
    arrow_params: TrajectoryParams | None = None
    arrow_launch_step: int = 0
    arrow_relaunch_at: int | None = None
    done: bool = False
    done_reason: str | None = None

    def vector(self) -> np.ndarray:
        """Flattened observation shared by every agent."""
        return np.concatenate([self.agent_pos.ravel(), self.arrow_pos])


@dataclass
class StepResult:
    state: EnvState
    rewards: np.ndarray  # (N,)
    done: bool
    reason: str | None


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def _cone_jitter(direction: np.ndarray, half_angle_rad: float, rng) -> np.ndarray:
    """Rotate a unit vector by a random rotation uniform over the spherical
    cap of the given half-angle."""
    if half_angle_rad <= 0:
        return direction
    cos_a = float(rng.uniform(math.cos(half_angle_rad), 1.0))
    psi = float(rng.uniform(0.0, 2.0 * math.pi))
    sin_a = math.sqrt(max(0.0, 1.0 - cos_a * cos_a))
    # orthonormal frame around the axis
    helper = np.array([1.0, 0.0, 0.0])
    if abs(direction[0]) > 0.9:
        helper = np.array([0.0, 1.0, 0.0])
    e1 = _unit(np.cross(direction, helper))
    e2 = np.cross(direction, e1)
    return cos_a * direction + sin_a * (math.cos(psi) * e1 + math.sin(psi) * e2)


def sample_launch(config: EnvConfig, rng, opening: bool = False) -> TrajectoryParams:
    """Draw one arrow launch aimed at the formation centroid with angular
    and speed jitter. The opening launch of an episode may use a separate
    (slower) flight-time range."""
    ac = config.arrow
    origin = rng.uniform(ac.origin_lo, ac.origin_hi)
    t_range = ac.t_flight
    if opening and ac.first_t_flight is not None:
        t_range = ac.first_t_flight
    t_fly = float(rng.uniform(t_range[0], t_range[1]))
    target = vec3(config.formation_targets.mean(axis=0)) + ac.aim_offset
    # exact velocity reaching `target` after t_fly under gravity
    from .ballistics import GRAVITY

    v_exact = (target - origin) / t_fly
    v_exact[2] += 0.5 * GRAVITY * t_fly
    speed = float(np.linalg.norm(v_exact))
    direction = _cone_jitter(
        v_exact / speed, math.radians(ac.cone_half_angle_deg), rng
    )
    speed *= float(rng.uniform(1.0 - ac.speed_jitter, 1.0 + ac.speed_jitter))
    return params_from_launch(vec3(origin), direction * speed)


def _arrow_point(params: TrajectoryParams, t: float) -> np.ndarray:
    o = params.origin
    return accel.traj_point(
        params.v0, params.theta, params.gamma, params.g, o[0], o[1], o[2], t
    )


def _inside_arena(p: np.ndarray, config: EnvConfig) -> bool:
    return bool(np.all(p >= config.arena_lo) and np.all(p <= config.arena_hi))


def reward_collision(state: EnvState, agent_id: int, config: EnvConfig) -> float:
    """-1 when any object (other drone, active arrow, arena face) sits at or
    inside the emergency radius, else 0."""
    dists = accel.object_min_dists(
        state.agent_pos,
        state.arrow_pos,
        state.arrow_active,
        config.arena_lo,
        config.arena_hi,
    )
    return -1.0 if dists[agent_id] <= config.r_emergency else 0.0


def reward_formation(state: EnvState, agent_id: int, config: EnvConfig) -> float:
    """Formation term, implemented exactly as the printed rule: 0 inside the
    formation radius, +0.01 at or beyond it. The inverted flag swaps the
    branches for experiments that want the conventional direction."""
    d_f = float(
        np.linalg.norm(state.agent_pos[agent_id] - config.formation_targets[agent_id])
    )
    out_of_slot = d_f >= config.r_formation
    if config.formation_reward_inverted:
        return 0.01 if not out_of_slot else 0.0
    return 0.01 if out_of_slot else 0.0


class Env:
    """Owns one stepping timeline: config + rng + current state."""

    def __init__(self, config: EnvConfig | None = None, seed: int = 0):
        self.config = config if config is not None else EnvConfig()
        self.rng = np.random.default_rng(seed)
        self.state: EnvState | None = None
        self.seed = seed

    def reset(self, seed: int | None = None) -> EnvState:
        """Start a fresh episode. With a seed the rng restarts from it;
        without one the existing stream continues, so consecutive episodes
        differ while the whole sequence stays reproducible."""
        if seed is not None:
            self.seed = seed
            self.rng = np.random.default_rng(seed)
        params = sample_launch(self.config, self.rng, opening=True)
        self.state = EnvState(
            agent_pos=self.config.formation_targets.copy(),
            arrow_pos=params.origin.copy(),
            arrow_active=True,
            t_step=0,
            arrow_params=params,
            arrow_launch_step=0,
        )
        return self.state

    def launch_arrow(self, params: TrajectoryParams) -> EnvState:
        """Inject an externally aimed launch at the current step, replacing
        whatever the arrow was doing. Game sessions shoot on demand."""
        state = self.state
        if state is None:
            raise RuntimeError("launch before reset")
        state.arrow_params = params
        state.arrow_pos = params.origin.copy()
        state.arrow_active = True
        state.arrow_launch_step = state.t_step
        state.arrow_relaunch_at = None
        return state

    def park_arrow(self) -> EnvState:
        """Remove the arrow from play with no relaunch scheduled."""
        state = self.state
        if state is None:
            raise RuntimeError("park before reset")
        state.arrow_active = False
        state.arrow_pos = self.config.arrow.park_pos.copy()
        state.arrow_relaunch_at = None
        return state

    def step(self, actions: np.ndarray) -> StepResult:
        cfg = self.config
        state = self.state
        if state is None:
            raise RuntimeError("step before reset")
        if state.done:
            raise RuntimeError("episode is done; call reset")
        actions = np.asarray(actions, dtype=np.float64)
        if actions.shape != (cfg.n_agents, 3):
            raise ValueError(
                f"actions shape {actions.shape}, expected {(cfg.n_agents, 3)}"
            )
        if not np.all(np.isfinite(actions)):
            raise ValueError("actions contain non-finite components")

        old_pos = state.agent_pos
        new_pos = accel.step_agents(
            old_pos, actions, cfg.dt, V_MAX, cfg.arena_lo, cfg.arena_hi
        )
        k_next = state.t_step + 1

        # Arrow kinematics: analytic point on the active trajectory, a
        # relaunch at its origin, or parked out of play.
        arrow_old = state.arrow_pos
        params = state.arrow_params
        launch_step = state.arrow_launch_step
        relaunch_at = state.arrow_relaunch_at
        active = state.arrow_active
        swept = False  # whether the arrow traversed old->new this step
        if active:
            arrow_new = _arrow_point(params, (k_next - launch_step) * cfg.dt)
            swept = True
        elif (
            cfg.arrow.mode == "relaunch"
            and relaunch_at is not None
            and k_next >= relaunch_at
        ):
            params = sample_launch(cfg, self.rng)
            launch_step = k_next
            relaunch_at = None
            arrow_new = params.origin.copy()
            active = True
        else:
            arrow_new = arrow_old

        # Terminal collision: post-step agent pairs, swept agent-vs-arrow.
        collided = False
        if cfg.n_agents > 1:
            d_pair, _, _ = accel.pairwise_min(new_pos)
            collided = d_pair <= cfg.r_collide
        if not collided and swept:
            for i in range(cfg.n_agents):
                d = accel.moving_min_dist(old_pos[i], new_pos[i], arrow_old, arrow_new)
                if d <= cfg.r_collide:
                    collided = True
                    break

        # Rewards see the arrow at its post-step point whenever it flew or
        # appeared this step, even if it left the arena mid-step.
        reward_state = EnvState(
            agent_pos=new_pos,
            arrow_pos=arrow_new,
            arrow_active=active,
            t_step=k_next,
        )
        rewards = np.array(
            [
                reward_collision(reward_state, i, cfg)
                + reward_formation(reward_state, i, cfg)
                for i in range(cfg.n_agents)
            ]
        )

        # Arrow exit handling after rewards.
        arrow_exited = active and not _inside_arena(arrow_new, cfg)
        if arrow_exited:
            active = False
            arrow_new = cfg.arrow.park_pos.copy()
            if cfg.arrow.mode == "relaunch":
                relaunch_at = k_next + cfg.arrow.relaunch_cooldown_steps

        done = False
        reason = None
        if collided:
            done, reason = True, "collision"
        elif arrow_exited and cfg.arrow.mode == "terminate":
            done, reason = True, "arrow_passed"
        elif k_next >= cfg.max_steps:
            done, reason = True, "max_steps"

        self.state = EnvState(
            agent_pos=new_pos,
            arrow_pos=arrow_new,
            arrow_active=active,
            t_step=k_next,
            arrow_params=params,
            arrow_launch_step=launch_step,
            arrow_relaunch_at=relaunch_at,
            done=done,
            done_reason=reason,
        )
        return StepResult(state=self.state, rewards=rewards, done=done, reason=reason)


def reset(config: EnvConfig, seed: int) -> EnvState:
    """Functional reset: build a fresh environment and return its state."""
    return Env(config, seed).reset()


def episode_log_header(n_agents: int) -> str:
    cols = ["step"]
    for i in range(n_agents):
        cols += [f"a{i}x", f"a{i}y", f"a{i}z"]
    cols += ["arrow_x", "arrow_y", "arrow_z", "arrow_active"]
    cols += [f"r{i}" for i in range(n_agents)]
    cols += ["done", "reason"]
    return ",".join(cols)


def episode_log_row(state: EnvState, rewards: np.ndarray, reason: str | None) -> str:
    vals = [str(state.t_step)]
    for p in state.agent_pos:
        vals += [repr(float(v)) for v in p]
    vals += [repr(float(v)) for v in state.arrow_pos]
    vals.append("1" if state.arrow_active else "0")
    vals += [repr(float(r)) for r in rewards]
    vals.append("1" if state.done else "0")
    vals.append(reason or "")
    return ",".join(vals)
