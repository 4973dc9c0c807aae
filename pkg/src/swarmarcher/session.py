"""Game session: the server-side state machine driving one player.

A session owns one environment timeline (the swarm is alive the whole time)
plus the player's bow. Phases cycle aiming -> in_flight -> scored -> aiming:
a valid aim followed by release injects the shot into the environment as the
arrow, the swarm dodges it, and when the arrow drops out of play the shot is
scored against the gates and the next aim starts the cycle again.

All physics shown to a client is computed here with the same library calls
the tests use; telemetry frames that fall between environment steps carry
linearly blended positions and say so via the `interpolated` flag.

Scoring follows the three-gate game: each gate can be scored at most three
times per session, so a perfect session totals 3*(1+3+5) = 27 points.
"""

import dataclasses
from dataclasses import dataclass

import numpy as np

from . import protocol
from .a2c import DrlPolicy
from .apf import ApfPolicy
from .ballistics import (
    HandPose,
    TrajectorySamples,
    make_launch_state,
    params_from_launch,
    sample_trajectory,
    score_shot,
)
from .config import RunConfig
from .errors import DegenerateAimError
from .haptics import gameplay_command
from .swarm_env import Env

PHASES = ("aiming", "in_flight", "scored")
GATE_SCORE_QUOTA = 3


@dataclass
class AimSnapshot:
    """Everything derived from the latest valid hand poses."""

    hands: HandPose
    stretch: float
    tension: float
    energy: float
    speed: float
    velocity: np.ndarray
    slide_mm: float
    force_n: float
    trajectory: TrajectorySamples


class GameSession:
    """One player's live game; all handlers return outbound message strings."""

    def __init__(self, run_config: RunConfig, session_id: str, agents=None):
        rc = run_config
        self.id = session_id
        self.config = rc
        self.bow = rc.bow.model()
        self.mass = rc.bow.mass
        self.gates = rc.gates
        self.agents = agents
        env_cfg = dataclasses.replace(
            rc.env,
            max_steps=rc.serve.session_max_steps,
            arrow=dataclasses.replace(rc.env.arrow, mode="single"),
        )
        self.env = Env(env_cfg, seed=rc.seed)
        self.rng = np.random.default_rng(rc.seed)
        self.policy_name = "drl" if agents is not None else "apf"
        self._policies = {"apf": ApfPolicy(env_cfg, rc.apf)}
        if agents is not None:
            self._policies["drl"] = DrlPolicy(agents)
        self.frame = 0
        self.phase = "aiming"
        self.aim: AimSnapshot | None = None
        self.pending: tuple[str | None, int] | None = None
        self.score = 0
        self.shots_fired = 0
        self.gate_scored = {g.name: 0 for g in self.gates}
        self.last_done_reason: str | None = None
        self._reset_env()

    # -- environment plumbing ------------------------------------------------

    def _reset_env(self):
        """Fresh swarm with the arrow out of play (players supply shots)."""
        self.env.reset()
        self.env.park_arrow()
        self.prev_pos = self.env.state.agent_pos.copy()
        self.prev_arrow = self.env.state.arrow_pos.copy()

    def _actions(self) -> np.ndarray:
        policy = self._policies[self.policy_name]
        state = self.env.state
        return np.stack(
            [
                policy.action(state, i, self.rng)
                for i in range(self.env.config.n_agents)
            ]
        )

    def tick(self) -> list:
        """Advance the environment one step; returns event messages."""
        out = []
        state = self.env.state
        self.prev_pos = state.agent_pos.copy()
        self.prev_arrow = state.arrow_pos.copy()
        result = self.env.step(self._actions())
        self.last_done_reason = result.reason if result.done else None
        if self.phase == "in_flight" and not result.state.arrow_active:
            out.append(self._resolve_shot())
        if result.done:
            self._reset_env()
        return out

    # -- message handlers ----------------------------------------------------

    def handle_message(self, text) -> list:
        """Decode and dispatch one inbound frame; never raises."""
        try:
            msg = protocol.decode_message(text)
            kind = msg["kind"]
            if kind == "aim":
                return self.handle_aim(msg)
            if kind == "release":
                return self.handle_release()
            if kind == "reset":
                return self.handle_reset()
            if kind == "set_policy":
                return self.handle_set_policy(msg)
            return [protocol.error_message(f"unknown message kind {kind!r}")]
        except protocol.ProtocolError as exc:
            return [protocol.error_message("malformed message", str(exc))]
        except Exception as exc:  # session must survive anything a frame does
            return [protocol.error_message("internal error", str(exc))]

    def handle_aim(self, msg: dict) -> list:
        if self.phase == "in_flight":
            return [protocol.error_message("cannot aim while a shot is in flight")]
        p_bow = protocol.parse_vec3(msg, "p_bow")
        p_arrow = protocol.parse_vec3(msg, "p_arrow")
        hands = HandPose(p_bow=p_bow, p_arrow=p_arrow)
        try:
            launch = make_launch_state(hands, self.bow, self.mass)
        except DegenerateAimError:
            return [protocol.error_message("degenerate aim")]
        params = params_from_launch(p_bow.copy(), launch.velocity)
        traj = sample_trajectory(
            params, dt=self.env.config.dt, z_floor=float(self.env.config.arena_lo[2])
        )
        stretch = hands.stretch
        tension = min(stretch / self.bow.max_stretch, 1.0)
        contact = gameplay_command(stretch, self.config.bow.display_force_n * tension)
        self.aim = AimSnapshot(
            hands=hands,
            stretch=stretch,
            tension=tension,
            energy=launch.energy,
            speed=launch.speed,
            velocity=launch.velocity,
            slide_mm=contact.slide_pos,
            force_n=contact.normal_force,
            trajectory=traj,
        )
        self.phase = "aiming"
        return []

    def handle_release(self) -> list:
        if self.phase != "aiming":
            return [protocol.error_message(f"cannot release in phase {self.phase}")]
        if self.aim is None:
            return [protocol.error_message("release without a valid aim")]
        params = params_from_launch(
            self.aim.hands.p_bow.copy(), self.aim.velocity.copy()
        )
        self.env.launch_arrow(params)
        self.pending = score_shot(self.aim.trajectory, self.gates)
        self.shots_fired += 1
        self.phase = "in_flight"
        return []

    def _resolve_shot(self) -> str:
        gate, points = self.pending if self.pending is not None else (None, 0)
        if gate is not None:
            if self.gate_scored[gate] >= GATE_SCORE_QUOTA:
                points = 0
            else:
                self.gate_scored[gate] += 1
        self.score += points
        self.pending = None
        self.phase = "scored"
        self.aim = None
        return protocol.encode_message(
            "scored",
            {
                "gate": gate,
                "points": points,
                "score": self.score,
                "shots_fired": self.shots_fired,
            },
        )

    def handle_reset(self) -> list:
        self.phase = "aiming"
        self.aim = None
        self.pending = None
        self.score = 0
        self.shots_fired = 0
        self.gate_scored = {g.name: 0 for g in self.gates}
        self.last_done_reason = None
        self._reset_env()
        return []

    def handle_set_policy(self, msg: dict) -> list:
        name = msg.get("policy")
        if name not in ("drl", "apf"):
            return [protocol.error_message(f"unknown policy {name!r}")]
        if name not in self._policies:
            return [
                protocol.error_message(
                    "drl policy unavailable: no weights loaded on the server"
                )
            ]
        self.policy_name = name
        return []

    # -- telemetry -----------------------------------------------------------

    def telemetry_message(self, blend: float = 1.0) -> str:
        """Current scene. blend < 1 linearly mixes the previous and current
        environment states (presentation only; flagged)."""
        state = self.env.state
        interpolated = blend < 1.0
        if interpolated:
            agents = (1.0 - blend) * self.prev_pos + blend * state.agent_pos
            arrow = (1.0 - blend) * self.prev_arrow + blend * state.arrow_pos
        else:
            agents = state.agent_pos
            arrow = state.arrow_pos
        payload = {
            "session": self.id,
            "frame": self.frame,
            "step": state.t_step,
            "phase": self.phase,
            "interpolated": interpolated,
            "policy": self.policy_name,
            "agents": agents,
            "arrow": {"pos": arrow, "active": state.arrow_active},
            "score": self.score,
            "shots_fired": self.shots_fired,
            "done_reason": self.last_done_reason,
            "gates": [
                {
                    "name": g.name,
                    "center": g.center,
                    "width": g.width,
                    "height": g.height,
                    "weight": g.weight,
                    "axis": g.axis,
                }
                for g in self.gates
            ],
            "aim": self._aim_payload(),
        }
        self.frame += 1
        return protocol.encode_message("telemetry", payload)

    def _aim_payload(self):
        if self.aim is None:
            return None
        a = self.aim
        return {
            "stretch": a.stretch,
            "tension": a.tension,
            "energy": a.energy,
            "speed": a.speed,
            "velocity": a.velocity,
            "contact": {"slide_mm": a.slide_mm, "force_n": a.force_n},
            "trajectory": [
                [t, p[0], p[1], p[2]]
                for t, p in zip(a.trajectory.times, a.trajectory.points)
            ],
        }
