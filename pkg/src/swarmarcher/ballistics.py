"""Virtual-bow launcher physics.

Two tracked hand positions define a bow: the stretch between the palms
loads a Hooke spring, the stored energy becomes kinetic energy of the
projectile drone, and the release direction runs from the arrow hand to
the bow hand. Flight is gravity-only projectile motion parameterized by
launch speed, elevation, and azimuth, so every sampled point has a closed
form. Shots are scored against rectangular gates by intersecting the
sampled trajectory with each gate plane.

Azimuth convention: gamma = 0 points along +y and grows clockwise toward
+x (x = sin(gamma), y = cos(gamma) in the horizontal plane).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import accel
from .errors import DegenerateAimError

GRAVITY = 9.8
AIM_EPS = 1e-6

Vec3 = np.ndarray


def vec3(x, y=None, z=None) -> Vec3:
    """Coerce to a float64 length-3 vector; rejects non-finite components."""
    if y is None:
        v = np.asarray(x, dtype=np.float64)
    else:
        v = np.array([x, y, z], dtype=np.float64)
    if v.shape != (3,):
        raise ValueError(f"expected 3 components, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"non-finite vector {v}")
    return v


@dataclass
class HandPose:
    """Bow-hand and arrow-hand positions, meters."""

    p_bow: Vec3
    p_arrow: Vec3

    def __post_init__(self):
        self.p_bow = vec3(self.p_bow)
        self.p_arrow = vec3(self.p_arrow)

    @property
    def stretch(self) -> float:
        return float(np.linalg.norm(self.p_bow - self.p_arrow))


@dataclass
class BowModel:
    """Hooke-spring bow. Stretch saturates at max_stretch.

    The energy law defaults to K*x^2; set physical_spring for the
    textbook (1/2)*K*x^2.
    """

    spring_k: float = 0.01
    max_stretch: float = 1.0
    physical_spring: bool = False

    def __post_init__(self):
        if self.spring_k <= 0:
            raise ValueError(f"spring_k must be positive, got {self.spring_k}")
        if self.max_stretch <= 0:
            raise ValueError(f"max_stretch must be positive, got {self.max_stretch}")


@dataclass
class LaunchState:
    """Projectile state at the instant of release."""

    mass: float
    energy: float
    speed: float
    velocity: Vec3

    def __post_init__(self):
        self.velocity = vec3(self.velocity)
        if self.mass <= 0:
            raise ValueError(f"mass must be positive, got {self.mass}")
        if self.energy < 0:
            raise ValueError(f"energy must be non-negative, got {self.energy}")
        vnorm = float(np.linalg.norm(self.velocity))
        if abs(vnorm - self.speed) > 1e-9 * max(1.0, abs(self.speed)):
            raise ValueError(f"speed {self.speed} inconsistent with |velocity| {vnorm}")


@dataclass
class TrajectoryParams:
    """Closed-form projectile parameters: speed, elevation, azimuth, gravity."""

    v0: float
    theta: float
    gamma: float
    g: float = GRAVITY
    origin: Vec3 = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        self.origin = vec3(self.origin)
        if self.v0 < 0:
            raise ValueError(f"v0 must be non-negative, got {self.v0}")
        if self.g <= 0:
            raise ValueError(f"g must be positive, got {self.g}")


@dataclass
class Gate:
    """Axis-aligned rectangular target in the plane normal to `axis`.

    For axis 'y' the width spans x and the height spans z; for 'x' width
    spans y; for 'z' width spans x and height spans y.
    """

    name: str
    center: Vec3
    width: float
    height: float
    weight: int
    axis: str = "y"

    def __post_init__(self):
        self.center = vec3(self.center)
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"gate {self.name}: width and height must be positive")
        if self.weight not in (1, 3, 5):
            raise ValueError(f"gate {self.name}: weight must be 1, 3, or 5")
        if self.axis not in ("x", "y", "z"):
            raise ValueError(f"gate {self.name}: axis must be x, y, or z")


_AXIS_INDEX = {"x": 0, "y": 1, "z": 2}
# In-plane axes (width axis, height axis) per gate normal.
_PLANE_AXES = {"x": (1, 2), "y": (0, 2), "z": (0, 1)}


@dataclass
class TrajectorySamples:
    """Discretized flight: times, matching positions, and a truncation flag
    set when the time cap was hit before the floor."""

    times: np.ndarray
    points: np.ndarray
    truncated: bool = False

    def __len__(self) -> int:
        return len(self.times)

    def to_csv(self) -> str:
        lines = ["t,x,y,z"]
        for t, p in zip(self.times, self.points):
            lines.append(
                f"{float(t)!r},{float(p[0])!r},{float(p[1])!r},{float(p[2])!r}"
            )
        return "\n".join(lines) + "\n"


def bow_energy(bow: BowModel, stretch: float) -> float:
    """Energy stored at the given stretch; stretch saturates at max_stretch.

    Default law is K*x^2; the physical_spring flag selects (1/2)*K*x^2.
    """
    if stretch < 0:
        raise ValueError(f"stretch must be non-negative, got {stretch}")
    x = min(stretch, bow.max_stretch)
    e = bow.spring_k * x * x
    if bow.physical_spring:
        e *= 0.5
    return e


def launch_speed(energy: float, mass: float) -> float:
    """Speed with kinetic energy `energy`: v = sqrt(2 E / m)."""
    if mass <= 0:
        raise ValueError(f"mass must be positive, got {mass}")
    if energy < 0:
        raise ValueError(f"energy must be non-negative, got {energy}")
    return math.sqrt(2.0 * energy / mass)


def aim_direction(hands: HandPose) -> Vec3:
    """Unit vector from the arrow hand to the bow hand."""
    d = hands.p_bow - hands.p_arrow
    n = float(np.linalg.norm(d))
    if n <= AIM_EPS:
        raise DegenerateAimError(f"hands {n:.2e} m apart, aim direction undefined")
    return d / n


def launch_velocity(hands: HandPose, speed: float) -> Vec3:
    """Velocity of magnitude `speed` along the arrow-to-bow-hand direction."""
    return aim_direction(hands) * speed


def angles_from_velocity(v: Vec3) -> tuple[float, float]:
    """(theta, gamma) such that speed + angles reconstruct v.

    theta in [-pi/2, pi/2]; at the poles gamma defaults to 0.
    """
    v = vec3(v)
    n = float(np.linalg.norm(v))
    if n == 0.0:
        raise DegenerateAimError("zero velocity has no launch angles")
    theta = math.asin(max(-1.0, min(1.0, v[2] / n)))
    gamma = math.atan2(v[0], v[1]) if (v[0] != 0.0 or v[1] != 0.0) else 0.0
    return theta, gamma


def params_from_launch(
    origin: Vec3, velocity: Vec3, g: float = GRAVITY
) -> TrajectoryParams:
    """Trajectory parameters for a projectile released at `origin` with
    `velocity`. Zero velocity yields a pure drop (theta = gamma = 0)."""
    v = vec3(velocity)
    n = float(np.linalg.norm(v))
    if n == 0.0:
        return TrajectoryParams(v0=0.0, theta=0.0, gamma=0.0, g=g, origin=origin)
    theta, gamma = angles_from_velocity(v)
    return TrajectoryParams(v0=n, theta=theta, gamma=gamma, g=g, origin=origin)


def make_launch_state(hands: HandPose, bow: BowModel, mass: float) -> LaunchState:
    """Full release pipeline: stretch -> energy -> speed -> velocity."""
    energy = bow_energy(bow, hands.stretch)
    speed = launch_speed(energy, mass)
    direction = aim_direction(hands)
    return LaunchState(mass=mass, energy=energy, speed=speed, velocity=direction * speed)


def trajectory_point(params: TrajectoryParams, t: float) -> Vec3:
    """Position at time t >= 0 along the closed-form trajectory."""
    if t < 0:
        raise ValueError(f"t must be non-negative, got {t}")
    o = params.origin
    return accel.traj_point(
        params.v0, params.theta, params.gamma, params.g, o[0], o[1], o[2], t
    )


def trajectory_velocity(params: TrajectoryParams, t: float) -> Vec3:
    """Analytic velocity at time t (time derivative of the position)."""
    ct = math.cos(params.theta)
    return np.array(
        [
            params.v0 * ct * math.sin(params.gamma),
            params.v0 * ct * math.cos(params.gamma),
            params.v0 * math.sin(params.theta) - params.g * t,
        ]
    )


def floor_crossing_time(params: TrajectoryParams, z_floor: float) -> float:
    """Time of the descending crossing of z = z_floor.

    A flight starting at or below the floor with no upward velocity has
    already landed (returns 0); one launched upward from floor level lands
    at the descending root.
    """
    dz = params.origin[2] - z_floor
    vz = params.v0 * math.sin(params.theta)
    if dz < 0 or (dz == 0 and vz <= 0):
        return 0.0
    # Descending root of oz + vz t - g t^2 / 2 = z_floor.
    return (vz + math.sqrt(vz * vz + 2.0 * params.g * dz)) / params.g


def sample_trajectory(
    params: TrajectoryParams,
    dt: float,
    z_floor: float = 0.0,
    t_max: float = 30.0,
) -> TrajectorySamples:
    """Sample the flight on the grid t = 0, dt, 2dt, ... while above
    z_floor, then append the exact floor-crossing point. Flights still
    airborne at t_max are cut there and flagged truncated."""
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    o = params.origin
    t_cross = floor_crossing_time(params, z_floor)
    if t_cross == 0.0:
        ts = np.zeros(1)
        pts = accel.traj_positions(
            params.v0, params.theta, params.gamma, params.g, o[0], o[1], o[2], ts
        )
        return TrajectorySamples(times=ts, points=pts, truncated=False)
    truncated = t_cross > t_max
    t_end = min(t_cross, t_max)
    k_last = int(math.floor(t_end / dt))
    while k_last * dt >= t_cross:  # grid point landed exactly on/after the floor
        k_last -= 1
    ts = dt * np.arange(k_last + 1, dtype=np.float64)
    if not truncated:
        ts = np.append(ts, t_cross)
    pts = accel.traj_positions(
        params.v0, params.theta, params.gamma, params.g, o[0], o[1], o[2], ts
    )
    return TrajectorySamples(times=ts, points=pts, truncated=truncated)


def _gate_crossing(samples: TrajectorySamples, gate: Gate):
    """First crossing of the gate plane: (t_hit, point) or None."""
    ax = _AXIS_INDEX[gate.axis]
    s = samples.points[:, ax] - gate.center[ax]
    for i in range(len(s) - 1):
        if s[i] == 0.0:
            return samples.times[i], samples.points[i]
        if s[i] * s[i + 1] < 0.0:
            u = s[i] / (s[i] - s[i + 1])
            t_hit = samples.times[i] + u * (samples.times[i + 1] - samples.times[i])
            point = samples.points[i] + u * (samples.points[i + 1] - samples.points[i])
            return t_hit, point
    if len(s) and s[-1] == 0.0:
        return samples.times[-1], samples.points[-1]
    return None


def score_shot(
    samples: TrajectorySamples, gates: list[Gate]
) -> tuple[str | None, int]:
    """Score a flight against gates: the earliest gate whose plane crossing
    lands inside the rectangle (closed boundary) scores its weight."""
    best: tuple[float, Gate] | None = None
    for gate in gates:
        crossing = _gate_crossing(samples, gate)
        if crossing is None:
            continue
        t_hit, point = crossing
        wa, ha = _PLANE_AXES[gate.axis]
        if (
            abs(point[wa] - gate.center[wa]) <= gate.width / 2.0
            and abs(point[ha] - gate.center[ha]) <= gate.height / 2.0
        ):
            if best is None or t_hit < best[0]:
                best = (t_hit, gate)
    if best is None:
        return None, 0
    return best[1].name, best[1].weight


def gates_from_config(entries: list[dict]) -> list[Gate]:
    """Build Gate objects from config mappings."""
    gates = []
    for e in entries:
        gates.append(
            Gate(
                name=str(e["name"]),
                center=vec3(e["center"]),
                width=float(e["width"]),
                height=float(e["height"]),
                weight=int(e["weight"]),
                axis=str(e.get("axis", "y")),
            )
        )
    names = [g.name for g in gates]
    if len(set(names)) != len(names):
        raise ValueError(f"duplicate gate names in {names}")
    return gates


DEFAULT_GATES = [
    Gate("grey", np.array([-1.2, 2.5, 1.5]), 1.0, 1.0, 1, "y"),
    Gate("blue", np.array([0.0, 2.5, 1.5]), 0.7, 0.7, 3, "y"),
    Gate("red", np.array([1.2, 2.5, 1.5]), 0.4, 0.4, 5, "y"),
]
