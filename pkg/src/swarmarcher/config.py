"""Run configuration: one YAML file describing bow, environment, training,
potential-field, gate, and serve settings.

Section values land in the same dataclasses the library modules use, so a
config file cannot express anything the validated types would reject. Every
load failure raises ConfigError naming the offending field.
"""

from dataclasses import dataclass, field, fields
from pathlib import Path

import yaml

from .apf import ApfParams
from .a2c import TrainConfig
from .ballistics import DEFAULT_GATES, BowModel, Gate, gates_from_config, _PLANE_AXES, _AXIS_INDEX
from .errors import ConfigError
from .swarm_env import ArrowConfig, EnvConfig


@dataclass
class BowSection:
    """Bow physics plus the wearable-display scaling used while aiming."""

    spring_k: float = 0.01
    max_stretch: float = 1.0
    mass: float = 0.027
    physical_spring: bool = False
    # contact force commanded at full draw; ramps linearly with stretch
    display_force_n: float = 2.0

    def __post_init__(self):
        if self.mass <= 0:
            raise ConfigError(f"bow.mass must be positive, got {self.mass}")
        if self.display_force_n < 0:
            raise ConfigError(
                f"bow.display_force_n must be >= 0, got {self.display_force_n}"
            )
        # BowModel re-validates spring_k and max_stretch
        self.model()

    def model(self) -> BowModel:
        return BowModel(
            spring_k=self.spring_k,
            max_stretch=self.max_stretch,
            physical_spring=self.physical_spring,
        )


@dataclass
class ServeSection:
    host: str = "127.0.0.1"
    port: int = 8765
    telemetry_hz: float = 20.0
    # episode cap while serving; long so play is not cut mid-session
    session_max_steps: int = 36000
    weights_path: str | None = None

    def __post_init__(self):
        if not 0 <= self.port < 65536:
            raise ConfigError(f"serve.port must be in 0..65535, got {self.port}")
        if self.telemetry_hz <= 0:
            raise ConfigError(
                f"serve.telemetry_hz must be positive, got {self.telemetry_hz}"
            )
        if self.session_max_steps < 1:
            raise ConfigError(
                f"serve.session_max_steps must be >= 1, got {self.session_max_steps}"
            )


@dataclass
class RunConfig:
    seed: int = 0
    bow: BowSection = field(default_factory=BowSection)
    env: EnvConfig = field(default_factory=EnvConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    apf: ApfParams = field(default_factory=ApfParams)
    gates: list = field(default_factory=lambda: list(DEFAULT_GATES))
    serve: ServeSection = field(default_factory=ServeSection)

    def __post_init__(self):
        _assert_gates_disjoint(self.gates)
        if self.serve.telemetry_hz * self.env.dt < 1.0 - 1e-9:
            raise ConfigError(
                "serve.telemetry_hz must be at least the environment rate "
                f"1/dt = {1.0 / self.env.dt:g} Hz, got {self.serve.telemetry_hz:g}"
            )


def _assert_gates_disjoint(gates: list):
    """Gates sharing a plane must not overlap, else scoring is ambiguous."""
    for i in range(len(gates)):
        for j in range(i + 1, len(gates)):
            a, b = gates[i], gates[j]
            if a.axis != b.axis:
                continue
            ax = _AXIS_INDEX[a.axis]
            if a.center[ax] != b.center[ax]:
                continue
            wa, ha = _PLANE_AXES[a.axis]
            dx = abs(a.center[wa] - b.center[wa])
            dz = abs(a.center[ha] - b.center[ha])
            if dx < (a.width + b.width) / 2 and dz < (a.height + b.height) / 2:
                raise ConfigError(f"gates {a.name!r} and {b.name!r} overlap")


def _known_keys(cls) -> set:
    return {f.name for f in fields(cls)}


def _section_dict(raw: dict, name: str) -> dict:
    sec = raw.get(name, {})
    if sec is None:
        sec = {}
    if not isinstance(sec, dict):
        raise ConfigError(f"section {name!r} must be a mapping, got {type(sec).__name__}")
    return sec


def _build(cls, sec: dict, prefix: str, transform=None):
    unknown = set(sec) - _known_keys(cls)
    if unknown:
        raise ConfigError(f"unknown key {prefix}.{sorted(unknown)[0]}")
    kwargs = dict(sec)
    if transform:
        transform(kwargs)
    try:
        return cls(**kwargs)
    except ConfigError as exc:
        raise ConfigError(f"{prefix}: {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{prefix}: {exc}") from exc


def _pairify(kwargs: dict, key: str):
    if key in kwargs and kwargs[key] is not None:
        v = kwargs[key]
        if not (isinstance(v, (list, tuple)) and len(v) == 2):
            raise ConfigError(f"{key} must be a [lo, hi] pair, got {v!r}")
        kwargs[key] = (float(v[0]), float(v[1]))


def config_from_dict(raw: dict) -> RunConfig:
    """Build and validate a RunConfig from a parsed key-value tree."""
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError(f"config root must be a mapping, got {type(raw).__name__}")
    known_sections = {"seed", "bow", "env", "train", "apf", "gates", "serve"}
    unknown = set(raw) - known_sections
    if unknown:
        raise ConfigError(f"unknown section {sorted(unknown)[0]!r}")

    seed = raw.get("seed", 0)
    if not isinstance(seed, int):
        raise ConfigError(f"seed must be an integer, got {seed!r}")

    bow = _build(BowSection, _section_dict(raw, "bow"), "bow")

    env_sec = _section_dict(raw, "env")

    def env_transform(kwargs):
        arrow_sec = kwargs.pop("arrow", {}) or {}
        if not isinstance(arrow_sec, dict):
            raise ConfigError("env.arrow must be a mapping")

        def arrow_transform(ak):
            _pairify(ak, "t_flight")
            _pairify(ak, "first_t_flight")

        kwargs["arrow"] = _build(ArrowConfig, arrow_sec, "env.arrow", arrow_transform)

    env = _build(EnvConfig, env_sec, "env", env_transform)

    def train_transform(kwargs):
        kwargs.setdefault("seed", seed)
        if "hidden" in kwargs:
            kwargs["hidden"] = tuple(int(h) for h in kwargs["hidden"])

    train = _build(TrainConfig, _section_dict(raw, "train"), "train", train_transform)
    apf = _build(ApfParams, _section_dict(raw, "apf"), "apf")
    serve = _build(ServeSection, _section_dict(raw, "serve"), "serve")

    gates_raw = raw.get("gates")
    if gates_raw is None:
        gates = list(DEFAULT_GATES)
    else:
        if not isinstance(gates_raw, list):
            raise ConfigError("gates must be a list of gate mappings")
        try:
            gates = gates_from_config(gates_raw)
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"gates: {exc}") from exc

    return RunConfig(
        seed=seed, bow=bow, env=env, train=train, apf=apf, gates=gates, serve=serve
    )


def load_config(path) -> RunConfig:
    """Read a YAML run config; any problem raises ConfigError."""
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc}") from exc
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {p} is not valid YAML: {exc}") from exc
    return config_from_dict(raw)


def default_config() -> RunConfig:
    return RunConfig()
