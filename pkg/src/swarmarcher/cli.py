"""Command-line entry points.

Subcommands: train (fit the dodging policy, save weights + metrics), eval
(success rate and decision latency for a policy), bench (kernel backend and
policy timings), patterns (emit or analyze perception-study files), and
serve (the live game websocket service).

Exit codes: 0 success; 1 runtime failure such as training divergence;
2 invalid or unreadable config; 3 weights file incompatible with the
configured network layout.
"""

import argparse
import asyncio
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import a2c, accel, haptics
from .apf import ApfPolicy, bench_policy_latency
from .config import RunConfig, default_config, load_config
from .errors import ConfigError, TrainingDiverged, WeightsLayoutError
from .swarm_env import Env

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2
EXIT_WEIGHTS = 3


def _config_from_args(args) -> RunConfig:
    if args.config is not None:
        return load_config(args.config)
    return default_config()


def cmd_train(args) -> int:
    rc = _config_from_args(args)
    tc = rc.train
    if args.epochs is not None:
        tc.epochs = args.epochs
        tc.validate()
    if args.seed is not None:
        tc.seed = args.seed

    def progress(row):
        if row.epoch % args.log_every == 0:
            print(
                f"epoch {row.epoch:4d}  duration {row.mean_duration:6.2f}  "
                f"actor {row.actor_loss:+.6f}  critic {row.critic_loss:.6f}",
                flush=True,
            )

    t0 = time.perf_counter()
    result = a2c.train(rc.env, tc, progress=progress)
    elapsed = time.perf_counter() - t0

    weights_path = Path(args.weights_out)
    weights_path.parent.mkdir(parents=True, exist_ok=True)
    a2c.save_agents(
        weights_path,
        result.agents,
        extra_meta={"seed": tc.seed, "epochs_run": result.epochs_run},
    )
    metrics_path = Path(args.metrics_out)
    metrics_path.parent.mkdir(parents=True, exist_ok=True)
    metrics_path.write_text(a2c.metrics_to_csv(result.metrics))
    last = result.metrics[-1]
    print(
        f"trained {result.epochs_run} epochs in {elapsed:.1f}s "
        f"(early stop: {result.stopped_early}); "
        f"final mean episode duration {last.mean_duration:.2f} steps"
    )
    print(f"weights -> {weights_path}")
    print(f"metrics -> {metrics_path}")
    return EXIT_OK


def _make_policy(name: str, rc: RunConfig, weights):
    if name == "drl":
        if weights is None:
            raise ConfigError("--policy drl requires --weights")
        agents = a2c.load_agents(weights, expect_state_dim=rc.env.state_dim)
        return a2c.DrlPolicy(agents)
    if name == "apf":
        return ApfPolicy(rc.env, rc.apf)
    if name == "random":
        return a2c.RandomPolicy()
    if name == "zero":
        return a2c.ZeroPolicy()
    raise ConfigError(f"unknown policy {name!r}")


def cmd_eval(args) -> int:
    rc = _config_from_args(args)
    policy = _make_policy(args.policy, rc, args.weights)
    report = a2c.evaluate(
        policy,
        rc.env,
        n_episodes=args.episodes,
        seed=args.seed if args.seed is not None else rc.seed,
        measure_latency=not args.no_latency,
    )
    print(f"policy            {report.policy}")
    print(f"episodes          {report.n_episodes}")
    print(f"successes         {report.successes}")
    print(f"success rate      {report.success_rate:.1f}%")
    print(f"mean duration     {report.mean_duration:.2f} steps")
    if report.latency_ms_mean is not None:
        print(
            f"decision latency  {report.latency_ms_mean:.3f} ms "
            f"(std {report.latency_ms_std:.3f})"
        )
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        body = {
            "policy": report.policy,
            "n_episodes": report.n_episodes,
            "successes": report.successes,
            "success_rate": report.success_rate,
            "mean_duration": report.mean_duration,
            "latency_ms_mean": report.latency_ms_mean,
            "latency_ms_std": report.latency_ms_std,
            "durations": report.durations,
        }
        out.write_text(json.dumps(body, indent=2) + "\n")
        print(f"report -> {out}")
    return EXIT_OK


def _time_call(fn, args, repeats: int) -> float:
    """Median wall time per call, microseconds."""
    best = []
    for _ in range(5):
        t0 = time.perf_counter()
        for _ in range(repeats):
            fn(*args)
        best.append((time.perf_counter() - t0) / repeats * 1e6)
    return float(np.median(best))


def cmd_bench(args) -> int:
    rc = _config_from_args(args)
    rng = np.random.default_rng(0)
    accel.warmup()

    pos = rng.uniform(-1.0, 1.0, size=(rc.env.n_agents, 3))
    actions = rng.uniform(-1.0, 1.0, size=(rc.env.n_agents, 3))
    lo, hi = rc.env.arena_lo, rc.env.arena_hi
    arrow = np.array([0.3, 0.2, 1.1])
    obs = rng.standard_normal(rc.env.state_dim)
    w1 = rng.standard_normal((64, rc.env.state_dim))
    b1 = rng.standard_normal(64)
    w2 = rng.standard_normal((64, 64))
    b2 = rng.standard_normal(64)
    w3 = rng.standard_normal((3, 64))
    b3 = rng.standard_normal(3)
    target = np.zeros(3)
    obstacles = pos[1:]

    kernels = [
        ("mlp2_forward", accel.mlp2_forward, (obs, w1, b1, w2, b2, w3, b3)),
        ("step_agents", accel.step_agents, (pos, actions, 0.1, 0.5, lo, hi)),
        ("object_min_dists", accel.object_min_dists, (pos, arrow, True, lo, hi)),
        ("pairwise_min", accel.pairwise_min, (pos,)),
        (
            "apf_velocity",
            accel.apf_velocity_kernel,
            (pos[0], target, obstacles, lo, hi, 1.0, 0.1, 0.6, 0.5, 5.0, True),
        ),
    ]
    print(f"active backend: {accel.BACKEND}")
    print(f"{'kernel':<18} {'active us':>10} {'python us':>10} {'speedup':>8}")
    for name, fn, fargs in kernels:
        plain = accel.python_impl(fn)
        t_active = _time_call(fn, fargs, args.repeats)
        t_plain = _time_call(plain, fargs, args.repeats)
        ratio = t_plain / t_active if t_active > 0 else float("inf")
        print(f"{name:<18} {t_active:>10.2f} {t_plain:>10.2f} {ratio:>7.1f}x")

    env = Env(rc.env, seed=0)
    env.reset()
    acts = np.zeros((rc.env.n_agents, 3))

    def env_step(_):
        if env.state.done:
            env.reset()
        env.step(acts)

    t_step = _time_call(env_step, (None,), args.repeats)
    print(f"{'env.step':<18} {t_step:>10.2f}")

    print()
    for name in ("drl", "apf", "random"):
        try:
            policy = _make_policy(name, rc, args.weights)
        except ConfigError:
            print(f"{name:<8} skipped (no weights)")
            continue
        mean_ms, std_ms = bench_policy_latency(
            policy, rc.env, n_steps=args.latency_steps, seed=0
        )
        print(f"{name:<8} decision latency {mean_ms:.3f} ms (std {std_ms:.3f})")
    return EXIT_OK


def cmd_patterns(args) -> int:
    if args.patterns_command == "emit":
        schedule = haptics.make_schedule(seed=args.seed)
        text = schedule.to_csv()
        if args.out:
            Path(args.out).write_text(text)
            print(f"schedule ({len(schedule)} trials) -> {args.out}")
        else:
            sys.stdout.write(text)
        return EXIT_OK
    # analyze
    try:
        text = Path(args.responses).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read responses file: {exc}") from exc
    responses = haptics.read_responses_csv(text)
    stats = haptics.confusion_stats(responses)
    print(f"responses           {len(responses)}")
    print(f"overall recognition {stats.overall_rate:.1f}%")
    print(f"force recognition   {stats.force_rate:.1f}%")
    print(f"distance recognition {stats.distance_rate:.1f}%")
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "confusion_full.csv").write_text(
            haptics.matrix_to_csv(stats.full, stats.pattern_labels)
        )
        (out / "confusion_force.csv").write_text(
            haptics.matrix_to_csv(stats.force, haptics.FORCE_LEVELS)
        )
        (out / "confusion_distance.csv").write_text(
            haptics.matrix_to_csv(
                stats.distance, [str(d) for d in haptics.DISTANCE_LEVELS]
            )
        )
        print(f"matrices -> {out}/confusion_*.csv")
    return EXIT_OK


def cmd_serve(args) -> int:
    # announce the bound address (port 0 binds ephemerally)
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    rc = _config_from_args(args)
    if args.port is not None:
        rc.serve.port = args.port
    if args.host is not None:
        rc.serve.host = args.host
    if args.weights is not None:
        rc.serve.weights_path = args.weights
    from .server import serve_forever

    try:
        asyncio.run(serve_forever(rc))
    except KeyboardInterrupt:
        print("stopped")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="swarmarcher",
        description="Drone-archery engine: training, evaluation, and game service.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train the dodging policy")
    p.add_argument("--config", help="run config YAML")
    p.add_argument("--weights-out", default="weights.npz")
    p.add_argument("--metrics-out", default="metrics.csv")
    p.add_argument("--epochs", type=int, help="override configured epoch count")
    p.add_argument("--seed", type=int, help="override configured seed")
    p.add_argument("--log-every", type=int, default=10)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("eval", help="evaluate a policy")
    p.add_argument("--config", help="run config YAML")
    p.add_argument("--weights", help="weights file (required for --policy drl)")
    p.add_argument("--episodes", type=int, default=300)
    p.add_argument(
        "--policy", default="drl", choices=("drl", "apf", "random", "zero")
    )
    p.add_argument("--seed", type=int, help="evaluation seed")
    p.add_argument("--no-latency", action="store_true", help="skip latency timing")
    p.add_argument("--out", help="write the report as JSON")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("bench", help="kernel backend and policy timings")
    p.add_argument("--config", help="run config YAML")
    p.add_argument("--weights", help="weights for the drl timing row")
    p.add_argument("--repeats", type=int, default=2000)
    p.add_argument("--latency-steps", type=int, default=2000)
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("patterns", help="perception-study files")
    psub = p.add_subparsers(dest="patterns_command", required=True)
    pe = psub.add_parser("emit", help="emit a randomized stimulus schedule")
    pe.add_argument("--seed", type=int, default=0)
    pe.add_argument("--out", help="schedule CSV path (default stdout)")
    pa = psub.add_parser("analyze", help="confusion stats from responses")
    pa.add_argument("--responses", required=True, help="responses CSV")
    pa.add_argument("--out-dir", help="where to write confusion matrices")
    p.set_defaults(fn=cmd_patterns)

    p = sub.add_parser("serve", help="run the live game websocket service")
    p.add_argument("--config", help="run config YAML")
    p.add_argument("--host")
    p.add_argument("--port", type=int)
    p.add_argument("--weights", help="drl weights to serve")
    p.set_defaults(fn=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except WeightsLayoutError as exc:
        print(f"weights error: {exc}", file=sys.stderr)
        return EXIT_WEIGHTS
    except TrainingDiverged as exc:
        print(f"training diverged: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except FileNotFoundError as exc:
        print(f"missing file: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
